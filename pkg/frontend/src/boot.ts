// Browser entry point; tests import bootstrap from main.ts directly.
import { bootstrap } from "./main.js";

bootstrap(document);

// App wiring: screens, gesture handlers, rendering. Each user gesture
// issues exactly one session-mutating backend call; after a successful
// step the suggestion sidebar refreshes with a single read-only suggest
// call (skipped once the fault is resolved). Gestures arriving while a
// call is in flight are dropped, which doubles as double-click protection.

import { ApiClient, ApiError } from "./api.js";
import type { TaxonomyNode } from "./api.js";
import {
  applyAction,
  applyReveal,
  applySuggestions,
  inputsLocked,
  markFinished,
  newSession,
} from "./state.js";
import type { Mode, SessionState } from "./state.js";
import { buildPanels, renderFooter, renderSidebar, showToast } from "./render.js";

export interface App {
  readonly client: ApiClient;
  getState(): SessionState | null;
  whenIdle(): Promise<void>;
}

function requireEl<T extends HTMLElement>(doc: Document, id: string): T {
  const el = doc.getElementById(id);
  if (!el) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

export function bootstrap(doc: Document, client: ApiClient = new ApiClient()): App {
  const startScreen = requireEl(doc, "start-screen");
  const sessionScreen = requireEl(doc, "session-screen");
  const errorScreen = requireEl(doc, "error-screen");
  const faultInput = requireEl<HTMLInputElement>(doc, "fault-input");
  const modeExploration = requireEl<HTMLInputElement>(doc, "mode-exploration");
  const startButton = requireEl<HTMLButtonElement>(doc, "start-button");
  const symptomBanner = requireEl(doc, "symptom-banner");
  const resolvedBanner = requireEl(doc, "resolved-banner");
  const boardHost = requireEl(doc, "board-host");
  const sidebarHost = requireEl(doc, "sidebar-host");
  const footerHost = requireEl(doc, "footer-host");
  const finishButton = requireEl<HTMLButtonElement>(doc, "finish-button");

  let nodes: TaxonomyNode[] = [];
  let session: SessionState | null = null;
  let inFlight = false;
  let current: Promise<void> = Promise.resolve();

  function fail(err: unknown): void {
    if (err instanceof ApiError) {
      showToast(doc, err.message);
    } else {
      showToast(doc, "backend unreachable");
    }
  }

  function gesture(fn: () => Promise<void>): void {
    if (inFlight) return;
    inFlight = true;
    current = fn()
      .catch(fail)
      .finally(() => {
        inFlight = false;
      });
  }

  function swap(el: HTMLElement, child: HTMLElement): void {
    el.innerHTML = "";
    el.appendChild(child);
  }

  const handlers = {
    onReveal(sensorId: string): void {
      gesture(async () => {
        if (!session || inputsLocked(session)) return;
        const result = await client.reveal(session.sessionId, sensorId);
        session = applyReveal(session, sensorId, result.value, result.unit);
        renderSession();
        await refreshSuggestions();
      });
    },
    onAction(actionId: string): void {
      gesture(async () => {
        if (!session || inputsLocked(session)) return;
        const result = await client.action(session.sessionId, actionId);
        session = applyAction(session, actionId, result.resolved);
        renderSession();
        if (!session.resolved) {
          await refreshSuggestions();
        }
      });
    },
  };

  async function refreshSuggestions(): Promise<void> {
    if (!session) return;
    const result = await client.suggest(session.sessionId);
    session = applySuggestions(session, result);
    swap(sidebarHost, renderSidebar(doc, session));
  }

  function renderSession(): void {
    if (!session) return;
    swap(boardHost, buildPanels(doc, nodes, session, handlers));
    swap(sidebarHost, renderSidebar(doc, session));
    swap(footerHost, renderFooter(doc, session));
    symptomBanner.textContent = `Reported symptom: ${session.symptom}`;
    resolvedBanner.hidden = !session.resolved;
    finishButton.disabled = session.finished;
    finishButton.textContent =
      session.mode === "collection" ? "Finish and save" : "End session";
  }

  function backToStart(): void {
    session = null;
    sessionScreen.hidden = true;
    startScreen.hidden = false;
  }

  startButton.addEventListener("click", () => {
    gesture(async () => {
      const mode: Mode = modeExploration.checked ? "exploration" : "collection";
      const faultId = faultInput.value.trim() || undefined;
      const created = await client.createSession(faultId);
      session = newSession(created, mode);
      startScreen.hidden = true;
      sessionScreen.hidden = false;
      renderSession();
    });
  });

  finishButton.addEventListener("click", () => {
    gesture(async () => {
      if (!session || session.finished) return;
      if (session.mode === "collection") {
        const log = await client.finish(session.sessionId);
        showToast(doc, `session saved (resolved: ${log.resolved})`);
      } else {
        // exploration sessions are deliberately not persisted; the server
        // side copy is simply abandoned
        showToast(doc, "exploration session discarded");
      }
      session = markFinished(session);
      backToStart();
    });
  });

  current = client
    .taxonomy()
    .then((result) => {
      if (result.nodes.length === 0) {
        throw new Error("empty taxonomy");
      }
      nodes = result.nodes;
    })
    .catch((err) => {
      startScreen.hidden = true;
      errorScreen.hidden = false;
      fail(err);
    });

  return {
    client,
    getState: () => session,
    whenIdle: () => current.then(() => undefined),
  };
}

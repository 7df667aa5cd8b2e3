// The one build-time knob. Point this at the diagnosis service before
// running `npm run build`; everything else derives from backend responses.
export const BACKEND_BASE_URL = "http://127.0.0.1:8080";

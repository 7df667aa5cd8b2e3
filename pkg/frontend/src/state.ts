// Client-side session state. Every field is derived from backend
// responses; the browser never simulates the robot. Transitions are plain
// functions over an immutable snapshot so they are trivial to test.

import type {
  ActionView,
  SensorView,
  SessionCreated,
  Suggestion,
  SuggestResult,
} from "./api.js";

/** Exploration sessions are never persisted; collection sessions are. */
export type Mode = "exploration" | "collection";

export type CellState =
  | { kind: "hidden" }
  | { kind: "revealed"; value: number; unit: string };

export interface SessionState {
  sessionId: string;
  symptom: string;
  mode: Mode;
  sensors: SensorView[];
  actions: ActionView[];
  cells: Record<string, CellState>;
  revealsIssued: number;
  actionsTaken: string[];
  suggestions: Suggestion[];
  modelLoaded: boolean | null;
  resolved: boolean;
  finished: boolean;
}

export function newSession(created: SessionCreated, mode: Mode): SessionState {
  const cells: Record<string, CellState> = {};
  for (const sensor of created.sensors) {
    cells[sensor.id] = { kind: "hidden" };
  }
  return {
    sessionId: created.session_id,
    symptom: created.symptom_message,
    mode,
    sensors: created.sensors,
    actions: created.actions,
    cells,
    revealsIssued: 0,
    actionsTaken: [],
    suggestions: [],
    modelLoaded: null,
    resolved: false,
    finished: false,
  };
}

/** Resolved or finished sessions accept no further reveals or actions. */
export function inputsLocked(state: SessionState): boolean {
  return state.resolved || state.finished;
}

/** Reveals plus actions issued so far, i.e. the visible step counter. */
export function stepCount(state: SessionState): number {
  return state.revealsIssued + state.actionsTaken.length;
}

function assertOpen(state: SessionState, what: string): void {
  if (inputsLocked(state)) {
    throw new Error(`${what} on a locked session`);
  }
}

export function applyReveal(
  state: SessionState,
  sensorId: string,
  value: number,
  unit: string,
): SessionState {
  assertOpen(state, "reveal");
  if (!(sensorId in state.cells)) {
    throw new Error(`unknown sensor: ${sensorId}`);
  }
  return {
    ...state,
    cells: { ...state.cells, [sensorId]: { kind: "revealed", value, unit } },
    revealsIssued: state.revealsIssued + 1,
  };
}

export function applyAction(
  state: SessionState,
  actionId: string,
  resolved: boolean,
): SessionState {
  assertOpen(state, "action");
  return {
    ...state,
    actionsTaken: [...state.actionsTaken, actionId],
    resolved,
  };
}

export function applySuggestions(state: SessionState, result: SuggestResult): SessionState {
  return {
    ...state,
    // the server already returns at most five, sorted by score; the slice
    // is belt and braces against a future backend change
    suggestions: result.suggestions.slice(0, 5),
    modelLoaded: result.model_loaded,
  };
}

export function markFinished(state: SessionState): SessionState {
  return { ...state, finished: true };
}

export function labelFor(state: SessionState, kind: string, entityId: string): string {
  const pool: Array<{ id: string; label: string }> =
    kind === "read" ? state.sensors : state.actions;
  const match = pool.find((entry) => entry.id === entityId);
  return match ? match.label : entityId;
}

// DOM construction. Pure functions of (document, data, handlers) so the
// same code runs in the browser and under happy-dom in tests. Layout
// follows the taxonomy: one panel per subsystem, one colored group box per
// component group, sensor cells and action buttons as leaves.

import type { TaxonomyNode } from "./api.js";
import { inputsLocked, labelFor, stepCount } from "./state.js";
import type { SessionState } from "./state.js";

export const PALETTE = [
  "#4e79a7",
  "#f28e2b",
  "#59a14f",
  "#e15759",
  "#76b7b2",
  "#edc948",
  "#b07aa1",
  "#ff9da7",
  "#9c755f",
  "#bab0ac",
];

/** FNV-1a, 32 bit. Stable across sessions and reloads by construction. */
export function hashString(text: string): number {
  let hash = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    hash ^= text.charCodeAt(i);
    hash = Math.imul(hash, 0x01000193) >>> 0;
  }
  return hash >>> 0;
}

export function colorForCategory(categoryId: string): string {
  return PALETTE[hashString(categoryId) % PALETTE.length] as string;
}

export interface GestureHandlers {
  onReveal(sensorId: string): void;
  onAction(actionId: string): void;
}

function leafCell(
  doc: Document,
  node: TaxonomyNode,
  state: SessionState,
  handlers: GestureHandlers,
): HTMLElement {
  const cell = doc.createElement("button");
  cell.type = "button";
  cell.dataset.leafId = node.id;
  const locked = inputsLocked(state);

  if (node.kind === "sensor-leaf") {
    const cellState = state.cells[node.id] ?? { kind: "hidden" as const };
    cell.className = "cell sensor " + cellState.kind;
    const label = doc.createElement("span");
    label.className = "cell-label";
    label.textContent = node.label;
    cell.appendChild(label);
    const value = doc.createElement("span");
    value.className = "cell-value";
    if (cellState.kind === "revealed") {
      value.textContent = `${cellState.value} ${cellState.unit}`;
    } else {
      value.textContent = "tap to read";
    }
    cell.appendChild(value);
    cell.disabled = locked;
    cell.addEventListener("click", () => handlers.onReveal(node.id));
  } else {
    cell.className = "cell actuator";
    const label = doc.createElement("span");
    label.className = "cell-label";
    label.textContent = node.label;
    cell.appendChild(label);
    const tag = doc.createElement("span");
    tag.className = "cell-tag";
    tag.textContent = "action";
    cell.appendChild(tag);
    cell.disabled = locked;
    cell.addEventListener("click", () => handlers.onAction(node.id));
  }
  return cell;
}

/**
 * Build the full component board from the taxonomy. Throws on an empty
 * taxonomy; the caller turns that into the error screen.
 */
export function buildPanels(
  doc: Document,
  nodes: TaxonomyNode[],
  state: SessionState,
  handlers: GestureHandlers,
): HTMLElement {
  if (nodes.length === 0) {
    throw new Error("empty taxonomy");
  }
  const byParent = new Map<string | null, TaxonomyNode[]>();
  for (const node of nodes) {
    const siblings = byParent.get(node.parent_id) ?? [];
    siblings.push(node);
    byParent.set(node.parent_id, siblings);
  }
  const root = nodes.find((n) => n.level === 0);
  if (!root) {
    throw new Error("taxonomy has no root");
  }

  const board = doc.createElement("div");
  board.className = "board";
  for (const subsystem of byParent.get(root.id) ?? []) {
    const panel = doc.createElement("section");
    panel.className = "panel";
    const heading = doc.createElement("h2");
    heading.textContent = subsystem.label;
    panel.appendChild(heading);

    for (const group of byParent.get(subsystem.id) ?? []) {
      const box = doc.createElement("div");
      box.className = "group";
      box.style.borderColor = colorForCategory(group.id);
      const title = doc.createElement("h3");
      title.textContent = group.label;
      title.style.color = colorForCategory(group.id);
      box.appendChild(title);
      const grid = doc.createElement("div");
      grid.className = "leaves";
      for (const leaf of byParent.get(group.id) ?? []) {
        grid.appendChild(leafCell(doc, leaf, state, handlers));
      }
      box.appendChild(grid);
      panel.appendChild(box);
    }
    board.appendChild(panel);
  }
  return board;
}

export function renderSidebar(doc: Document, state: SessionState): HTMLElement {
  const aside = doc.createElement("div");
  aside.className = "suggestions";
  const heading = doc.createElement("h2");
  heading.textContent = "Suggested next steps";
  aside.appendChild(heading);

  const note = doc.createElement("p");
  note.className = "sidebar-note";
  if (state.modelLoaded === null) {
    note.textContent = "Suggestions appear after your first step.";
    aside.appendChild(note);
  } else if (!state.modelLoaded) {
    note.textContent = "No model loaded on the server.";
    aside.appendChild(note);
  } else {
    const list = doc.createElement("ol");
    list.className = "suggestion-list";
    for (const suggestion of state.suggestions) {
      const item = doc.createElement("li");
      const tag = doc.createElement("span");
      tag.className = `kind-tag ${suggestion.kind}`;
      tag.textContent = suggestion.kind;
      item.appendChild(tag);
      const text = doc.createElement("span");
      text.textContent = ` ${labelFor(state, suggestion.kind, suggestion.entity_id)} `;
      item.appendChild(text);
      const score = doc.createElement("span");
      score.className = "score";
      score.textContent = `${(suggestion.score * 100).toFixed(1)}%`;
      item.appendChild(score);
      list.appendChild(item);
    }
    aside.appendChild(list);
  }
  return aside;
}

export function renderFooter(doc: Document, state: SessionState): HTMLElement {
  const footer = doc.createElement("div");
  footer.className = "session-meta";
  const steps = doc.createElement("span");
  steps.id = "step-counter";
  steps.textContent = `steps: ${stepCount(state)}`;
  footer.appendChild(steps);
  const mode = doc.createElement("span");
  mode.className = "mode-label";
  mode.textContent = state.mode === "collection" ? "data collection" : "exploration";
  footer.appendChild(mode);
  return footer;
}

export function showToast(doc: Document, message: string): void {
  const host = doc.getElementById("toasts");
  if (!host) return;
  const toast = doc.createElement("div");
  toast.className = "toast";
  toast.textContent = message;
  host.appendChild(toast);
  // non-blocking: the toast removes itself, nothing waits on it
  setTimeout(() => toast.remove(), 4000);
}

// Shared test scaffolding: a miniature taxonomy, matching session views,
// and an in-memory backend good enough to exercise every UI flow.

import { readFileSync } from "node:fs";
import { join } from "node:path";

import type { TaxonomyNode } from "../src/api.js";

export function loadShellHtml(): string {
  // vitest runs with the package root as cwd; import.meta.url is an http
  // URL under happy-dom, so resolve from cwd instead
  const html = readFileSync(join(process.cwd(), "index.html"), "utf8");
  const body = html.slice(html.indexOf("<body>") + "<body>".length, html.indexOf("</body>"));
  return body.replace(/<script[^>]*><\/script>/g, "");
}

function node(
  id: string,
  level: number,
  parent: string | null,
  kind: TaxonomyNode["kind"] = "category",
): TaxonomyNode {
  return { id, label: id.replace(/_/g, " "), level, parent_id: parent, kind };
}

export const STUB_TREE: TaxonomyNode[] = [
  node("robot", 0, null),
  node("cleaning", 1, "robot"),
  node("navigation", 1, "robot"),
  node("suction", 2, "cleaning"),
  node("rangefinding", 2, "navigation"),
  node("fan_rpm", 3, "suction", "sensor-leaf"),
  node("suction_pressure", 3, "suction", "sensor-leaf"),
  node("replace_fan", 3, "suction", "actuator-leaf"),
  node("lidar_scan_rate", 3, "rangefinding", "sensor-leaf"),
  node("clean_lidar_window", 3, "rangefinding", "actuator-leaf"),
];

const STUB_SENSORS = [
  { id: "fan_rpm", label: "fan rpm", group: "suction", color_key: "suction" },
  { id: "suction_pressure", label: "suction pressure", group: "suction", color_key: "suction" },
  { id: "lidar_scan_rate", label: "lidar scan rate", group: "rangefinding", color_key: "rangefinding" },
];

const STUB_ACTIONS = [
  { id: "replace_fan", label: "replace fan", group: "suction" },
  { id: "clean_lidar_window", label: "clean lidar window", group: "rangefinding" },
];

export const STUB_SUGGESTIONS = [
  { kind: "read", entity_id: "lidar_scan_rate", score: 0.52 },
  { kind: "act", entity_id: "clean_lidar_window", score: 0.21 },
  { kind: "read", entity_id: "fan_rpm", score: 0.11 },
  { kind: "read", entity_id: "suction_pressure", score: 0.07 },
  { kind: "act", entity_id: "replace_fan", score: 0.04 },
];

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export interface StubBackend {
  fetchImpl: FetchLike;
  /** raw (method, path) pairs in arrival order */
  calls: string[];
  resolvingAction: string;
}

function json(status: number, payload: unknown): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

/**
 * Single-session stub service. The fault is always "lidar_window_dirty"
 * and only clean_lidar_window resolves it; unknown ids get the same
 * error shapes as the real service.
 */
export function stubBackend(): StubBackend {
  const calls: string[] = [];
  let resolved = false;
  const steps: Array<Record<string, unknown>> = [];

  const fetchImpl: FetchLike = async (input, init) => {
    const method = init?.method ?? "GET";
    const path = input.replace(/^https?:\/\/[^/]+/, "");
    calls.push(`${method} ${path}`);
    const body = init?.body ? (JSON.parse(String(init.body)) as Record<string, unknown>) : {};

    if (path === "/api/config/taxonomy") {
      return json(200, { nodes: STUB_TREE });
    }
    if (path === "/api/session" && method === "POST") {
      return json(200, {
        session_id: "h00001",
        symptom_message: "Robot bumps into furniture",
        sensors: STUB_SENSORS,
        actions: STUB_ACTIONS,
      });
    }
    if (path === "/api/session/h00001/reveal") {
      if (resolved) return json(409, { detail: "session already resolved" });
      const sensor = STUB_SENSORS.find((s) => s.id === body.sensor_id);
      if (!sensor) return json(400, { detail: `unknown sensor id: ${body.sensor_id}` });
      steps.push({ type: "read", sensor_id: sensor.id });
      return json(200, { value: 6.9, unit: "Hz" });
    }
    if (path === "/api/session/h00001/action") {
      if (resolved) return json(409, { detail: "session already resolved" });
      const action = STUB_ACTIONS.find((a) => a.id === body.action_id);
      if (!action) return json(400, { detail: `unknown action id: ${body.action_id}` });
      steps.push({ type: "act", action_id: action.id });
      resolved = action.id === "clean_lidar_window";
      return json(200, { resolved });
    }
    if (path === "/api/session/h00001/suggest") {
      return json(200, { suggestions: STUB_SUGGESTIONS, model_loaded: true });
    }
    if (path === "/api/session/h00001/finish") {
      return json(200, {
        session_id: "h00001",
        fault_id: "lidar_window_dirty",
        steps,
        resolved,
        operator: "human",
        seed: 0,
      });
    }
    return json(404, { detail: `no such route: ${path}` });
  };

  return { fetchImpl, calls, resolvingAction: "clean_lidar_window" };
}

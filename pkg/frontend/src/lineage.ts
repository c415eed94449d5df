// Scenario lineage helpers: the server's flat metadata list becomes a
// breadcrumb path plus a children index for the tree panel.

import type { ScenarioMeta } from "./types";

export interface LineageView {
  path: ScenarioMeta[]; // root ... active
  children: Map<string, ScenarioMeta[]>;
}

export function buildLineage(all: ScenarioMeta[], activeId: string): LineageView {
  const byId = new Map(all.map((s) => [s.scenario_id, s]));
  const children = new Map<string, ScenarioMeta[]>();
  for (const s of all) {
    if (s.parent) {
      const sibs = children.get(s.parent) ?? [];
      sibs.push(s);
      children.set(s.parent, sibs);
    }
  }
  for (const sibs of children.values()) {
    sibs.sort((a, b) => a.scenario_id.localeCompare(b.scenario_id));
  }
  const path: ScenarioMeta[] = [];
  let cur = byId.get(activeId);
  while (cur) {
    path.unshift(cur);
    cur = cur.parent ? byId.get(cur.parent) : undefined;
  }
  return { path, children };
}

export function describeEdit(edit: Record<string, unknown> | null): string {
  if (!edit) return "base";
  switch (edit.kind) {
    case "add_poi":
      return `add POI ${edit.name ?? ""}`.trim();
    case "remove_poi":
      return `remove POI ${edit.poi_id}`;
    case "block_segment":
      return `block segment ${edit.segment_id}`;
    case "set_speed":
      return `segment ${edit.segment_id} -> ${edit.speed_kmh} km/h`;
    case "set_params":
      return "change parameters";
    default:
      return String(edit.kind ?? "edit");
  }
}

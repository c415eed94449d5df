// Scenario comparison: rank candidate placements by the server's balance
// metric (coefficient of variation; lower = more evenly served).

import type { DiffSummary } from "./types";

export interface ComparisonRow {
  scenario: string;
  balance: number;
  meanDensity: number;
  changedIntersections: number;
}

export function comparisonRow(scenario: string, d: DiffSummary): ComparisonRow {
  return {
    scenario,
    balance: d.balance_after,
    meanDensity: d.mean_density_after,
    changedIntersections: d.changed_intersections,
  };
}

// sort ascending by balance: the first row is the preferred placement
export function rankPlacements(rows: ComparisonRow[]): ComparisonRow[] {
  return [...rows].sort((a, b) => a.balance - b.balance
    || a.scenario.localeCompare(b.scenario));
}

export function formatDiff(d: DiffSummary): string {
  const arrow = d.balance_after < d.balance_before ? "more balanced" : "less balanced";
  return [
    `balance ${d.balance_before.toFixed(4)} -> ${d.balance_after.toFixed(4)} (${arrow})`,
    `mean density ${d.mean_density_before.toExponential(3)} -> ${d.mean_density_after.toExponential(3)}`,
    `${d.changed_intersections} intersections changed`,
  ].join("\n");
}

export interface FieldParams {
  kernel: string;
  bandwidth: number;
  alpha: number;
  walk_speed: number;
  mode: string;
  aggregate: string;
  cutoff_multiple: number;
  acc_bandwidth: number;
}

export interface Poi {
  poi_id: number;
  name: string;
  x: number;
  y: number;
}

export interface ScenarioMeta {
  scenario_id: string;
  dataset_id: string;
  parent: string | null;
  depth: number;
  edit: Record<string, unknown> | null;
  params: FieldParams;
  pois: Poi[];
}

export interface DatasetHandle {
  dataset_id: string;
  name: string;
  base_scenario: string;
  intersections: number;
  segments: number;
  pois: number;
  bbox: [number, number, number, number];
}

export interface SegmentInfo {
  segment_id: number;
  from: number;
  to: number;
  geometry: [number, number][];
  length: number;
  speed: number;
  oneway: boolean;
  blocked: boolean;
}

export interface NetworkPayload {
  intersections: [number, number, number][];
  segments: SegmentInfo[];
  pois: Poi[];
  bbox: [number, number, number, number];
}

export interface PerPoiQuery {
  access_time: number | null;
  density: number;
  via: number | null;
}

export interface QueryResult {
  point: [number, number];
  dominant: number | null;
  value: number;
  per_poi: Record<string, PerPoiQuery>;
  candidates: number[];
}

export interface DiffSummary {
  changed_intersections: number;
  area_share_before: Record<string, number>;
  area_share_after: Record<string, number>;
  mean_density_before: number;
  mean_density_after: number;
  balance_before: number;
  balance_after: number;
  changed_bbox: number[] | null;
}

export type Edit =
  | { kind: "add_poi"; x: number; y: number; name?: string }
  | { kind: "remove_poi"; poi_id: number }
  | { kind: "block_segment"; segment_id: number }
  | { kind: "set_speed"; segment_id: number; speed_kmh: number }
  | { kind: "set_params"; params: FieldParams };

export interface ViewportBox {
  minx: number;
  miny: number;
  maxx: number;
  maxy: number;
}

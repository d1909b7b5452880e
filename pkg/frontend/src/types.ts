// ── Payload types for the /v1 routing service ───────────────────────
// These mirror the JSON the service emits; optional fields are absent
// for problem kinds that do not track the quantity.

export interface NodeDict {
  coords: [number, number];
  time_window?: [number, number];
  prize?: number;
  penalty?: number;
  demand?: number;
  stay_duration?: number;
  label?: string;
  remarks?: string;
}

export interface InstanceDict {
  version: number;
  kind: string;
  nodes: NodeDict[];
  capacity?: number;
  min_total_prize?: number;
  distance_matrix?: number[][];
}

export interface GlobalStateDict {
  route_length: number;
  travel_time?: number;
  accumulated_prize?: number;
  accumulated_penalty_avoided?: number;
  remaining_capacity?: number;
}

export interface ViolationDict {
  step: number;
  code: string;
  node: number;
}

export interface RouteDict {
  order: number[];
  states: GlobalStateDict[];
  violations: ViolationDict[];
  skipped: number[];
}

export interface IntentionDict {
  class_id: number;
  class_name: string;
}

export interface QuestionDict {
  t_ex: number;
  actual_edge: [number, number];
  cf_edge: [number, number];
}

export interface RepValuesDict {
  short_term_objective: number;
  long_term_objective: number;
  feasibility_ratio: number;
  class_ratio?: number;
  extras: Record<string, number>;
}

export interface InfluenceDict {
  states: GlobalStateDict[];
  intentions: IntentionDict[];
}

export interface BundleDict {
  question: QuestionDict;
  actual_route: RouteDict;
  cf_route: RouteDict;
  actual_intentions: IntentionDict[];
  cf_intentions: IntentionDict[];
  influence_actual: InfluenceDict;
  influence_cf: InfluenceDict;
  rep_actual: RepValuesDict;
  rep_cf: RepValuesDict;
  comparison: Record<string, number>;
  text: string;
  text_source: string;
}

export interface HistoryEntry {
  bundle_id: string;
  bundle: BundleDict;
  cf_intentions: IntentionDict[];
  decision: 'keep' | 'replace' | null;
  timestamp: number;
}

export interface SessionDoc {
  id: string;
  instance: InstanceDict;
  current_route: RouteDict;
  intentions: IntentionDict[];
  n_classes: number;
  class_names: string[];
  history: HistoryEntry[];
}

export interface AskResponse {
  bundle_id: string;
  bundle: BundleDict;
}

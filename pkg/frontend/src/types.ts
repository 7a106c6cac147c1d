// Payload shapes of the workbench HTTP API, field for field.

export const PROPERTY_LETTERS = ["L", "I", "N", "D", "Di", "U", "Nc"] as const;
export type PropertyLetter = (typeof PROPERTY_LETTERS)[number];

export interface ProjectRecord {
  id: string;
  name: string;
  created: string;
  log_length: number;
}

export interface ThreatRow {
  id: string;
  label: string;
  text: string;
  source: string;
  properties: string[];
  // present on preliminary rows only
  consumed?: boolean;
  reserve?: boolean;
}

export interface MappingRow {
  m_id: string;
  final_id: string;
  nodes: string[];
  representative: string;
  composed: string;
  source: string;
  step5_extended: boolean;
}

export interface Candidate {
  ids: string[];
  score: number;
  score_exact: string;
  shared_tokens: string[];
}

export interface SuggestionsPayload {
  threshold: number;
  candidates: Candidate[];
}

export interface GapRecord {
  final_id: string;
  original_label: string;
  generalized_label: string;
  provenance: string;
  confirmed: boolean;
}

export interface GapPayload {
  provisional: boolean;
  records: GapRecord[];
}

export interface TreeNodePayload {
  id: string;
  label: string;
  composes: boolean;
  composed: string;
  children: TreeNodePayload[];
}

export interface TreesPayload {
  origin: string;
  properties: Record<string, TreeNodePayload[]>;
}

export interface LogEntryPayload {
  seq: number;
  ts: string;
  actor: string;
  stmt?: string;
  import?: { suffix: string; rows: [string, string | null][] };
}

export interface LogPayload {
  log_length: number;
  entries: LogEntryPayload[];
}

export interface StatsPayload {
  step2_total: number;
  step3_total: number;
  embrace_count: number;
  rename_count: number;
  discard_count: number;
  final_discard_count: number;
  rendered: string;
}

export interface OpsResult {
  applied: number;
  log_length: number;
  rows: Record<string, unknown>[];
}

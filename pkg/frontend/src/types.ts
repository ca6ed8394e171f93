// Shapes exchanged with the metaglyph service API.

export type DataTypeName = "numerical" | "categorical" | "temporal" | "geospatial";

export interface DimensionSummary {
  id: string;
  name: string;
  data_type: DataTypeName;
  importance: number | null;
}

export interface GroupSummary {
  id: string;
  name: string;
  members: string[];
}

export interface SessionSummary {
  session_id: string;
  revision: number;
  seed: number;
  topic: string;
  rows: number;
  dimensions: DimensionSummary[];
  groups: GroupSummary[];
  proposed_groups: GroupSummary[];
  pins: Record<string, MappingTargetJson>;
  result_count: number;
}

export interface MappingTargetJson {
  kind: "element" | "axis" | "none";
  index: number;
}

export interface SlotJson {
  id: string;
  name: string;
  kind: "dimension" | "group";
  data_type: DataTypeName | null;
  importance: number;
}

export interface SolutionJson {
  pairs: MappingTargetJson[];
  slots: SlotJson[];
  reward: { r: number } & Record<string, unknown>;
}

export interface ElementInfo {
  index: number;
  label: string | null;
  augmentable: boolean;
}

export interface ResultJson {
  result_id: string;
  candidate_id: string;
  candidate_source: string;
  reward: number;
  reward_breakdown: Record<string, unknown>;
  solution: SolutionJson;
  svg: string;
  legend: string;
  elements: ElementInfo[];
  element_svgs: string[];
  metaphor_svg: string;
}

export interface GenerateResponse {
  session_id: string;
  revision: number;
  results: ResultJson[];
  diagnostics: CandidateDiagnostic[];
}

export interface CandidateDiagnostic {
  candidate_id: string;
  status: string;
  reason: string | null;
  reward: number | null;
}

export interface ApiError {
  code: string;
  message: string;
  detail: unknown;
}

export interface ChannelAssignmentJson {
  dimension_id: string;
  element_index: number;
  channel: string;
  group_id: string | null;
  member_index: number | null;
}

/** The metadata island embedded in every rendered scene SVG. */
export interface SceneMetadata {
  topic: string;
  placement: string;
  reward: number;
  solution: SolutionJson;
  assignments: ChannelAssignmentJson[];
}

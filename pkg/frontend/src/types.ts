// Shapes of the feedback-service REST payloads. The UI renders these
// verbatim; all labels and thresholds are decided server-side.

export interface VoteBody {
  user: string;
  zone?: number;
  label: string;
  origin?: string;
}

export interface ZoneGeometry {
  zone: number;
  name: string;
  polygon: [number, number][];
}

export interface ZoneScore {
  zone: number;
  predicted: number;
  label: string;
  model_provenance: string;
}

export interface RecommendationPayload {
  user: string;
  zone: number;
  zone_name: string;
  label: string;
  no_better_option: boolean;
  scores: ZoneScore[];
  floorplan_highlight: number;
  generated_at: string;
}

export type StatRow = Record<string, number | null>;

export interface StatsPayload {
  overall: StatRow;
  per_person: StatRow;
  omitted_users: string[];
}

export interface OpenPrompt {
  date: string;
  slot: string;
}

export interface VoteRejection {
  code: string;
  field: string;
  message: string;
}

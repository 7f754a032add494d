/** Payload shapes of the service's JSON endpoints. */

export const CLASS_NAMES = ["Empty", "Fluid", "Heavy", "Jam"] as const;
export type TrafficClassName = (typeof CLASS_NAMES)[number];

export type ReviewState = "unreviewed" | "confirmed" | "corrected";

export interface PredictionRecord {
  id: number;
  image_ref: string;
  predicted: TrafficClassName;
  probabilities: number[];
  created_at: number;
  review: ReviewState;
  corrected_label: TrafficClassName | null;
}

export interface CycleLine {
  p0: number | null;
  pf: number | null;
  r: number | null;
  gain: number | null;
  q: number;
  rounds: number;
  cycle: number;
  status: string;
}

export interface MetricsPayload {
  p0: number | null;
  pf: number | null;
  r: number | null;
  gain: number | null;
  q: number;
  rounds: number;
  cycles: number;
  stack_size: number;
  pending_corrections: number;
  busy: boolean;
  history: CycleLine[];
}

export type Verdict =
  | { verdict: "confirmed" }
  | { verdict: "corrected"; label: TrafficClassName };

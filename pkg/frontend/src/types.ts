export type TaskKind = "punchline-check" | "pairwise-explanation" | "generation-judgment";

export interface AnnotationTask {
  task_id: string;
  kind: TaskKind;
  payload: Record<string, unknown>;
  required_annotators: number;
}

export interface PunchlinePayload {
  pun_word: boolean;
  alt_word: boolean;
  pun_sense: boolean;
  alt_sense: boolean;
}

export type PairwiseWinner = "first" | "second" | "tie";

export interface PairwisePayload {
  winner: PairwiseWinner;
}

export const ERROR_LABELS = [
  "misclassify-pun-as-non-pun",
  "incorrect-pun-word",
  "incorrect-alternative-word",
  "het-as-hom",
  "lack-of-meaning-analysis",
  "fabricated-meaning",
] as const;

export type ErrorLabel = (typeof ERROR_LABELS)[number];

export interface GenerationPayload {
  success: boolean;
  funniness: 1 | 2 | 3 | 4 | 5;
  error_label?: ErrorLabel;
}

export type SubmissionPayload = PunchlinePayload | PairwisePayload | GenerationPayload;

export interface ProgressKind {
  tasks: number;
  complete: number;
  submissions: number;
}

export interface Progress {
  kinds: Record<TaskKind, ProgressKind>;
  annotators: string[];
  log_length: number;
}

export interface ApiError {
  code: string;
  message: string;
}

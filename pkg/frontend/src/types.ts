/** Wire types for the local annotation service API (consumed verbatim). */

export type TaskType = "bws_judgment" | "qa_questions" | "qa_answers";

export interface BwsPayload {
  update: string;
  /** Anonymous summaries, already in the service's recorded display order. */
  summaries: string[];
}

export interface QuestionsPayload {
  update: string;
}

export interface AnswersPayload {
  update: string;
  background: string;
  questions: string[];
}

export interface Task {
  task_id: string;
  task_type: TaskType;
  event_id: string;
  t: number;
  payload: BwsPayload | QuestionsPayload | AnswersPayload;
}

export interface Progress {
  types: Record<string, { tasks: number; done: number; submissions: number }>;
  judges: Record<string, number>;
}

export interface JudgmentBody {
  task_id: string;
  judge_id: string;
  best_index: number;
  worst_index: number;
  justification: string;
  elapsed_ms: number;
}

export interface QuestionsBody {
  task_id: string;
  judge_id: string;
  questions: string[];
}

export interface AnswerField {
  text: string;
  none: boolean;
}

export interface AnswersBody {
  task_id: string;
  judge_id: string;
  answers: AnswerField[];
}

/** Form state and submit-gating rules, kept pure for testability. */

import type { AnswerField, Task, TaskType } from "./types";

export const QUESTION_COUNT = 5;
export const JUSTIFICATION_FLOOR = 10;

export interface BwsForm {
  kind: "bws_judgment";
  best: number | null;
  worst: number | null;
  justification: string;
}

export interface QuestionsForm {
  kind: "qa_questions";
  questions: string[];
}

export interface AnswersForm {
  kind: "qa_answers";
  answers: AnswerField[];
}

export type Form = BwsForm | QuestionsForm | AnswersForm;

export function emptyForm(taskType: TaskType): Form {
  switch (taskType) {
    case "bws_judgment":
      return { kind: "bws_judgment", best: null, worst: null, justification: "" };
    case "qa_questions":
      return { kind: "qa_questions", questions: Array(QUESTION_COUNT).fill("") };
    case "qa_answers":
      return {
        kind: "qa_answers",
        answers: Array.from({ length: QUESTION_COUNT }, () => ({ text: "", none: false })),
      };
  }
}

/** Human-readable problems blocking submission; empty means submittable. */
export function validate(form: Form): string[] {
  const problems: string[] = [];
  if (form.kind === "bws_judgment") {
    if (form.best === null) problems.push("Pick the best summary.");
    if (form.worst === null) problems.push("Pick the worst summary.");
    if (form.best !== null && form.worst !== null && form.best === form.worst) {
      problems.push("Best and worst must be different summaries.");
    }
    if (form.justification.trim().length < JUSTIFICATION_FLOOR) {
      problems.push(`Briefly justify your choices (at least ${JUSTIFICATION_FLOOR} characters).`);
    }
  } else if (form.kind === "qa_questions") {
    form.questions.forEach((q, i) => {
      if (!q.trim()) problems.push(`Question ${i + 1} is empty.`);
    });
  } else {
    form.answers.forEach((a, i) => {
      if (!a.none && !a.text.trim()) {
        problems.push(`Answer ${i + 1} needs text, or mark "none".`);
      }
    });
  }
  return problems;
}

export function canSubmit(form: Form): boolean {
  return validate(form).length === 0;
}

export function formForTask(task: Task): Form {
  return emptyForm(task.task_type);
}

/** Drafts survive transient failures; typed text is never lost. */
export function draftKey(taskId: string, judge: string): string {
  return `bgsum-draft:${judge}:${taskId}`;
}

export function serializeForm(form: Form): string {
  return JSON.stringify(form);
}

export function deserializeForm(raw: string | null): Form | null {
  if (!raw) return null;
  try {
    const parsed = JSON.parse(raw) as Form;
    if (
      parsed &&
      (parsed.kind === "bws_judgment" ||
        parsed.kind === "qa_questions" ||
        parsed.kind === "qa_answers")
    ) {
      return parsed;
    }
  } catch {
    // corrupted draft: start fresh
  }
  return null;
}

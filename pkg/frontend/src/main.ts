/** App loop: fetch a task, render it, submit, repeat.
 *
 * One active task per browser session. Drafts are written to storage on
 * every change so transient failures never lose typed text; a conflict
 * (someone else completed the task, or a double submit) moves on to the
 * next task.
 */

import {
  ApiError,
  ConflictError,
  fetchProgress,
  fetchTask,
  submitAnswers,
  submitJudgment,
  submitQuestions,
} from "./api";
import {
  canSubmit,
  deserializeForm,
  draftKey,
  formForTask,
  serializeForm,
  validate,
  type Form,
} from "./state";
import { startTimer, type TaskTimer } from "./timer";
import { renderDone, renderError, renderLoading, renderTask } from "./views";
import type { Task, TaskType } from "./types";

export interface AppOptions {
  base?: string;
  doc?: Document;
  storage?: Pick<Storage, "getItem" | "setItem" | "removeItem">;
  now?: () => number;
}

export interface App {
  next(): Promise<void>;
  submit(): Promise<void>;
  currentTask(): Task | null;
}

const memoryStorage = () => {
  const data = new Map<string, string>();
  return {
    getItem: (k: string) => data.get(k) ?? null,
    setItem: (k: string, v: string) => void data.set(k, v),
    removeItem: (k: string) => void data.delete(k),
  };
};

export function createApp(
  container: HTMLElement,
  judge: string,
  taskType: TaskType,
  options: AppOptions = {},
): App {
  const doc = options.doc ?? container.ownerDocument;
  const base = options.base ?? "";
  const storage =
    options.storage ??
    (typeof localStorage !== "undefined" ? localStorage : memoryStorage());

  let task: Task | null = null;
  let form: Form | null = null;
  let timer: TaskTimer | null = null;

  function show(node: HTMLElement): void {
    container.textContent = "";
    container.appendChild(node);
  }

  function saveDraft(): void {
    if (task && form) storage.setItem(draftKey(task.task_id, judge), serializeForm(form));
  }

  function clearDraft(): void {
    if (task) storage.removeItem(draftKey(task.task_id, judge));
  }

  function renderCurrent(): void {
    if (!task || !form) return;
    const view = renderTask(doc, task, form, {
      onChange() {
        saveDraft();
        view.setProblems(validate(form!));
      },
      onSubmit() {
        void submit();
      },
    });
    view.setProblems(validate(form));
    show(view.root);
    // timing starts at first render, not at assignment
    timer = startTimer(options.now);
  }

  async function next(): Promise<void> {
    show(renderLoading(doc));
    try {
      task = await fetchTask(base, taskType, judge);
    } catch (error) {
      task = null;
      show(
        renderError(doc, describe(error), false, () => {
          void next();
        }),
      );
      return;
    }
    if (!task) {
      let progress = null;
      try {
        progress = await fetchProgress(base);
      } catch {
        // done screen still renders without counts
      }
      show(renderDone(doc, taskType, progress));
      return;
    }
    const draft = deserializeForm(storage.getItem(draftKey(task.task_id, judge)));
    form = draft && draft.kind === task.task_type ? draft : formForTask(task);
    renderCurrent();
  }

  async function submit(): Promise<void> {
    if (!task || !form || !timer) return;
    if (!canSubmit(form)) return;
    const elapsed_ms = timer.elapsedMs();
    try {
      if (form.kind === "bws_judgment") {
        await submitJudgment(base, {
          task_id: task.task_id,
          judge_id: judge,
          best_index: form.best!,
          worst_index: form.worst!,
          justification: form.justification.trim(),
          elapsed_ms,
        });
      } else if (form.kind === "qa_questions") {
        await submitQuestions(base, {
          task_id: task.task_id,
          judge_id: judge,
          questions: form.questions.map((q) => q.trim()),
        });
      } else {
        await submitAnswers(base, {
          task_id: task.task_id,
          judge_id: judge,
          answers: form.answers.map((a) => ({ text: a.text.trim(), none: a.none })),
        });
      }
    } catch (error) {
      if (error instanceof ConflictError) {
        // task went to someone else; typed text is no longer needed
        clearDraft();
        await next();
        return;
      }
      saveDraft();
      show(
        renderError(doc, describe(error), true, () => {
          renderCurrent();
        }),
      );
      return;
    }
    clearDraft();
    await next();
  }

  function describe(error: unknown): string {
    if (error instanceof ApiError) return `Service error: ${error.message}`;
    if (error instanceof Error) return `Could not reach the service: ${error.message}`;
    return "Unexpected error.";
  }

  return { next, submit, currentTask: () => task };
}

declare global {
  interface Window {
    bgsumStart?: () => void;
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined") {
  window.bgsumStart = () => {
    const judgeInput = document.getElementById("judge") as HTMLInputElement | null;
    const typeSelect = document.getElementById("task-type") as HTMLSelectElement | null;
    const containerEl = document.getElementById("app");
    if (!judgeInput || !typeSelect || !containerEl) return;
    const judge = judgeInput.value.trim();
    if (!judge) {
      judgeInput.focus();
      return;
    }
    localStorage.setItem("bgsum-judge", judge);
    const app = createApp(containerEl, judge, typeSelect.value as TaskType);
    void app.next();
  };
  const saved = localStorage.getItem("bgsum-judge");
  const judgeInput = document.getElementById("judge") as HTMLInputElement | null;
  if (saved && judgeInput) judgeInput.value = saved;
  document.getElementById("start")?.addEventListener("click", () => window.bgsumStart?.());
}

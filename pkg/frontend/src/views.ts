/** DOM builders for the three task types plus the done/error screens.
 *
 * Best/worst views render the anonymous summaries exactly in the order
 * the service sent them (its recorded permutation) and never receive or
 * display system identifiers.
 */

import { GUIDELINES, GUIDELINES_VERSION } from "./instructions";
import type { AnswersForm, BwsForm, Form, QuestionsForm } from "./state";
import type { AnswersPayload, BwsPayload, Progress, QuestionsPayload, Task } from "./types";

export interface TaskViewHandlers {
  onChange(form: Form): void;
  onSubmit(): void;
}

export interface TaskView {
  root: HTMLElement;
  setProblems(problems: string[]): void;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function guidelinesBlock(doc: Document, taskType: string): HTMLElement {
  const details = el(doc, "details", "guidelines");
  const summary = el(doc, "summary", undefined, `Guidelines (v${GUIDELINES_VERSION})`);
  details.appendChild(summary);
  details.appendChild(el(doc, "p", undefined, GUIDELINES[taskType] ?? ""));
  return details;
}

function updateBlock(doc: Document, text: string): HTMLElement {
  const section = el(doc, "section", "update");
  section.appendChild(el(doc, "h2", undefined, "News update"));
  section.appendChild(el(doc, "p", "update-text", text));
  return section;
}

function problemsBlock(doc: Document): HTMLElement {
  return el(doc, "ul", "problems");
}

function submitRow(doc: Document, handlers: TaskViewHandlers): HTMLButtonElement {
  const button = el(doc, "button", "submit", "Submit") as HTMLButtonElement;
  button.type = "button";
  button.disabled = true;
  button.addEventListener("click", () => handlers.onSubmit());
  return button;
}

function finishView(
  root: HTMLElement,
  problems: HTMLElement,
  button: HTMLButtonElement,
): TaskView {
  return {
    root,
    setProblems(list: string[]) {
      problems.textContent = "";
      const doc = root.ownerDocument;
      for (const problem of list) {
        problems.appendChild(el(doc, "li", "problem", problem));
      }
      button.disabled = list.length > 0;
    },
  };
}

function renderBws(
  doc: Document,
  task: Task,
  form: BwsForm,
  handlers: TaskViewHandlers,
): TaskView {
  const payload = task.payload as BwsPayload;
  const root = el(doc, "div", "task task-bws");
  root.appendChild(guidelinesBlock(doc, task.task_type));
  root.appendChild(updateBlock(doc, payload.update));

  const panels = el(doc, "section", "summaries");
  payload.summaries.forEach((summary, index) => {
    const panel = el(doc, "article", "summary-panel");
    panel.setAttribute("data-index", String(index));
    panel.appendChild(el(doc, "h3", undefined, `Summary ${index + 1}`));
    panel.appendChild(el(doc, "p", "summary-text", summary));

    const picks = el(doc, "div", "picks");
    for (const kind of ["best", "worst"] as const) {
      const label = el(doc, "label", `pick pick-${kind}`);
      const radio = el(doc, "input") as HTMLInputElement;
      radio.type = "radio";
      radio.name = kind;
      radio.value = String(index);
      radio.checked = form[kind] === index;
      radio.addEventListener("change", () => {
        form[kind] = index;
        handlers.onChange(form);
      });
      label.appendChild(radio);
      label.appendChild(doc.createTextNode(kind === "best" ? " Best" : " Worst"));
      picks.appendChild(label);
    }
    panel.appendChild(picks);
    panels.appendChild(panel);
  });
  root.appendChild(panels);

  const justification = el(doc, "textarea", "justification") as HTMLTextAreaElement;
  justification.placeholder = "Briefly justify your choices";
  justification.value = form.justification;
  justification.addEventListener("input", () => {
    form.justification = justification.value;
    handlers.onChange(form);
  });
  root.appendChild(justification);

  const problems = problemsBlock(doc);
  const button = submitRow(doc, handlers);
  root.appendChild(problems);
  root.appendChild(button);
  return finishView(root, problems, button);
}

function renderQuestions(
  doc: Document,
  task: Task,
  form: QuestionsForm,
  handlers: TaskViewHandlers,
): TaskView {
  const payload = task.payload as QuestionsPayload;
  const root = el(doc, "div", "task task-questions");
  root.appendChild(guidelinesBlock(doc, task.task_type));
  root.appendChild(updateBlock(doc, payload.update));

  const list = el(doc, "ol", "question-fields");
  form.questions.forEach((value, index) => {
    const item = el(doc, "li");
    const input = el(doc, "input", "question-input") as HTMLInputElement;
    input.type = "text";
    input.placeholder = `Background question ${index + 1}`;
    input.value = value;
    input.addEventListener("input", () => {
      form.questions[index] = input.value;
      handlers.onChange(form);
    });
    item.appendChild(input);
    list.appendChild(item);
  });
  root.appendChild(list);

  const problems = problemsBlock(doc);
  const button = submitRow(doc, handlers);
  root.appendChild(problems);
  root.appendChild(button);
  return finishView(root, problems, button);
}

function renderAnswers(
  doc: Document,
  task: Task,
  form: AnswersForm,
  handlers: TaskViewHandlers,
): TaskView {
  const payload = task.payload as AnswersPayload;
  const root = el(doc, "div", "task task-answers");
  root.appendChild(guidelinesBlock(doc, task.task_type));
  root.appendChild(updateBlock(doc, payload.update));

  const background = el(doc, "section", "background");
  background.appendChild(el(doc, "h2", undefined, "Background summary"));
  background.appendChild(el(doc, "p", "background-text", payload.background));
  root.appendChild(background);

  const list = el(doc, "ol", "answer-fields");
  payload.questions.forEach((question, index) => {
    const field = form.answers[index]!;
    const item = el(doc, "li", "answer-row");
    item.appendChild(el(doc, "p", "question-text", question));

    const input = el(doc, "textarea", "answer-input") as HTMLTextAreaElement;
    input.placeholder = "Answer from the background";
    input.value = field.text;
    input.disabled = field.none;
    input.addEventListener("input", () => {
      field.text = input.value;
      handlers.onChange(form);
    });

    const noneLabel = el(doc, "label", "none-toggle");
    const none = el(doc, "input") as HTMLInputElement;
    none.type = "checkbox";
    none.checked = field.none;
    none.addEventListener("change", () => {
      field.none = none.checked;
      input.disabled = none.checked;
      handlers.onChange(form);
    });
    noneLabel.appendChild(none);
    noneLabel.appendChild(doc.createTextNode(" none (not answered by this background)"));

    item.appendChild(input);
    item.appendChild(noneLabel);
    list.appendChild(item);
  });
  root.appendChild(list);

  const problems = problemsBlock(doc);
  const button = submitRow(doc, handlers);
  root.appendChild(problems);
  root.appendChild(button);
  return finishView(root, problems, button);
}

export function renderTask(
  doc: Document,
  task: Task,
  form: Form,
  handlers: TaskViewHandlers,
): TaskView {
  switch (form.kind) {
    case "bws_judgment":
      return renderBws(doc, task, form, handlers);
    case "qa_questions":
      return renderQuestions(doc, task, form, handlers);
    case "qa_answers":
      return renderAnswers(doc, task, form, handlers);
  }
}

export function renderDone(doc: Document, taskType: string, progress: Progress | null): HTMLElement {
  const root = el(doc, "div", "done");
  root.appendChild(el(doc, "h2", undefined, "No more tasks"));
  const stats = progress?.types[taskType];
  const line = stats
    ? `${stats.done} of ${stats.tasks} items complete (${stats.submissions} submissions).`
    : "Nothing assigned to you right now.";
  root.appendChild(el(doc, "p", "progress", line));
  return root;
}

export function renderError(
  doc: Document,
  message: string,
  draftRetained: boolean,
  onRetry: () => void,
): HTMLElement {
  const root = el(doc, "div", "error");
  root.appendChild(el(doc, "p", "error-text", message));
  if (draftRetained) {
    root.appendChild(el(doc, "p", "draft-note", "Your typed text is saved and will be resubmitted."));
  }
  const retry = el(doc, "button", "retry", "Retry") as HTMLButtonElement;
  retry.type = "button";
  retry.addEventListener("click", onRetry);
  root.appendChild(retry);
  return root;
}

export function renderLoading(doc: Document): HTMLElement {
  return el(doc, "p", "loading", "Fetching the next task…");
}

import { beforeEach, describe, expect, it, vi } from "vitest";

import { emptyForm, validate, type AnswersForm, type BwsForm } from "../src/state";
import { renderDone, renderError, renderTask } from "../src/views";
import type { Task } from "../src/types";

// ids the service knows but must never ship to the browser
const SYSTEM_IDS = ["human", "flan-t5-xl", "gpt-3.5", "long-t5-xl", "mock"];

const bwsTask: Task = {
  task_id: "bws:libyan-crisis:7",
  task_type: "bws_judgment",
  event_id: "libyan-crisis",
  t: 7,
  payload: {
    update: "The interim prime minister announces a new cabinet.",
    summaries: [
      "Fighting reached the capital in August and the old government fell.",
      "An interim council took power after months of conflict.",
      "Earlier, rebels advanced along the coast toward the capital.",
    ],
  },
};

const answersTask: Task = {
  task_id: "qa:libyan-crisis:7:0",
  task_type: "qa_answers",
  event_id: "libyan-crisis",
  t: 7,
  payload: {
    update: "The interim prime minister announces a new cabinet.",
    background: "An interim council took power after months of conflict.",
    questions: [
      "Who led the previous government?",
      "What happened to the old cabinet?",
      "When did the conflict start?",
      "Who backed the interim council?",
      "Where is the council based?",
    ],
  },
};

const handlers = () => ({ onChange: vi.fn(), onSubmit: vi.fn() });

describe("bws view", () => {
  it("renders exactly three unlabeled summary panels with pick radios", () => {
    const view = renderTask(document, bwsTask, emptyForm("bws_judgment"), handlers());
    const panels = view.root.querySelectorAll(".summary-panel");
    expect(panels).toHaveLength(3);
    expect(view.root.querySelectorAll('input[name="best"]')).toHaveLength(3);
    expect(view.root.querySelectorAll('input[name="worst"]')).toHaveLength(3);
    panels.forEach((panel, i) => {
      expect(panel.querySelector("h3")?.textContent).toBe(`Summary ${i + 1}`);
    });
  });

  it("keeps the DOM blind: no system identifiers anywhere", () => {
    const view = renderTask(document, bwsTask, emptyForm("bws_judgment"), handlers());
    const markup = view.root.outerHTML;
    for (const id of SYSTEM_IDS) {
      expect(markup).not.toContain(id);
    }
    expect(markup).toMatchSnapshot();
  });

  it("displays summaries exactly in the order the service sent", () => {
    const view = renderTask(document, bwsTask, emptyForm("bws_judgment"), handlers());
    const texts = Array.from(view.root.querySelectorAll(".summary-text")).map(
      (node) => node.textContent,
    );
    expect(texts).toEqual((bwsTask.payload as { summaries: string[] }).summaries);
  });

  it("disables submit until the form is valid, then submits on click", () => {
    const h = handlers();
    const form = emptyForm("bws_judgment") as BwsForm;
    const view = renderTask(document, bwsTask, form, h);
    document.body.appendChild(view.root); // jsdom fires events on attached nodes only
    view.setProblems(validate(form));
    const button = view.root.querySelector("button.submit") as HTMLButtonElement;
    expect(button.disabled).toBe(true);

    (view.root.querySelectorAll('input[name="best"]')[0] as HTMLInputElement).click();
    (view.root.querySelectorAll('input[name="worst"]')[2] as HTMLInputElement).click();
    const justification = view.root.querySelector(".justification") as HTMLTextAreaElement;
    justification.value = "the first summary carries the whole history";
    justification.dispatchEvent(new Event("input"));
    expect(h.onChange).toHaveBeenCalled();

    view.setProblems(validate(form));
    expect(form.best).toBe(0);
    expect(form.worst).toBe(2);
    expect(button.disabled).toBe(false);
    button.click();
    expect(h.onSubmit).toHaveBeenCalledTimes(1);
    view.root.remove();
  });

  it("blocks best equal to worst with an inline problem", () => {
    const form = emptyForm("bws_judgment") as BwsForm;
    const view = renderTask(document, bwsTask, form, handlers());
    document.body.appendChild(view.root);
    (view.root.querySelectorAll('input[name="best"]')[1] as HTMLInputElement).click();
    (view.root.querySelectorAll('input[name="worst"]')[1] as HTMLInputElement).click();
    const justification = view.root.querySelector(".justification") as HTMLTextAreaElement;
    justification.value = "long enough justification";
    justification.dispatchEvent(new Event("input"));
    view.setProblems(validate(form));
    const button = view.root.querySelector("button.submit") as HTMLButtonElement;
    expect(button.disabled).toBe(true);
    expect(view.root.querySelector(".problems")?.textContent).toContain("different");
    view.root.remove();
  });
});

describe("answers view", () => {
  it("renders five answer boxes each with a none toggle", () => {
    const view = renderTask(document, answersTask, emptyForm("qa_answers"), handlers());
    expect(view.root.querySelectorAll(".answer-input")).toHaveLength(5);
    expect(view.root.querySelectorAll(".none-toggle input[type=checkbox]")).toHaveLength(5);
    expect(view.root.querySelector(".background-text")?.textContent).toContain(
      "interim council",
    );
  });

  it("none toggle disables the text box and satisfies validation", () => {
    const form = emptyForm("qa_answers") as AnswersForm;
    const view = renderTask(document, answersTask, form, handlers());
    document.body.appendChild(view.root);
    const rows = view.root.querySelectorAll(".answer-row");
    rows.forEach((row, i) => {
      if (i === 0) {
        const input = row.querySelector(".answer-input") as HTMLTextAreaElement;
        input.value = "After months of conflict.";
        input.dispatchEvent(new Event("input"));
      } else {
        (row.querySelector('input[type="checkbox"]') as HTMLInputElement).click();
        expect((row.querySelector(".answer-input") as HTMLTextAreaElement).disabled).toBe(true);
      }
    });
    expect(validate(form)).toEqual([]);
    expect(form.answers.filter((a) => a.none)).toHaveLength(4);
    view.root.remove();
  });
});

describe("done and error screens", () => {
  it("done screen shows progress counts", () => {
    const done = renderDone(document, "bws_judgment", {
      types: { bws_judgment: { tasks: 9, done: 4, submissions: 13 } },
      judges: {},
    });
    expect(done.textContent).toContain("4 of 9");
  });

  it("error screen offers retry and notes retained drafts", () => {
    const retry = vi.fn();
    const error = renderError(document, "Could not reach the service", true, retry);
    expect(error.textContent).toContain("saved");
    (error.querySelector("button.retry") as HTMLButtonElement).click();
    expect(retry).toHaveBeenCalledTimes(1);
  });
});

/** Thin typed client for the annotation service; no other network calls. */

import type {
  AnswersBody,
  JudgmentBody,
  Progress,
  QuestionsBody,
  Task,
} from "./types";

export class ConflictError extends Error {}

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

async function parseJson(response: Response): Promise<any> {
  const text = await response.text();
  try {
    return text ? JSON.parse(text) : {};
  } catch {
    throw new ApiError(`bad JSON from service (${response.status})`, response.status);
  }
}

async function post(base: string, path: string, body: unknown): Promise<any> {
  const response = await fetch(`${base}${path}`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  const data = await parseJson(response);
  if (response.status === 409) {
    throw new ConflictError(data.error ?? "already submitted");
  }
  if (!response.ok) {
    throw new ApiError(data.error ?? `service error ${response.status}`, response.status);
  }
  return data;
}

export async function fetchTask(
  base: string,
  taskType: string,
  judge: string,
): Promise<Task | null> {
  const params = new URLSearchParams({ type: taskType, judge });
  const response = await fetch(`${base}/api/task?${params}`);
  const data = await parseJson(response);
  if (!response.ok) {
    throw new ApiError(data.error ?? `service error ${response.status}`, response.status);
  }
  return (data.task as Task) ?? null;
}

export async function fetchProgress(base: string): Promise<Progress> {
  const response = await fetch(`${base}/api/progress`);
  const data = await parseJson(response);
  if (!response.ok) {
    throw new ApiError(data.error ?? `service error ${response.status}`, response.status);
  }
  return data as Progress;
}

export function submitJudgment(base: string, body: JudgmentBody): Promise<any> {
  return post(base, "/api/judgment", body);
}

export function submitQuestions(base: string, body: QuestionsBody): Promise<any> {
  return post(base, "/api/questions", body);
}

export function submitAnswers(base: string, body: AnswersBody): Promise<any> {
  return post(base, "/api/answers", body);
}

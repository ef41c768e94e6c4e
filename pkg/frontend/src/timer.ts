/** Task timing from first render to submit, on a monotonic clock. */

export interface TaskTimer {
  elapsedMs(): number;
}

export function startTimer(now: () => number = () => performance.now()): TaskTimer {
  const startedAt = now();
  return {
    // floor of 1 so a stored judgment always has elapsed_ms > 0
    elapsedMs: () => Math.max(1, Math.round(now() - startedAt)),
  };
}

/**
 * Pure HTML builders. Rendering picks exactly the fields it needs from the
 * task payload, so nothing beyond source, hypothesis, context, instructions,
 * and progress can ever reach the screen.
 */

import { SessionView } from "./state.js";
import { TaskPayload } from "./client.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export const START_OF_TALK = "(start of talk)";
export const END_OF_TALK = "(end of talk)";

function contextCell(text: string | null, placeholder: string): string {
  if (text === null) {
    return `<div class="context placeholder">${escapeHtml(placeholder)}</div>`;
  }
  return `<div class="context">${escapeHtml(text)}</div>`;
}

export function renderTask(
  task: TaskPayload,
  opts: {
    sliderValue: number | null;
    touched: boolean;
    hint: string | null;
    done: number;
    total: number;
    pendingRetry: boolean;
  },
): string {
  const value = opts.sliderValue === null ? "" : String(opts.sliderValue);
  const valueLabel = opts.touched ? escapeHtml(value) : "&ndash;";
  const hintHtml = opts.hint
    ? `<p class="hint" role="alert">${escapeHtml(opts.hint)}</p>`
    : "";
  const retryHtml = opts.pendingRetry
    ? `<button id="retry-submit" class="retry">Retry submission</button>`
    : "";
  return `
<section class="annotation" data-task="${escapeHtml(task.task_id)}">
  <p class="progress">Scored ${opts.done} of ${opts.total}</p>
  <details class="instructions" open>
    <summary>Instructions</summary>
    <p>${escapeHtml(task.instructions)}</p>
  </details>
  <div class="panel source">
    <h2>Source</h2>
    <p>${escapeHtml(task.source_text)}</p>
  </div>
  <div class="panel translation">
    <h2>Translation</h2>
    ${contextCell(task.prev_hyp_text, START_OF_TALK)}
    <div class="judged">${escapeHtml(task.hyp_text)}</div>
    ${contextCell(task.next_hyp_text, END_OF_TALK)}
  </div>
  <div class="scoring">
    <label for="score-slider">Quality (0&ndash;100)</label>
    <input id="score-slider" type="range"
           min="${task.slider.min}" max="${task.slider.max}" step="${task.slider.step}"
           ${opts.touched ? `value="${escapeHtml(value)}"` : `value="50"`}
           aria-valuetext="${valueLabel}">
    <output id="score-value">${valueLabel}</output>
    <button id="submit-score" ${opts.touched ? "" : "disabled"}>Submit</button>
    ${retryHtml}
    ${hintHtml}
  </div>
</section>`;
}

export function renderDone(completed: number): string {
  return `
<section class="completion">
  <h2>All done</h2>
  <p>You have scored ${completed} segments. Thank you!</p>
</section>`;
}

export function renderFetchError(message: string): string {
  return `
<section class="fetch-error">
  <p role="alert">Could not load the next task: ${escapeHtml(message)}</p>
  <button id="retry-fetch">Retry</button>
</section>`;
}

export function renderView(view: SessionView): string {
  switch (view.kind) {
    case "loading":
      return `<p class="loading">Loading&hellip;</p>`;
    case "done":
      return renderDone(view.completed);
    case "fetch-error":
      return renderFetchError(view.message);
    case "task":
      return renderTask(view.task, {
        sliderValue: view.sliderValue,
        touched: view.touched,
        hint: view.hint,
        done: view.done,
        total: view.total,
        pendingRetry: view.pendingRetry,
      });
  }
}

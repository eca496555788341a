/**
 * Session state machine for one annotator.
 *
 * Rules enforced here rather than in the DOM layer so they are testable
 * headlessly:
 *  - a score can only be submitted after the slider has been touched;
 *  - submissions are single-flight (no double submit while one is pending);
 *  - a submission that fails on the network is retained and can be retried
 *    without data loss; a retry answered with "already recorded" advances;
 *  - tasks are presented exactly in the order the service hands them out.
 */

import {
  CampaignApi,
  NextTask,
  SubmitRejected,
  TaskPayload,
} from "./client.js";

export type SessionView =
  | { kind: "loading" }
  | {
      kind: "task";
      task: TaskPayload;
      sliderValue: number | null;
      touched: boolean;
      hint: string | null;
      done: number;
      total: number;
      pendingRetry: boolean;
    }
  | { kind: "done"; completed: number }
  | { kind: "fetch-error"; message: string };

export type SubmitOutcome =
  | "blocked-untouched"
  | "blocked-inflight"
  | "advanced"
  | "completed"
  | "retained"
  | "rejected";

interface PendingSubmit {
  taskId: string;
  score: number;
}

export class AnnotationSession {
  private current: TaskPayload | null = null;
  private sliderValue: number | null = null;
  private touched = false;
  private hint: string | null = null;
  private inflight = false;
  private pending: PendingSubmit | null = null;
  private state: "loading" | "task" | "done" | "fetch-error" = "loading";
  private fetchErrorMessage = "";
  private done = 0;
  private total = 0;

  constructor(
    private readonly client: CampaignApi,
    readonly annotatorId: string,
  ) {}

  view(): SessionView {
    switch (this.state) {
      case "loading":
        return { kind: "loading" };
      case "done":
        return { kind: "done", completed: this.done };
      case "fetch-error":
        return { kind: "fetch-error", message: this.fetchErrorMessage };
      case "task":
        return {
          kind: "task",
          task: this.current as TaskPayload,
          sliderValue: this.sliderValue,
          touched: this.touched,
          hint: this.hint,
          done: this.done,
          total: this.total,
          pendingRetry: this.pending !== null,
        };
    }
  }

  async start(): Promise<SessionView> {
    await this.refreshProgress();
    await this.advance();
    return this.view();
  }

  /** The annotator moved the slider; enables submission. */
  touch(value: number): void {
    if (this.state !== "task") {
      return;
    }
    this.sliderValue = value;
    this.touched = true;
    this.hint = null;
  }

  async submit(): Promise<SubmitOutcome> {
    if (this.state !== "task" || this.current === null) {
      return "blocked-untouched";
    }
    if (this.inflight) {
      return "blocked-inflight";
    }
    if (!this.touched || this.sliderValue === null) {
      this.hint = "Move the slider to rate this translation before submitting.";
      return "blocked-untouched";
    }
    return this.send({ taskId: this.current.task_id, score: this.sliderValue });
  }

  /** Retry a submission the network swallowed; the score was retained. */
  async retrySubmit(): Promise<SubmitOutcome> {
    if (this.pending === null) {
      return this.submit();
    }
    if (this.inflight) {
      return "blocked-inflight";
    }
    return this.send(this.pending);
  }

  /** Retry fetching after a fetch error. */
  async retryFetch(): Promise<SessionView> {
    if (this.state === "fetch-error") {
      this.state = "loading";
      await this.refreshProgress().catch(() => undefined);
      await this.advance();
    }
    return this.view();
  }

  private async send(payload: PendingSubmit): Promise<SubmitOutcome> {
    this.inflight = true;
    try {
      await this.client.submitScore(
        payload.taskId,
        this.annotatorId,
        payload.score,
      );
      // "recorded" and "already-recorded" both mean the service has it.
      this.pending = null;
      this.hint = null;
      await this.refreshProgress().catch(() => undefined);
      await this.advance();
      return this.state === "done" ? "completed" : "advanced";
    } catch (err) {
      if (err instanceof SubmitRejected) {
        this.pending = null;
        this.hint = `The service rejected this score (${err.status}).`;
        return "rejected";
      }
      // Network failure: retain the score locally for retry.
      this.pending = payload;
      this.hint = "Could not reach the service; your score is kept and will be retried.";
      return "retained";
    } finally {
      this.inflight = false;
    }
  }

  private async advance(): Promise<void> {
    let next: NextTask;
    try {
      next = await this.client.fetchNext(this.annotatorId);
    } catch (err) {
      this.state = "fetch-error";
      this.fetchErrorMessage = err instanceof Error ? err.message : String(err);
      return;
    }
    if (next.kind === "done") {
      this.state = "done";
      return;
    }
    this.current = next.task;
    this.sliderValue = null;
    this.touched = false;
    this.hint = null;
    this.state = "task";
  }

  private async refreshProgress(): Promise<void> {
    const progress = await this.client.progress();
    const mine = progress.annotators[this.annotatorId];
    if (mine) {
      this.done = mine.done;
      this.total = mine.total;
    }
  }
}

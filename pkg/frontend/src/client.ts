/**
 * Typed client for the campaign service. Task payloads are blind by design:
 * the protocol never carries system identity or document position, and this
 * client only ever forwards what the service sent.
 */

export interface SliderBounds {
  min: number;
  max: number;
  step: number;
}

export interface TaskPayload {
  task_id: string;
  source_text: string;
  hyp_text: string;
  prev_hyp_text: string | null;
  next_hyp_text: string | null;
  instructions: string;
  slider: SliderBounds;
}

export interface AnnotatorProgress {
  done: number;
  total: number;
}

export interface Progress {
  annotators: Record<string, AnnotatorProgress>;
  done: number;
  total: number;
}

export type NextTask = { kind: "task"; task: TaskPayload } | { kind: "done" };

export type SubmitResult = "recorded" | "already-recorded";

/** Non-network failure from the service (validation, unknown task, ...). */
export class SubmitRejected extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`submission rejected: HTTP ${status}: ${detail}`);
  }
}

/** What the session layer needs; CampaignClient is the HTTP implementation. */
export interface CampaignApi {
  fetchNext(annotatorId: string): Promise<NextTask>;
  submitScore(
    taskId: string,
    annotatorId: string,
    score: number,
  ): Promise<SubmitResult>;
  progress(): Promise<Progress>;
}

export class CampaignClient implements CampaignApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  async fetchNext(annotatorId: string): Promise<NextTask> {
    const url = `${this.baseUrl}/api/tasks/next?annotator=${encodeURIComponent(annotatorId)}`;
    const resp = await this.fetchImpl(url);
    if (resp.status === 204) {
      return { kind: "done" };
    }
    if (!resp.ok) {
      throw new Error(`fetching next task failed: HTTP ${resp.status}`);
    }
    return { kind: "task", task: (await resp.json()) as TaskPayload };
  }

  /**
   * Post one score. A 409 means the task is already scored (e.g. a retry of
   * a submission whose response got lost); callers treat that as success.
   */
  async submitScore(
    taskId: string,
    annotatorId: string,
    score: number,
  ): Promise<SubmitResult> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/scores`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        task_id: taskId,
        annotator_id: annotatorId,
        score: score,
      }),
    });
    if (resp.status === 201) {
      return "recorded";
    }
    if (resp.status === 409) {
      return "already-recorded";
    }
    throw new SubmitRejected(resp.status, await resp.text());
  }

  async progress(): Promise<Progress> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/progress`);
    if (!resp.ok) {
      throw new Error(`fetching progress failed: HTTP ${resp.status}`);
    }
    return (await resp.json()) as Progress;
  }
}

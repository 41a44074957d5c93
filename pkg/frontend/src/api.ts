// Thin client for the annotation service plus an offline retry queue.

import type {
  AnnotationJson,
  GridModeName,
  GridSpecJson,
  SessionJson,
  SessionProgressJson,
  StimulusJson,
  SubmitReceiptJson,
} from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

async function asJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let message = resp.statusText;
    try {
      const body = await resp.json();
      if (body && typeof body.message === "string") message = body.message;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ApiError(resp.status, message);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  constructor(readonly base: string = "") {}

  listStimuli(): Promise<{ stimuli: string[] }> {
    return fetch(`${this.base}/api/stimuli`).then((r) => asJson(r));
  }

  getStimulus(id: string): Promise<StimulusJson> {
    return fetch(`${this.base}/api/stimuli/${id}`).then((r) => asJson(r));
  }

  getGrid(id: string, mode: GridModeName): Promise<GridSpecJson> {
    return fetch(`${this.base}/api/stimuli/${id}/grid?mode=${mode}`).then((r) => asJson(r));
  }

  imageUrl(id: string): string {
    return `${this.base}/api/stimuli/${id}/image`;
  }

  importancePngUrl(id: string, mode: GridModeName): string {
    return `${this.base}/api/stimuli/${id}/importance?mode=${mode}`;
  }

  createSession(participantId: string, mode?: GridModeName): Promise<SessionJson> {
    return fetch(`${this.base}/api/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ participant_id: participantId, mode: mode ?? null }),
    }).then((r) => asJson(r));
  }

  nextStimulus(sessionId: string): Promise<SessionProgressJson> {
    return fetch(`${this.base}/api/sessions/${sessionId}/next`).then((r) => asJson(r));
  }

  submitAnnotation(ann: AnnotationJson, sessionId?: string): Promise<SubmitReceiptJson> {
    const payload = sessionId ? { ...ann, session_id: sessionId } : ann;
    return fetch(`${this.base}/api/annotations`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    }).then((r) => asJson(r));
  }
}

interface QueuedSubmission {
  ann: AnnotationJson;
  sessionId?: string;
  resolve: (r: SubmitReceiptJson) => void;
  reject: (e: unknown) => void;
}

/**
 * Submits annotations with exponential backoff on network failure. Validation
 * errors (4xx) are not retried; resubmission-replace semantics on the server
 * make retried deliveries effectively exactly-once.
 */
export class RetryQueue {
  private queue: QueuedSubmission[] = [];
  private timer: ReturnType<typeof setTimeout> | null = null;
  private attempt = 0;

  constructor(
    private readonly client: ApiClient,
    private readonly baseDelayMs = 500,
    private readonly maxDelayMs = 30_000,
  ) {}

  get pending(): number {
    return this.queue.length;
  }

  submit(ann: AnnotationJson, sessionId?: string): Promise<SubmitReceiptJson> {
    return new Promise((resolve, reject) => {
      this.queue.push({ ann, sessionId, resolve, reject });
      void this.flush();
    });
  }

  async flush(): Promise<void> {
    if (this.timer) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    while (this.queue.length) {
      const item = this.queue[0];
      try {
        const receipt = await this.client.submitAnnotation(item.ann, item.sessionId);
        this.queue.shift();
        this.attempt = 0;
        item.resolve(receipt);
      } catch (err) {
        if (err instanceof ApiError && err.status < 500) {
          this.queue.shift();
          item.reject(err); // a validation problem; retrying cannot help
          continue;
        }
        this.attempt += 1;
        const delay = Math.min(this.baseDelayMs * 2 ** (this.attempt - 1), this.maxDelayMs);
        this.timer = setTimeout(() => void this.flush(), delay);
        return;
      }
    }
  }
}

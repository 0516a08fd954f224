// Service client with per-session request sequencing. At most one /ik
// round-trip is in flight per session; responses arriving out of order are
// discarded by sequence number, so the displayed pose always corresponds to
// the newest acknowledged input.

import type {
  AmoResponse,
  IkResponse,
  ModelPayload,
  PoseTarget,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

export class ServiceClient {
  constructor(
    readonly baseUrl: string,
    private fetchImpl: FetchLike = fetch.bind(globalThis),
  ) {}

  private async request<T>(path: string, body?: unknown): Promise<T> {
    const init: RequestInit = body === undefined
      ? { method: "GET" }
      : {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
      };
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    if (!resp.ok) {
      let detail = resp.statusText;
      try {
        const doc = await resp.json();
        if (doc && doc.detail) detail = String(doc.detail);
      } catch {
        // keep statusText
      }
      throw new ServiceError(detail, resp.status);
    }
    return (await resp.json()) as T;
  }

  getModel(): Promise<ModelPayload> {
    return this.request<ModelPayload>("/model");
  }

  ik(session: string, targets: { head: PoseTarget; left: PoseTarget; right: PoseTarget }):
    Promise<IkResponse> {
    return this.request<IkResponse>("/ik", { session, ...targets });
  }

  amo(session: string, qUpper: number[], rpy: number[], h: number,
      qHead?: number[]): Promise<AmoResponse> {
    return this.request<AmoResponse>("/amo", {
      session, q_upper: qUpper, rpy, h, q_head: qHead,
    });
  }
}

export interface ResolvedState {
  seq: number;
  ik: IkResponse;
  amo: AmoResponse;
}

/** One steering session: issues /ik then /amo for a target set and hands the
 * newest consistent state to `onState`. Stale responses never surface. */
export class SteeringSession {
  private seq = 0;
  private applied = 0;
  private inFlight = false;
  private queued:
    | { head: PoseTarget; left: PoseTarget; right: PoseTarget }
    | null = null;

  constructor(
    private client: ServiceClient,
    private session: string,
    private onState: (s: ResolvedState) => void,
    private onError: (e: unknown) => void = () => {},
  ) {}

  /** Number of responses discarded as stale (for tests and diagnostics). */
  discarded = 0;

  steer(targets: { head: PoseTarget; left: PoseTarget; right: PoseTarget }): void {
    this.queued = targets;
    if (!this.inFlight) void this.pump();
  }

  private async pump(): Promise<void> {
    while (this.queued) {
      const targets = this.queued;
      this.queued = null;
      const seq = ++this.seq;
      this.inFlight = true;
      try {
        const ik = await this.client.ik(this.session, targets);
        const amo = await this.client.amo(
          this.session, ik.q_upper, ik.command.rpy, ik.command.h, ik.q_head);
        // Superseded while in flight (or somehow reordered): never render a
        // state older than the newest acknowledged input.
        if (this.queued !== null || seq <= this.applied) {
          this.discarded += 1;
          continue;
        }
        this.applied = seq;
        this.onState({ seq, ik, amo });
      } catch (e) {
        this.onError(e);
      } finally {
        this.inFlight = false;
      }
    }
  }
}

/**
 * Session state store: the single place incoming frames mutate.
 *
 * Rules enforced here rather than in render code:
 *  - only schema_version-matched frames are accepted;
 *  - stale world snapshots (seq regression) are discarded;
 *  - the decision feed stays ordered by seq no matter the arrival order;
 *  - the uncertainty history keeps a fixed 30-second window.
 */

import {
  DecisionPayload,
  EpisodeEndPayload,
  GatewayFrame,
  HelloPayload,
  RequestShownPayload,
  SCHEMA_VERSION,
  SnapshotPayload,
  UncertaintyPayload,
} from "./protocol.js";

export const UNCERTAINTY_WINDOW_S = 30;

export type ConnectionStatus = "connecting" | "open" | "closed";

export interface DecisionEntry {
  seq: number;
  payload: DecisionPayload;
  requestShown: RequestShownPayload | null;
}

export interface UncertaintySample {
  simT: number;
  u: number;
  triggered: boolean;
}

export class SessionStore {
  connection: ConnectionStatus = "connecting";
  role: "controller" | "observer" | null = null;
  hello: HelloPayload | null = null;
  snapshot: SnapshotPayload | null = null;
  snapshotSeq = -1;
  decisions: DecisionEntry[] = [];
  uncertainty: UncertaintySample[] = [];
  thetaU = 0.5;
  episodeEnd: EpisodeEndPayload | null = null;
  lastError: string | null = null;
  droppedFrames = 0;

  private pendingRequests = new Map<number, RequestShownPayload>();

  apply(frame: GatewayFrame): void {
    if (frame.schema_version !== SCHEMA_VERSION) {
      this.droppedFrames += 1;
      return;
    }
    switch (frame.type) {
      case "hello": {
        this.hello = frame.payload as unknown as HelloPayload;
        this.role = this.hello.role;
        this.thetaU = this.hello.theta_u;
        break;
      }
      case "world_snapshot": {
        if (frame.seq <= this.snapshotSeq) {
          this.droppedFrames += 1; // stale snapshot, discard
          return;
        }
        this.snapshotSeq = frame.seq;
        this.snapshot = frame.payload as unknown as SnapshotPayload;
        break;
      }
      case "uncertainty_update": {
        const payload = frame.payload as unknown as UncertaintyPayload;
        this.uncertainty.push({
          simT: payload.sim_t,
          u: payload.u,
          triggered: payload.triggered,
        });
        const cutoff = payload.sim_t - UNCERTAINTY_WINDOW_S;
        while (this.uncertainty.length > 0 && this.uncertainty[0].simT < cutoff) {
          this.uncertainty.shift();
        }
        break;
      }
      case "arbitration_request_shown": {
        const payload = frame.payload as unknown as RequestShownPayload;
        this.pendingRequests.set(payload.correlation_id, payload);
        break;
      }
      case "arbitration_decision": {
        const payload = frame.payload as unknown as DecisionPayload;
        const entry: DecisionEntry = {
          seq: frame.seq,
          payload,
          requestShown: this.pendingRequests.get(payload.correlation_id) ?? null,
        };
        this.pendingRequests.delete(payload.correlation_id);
        this.insertDecision(entry);
        break;
      }
      case "episode_end": {
        this.episodeEnd = frame.payload as unknown as EpisodeEndPayload;
        break;
      }
      case "error": {
        this.lastError = String(
          (frame.payload as Record<string, unknown>).message ?? "unknown error",
        );
        break;
      }
    }
  }

  /** Insert keeping the feed sorted by seq (arrival order is not trusted). */
  private insertDecision(entry: DecisionEntry): void {
    let index = this.decisions.length;
    while (index > 0 && this.decisions[index - 1].seq > entry.seq) {
      index -= 1;
    }
    this.decisions.splice(index, 0, entry);
  }

  latestDecision(): DecisionEntry | null {
    return this.decisions.length > 0 ? this.decisions[this.decisions.length - 1] : null;
  }

  /** Sim-times of samples where the trigger fired (gauge markers). */
  triggerMarkers(): number[] {
    return this.uncertainty.filter((s) => s.triggered).map((s) => s.simT);
  }
}

/**
 * Client session over a Transport: outgoing sequence numbering, reply
 * matching by kind, and a TickUpdate subscription that drops out-of-order
 * frames (counted, never rendered).
 */

import {
  MessageKind,
  Pose7,
  SessionMessage,
  TickUpdatePayload,
} from "./protocol.js";
import { Transport } from "./transport.js";

export interface DemoSamplePayload {
  t: number;
  ee: Pose7;
  g: number;
  objects: Record<string, Pose7>;
}

export interface ExecuteResult {
  success: boolean;
  ticks: number;
  action_executions: Record<string, number>;
}

type Waiter = {
  kinds: MessageKind[];
  resolve: (m: SessionMessage) => void;
  reject: (e: Error) => void;
};

export class CobtSession {
  private seq = 0;
  private lastTickSeq = -1;
  outOfOrderDropped = 0;
  private waiters: Waiter[] = [];
  private tickHandlers: Array<(u: TickUpdatePayload) => void> = [];
  private errorHandlers: Array<(message: string) => void> = [];

  constructor(
    private transport: Transport,
    readonly sessionId: string = "studio",
  ) {
    transport.onMessage((m) => this.dispatch(m));
    transport.onClose(() => {
      for (const w of this.waiters.splice(0)) {
        w.reject(new Error("connection closed"));
      }
    });
  }

  private dispatch(message: SessionMessage): void {
    if (message.session !== this.sessionId) return;
    if (message.kind === "TickUpdate") {
      if (message.seq <= this.lastTickSeq) {
        this.outOfOrderDropped += 1;
        return;
      }
      this.lastTickSeq = message.seq;
      const update = message.payload as unknown as TickUpdatePayload;
      for (const h of this.tickHandlers) h(update);
      return;
    }
    if (message.kind === "Error") {
      for (const h of this.errorHandlers) {
        h(String(message.payload["message"] ?? "unknown error"));
      }
    }
    const index = this.waiters.findIndex((w) => w.kinds.includes(message.kind));
    if (index >= 0) {
      const [waiter] = this.waiters.splice(index, 1);
      waiter.resolve(message);
    }
  }

  onTick(handler: (u: TickUpdatePayload) => void): void {
    this.tickHandlers.push(handler);
  }

  onError(handler: (message: string) => void): void {
    this.errorHandlers.push(handler);
  }

  send(kind: MessageKind, payload: Record<string, unknown> = {}): void {
    this.transport.send({
      kind,
      session: this.sessionId,
      seq: this.seq++,
      payload,
    });
  }

  private expect(...kinds: MessageKind[]): Promise<SessionMessage> {
    return new Promise((resolve, reject) => {
      this.waiters.push({ kinds: [...kinds, "Error"], resolve, reject });
    });
  }

  private async request(
    kind: MessageKind,
    payload: Record<string, unknown> = {},
  ): Promise<SessionMessage> {
    const reply = this.expect(kind);
    this.send(kind, payload);
    const message = await reply;
    if (message.kind === "Error") {
      throw new Error(String(message.payload["message"]));
    }
    return message;
  }

  async startDemo(rateHz: number, meta: Record<string, unknown> = {}): Promise<void> {
    await this.request("StartDemo", { rate_hz: rateHz, meta });
  }

  sendSample(sample: DemoSamplePayload): void {
    this.send("DemoSample", sample as unknown as Record<string, unknown>);
  }

  async endDemo(savePath?: string): Promise<number> {
    const reply = await this.request("EndDemo", savePath ? { save_path: savePath } : {});
    return Number(reply.payload["samples"]);
  }

  async learn(target: string, goal: string, name: string): Promise<SessionMessage> {
    return this.request("Learn", { target, goal, name });
  }

  async loadScene(scene: Record<string, unknown>): Promise<void> {
    await this.request("LoadScene", { scene });
  }

  async setGoalScene(objects: Record<string, Pose7>): Promise<void> {
    await this.request("SetGoalScene", { objects });
  }

  async compose(name: string): Promise<SessionMessage> {
    return this.request("Compose", { name });
  }

  perturb(object: string, pose: Pose7): void {
    this.send("Perturb", { object, pose });
  }

  /** Runs an execution; TickUpdate frames stream to onTick subscribers. */
  async execute(options: Record<string, unknown> = {}): Promise<ExecuteResult> {
    const reply = await this.request("Execute", options);
    return reply.payload as unknown as ExecuteResult;
  }

  close(): void {
    this.transport.close();
  }
}

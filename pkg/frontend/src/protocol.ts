/**
 * Wire protocol for the cobt session service: length-prefixed JSON frames
 * (4-byte big-endian length, then a UTF-8 JSON body).
 */

export type Pose7 = [number, number, number, number, number, number, number];

export type MessageKind =
  | "StartDemo"
  | "DemoSample"
  | "EndDemo"
  | "Learn"
  | "LoadScene"
  | "Execute"
  | "TickUpdate"
  | "Perturb"
  | "SetGoalScene"
  | "Compose"
  | "Error";

export interface SessionMessage {
  kind: MessageKind;
  session: string;
  seq: number;
  payload: Record<string, unknown>;
}

export interface TickUpdatePayload {
  tick: number;
  ee: Pose7;
  gripper: number;
  objects: Record<string, Pose7>;
  attached: string | null;
  statuses: Record<string, string>;
  active_action: number | null;
}

export interface BtNodeJson {
  kind: "Fallback" | "Sequence" | "Parallel" | "ConditionLeaf" | "ActionLeaf";
  children: BtNodeJson[];
  condition: {
    variable: string;
    expected: string;
    subject: string | null;
  } | null;
  action: number | null;
  id: string;
  memory?: boolean;
}

export function encodeFrame(message: SessionMessage): Uint8Array {
  const body = new TextEncoder().encode(JSON.stringify(message));
  const frame = new Uint8Array(4 + body.length);
  new DataView(frame.buffer).setUint32(0, body.length, false);
  frame.set(body, 4);
  return frame;
}

/** Reassembles messages from an arbitrary chunking of the byte stream. */
export class FrameDecoder {
  private buffer = new Uint8Array(0);

  push(chunk: Uint8Array): SessionMessage[] {
    const merged = new Uint8Array(this.buffer.length + chunk.length);
    merged.set(this.buffer, 0);
    merged.set(chunk, this.buffer.length);
    this.buffer = merged;

    const out: SessionMessage[] = [];
    for (;;) {
      if (this.buffer.length < 4) break;
      const length = new DataView(
        this.buffer.buffer,
        this.buffer.byteOffset,
        4,
      ).getUint32(0, false);
      if (this.buffer.length < 4 + length) break;
      const body = this.buffer.subarray(4, 4 + length);
      out.push(JSON.parse(new TextDecoder().decode(body)) as SessionMessage);
      this.buffer = this.buffer.subarray(4 + length);
    }
    return out;
  }
}

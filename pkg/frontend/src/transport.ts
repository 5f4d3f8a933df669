/**
 * Transport abstraction over the framed byte stream. Tests and desktop hosts
 * use the TCP transport; a browser deployment plugs a WebSocket bridge into
 * the same interface.
 */

import { FrameDecoder, SessionMessage, encodeFrame } from "./protocol.js";

export interface Transport {
  send(message: SessionMessage): void;
  onMessage(handler: (message: SessionMessage) => void): void;
  onClose(handler: () => void): void;
  close(): void;
}

/** Node TCP transport (used by the test driver and CLI tooling). */
export async function connectTcp(host: string, port: number): Promise<Transport> {
  const net = await import("node:net");
  const socket = net.createConnection({ host, port });
  await new Promise<void>((resolve, reject) => {
    socket.once("connect", () => resolve());
    socket.once("error", reject);
  });
  socket.setNoDelay(true);
  const decoder = new FrameDecoder();
  let messageHandler: (m: SessionMessage) => void = () => undefined;
  let closeHandler: () => void = () => undefined;
  socket.on("data", (chunk: Buffer) => {
    for (const msg of decoder.push(new Uint8Array(chunk))) {
      messageHandler(msg);
    }
  });
  socket.on("close", () => closeHandler());
  return {
    send(message) {
      socket.write(encodeFrame(message));
    },
    onMessage(handler) {
      messageHandler = handler;
    },
    onClose(handler) {
      closeHandler = handler;
    },
    close() {
      socket.end();
      socket.destroy();
    },
  };
}

/** In-memory loopback transport for UI tests that fake the server side. */
export function loopbackPair(): [Transport, Transport] {
  interface Box {
    handler?: (m: SessionMessage) => void;
    closed?: () => void;
  }
  const boxA: Box = {};
  const boxB: Box = {};
  const make = (own: Box, peer: Box): Transport => ({
    send(message) {
      queueMicrotask(() => peer.handler?.(message));
    },
    onMessage(handler) {
      own.handler = handler;
    },
    onClose(handler) {
      own.closed = handler;
    },
    close() {
      queueMicrotask(() => peer.closed?.());
    },
  });
  return [make(boxA, boxB), make(boxB, boxA)];
}

/**
 * Line-oriented connection to a live session.
 *
 * The browser speaks WebSocket (one message per text frame); tests may
 * inject any constructor with the standard WebSocket surface, so the same
 * code path runs under node against a real server.
 */

export interface Transport {
  send(line: string): void;
  close(): void;
}

export interface TransportHandlers {
  onLine: (line: string) => void;
  onOpen?: () => void;
  onClose?: () => void;
}

interface WebSocketLike {
  send(data: string): void;
  close(): void;
  addEventListener(type: string, listener: (event: any) => void): void;
}

type WebSocketCtor = new (url: string) => WebSocketLike;

export function webSocketTransport(
  url: string,
  handlers: TransportHandlers,
  impl?: WebSocketCtor,
): Transport {
  const Ctor = impl ?? (globalThis as { WebSocket?: WebSocketCtor }).WebSocket;
  if (Ctor === undefined) {
    throw new Error("no WebSocket implementation available");
  }
  const socket = new Ctor(url);
  const pending: string[] = [];
  let open = false;

  socket.addEventListener("open", () => {
    open = true;
    for (const line of pending.splice(0)) socket.send(line);
    handlers.onOpen?.();
  });
  socket.addEventListener("message", (event: { data: unknown }) => {
    const text =
      typeof event.data === "string" ? event.data : String(event.data);
    // a frame may carry several newline-joined entries after a burst
    for (const line of text.split("\n")) {
      if (line.trim() !== "") handlers.onLine(line);
    }
  });
  socket.addEventListener("close", () => {
    open = false;
    handlers.onClose?.();
  });
  socket.addEventListener("error", () => {
    // the close event follows; nothing useful to report here
  });

  return {
    send(line: string): void {
      if (open) socket.send(line);
      else pending.push(line);
    },
    close(): void {
      socket.close();
    },
  };
}

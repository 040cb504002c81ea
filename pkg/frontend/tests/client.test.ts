import { describe, expect, it } from "vitest";
import { SessionClient } from "../src/client.js";
import type { Transport, TransportHandlers } from "../src/transport.js";

/** In-memory transport: captures outbound frames, replays inbound ones. */
class FakeTransport implements Transport {
  sent: { kind: string; seq: number; payload: Record<string, unknown> }[] = [];
  closed = false;
  constructor(readonly handlers: TransportHandlers) {}

  open(): void {
    this.handlers.onOpen?.();
  }

  feed(frame: object): void {
    this.handlers.onLine(JSON.stringify(frame));
  }

  feedRaw(line: string): void {
    this.handlers.onLine(line);
  }

  drop(): void {
    this.handlers.onClose?.();
  }

  send(line: string): void {
    this.sent.push(JSON.parse(line));
  }

  close(): void {
    this.closed = true;
  }
}

function connected(): { client: SessionClient; wire: FakeTransport } {
  const client = new SessionClient({ now: () => 1000 });
  const wire = new FakeTransport(client.handlers());
  client.attach(wire);
  wire.open();
  return { client, wire };
}

describe("connection opening", () => {
  it("sends join as the very first frame: the server sniffs the dialect", () => {
    const { wire } = connected();
    expect(wire.sent).toEqual([{ kind: "join", seq: 1, payload: {} }]);
  });
});

describe("intent to command mapping", () => {
  it("maps each intent to exactly one frame with climbing seqs", () => {
    const { client, wire } = connected();
    client.ackBriefing();
    client.moveTo("bathroom");
    client.interact("bath");
    client.selectChoice("bath", "refill_shampoo");
    client.answerVit("bicycle");
    client.pause();
    client.resume();
    expect(wire.sent.map((f) => f.kind)).toEqual([
      "join",
      "ack_briefing",
      "move",
      "interact",
      "select_choice",
      "vit_answer",
      "pause",
      "resume",
    ]);
    expect(wire.sent.map((f) => f.seq)).toEqual([1, 2, 3, 4, 5, 6, 7, 8]);
    expect(wire.sent[2]!.payload).toEqual({ to: "bathroom" });
    expect(wire.sent[3]!.payload).toEqual({ object: "bath" });
    expect(wire.sent[4]!.payload).toEqual({
      object: "bath",
      choice: "refill_shampoo",
    });
    expect(wire.sent[5]!.payload).toEqual({ chosen: "bicycle" });
  });

  it("refuses to send before a transport is attached", () => {
    const client = new SessionClient();
    expect(() => client.ackBriefing()).toThrow("not attached");
  });
});

describe("engine messages drive state", () => {
  it("applies decodable lines and silently drops junk", () => {
    const { client, wire } = connected();
    wire.feed({ kind: "alert_sound", seq: 5, payload: {} });
    wire.feedRaw("%%% not json %%%");
    wire.feedRaw('{"kind":"move","seq":2,"payload":{}}'); // client-only kind
    wire.feed({ kind: "alert_sound", seq: 6, payload: {} });
    expect(client.getState().alerts).toBe(2);
    expect(client.getState().lastEngineSeq).toBe(6);
  });

  it("notifies subscribers with the applied message", () => {
    const { client, wire } = connected();
    const kinds: (string | null)[] = [];
    client.subscribe((_, last) => kinds.push(last?.kind ?? null));
    wire.feed({ kind: "alert_sound", seq: 3, payload: {} });
    client.dismissModal();
    expect(kinds).toEqual(["alert_sound", null]);
  });

  it("unsubscribe stops the notifications", () => {
    const { client, wire } = connected();
    let calls = 0;
    const off = client.subscribe(() => {
      calls += 1;
    });
    wire.feed({ kind: "alert_sound", seq: 3, payload: {} });
    off();
    wire.feed({ kind: "alert_sound", seq: 4, payload: {} });
    expect(calls).toBe(1);
  });
});

describe("mini-game lifecycle", () => {
  it("start sends the command and spins up a local game", () => {
    const { client, wire } = connected();
    client.startGame("whack_a_mole", "dp_home");
    expect(wire.sent.at(-1)).toEqual({
      kind: "start_distractor",
      seq: 2,
      payload: { point: "dp_home" },
    });
    expect(client.game?.running).toBe(true);
  });

  it("quitting sends stop_distractor", () => {
    const { client, wire } = connected();
    client.startGame("shooting_gallery");
    client.quitGame();
    expect(wire.sent.at(-1)?.kind).toBe("stop_distractor");
    expect(client.game?.running).toBe(false);
  });

  it("a pop-up halts the local game without a redundant stop command", () => {
    const { client, wire } = connected();
    client.startGame("whack_a_mole");
    const framesBefore = wire.sent.length;
    wire.feed({
      kind: "task_popup",
      seq: 9,
      payload: {
        task: {
          id: "tr1",
          description: "d",
          cue_type: "time_based",
          regularity: "irregular",
          target: "tv",
          action: "watch",
        },
        interrupted_distractor: "dp_home",
      },
    });
    // the engine already stopped its side; a stop command now would error
    expect(wire.sent.length).toBe(framesBefore);
    expect(client.game?.running).toBe(false);
    expect(client.getState().modal?.kind).toBe("popup");
  });

  it("a reminder halts the game the same way", () => {
    const { client, wire } = connected();
    client.startGame("whack_a_mole");
    const framesBefore = wire.sent.length;
    wire.feed({
      kind: "reminder",
      seq: 11,
      payload: {
        task_id: "reg_water_plants",
        text: "Oops, it's time for your scheduled task.",
      },
    });
    expect(wire.sent.length).toBe(framesBefore);
    expect(client.game?.running).toBe(false);
  });

  it("game inputs never touch the wire", () => {
    const { client, wire } = connected();
    client.startGame("whack_a_mole");
    const framesBefore = wire.sent.length;
    client.tickGame(() => 0.5);
    client.tickGame(() => 0.5);
    client.hitGameCell(4);
    expect(wire.sent.length).toBe(framesBefore);
  });

  it("ticks do nothing once the game is stopped", () => {
    const { client } = connected();
    client.startGame("whack_a_mole");
    client.quitGame();
    const frozen = client.game;
    expect(client.tickGame(() => 0.1)).toBe(frozen);
  });
});

describe("close", () => {
  it("marks the connection closed for the view", () => {
    const { client, wire } = connected();
    wire.drop();
    expect(client.getState().connection).toBe("closed");
  });

  it("close() tears down the transport", () => {
    const { client, wire } = connected();
    client.close();
    expect(wire.closed).toBe(true);
  });
});

/**
 * Session client: glues a transport to the view-state reducer and turns
 * user intents into protocol commands, one command per intent.
 *
 * The engine stays authoritative for everything scored; this class never
 * invents state, it only forwards and displays.
 */

import {
  decodeEngineLine,
  encodeCommand,
  type ClientKind,
  type EngineMessage,
} from "./protocol.js";
import type { Transport, TransportHandlers } from "./transport.js";
import {
  applyMessage,
  dismissModal,
  initialState,
  setConnection,
  type ViewState,
} from "./state.js";
import {
  hitGame,
  newGame,
  stopGame,
  tickGame,
  type Game,
  type GameKind,
  type Rng,
} from "./games.js";

export type StateListener = (state: ViewState, last: EngineMessage | null) => void;

export interface SessionClientOptions {
  now?: () => number;
}

export class SessionClient {
  private transport: Transport | null = null;
  private state: ViewState = initialState();
  private listeners: StateListener[] = [];
  private commandSeq = 0;
  private readonly now: () => number;
  /** local mini-game, null while not playing */
  game: Game | null = null;

  constructor(options: SessionClientOptions = {}) {
    this.now = options.now ?? (() => Date.now());
  }

  /** Handlers to hand to the transport factory. */
  handlers(): TransportHandlers {
    return {
      onLine: (line) => this.handleLine(line),
      onOpen: () => {
        this.state = setConnection(this.state, "open");
        // dialect sniffing: the server pushes nothing until it has seen
        // a first client line, so every connection opens with a join
        this.command("join");
        this.notify(null);
      },
      onClose: () => {
        this.state = setConnection(this.state, "closed");
        this.notify(null);
      },
    };
  }

  attach(transport: Transport): void {
    this.transport = transport;
  }

  getState(): ViewState {
    return this.state;
  }

  subscribe(listener: StateListener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private notify(last: EngineMessage | null): void {
    for (const listener of this.listeners) listener(this.state, last);
  }

  private handleLine(line: string): void {
    let message: EngineMessage;
    try {
      message = decodeEngineLine(line);
    } catch {
      return; // junk on the wire is not worth a render
    }
    this.state = applyMessage(this.state, message, this.now());
    if (
      this.game !== null &&
      (message.kind === "task_popup" || message.kind === "reminder")
    ) {
      // the engine already force-stopped the session-side distractor;
      // only the local loop needs halting, no stop command
      this.game = stopGame(this.game);
    }
    this.notify(message);
  }

  private command(kind: ClientKind, payload: Record<string, unknown> = {}): void {
    if (this.transport === null) throw new Error("not attached");
    this.commandSeq += 1;
    this.transport.send(encodeCommand({ kind, seq: this.commandSeq, payload }));
  }

  // ------------------------------------------------------------------
  // user intents, each exactly one protocol command

  ackBriefing(): void {
    this.command("ack_briefing");
  }

  moveTo(locationId: string): void {
    this.command("move", { to: locationId });
  }

  interact(objectId: string): void {
    this.command("interact", { object: objectId });
  }

  selectChoice(objectId: string, choice: string): void {
    this.command("select_choice", { object: objectId, choice });
  }

  answerVit(chosen: string): void {
    this.command("vit_answer", { chosen });
  }

  pause(): void {
    this.command("pause");
  }

  resume(): void {
    this.command("resume");
  }

  startGame(kind: GameKind, pointId?: string): void {
    this.command(
      "start_distractor",
      pointId === undefined ? {} : { point: pointId },
    );
    this.game = newGame(kind);
  }

  /** Player walks away from the game of their own accord. */
  quitGame(): void {
    if (this.game === null) return;
    this.command("stop_distractor");
    this.game = stopGame(this.game);
  }

  /** Route a mini-game input; purely local, nothing goes on the wire. */
  hitGameCell(index: number): Game | null {
    if (this.game !== null) this.game = hitGame(this.game, index);
    return this.game;
  }

  /** Advance the local mini-game one animation step. */
  tickGame(rng: Rng): Game | null {
    if (this.game?.running) this.game = tickGame(this.game, rng);
    return this.game;
  }

  dismissModal(): void {
    this.state = dismissModal(this.state);
    this.notify(null);
  }

  close(): void {
    this.transport?.close();
  }
}

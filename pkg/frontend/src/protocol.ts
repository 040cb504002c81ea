/**
 * Message vocabulary of the session protocol.
 *
 * Mirrors docs/protocol.md in the engine repository. Every frame is one
 * JSON object {kind, seq, payload}; the engine assigns seq numbers to its
 * own events, the client counts its commands separately.
 */

export const CLIENT_KINDS = [
  "join",
  "ack_briefing",
  "move",
  "interact",
  "select_choice",
  "start_distractor",
  "stop_distractor",
  "pause",
  "resume",
  "vit_answer",
] as const;

export const ENGINE_KINDS = [
  "state_snapshot",
  "clock_tick",
  "task_briefing",
  "task_popup",
  "reminder",
  "alert_sound",
  "dialog_confirm",
  "task_result",
  "vit_item",
  "session_end",
  "error",
] as const;

export type ClientKind = (typeof CLIENT_KINDS)[number];
export type EngineKind = (typeof ENGINE_KINDS)[number];

export interface ClientCommand {
  kind: ClientKind;
  seq: number;
  payload: Record<string, unknown>;
}

export interface EngineMessage {
  kind: EngineKind;
  seq: number;
  payload: Record<string, unknown>;
}

// ---------------------------------------------------------------------
// payload shapes (the fields the client actually reads)

export interface TransitInfo {
  to: string;
  arrival_vtime: number;
}

export interface MenuInfo {
  target: string;
  options: string[];
}

export interface Snapshot {
  session: number;
  phase: string;
  vrt_level: number | null;
  scored: boolean;
  vtime: number;
  time_str: string;
  location: string;
  area: string;
  paused: boolean;
  day_started: boolean;
  briefing_pending: boolean;
  in_transit: TransitInfo | null;
  distractor: string | null;
  menu: MenuInfo | null;
  compression_factor: number;
  day_start: number;
  day_end: number;
}

export interface CueInfo {
  kind: string;
  ref: string;
}

export interface BriefedTask {
  id: string;
  description: string;
  cue_type: string;
  regularity: string;
  target: string;
  action: string;
  cue?: CueInfo;
  designated_time?: number;
  designated_time_str?: string;
}

export interface TaskResult {
  task_id: string;
  status: string;
  achieved: boolean;
  remembered_at: number;
  executed_at: number | null;
  cue_raised_at: number | null;
  duration_vseconds: number | null;
  duration: string | null;
}

export interface VitItem {
  level: number;
  index: number;
  total: number;
  stimulus_mode: string;
  stimulus_content: string;
  stimulus_text: string;
  image: string | null;
  response_mode: string;
  options: string[];
}

export interface ErrorInfo {
  code: string;
  text: string;
}

const ENGINE_KIND_SET: ReadonlySet<string> = new Set(ENGINE_KINDS);

export class ProtocolError extends Error {}

/** Parse one line from the engine; throws ProtocolError on junk. */
export function decodeEngineLine(line: string): EngineMessage {
  let doc: unknown;
  try {
    doc = JSON.parse(line);
  } catch {
    throw new ProtocolError(`not a JSON object: ${line.slice(0, 80)}`);
  }
  if (typeof doc !== "object" || doc === null || Array.isArray(doc)) {
    throw new ProtocolError("frame is not an object");
  }
  const { kind, seq, payload } = doc as Record<string, unknown>;
  if (typeof kind !== "string" || !ENGINE_KIND_SET.has(kind)) {
    throw new ProtocolError(`unknown engine kind ${String(kind)}`);
  }
  if (typeof seq !== "number" || !Number.isInteger(seq) || seq < 0) {
    throw new ProtocolError(`bad seq ${String(seq)}`);
  }
  if (typeof payload !== "object" || payload === null) {
    throw new ProtocolError("payload missing");
  }
  return { kind: kind as EngineKind, seq, payload: payload as Record<string, unknown> };
}

export function encodeCommand(command: ClientCommand): string {
  return JSON.stringify({
    kind: command.kind,
    seq: command.seq,
    payload: command.payload,
  });
}

/** Transport-level rejections ride the stream with seq 0. */
export function isServerError(message: EngineMessage): boolean {
  return message.kind === "error" && message.seq === 0;
}

/**
 * Client view state: a pure reducer over engine messages.
 *
 * Scoring never happens here. Every achievement, status, and rate shown
 * in the UI is copied verbatim from engine events; the reducer only
 * decides what is on screen. Exactly one modal can be open at a time.
 */

import type {
  BriefedTask,
  EngineMessage,
  ErrorInfo,
  Snapshot,
  TaskResult,
  VitItem,
} from "./protocol.js";

export type Modal =
  | { kind: "briefing"; phase: string; scored: boolean; tasks: BriefedTask[] }
  | { kind: "popup"; task: BriefedTask; interruptedDistractor: string | null }
  | { kind: "reminder"; taskId: string; text: string; interruptedDistractor: string | null }
  | { kind: "menu"; target: string; options: string[] }
  | { kind: "vit"; item: VitItem }
  | { kind: "confirm"; text: string; vit: boolean }
  | { kind: "summary"; record: Record<string, unknown> };

export interface Toast {
  code: string;
  text: string;
  atSeq: number;
}

export type ConnectionState = "connecting" | "open" | "closed";

export interface ViewState {
  connection: ConnectionState;
  snapshot: Snapshot | null;
  modal: Modal | null;
  toasts: Toast[];
  results: TaskResult[];
  record: Record<string, unknown> | null;
  /** count of neutral alert chimes, so the UI can play the sound */
  alerts: number;
  lastEngineSeq: number;
  /** real timestamp of the latest clock_tick, for hand interpolation */
  lastTickAt: number;
}

export function initialState(): ViewState {
  return {
    connection: "connecting",
    snapshot: null,
    modal: null,
    toasts: [],
    results: [],
    record: null,
    alerts: 0,
    lastEngineSeq: 0,
    lastTickAt: 0,
  };
}

const MAX_TOASTS = 5;

function pushToast(state: ViewState, code: string, text: string): ViewState {
  const toasts = [...state.toasts, { code, text, atSeq: state.lastEngineSeq }];
  return { ...state, toasts: toasts.slice(-MAX_TOASTS) };
}

/**
 * Apply one engine message. `now` is the wall-clock ms timestamp used for
 * clock interpolation; pass a constant in tests for determinism.
 */
export function applyMessage(
  state: ViewState,
  message: EngineMessage,
  now = 0,
): ViewState {
  const seq = message.seq > 0 ? message.seq : state.lastEngineSeq;
  state = { ...state, lastEngineSeq: seq };
  const payload = message.payload;

  switch (message.kind) {
    case "state_snapshot": {
      const snapshot = payload as unknown as Snapshot;
      let modal = state.modal;
      if (snapshot.menu !== null) {
        // the engine opened a choice menu in response to an interact
        modal = {
          kind: "menu",
          target: snapshot.menu.target,
          options: snapshot.menu.options,
        };
      } else if (modal?.kind === "menu") {
        modal = null;
      }
      if (modal?.kind === "briefing" && !snapshot.briefing_pending) {
        modal = null;
      }
      return { ...state, snapshot, modal };
    }

    case "clock_tick": {
      const vtime = payload.vtime as number;
      const snapshot = state.snapshot
        ? { ...state.snapshot, vtime, time_str: formatHm(vtime) }
        : null;
      return { ...state, snapshot, lastTickAt: now };
    }

    case "task_briefing":
      return {
        ...state,
        modal: {
          kind: "briefing",
          phase: payload.phase as string,
          scored: payload.scored as boolean,
          tasks: payload.tasks as BriefedTask[],
        },
      };

    case "task_popup":
      return {
        ...state,
        modal: {
          kind: "popup",
          task: payload.task as BriefedTask,
          interruptedDistractor:
            (payload.interrupted_distractor as string | undefined) ?? null,
        },
      };

    case "reminder":
      return {
        ...state,
        modal: {
          kind: "reminder",
          taskId: payload.task_id as string,
          // rendered verbatim; the wording is part of the training design
          text: payload.text as string,
          interruptedDistractor:
            (payload.interrupted_distractor as string | undefined) ?? null,
        },
      };

    case "alert_sound":
      return { ...state, alerts: state.alerts + 1 };

    case "dialog_confirm":
      return {
        ...state,
        modal: {
          kind: "confirm",
          text: payload.text as string,
          vit: payload.context === "vit",
        },
      };

    case "task_result":
      return {
        ...state,
        results: [...state.results, payload as unknown as TaskResult],
      };

    case "vit_item":
      return { ...state, modal: { kind: "vit", item: payload as unknown as VitItem } };

    case "session_end": {
      const record = payload.record as Record<string, unknown>;
      return { ...state, record, modal: { kind: "summary", record } };
    }

    case "error": {
      const info = payload as unknown as ErrorInfo;
      return pushToast(state, info.code, info.text);
    }
  }
}

export function dismissModal(state: ViewState): ViewState {
  // menus are closed by a snapshot, summaries stay up; the dismissable
  // ones are informational
  if (
    state.modal?.kind === "confirm" ||
    state.modal?.kind === "popup" ||
    state.modal?.kind === "reminder"
  ) {
    return { ...state, modal: null };
  }
  return state;
}

export function setConnection(
  state: ViewState,
  connection: ConnectionState,
): ViewState {
  return { ...state, connection };
}

/** The analog face stays on screen for the whole scored day. */
export function clockVisible(state: ViewState): boolean {
  return state.connection === "open" && state.snapshot !== null;
}

function formatHm(vtime: number): string {
  const h = Math.floor(vtime / 60) % 24;
  const m = vtime % 60;
  return `${String(h).padStart(2, "0")}:${String(m).padStart(2, "0")}`;
}

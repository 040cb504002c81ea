/**
 * DOM rendering. Everything here is write-only output; user input is
 * wired back to SessionClient intents and never mutates state directly.
 */

import { clockAngles, formatVtime } from "./clock.js";
import type { SessionClient } from "./client.js";
import { labelFor, type LabelLanguage, type MapModel } from "./map.js";
import { clockVisible, type ViewState } from "./state.js";
import { GALLERY_VIEW, MOLE_VIEW } from "./gameview.js";

export interface RenderContext {
  root: HTMLElement;
  client: SessionClient;
  map: MapModel;
  lang: LabelLanguage;
}

export function render(ctx: RenderContext, state: ViewState): void {
  const { root } = ctx;
  root.innerHTML = "";
  root.append(
    renderStatusBar(ctx, state),
    renderMap(ctx, state),
    renderLocationPanel(ctx, state),
    renderToasts(state),
  );
  const modal = renderModal(ctx, state);
  if (modal) root.append(modal);
  if (clockVisible(state)) root.append(renderClock(ctx, state));
  if (ctx.client.game?.running) root.append(renderGame(ctx));
}

function el(
  tag: string,
  className: string,
  text?: string,
): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderStatusBar(ctx: RenderContext, state: ViewState): HTMLElement {
  const bar = el("header", "status-bar");
  const snap = state.snapshot;
  bar.append(
    el(
      "span",
      "session-label",
      snap ? `Session ${snap.session} (${snap.phase})` : "connecting...",
    ),
  );
  if (state.connection === "closed") {
    bar.append(el("span", "conn-warning", "disconnected, reload to rejoin"));
  }
  if (snap?.paused) bar.append(el("span", "paused-flag", "paused"));
  const toggle = el("button", "lang-toggle", ctx.lang === "en" ? "日本語" : "English");
  toggle.addEventListener("click", () => {
    ctx.lang = ctx.lang === "en" ? "ja" : "en";
    render(ctx, ctx.client.getState());
  });
  bar.append(toggle);
  return bar;
}

function renderMap(ctx: RenderContext, state: ViewState): HTMLElement {
  const wrap = el("div", "map");
  const here = state.snapshot?.location;
  const transit = state.snapshot?.in_transit ?? null;
  for (const [areaId, areaLabel] of ctx.map.areaLabels) {
    const panel = el("div", "area");
    panel.append(el("h2", "area-label", labelFor(areaId, areaLabel, ctx.lang)));
    for (const loc of ctx.map.locations.values()) {
      if (loc.areaId !== areaId) continue;
      const node = el("button", "location", labelFor(loc.id, loc.label, ctx.lang));
      if (loc.id === here) {
        node.classList.add("here");
        node.append(el("span", "marker", "●"));
      }
      if (transit?.to === loc.id) node.classList.add("destination");
      node.addEventListener("click", () => ctx.client.moveTo(loc.id));
      panel.append(node);
    }
    wrap.append(panel);
  }
  return wrap;
}

function renderLocationPanel(ctx: RenderContext, state: ViewState): HTMLElement {
  const panel = el("div", "location-panel");
  const snap = state.snapshot;
  if (!snap) return panel;
  if (snap.in_transit) {
    panel.append(
      el(
        "p",
        "transit-note",
        `on the way, arriving ${formatVtime(snap.in_transit.arrival_vtime)}`,
      ),
    );
    return panel;
  }
  const loc = ctx.map.locations.get(snap.location);
  if (!loc) return panel;
  for (const obj of loc.objects) {
    const btn = el("button", "object", labelFor(obj.id, obj.label, ctx.lang));
    btn.addEventListener("click", () => ctx.client.interact(obj.id));
    panel.append(btn);
  }
  for (const npc of ctx.map.npcs.values()) {
    // presence is enforced by the engine; draw the button and let a
    // not_present toast explain a miss
    const btn = el("button", "npc", labelFor(npc.id, npc.label, ctx.lang));
    btn.addEventListener("click", () => ctx.client.interact(npc.id));
    panel.append(btn);
  }
  if (loc.distractorPoint && !ctx.client.game?.running) {
    const point = loc.distractorPoint;
    const btn = el("button", "game-start", `play ${point.game_kind.replace(/_/g, " ")}`);
    btn.addEventListener("click", () =>
      ctx.client.startGame(point.game_kind as "whack_a_mole" | "shooting_gallery", point.id),
    );
    panel.append(btn);
  }
  return panel;
}

function renderToasts(state: ViewState): HTMLElement {
  const wrap = el("div", "toasts");
  for (const toast of state.toasts.slice(-3)) {
    wrap.append(el("div", "toast", toast.text));
  }
  return wrap;
}

function renderModal(ctx: RenderContext, state: ViewState): HTMLElement | null {
  const modal = state.modal;
  if (modal === null) return null;
  const overlay = el("div", "modal-overlay");
  const box = el("div", `modal modal-${modal.kind}`);
  overlay.append(box);

  switch (modal.kind) {
    case "briefing": {
      box.append(el("h2", "", "Today's tasks"));
      const list = el("ul", "briefing-list");
      for (const task of modal.tasks) {
        list.append(el("li", task.regularity, task.description));
      }
      box.append(list);
      const ok = el("button", "primary", "I have them memorized");
      ok.addEventListener("click", () => ctx.client.ackBriefing());
      box.append(ok);
      break;
    }
    case "popup": {
      box.append(el("h2", "", "New task"), el("p", "", modal.task.description));
      const ok = el("button", "primary", "Understood");
      ok.addEventListener("click", () => ctx.client.dismissModal());
      box.append(ok);
      break;
    }
    case "reminder": {
      box.append(el("p", "reminder-text", modal.text));
      const ok = el("button", "primary", "OK");
      ok.addEventListener("click", () => ctx.client.dismissModal());
      box.append(ok);
      break;
    }
    case "menu": {
      const target = ctx.map.objects.get(modal.target) ?? ctx.map.npcs.get(modal.target);
      box.append(el("h2", "", labelFor(modal.target, target?.label ?? modal.target, ctx.lang)));
      for (const option of modal.options) {
        const btn = el("button", "choice", option.replace(/_/g, " "));
        btn.addEventListener("click", () => ctx.client.selectChoice(modal.target, option));
        box.append(btn);
      }
      break;
    }
    case "vit": {
      const item = modal.item;
      box.append(el("h2", "", `Imagery ${item.index + 1} / ${item.total} (level ${item.level})`));
      if (item.image !== null) {
        const img = document.createElement("img");
        img.src = item.image;
        img.alt = item.stimulus_text;
        box.append(img);
      }
      box.append(el("p", "stimulus", item.stimulus_text));
      for (const option of item.options) {
        const btn = el("button", "choice", option);
        btn.addEventListener("click", () => ctx.client.answerVit(option));
        box.append(btn);
      }
      break;
    }
    case "confirm": {
      box.append(el("p", "", modal.text));
      const ok = el("button", "primary", "OK");
      ok.addEventListener("click", () => ctx.client.dismissModal());
      box.append(ok);
      break;
    }
    case "summary": {
      box.append(el("h2", "", "Day complete"));
      const rates = (modal.record.rates ?? {}) as Record<string, number | null>;
      const list = el("ul", "summary-list");
      for (const [category, rate] of Object.entries(rates)) {
        list.append(
          el("li", "", `${category}: ${rate === null ? "-" : rate.toFixed(3)}`),
        );
      }
      box.append(list);
      break;
    }
  }
  return overlay;
}

function renderClock(ctx: RenderContext, state: ViewState): HTMLElement {
  const snap = state.snapshot!;
  const msPerVminute = 60_000 / snap.compression_factor;
  const since = state.lastTickAt === 0 ? 0 : Date.now() - state.lastTickAt;
  const angles = clockAngles(snap.vtime, since, msPerVminute);
  const wrap = el("div", "clock-wrap");
  wrap.innerHTML = `
    <svg class="analog-clock" viewBox="-50 -50 100 100">
      <circle r="48" class="face"/>
      <line y2="-28" class="hour-hand" transform="rotate(${angles.hour})"/>
      <line y2="-40" class="minute-hand" transform="rotate(${angles.minute})"/>
      <circle r="2" class="hub"/>
    </svg>`;
  wrap.append(el("div", "digital", snap.time_str));
  if (snap.vtime >= snap.day_end) {
    wrap.append(el("div", "day-end-banner", "the day is over"));
  }
  if (state.connection !== "open") wrap.classList.add("greyed");
  return wrap;
}

function renderGame(ctx: RenderContext): HTMLElement {
  const game = ctx.client.game!;
  const wrap = el("div", "game-panel");
  wrap.append(el("div", "game-score", `score ${game.score}`));
  const view = game.kind === "whack_a_mole" ? MOLE_VIEW : GALLERY_VIEW;
  wrap.append(view(game, (index) => {
    ctx.client.game = ctx.client.hitGameCell(index);
    render(ctx, ctx.client.getState());
  }));
  const quit = el("button", "game-quit", "walk away");
  quit.addEventListener("click", () => {
    ctx.client.quitGame();
    render(ctx, ctx.client.getState());
  });
  wrap.append(quit);
  return wrap;
}

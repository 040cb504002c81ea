/**
 * The two distractor mini-games.
 *
 * Gameplay is purely local entertainment: scores are shown on screen and
 * never sent anywhere. The engine only hears start_distractor and
 * stop_distractor; what happens in between stays in the client.
 */

export type GameKind = "whack_a_mole" | "shooting_gallery";

export type Rng = () => number;

/** Small deterministic PRNG so tests can script a whole game. */
export function mulberry32(seed: number): Rng {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export interface GameState {
  kind: GameKind;
  score: number;
  running: boolean;
}

const MOLE_HOLES = 9;
const MOLE_TTL_TICKS = 3;

export interface MoleGame extends GameState {
  kind: "whack_a_mole";
  activeHole: number | null;
  ttl: number;
}

export interface GalleryTarget {
  lane: number;
  position: number; // 0..GALLERY_WIDTH-1, drifts right each tick
}

const GALLERY_LANES = 3;
const GALLERY_WIDTH = 12;
const GALLERY_HIT_ZONE = 8; // positions >= this are shootable

export interface GalleryGame extends GameState {
  kind: "shooting_gallery";
  targets: GalleryTarget[];
}

export type Game = MoleGame | GalleryGame;

export function newGame(kind: GameKind): Game {
  if (kind === "whack_a_mole") {
    return { kind, score: 0, running: true, activeHole: null, ttl: 0 };
  }
  return { kind, score: 0, running: true, targets: [] };
}

/** Advance one game tick (the render loop calls this a few times a second). */
export function tickGame(game: Game, rng: Rng): Game {
  if (!game.running) return game;
  if (game.kind === "whack_a_mole") {
    if (game.activeHole === null || game.ttl <= 0) {
      return {
        ...game,
        activeHole: Math.floor(rng() * MOLE_HOLES),
        ttl: MOLE_TTL_TICKS,
      };
    }
    const ttl = game.ttl - 1;
    return ttl <= 0 ? { ...game, activeHole: null, ttl: 0 } : { ...game, ttl };
  }
  let targets = game.targets
    .map((t) => ({ ...t, position: t.position + 1 }))
    .filter((t) => t.position < GALLERY_WIDTH);
  if (targets.length < GALLERY_LANES && rng() < 0.5) {
    targets = [...targets, { lane: Math.floor(rng() * GALLERY_LANES), position: 0 }];
  }
  return { ...game, targets };
}

/** Player input: hole index for the mole game, lane index for the gallery. */
export function hitGame(game: Game, index: number): Game {
  if (!game.running) return game;
  if (game.kind === "whack_a_mole") {
    if (game.activeHole !== null && index === game.activeHole) {
      return { ...game, score: game.score + 1, activeHole: null, ttl: 0 };
    }
    return game;
  }
  const shootable = game.targets.findIndex(
    (t) => t.lane === index && t.position >= GALLERY_HIT_ZONE,
  );
  if (shootable === -1) return game;
  const targets = game.targets.filter((_, i) => i !== shootable);
  return { ...game, score: game.score + 1, targets };
}

export function stopGame(game: Game): Game {
  return { ...game, running: false };
}

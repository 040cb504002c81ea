/** DOM views for the two mini-games; input indices feed games.hitGame. */

import type { Game } from "./games.js";

type InputHandler = (index: number) => void;

export function MOLE_VIEW(game: Game, onInput: InputHandler): HTMLElement {
  const grid = document.createElement("div");
  grid.className = "mole-grid";
  if (game.kind !== "whack_a_mole") return grid;
  for (let i = 0; i < 9; i++) {
    const hole = document.createElement("button");
    hole.className = i === game.activeHole ? "hole mole" : "hole";
    hole.textContent = i === game.activeHole ? "●" : "";
    hole.addEventListener("click", () => onInput(i));
    grid.append(hole);
  }
  return grid;
}

export function GALLERY_VIEW(game: Game, onInput: InputHandler): HTMLElement {
  const lanes = document.createElement("div");
  lanes.className = "gallery";
  if (game.kind !== "shooting_gallery") return lanes;
  for (let lane = 0; lane < 3; lane++) {
    const row = document.createElement("div");
    row.className = "lane";
    const target = game.targets.find((t) => t.lane === lane);
    if (target) {
      const dot = document.createElement("span");
      dot.className = "target";
      dot.style.left = `${(target.position / 12) * 100}%`;
      row.append(dot);
    }
    const shoot = document.createElement("button");
    shoot.className = "shoot";
    shoot.textContent = "shoot";
    shoot.addEventListener("click", () => onInput(lane));
    row.append(shoot);
    lanes.append(row);
  }
  return lanes;
}

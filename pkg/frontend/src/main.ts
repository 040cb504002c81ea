/** Browser bootstrap: fetch the world, open the socket, render on change. */

import { SessionClient } from "./client.js";
import { mulberry32 } from "./games.js";
import { buildMapModel, type WorldDoc } from "./map.js";
import { render, type RenderContext } from "./render.js";
import { webSocketTransport } from "./transport.js";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (root === null) throw new Error("missing #app element");

  const response = await fetch("/world");
  const world = (await response.json()) as WorldDoc;

  const client = new SessionClient();
  const ctx: RenderContext = {
    root,
    client,
    map: buildMapModel(world),
    lang: "en",
  };

  const wsUrl = `ws://${location.host}/`;
  client.attach(webSocketTransport(wsUrl, client.handlers()));
  client.subscribe((state) => render(ctx, state));

  // animation loop: clock interpolation and mini-game motion
  const gameRng = mulberry32(Date.now() >>> 0);
  setInterval(() => {
    if (client.game?.running) client.tickGame(gameRng);
    render(ctx, client.getState());
  }, 250);

  render(ctx, client.getState());
}

boot().catch((error) => {
  document.body.textContent = `failed to start: ${error}`;
});

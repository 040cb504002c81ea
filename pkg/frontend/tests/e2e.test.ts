/**
 * End-to-end: the real client core over a real WebSocket against a live
 * engine process. Scripted session: join, briefing ack, move to the
 * bathroom, interact with the bath, pick the correct choice; then let the
 * compressed day run out and check the log replays to the identical
 * record headlessly.
 *
 * Needs the pmt package installed (pip install -e .) and python3 on PATH.
 */

import { describe, expect, it } from "vitest";
import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import WebSocket from "ws";

import { SessionClient } from "../src/client.js";
import { webSocketTransport } from "../src/transport.js";
import { buildMapModel, type WorldDoc } from "../src/map.js";
import type { ViewState } from "../src/state.js";

const PY = "python3";
// x9600 squeezes the 16-hour day into six real seconds
const SERVE_ARGS = ["--session", "7", "--seed", "3", "--factor", "9600"];

interface LiveServer {
  child: ChildProcess;
  port: number;
  exited: Promise<number | null>;
  stdout: () => string;
  stderr: () => string;
}

async function startServer(outDir: string): Promise<LiveServer> {
  const child = spawn(
    PY,
    ["-m", "pmt.cli", "serve", ...SERVE_ARGS, "--port", "0", "--out", outDir],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  let out = "";
  let err = "";
  child.stdout.setEncoding("utf-8");
  child.stderr.setEncoding("utf-8");
  child.stdout.on("data", (chunk: string) => {
    out += chunk;
  });
  child.stderr.on("data", (chunk: string) => {
    err += chunk;
  });
  const exited = new Promise<number | null>((resolve) => {
    child.on("exit", (code) => resolve(code));
  });

  const port = await new Promise<number>((resolve, reject) => {
    const timer = setTimeout(() => {
      reject(new Error(`server banner never appeared; stderr: ${err}`));
    }, 15000);
    const poll = setInterval(() => {
      const match = out.match(/http:\/\/127\.0\.0\.1:(\d+)\//);
      if (match) {
        clearTimeout(timer);
        clearInterval(poll);
        resolve(Number(match[1]));
      }
    }, 20);
    void exited.then((code) => {
      clearTimeout(timer);
      clearInterval(poll);
      reject(new Error(`server exited early (code ${code}); stderr: ${err}`));
    });
  });

  return { child, port, exited, stdout: () => out, stderr: () => err };
}

/** Resolve once the client state satisfies the predicate. */
function waitFor(
  client: SessionClient,
  what: string,
  predicate: (state: ViewState) => boolean,
  timeoutMs = 15000,
): Promise<ViewState> {
  const current = client.getState();
  if (predicate(current)) return Promise.resolve(current);
  return new Promise((resolve, reject) => {
    const timer = setTimeout(() => {
      off();
      reject(new Error(`timed out waiting for ${what}`));
    }, timeoutMs);
    const off = client.subscribe((state) => {
      if (predicate(state)) {
        clearTimeout(timer);
        off();
        resolve(state);
      }
    });
  });
}

describe("scripted session against a live engine", () => {
  it(
    "completes the shampoo errand and the log replays identically",
    async () => {
      const outDir = mkdtempSync(join(tmpdir(), "pmt-e2e-"));
      const server = await startServer(outDir);
      const client = new SessionClient();
      try {
        // the client also drives the map from the same document a browser
        // would fetch
        const worldResponse = await fetch(`http://127.0.0.1:${server.port}/world`);
        expect(worldResponse.ok).toBe(true);
        const world = (await worldResponse.json()) as WorldDoc;
        const map = buildMapModel(world);
        expect(map.locations.has("bathroom")).toBe(true);
        expect(map.objects.get("bath")?.locationId).toBe("bathroom");

        const transport = webSocketTransport(
          `ws://127.0.0.1:${server.port}/`,
          client.handlers(),
          WebSocket,
        );
        client.attach(transport);

        // join happens automatically on open; the briefing follows
        const briefed = await waitFor(
          client,
          "the task briefing",
          (s) => s.modal?.kind === "briefing",
        );
        const briefing = briefed.modal;
        if (briefing?.kind !== "briefing") throw new Error("unreachable");
        const er3 = briefing.tasks.find((t) => t.id === "er3");
        expect(er3?.description).toBe(
          "I will refill the shampoo when taking a bath",
        );

        client.ackBriefing();
        await waitFor(
          client,
          "the day to start",
          (s) => s.snapshot?.day_started === true,
        );

        client.moveTo("bathroom");
        await waitFor(
          client,
          "arrival in the bathroom",
          (s) =>
            s.snapshot?.location === "bathroom" && s.snapshot.in_transit === null,
        );

        client.interact("bath");
        const withMenu = await waitFor(
          client,
          "the bath choice menu",
          (s) => s.modal?.kind === "menu",
        );
        const menu = withMenu.modal;
        if (menu?.kind !== "menu") throw new Error("unreachable");
        expect(menu.target).toBe("bath");
        expect(menu.options).toContain("refill_shampoo");

        client.selectChoice("bath", "refill_shampoo");
        const scored = await waitFor(
          client,
          "the er3 result",
          (s) => s.results.some((r) => r.task_id === "er3"),
        );
        const result = scored.results.find((r) => r.task_id === "er3");
        expect(result?.achieved).toBe(true);
        expect(result?.status).toBe("on_time");

        // scoring stayed engine-side: the client computed nothing, it only
        // recorded what came down the wire
        const final = await waitFor(
          client,
          "the session record",
          (s) => s.record !== null,
          30000,
        );
        expect(final.modal?.kind).toBe("summary");

        await waitFor(
          client,
          "the server to hang up",
          (s) => s.connection === "closed",
          10000,
        );
        expect(await server.exited).toBe(0);

        const logPath = join(outDir, "session7.pmtlog");
        const recordPath = join(outDir, "session7.record.json");
        expect(existsSync(logPath)).toBe(true);
        expect(existsSync(recordPath)).toBe(true);

        const header = JSON.parse(
          readFileSync(logPath, "utf-8").split("\n")[0]!,
        ) as { kind: string; seq: number; payload: Record<string, unknown> };
        expect(header.kind).toBe("log_header");
        expect(header.payload.session).toBe(7);
        expect(header.payload.compression_factor).toBe(9600);

        // the durable record agrees with what the client saw live
        const disk = JSON.parse(readFileSync(recordPath, "utf-8")) as {
          outcomes: {
            task_id: string;
            status: string;
            achieved: boolean;
            remembered_at: number;
            executed_at: number | null;
          }[];
        };
        const outcome = disk.outcomes.find((o) => o.task_id === "er3");
        expect(outcome).toBeDefined();
        expect(outcome).toEqual({
          task_id: "er3",
          status: result!.status,
          achieved: result!.achieved,
          remembered_at: result!.remembered_at,
          executed_at: result!.executed_at,
        });
        const clientOutcomes = (final.record as { outcomes: unknown }).outcomes;
        expect(clientOutcomes).toEqual(disk.outcomes);

        // headless equivalence: re-execute the logged commands through a
        // fresh engine and demand the identical record
        const replay = spawnSync(
          PY,
          ["-m", "pmt.cli", "run", "--replay", logPath],
          { encoding: "utf-8" },
        );
        expect(replay.stderr).toBe("");
        expect(replay.status).toBe(0);
        expect(replay.stdout).toContain("matches the recorded session");
      } finally {
        client.close();
        if (server.child.exitCode === null) server.child.kill();
      }
    },
    60000,
  );
});

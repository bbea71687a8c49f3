/** Global setup: build the fixture checkpoint and run the session server. */

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdirSync } from "node:fs";
import path from "node:path";

export const PORT = 18731;
export const HTTP_URL = `http://127.0.0.1:${PORT}`;
export const WS_URL = `ws://127.0.0.1:${PORT}/session`;

let server: ChildProcess | null = null;

async function waitForServer(timeoutMs = 30000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${HTTP_URL}/info`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error("session server did not come up");
}

export async function setup(): Promise<void> {
  const root = path.resolve(__dirname, "..");
  const fixtures = path.join(root, ".fixtures");
  mkdirSync(fixtures, { recursive: true });
  const ckpt = path.join(fixtures, "cond.ckpt");
  const build = spawnSync(
    "python3",
    [path.join(root, "scripts", "make_fixture.py"), ckpt],
    { stdio: "inherit" },
  );
  if (build.status !== 0) throw new Error("fixture build failed");
  server = spawn(
    "python3",
    [
      "-m",
      "monomotion.cli",
      "serve",
      "--checkpoint",
      ckpt,
      "--port",
      String(PORT),
      "--host",
      "127.0.0.1",
    ],
    { stdio: "inherit" },
  );
  await waitForServer();
}

export async function teardown(): Promise<void> {
  server?.kill("SIGTERM");
}

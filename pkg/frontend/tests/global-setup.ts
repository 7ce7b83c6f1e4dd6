/**
 * Spawns the real validation server (python package) on a fixture pipeline
 * with an empty decision store and the in-memory reset hook enabled. The
 * connection details land in a JSON file that tests read via server-info.
 */

import { spawn, spawnSync, ChildProcess } from "node:child_process";
import { mkdtempSync, writeFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";

import { INFO_PATH, ServerInfo } from "./server-info.js";

const TOKEN = "ui-test-token";

let child: ChildProcess | undefined;
let workdir: string | undefined;

async function waitForHealth(baseUrl: string, timeoutMs = 60_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${baseUrl}/health`, {
        headers: { "X-Session-Token": TOKEN },
      });
      if (response.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error(`validation server did not come up at ${baseUrl}`);
}

export default async function setup(): Promise<() => void> {
  const here = dirname(fileURLToPath(import.meta.url));
  workdir = mkdtempSync(join(tmpdir(), "defectmine-ui-"));

  const prepared = spawnSync(
    "python3",
    [join(here, "prepare_pipeline.py"), workdir],
    { encoding: "utf-8" },
  );
  if (prepared.status !== 0) {
    throw new Error(`pipeline preparation failed:\n${prepared.stderr}`);
  }
  const pipeline = prepared.stdout.trim().split("\n").pop()!;

  const port = 20000 + Math.floor(Math.random() * 20000);
  child = spawn(
    "python3",
    [
      "-m", "defectmine", "serve",
      "--out", pipeline,
      "--project", "DEMO",
      "--token", TOKEN,
      "--port", String(port),
      "--host", "127.0.0.1",
      "--allow-reset",
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  let serverLog = "";
  child.stdout?.on("data", (chunk) => (serverLog += chunk));
  child.stderr?.on("data", (chunk) => (serverLog += chunk));
  const baseUrl = `http://127.0.0.1:${port}`;
  try {
    await waitForHealth(baseUrl);
  } catch (error) {
    throw new Error(`${(error as Error).message}\nserver output:\n${serverLog}`);
  }

  const info: ServerInfo = { baseUrl, token: TOKEN };
  writeFileSync(INFO_PATH, JSON.stringify(info), "utf-8");

  return () => {
    child?.kill("SIGTERM");
    if (workdir) rmSync(workdir, { recursive: true, force: true });
    rmSync(INFO_PATH, { force: true });
  };
}

/** Connection details shared between the global setup and the live tests. */

import { readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

export interface ServerInfo {
  baseUrl: string;
  token: string;
}

export const INFO_PATH = join(tmpdir(), "defectmine-ui-server.json");

export function readServerInfo(): ServerInfo {
  return JSON.parse(readFileSync(INFO_PATH, "utf-8")) as ServerInfo;
}

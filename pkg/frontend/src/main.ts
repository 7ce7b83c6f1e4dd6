/**
 * App wiring: fetch queue, fetch item, render, submit, advance. The server
 * is authoritative; a 409 means someone else decided the item, so the
 * screen refreshes with a notice instead of retrying.
 */

import { ApiError, IssueItem, LinkItem, QueueKind, StaleItemError, ValidationApi } from "./api.js";
import { resolveTriageCommand, resolveTypingCommand } from "./keyboard.js";
import {
  SessionState,
  advanceCandidate,
  initialState,
  recordDecision,
  withCounts,
  withItem,
  withNotice,
  withQueue,
} from "./state.js";
import {
  renderEmptyQueue,
  renderIssueTyping,
  renderLinkTriage,
  renderNotice,
} from "./render.js";

export class App {
  state: SessionState;

  constructor(
    private readonly api: ValidationApi,
    private readonly mount: HTMLElement,
    token: string,
    rater: string,
  ) {
    this.state = initialState(token, rater);
  }

  async refreshCounts(): Promise<void> {
    const kinds: QueueKind[] = ["links", "issues", "conflicts"];
    for (const kind of kinds) {
      const queue = await this.api.queue(kind, this.state.rater);
      this.state = withCounts(this.state, { [kind]: queue.count });
    }
  }

  async loadNext(): Promise<void> {
    const queue = await this.api.queue(this.state.activeQueue, this.state.rater);
    this.state = withCounts(this.state, { [this.state.activeQueue]: queue.count });
    const next = queue.items[0];
    if (!next) {
      this.state = withItem(this.state, null);
      this.draw();
      return;
    }
    try {
      const item = await this.api.item(next, this.state.rater);
      this.state = withItem(this.state, item);
    } catch (error) {
      if (error instanceof StaleItemError) {
        this.state = withNotice(this.state, "item was decided elsewhere; queue refreshed");
        this.draw();
        return this.loadNext();
      }
      throw error;
    }
    this.draw();
  }

  async switchQueue(queue: QueueKind): Promise<void> {
    this.state = withQueue(this.state, queue);
    await this.loadNext();
  }

  async submitVerdict(issue: string, verdict: "addressed" | "mentioned_only" | "wrong") {
    const item = this.state.currentItem;
    if (!item || item.kind !== "link") return;
    try {
      await this.api.submitLinkDecision({
        commit: item.commit.id,
        issue,
        rater: this.state.rater,
        verdict,
      });
      this.state = recordDecision(this.state, `link:${verdict}`);
      this.state = advanceCandidate(this.state);
    } catch (error) {
      if (error instanceof StaleItemError) {
        this.state = withNotice(this.state, "already decided by another rater");
        this.state = withItem(this.state, null);
      } else {
        throw error;
      }
    }
    if (this.state.currentItem === null) {
      await this.loadNext();
    } else {
      this.draw();
    }
  }

  async submitLabel(label: "BUG" | "IMPROVEMENT" | "TEST" | "DOC" | "OTHER") {
    const item = this.state.currentItem;
    if (!item || item.kind === "link") return;
    const round = item.round;
    try {
      await this.api.submitIssueType({
        issue: item.issue.key,
        rater: this.state.rater,
        label,
        round,
      });
      this.state = recordDecision(this.state, `${round}:${label}`);
    } catch (error) {
      if (error instanceof StaleItemError) {
        this.state = withNotice(this.state, "already labeled; moving on");
      } else {
        throw error;
      }
    }
    await this.loadNext();
  }

  handleKey(key: string): void {
    const item = this.state.currentItem;
    if (!item) return;
    if (item.kind === "link") {
      const command = resolveTriageCommand(key);
      if (!command) return;
      if (command.kind === "verdict") {
        const candidate = item.candidates[this.state.candidateIndex];
        if (candidate) void this.submitVerdict(candidate.issue, command.verdict);
      } else if (command.kind === "next-candidate") {
        this.state = advanceCandidate(this.state);
        this.draw();
      } else if (command.kind === "skip") {
        void this.loadNext();
      }
    } else {
      const command = resolveTypingCommand(key);
      if (!command) return;
      if (command.kind === "label") {
        void this.submitLabel(command.label);
      } else if (command.kind === "skip") {
        void this.loadNext();
      }
    }
  }

  draw(): void {
    this.mount.replaceChildren();
    if (this.state.notice) {
      this.mount.appendChild(renderNotice(this.state.notice));
    }
    const item = this.state.currentItem;
    if (item === null) {
      this.mount.appendChild(
        renderEmptyQueue(this.state.activeQueue, this.state.decidedCounts),
      );
      return;
    }
    if (item.kind === "link") {
      this.mount.appendChild(
        renderLinkTriage(
          item as LinkItem,
          (issue, verdict) => void this.submitVerdict(issue, verdict),
          this.state.candidateIndex,
        ),
      );
    } else {
      this.mount.appendChild(
        renderIssueTyping(item as IssueItem, (label) => void this.submitLabel(label)),
      );
    }
  }
}

export function bootstrap(): void {
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("api") ?? "http://127.0.0.1:8571";
  const token = params.get("token") ?? "";
  const rater = params.get("rater") ?? "";
  const mount = document.getElementById("app");
  if (!mount) throw new Error("missing #app mount point");
  if (!token || !rater) {
    mount.textContent = "pass ?api=...&token=...&rater=... in the URL";
    return;
  }
  const api = new ValidationApi({ baseUrl, token });
  const app = new App(api, mount, token, rater);
  document.addEventListener("keydown", (event) => app.handleKey(event.key));
  void app.refreshCounts().then(() => app.loadNext());
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  bootstrap();
}

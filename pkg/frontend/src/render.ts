/**
 * DOM builders for the three screens. Plain elements, no framework: the
 * diff preview is per-hunk text, decisions are buttons backed by the same
 * fixed enumerations as the keyboard map.
 */

import {
  IssueItem,
  IssueLabel,
  LinkItem,
  LinkVerdict,
  QueueKind,
} from "./api.js";
import { labelKeys, verdictKeys } from "./keyboard.js";

export const LABEL_DEFINITIONS: Readonly<Record<IssueLabel, string>> = Object.freeze({
  BUG: "null pointer exceptions, runtime or memory problems, semantic corrections",
  IMPROVEMENT: "feature requests or non-corrective improvements (incl. refactorings)",
  TEST: "only the software tests need to change",
  DOC: "documentation changes",
  OTHER: "everything else: questions, brainstorming, process",
});

export const COMMITTEE_GUIDANCE =
  "innocent unless proven guilty: when in doubt, keep the BUG label";

export type VerdictHandler = (issue: string, verdict: LinkVerdict) => void;
export type LabelHandler = (label: IssueLabel) => void;

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

/** Commit message with every candidate's matched text wrapped in <mark>. */
export function renderHighlightedMessage(message: string, matches: string[]): HTMLElement {
  const container = el("pre", "commit-message");
  const spans: { start: number; end: number }[] = [];
  for (const match of matches) {
    if (!match) continue;
    let from = 0;
    while (true) {
      const at = message.indexOf(match, from);
      if (at === -1) break;
      if (!spans.some((s) => at < s.end && at + match.length > s.start)) {
        spans.push({ start: at, end: at + match.length });
      }
      from = at + match.length;
    }
  }
  spans.sort((a, b) => a.start - b.start);
  let cursor = 0;
  for (const span of spans) {
    if (span.start > cursor) {
      container.appendChild(document.createTextNode(message.slice(cursor, span.start)));
    }
    const mark = el("mark", "matched-key", message.slice(span.start, span.end));
    mark.dataset.offset = String(span.start);
    container.appendChild(mark);
    cursor = span.end;
  }
  if (cursor < message.length) {
    container.appendChild(document.createTextNode(message.slice(cursor)));
  }
  return container;
}

function renderFileList(item: LinkItem): HTMLElement {
  const list = el("ul", "file-list");
  for (const file of item.commit.files) {
    const entry = el("li", "file-entry");
    entry.appendChild(
      el("span", "file-path", `${file.path} (${file.kind}, +${file.added} -${file.deleted})`),
    );
    if (file.preview.length > 0) {
      entry.appendChild(el("pre", "diff-preview", file.preview.join("\n")));
    }
    list.appendChild(entry);
  }
  return list;
}

export function renderLinkTriage(
  item: LinkItem,
  onVerdict: VerdictHandler,
  activeIndex = 0,
): HTMLElement {
  const root = el("section", "screen screen-link-triage");
  root.dataset.itemId = item.id;
  root.appendChild(el("h2", "screen-title", `link triage: ${item.commit.id.slice(0, 10)}`));
  root.appendChild(
    renderHighlightedMessage(
      item.commit.message,
      item.candidates.map((c) => c.matched_text),
    ),
  );
  root.appendChild(renderFileList(item));

  const panels = el("div", "issue-panels");
  const keys = verdictKeys();
  item.candidates.forEach((candidate, index) => {
    const panel = el("article", "issue-panel");
    panel.dataset.issue = candidate.issue;
    if (index === activeIndex) panel.classList.add("active");
    panel.appendChild(el("h3", "issue-key", candidate.issue));
    if (candidate.context) {
      panel.appendChild(el("p", "issue-title", candidate.context.title));
      panel.appendChild(el("p", "issue-description", candidate.context.description));
      for (const comment of candidate.context.comments) {
        panel.appendChild(el("p", "issue-comment", `${comment.author}: ${comment.text}`));
      }
    }
    const buttons = el("div", "verdict-buttons");
    for (const verdict of item.verdicts) {
      const button = el("button", `verdict verdict-${verdict}`);
      button.textContent = `[${keys.get(verdict)}] ${verdict.replace("_", " ")}`;
      button.dataset.verdict = verdict;
      button.addEventListener("click", () => onVerdict(candidate.issue, verdict));
      buttons.appendChild(button);
    }
    panel.appendChild(buttons);
    panels.appendChild(panel);
  });
  root.appendChild(panels);
  return root;
}

export function renderIssueTyping(item: IssueItem, onLabel: LabelHandler): HTMLElement {
  const root = el("section", "screen screen-issue-typing");
  root.dataset.itemId = item.id;
  root.dataset.round = item.round;
  root.appendChild(el("h2", "screen-title", `${item.round} labeling: ${item.issue.key}`));
  root.appendChild(el("p", "issue-title", item.issue.title));
  root.appendChild(el("p", "issue-description", item.issue.description));
  for (const comment of item.issue.comments) {
    root.appendChild(el("p", "issue-comment", `${comment.author}: ${comment.text}`));
  }
  for (const commit of item.linked_commits) {
    const block = el("div", "linked-commit");
    block.appendChild(el("p", "commit-head", `${commit.id.slice(0, 10)} ${commit.author}`));
    block.appendChild(el("pre", "commit-message", commit.message));
    for (const file of commit.files) {
      if (file.preview.length > 0) {
        block.appendChild(el("pre", "diff-preview", file.preview.join("\n")));
      }
    }
    root.appendChild(block);
  }

  if (item.round === "committee") {
    const blinded = el("div", "blinded-labels");
    blinded.appendChild(el("p", "blinded-heading", "independent labels (unattributed):"));
    for (const label of item.blinded_labels ?? []) {
      const chip = el("span", "peer-label", label);
      chip.dataset.peerLabel = label;
      blinded.appendChild(chip);
    }
    root.appendChild(blinded);
    root.appendChild(el("p", "guidance", item.guidance ?? COMMITTEE_GUIDANCE));
  }

  const keys = labelKeys();
  const buttons = el("div", "label-buttons");
  for (const label of item.labels) {
    const button = el("button", `label label-${label.toLowerCase()}`);
    button.dataset.label = label;
    button.textContent = `[${keys.get(label)}] ${label}`;
    button.title = LABEL_DEFINITIONS[label];
    button.addEventListener("click", () => onLabel(label));
    buttons.appendChild(button);
    buttons.appendChild(el("small", "label-definition", LABEL_DEFINITIONS[label]));
  }
  root.appendChild(buttons);
  return root;
}

export function renderEmptyQueue(
  queue: QueueKind,
  decidedCounts: Record<string, number>,
): HTMLElement {
  const root = el("section", "screen screen-empty");
  root.appendChild(el("h2", "screen-title", `queue ${queue} is empty`));
  const list = el("ul", "summary");
  const categories = Object.keys(decidedCounts).sort();
  if (categories.length === 0) {
    list.appendChild(el("li", "summary-entry", "no decisions this session"));
  }
  for (const category of categories) {
    list.appendChild(
      el("li", "summary-entry", `${category}: ${decidedCounts[category]}`),
    );
  }
  root.appendChild(list);
  return root;
}

export function renderNotice(text: string): HTMLElement {
  return el("p", "notice", text);
}

/**
 * Typed client for the validation HTTP API.
 *
 * Configuration is the API base URL plus the shared session token; every
 * request carries the token in the X-Session-Token header. Conflict
 * responses (another rater got there first, or an item was already decided)
 * surface as StaleItemError so screens can refresh instead of crashing.
 */

export type QueueKind = "links" | "issues" | "conflicts";

export type LinkVerdict = "addressed" | "mentioned_only" | "wrong";
export const LINK_VERDICTS: readonly LinkVerdict[] = ["addressed", "mentioned_only", "wrong"];

export type IssueLabel = "BUG" | "IMPROVEMENT" | "TEST" | "DOC" | "OTHER";
export const ISSUE_LABELS: readonly IssueLabel[] = ["BUG", "IMPROVEMENT", "TEST", "DOC", "OTHER"];

export interface QueueResponse {
  kind: QueueKind;
  items: string[];
  count: number;
}

export interface FileSummary {
  path: string;
  kind: string;
  added: number;
  deleted: number;
  preview: string[];
}

export interface CommitContext {
  id: string;
  message: string;
  author: string;
  date: string;
  files: FileSummary[];
}

export interface IssueContext {
  key: string;
  type: string;
  title: string;
  description: string;
  comments: { author: string; at: string; text: string }[];
}

export interface LinkCandidateView {
  issue: string;
  detector: string;
  matched_text: string;
  at_message_start: boolean;
  context: IssueContext | null;
}

export interface LinkItem {
  id: string;
  kind: "link";
  commit: CommitContext;
  candidates: LinkCandidateView[];
  verdicts: LinkVerdict[];
}

export interface IssueItem {
  id: string;
  kind: "issue" | "conflict";
  issue: IssueContext;
  linked_commits: CommitContext[];
  labels: IssueLabel[];
  round: "independent" | "committee";
  blinded_labels?: IssueLabel[];
  guidance?: string;
}

export type WorkItem = LinkItem | IssueItem;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

/** The item was decided by someone else; refresh the queue. */
export class StaleItemError extends ApiError {}

export interface ApiConfig {
  baseUrl: string;
  token: string;
  fetchImpl?: typeof fetch;
}

export class ValidationApi {
  private readonly base: string;
  private readonly token: string;
  private readonly fetchImpl: typeof fetch;

  constructor(config: ApiConfig) {
    this.base = config.baseUrl.replace(/\/+$/, "");
    this.token = config.token;
    this.fetchImpl = config.fetchImpl ?? fetch;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.base}${path}`, {
      ...init,
      headers: {
        "Content-Type": "application/json",
        "X-Session-Token": this.token,
        ...(init?.headers ?? {}),
      },
    });
    if (response.status === 409) {
      const body = await response.text();
      throw new StaleItemError(409, body);
    }
    if (!response.ok) {
      const body = await response.text();
      throw new ApiError(response.status, `${response.status}: ${body}`);
    }
    return (await response.json()) as T;
  }

  queue(kind: QueueKind, rater?: string): Promise<QueueResponse> {
    const query = rater ? `?rater=${encodeURIComponent(rater)}` : "";
    return this.request<QueueResponse>(`/queues/${kind}${query}`);
  }

  item(id: string, rater?: string): Promise<WorkItem> {
    const query = rater ? `?rater=${encodeURIComponent(rater)}` : "";
    return this.request<WorkItem>(`/items/${encodeURIComponent(id)}${query}`);
  }

  submitLinkDecision(body: {
    commit: string;
    issue: string;
    rater: string;
    verdict: LinkVerdict;
  }): Promise<{ status: string }> {
    return this.request(`/decisions/link`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  submitIssueType(body: {
    issue: string;
    rater: string;
    label: IssueLabel;
    round: "independent" | "committee";
  }): Promise<{ status: string; conflict: boolean }> {
    return this.request(`/decisions/issue-type`, {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  health(): Promise<{ status: string }> {
    return this.request(`/health`);
  }
}

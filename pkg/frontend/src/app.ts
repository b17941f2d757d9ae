/**
 * Console controller: wires the service client to the DOM.
 *
 * One live dialog at a time per tab; every answer goes out with a fresh
 * idempotency key and retries reuse that key, so a flaky network never
 * produces a duplicate turn.
 */

import {
  AnswerPayload,
  ConsoleApi,
  ServiceError,
  newIdempotencyKey,
  withRetry,
} from "./api.js";
import {
  ConsoleViewState,
  applyDialogError,
  applyGlobalError,
  applyOpenSession,
  applyReviewNotice,
  applyReviewQueue,
  applySatisfaction,
  applySession,
  applyStats,
  applyTree,
  initialState,
  showPanel,
  toggleNode,
} from "./state.js";
import { escapeHtml, renderDialog, renderReview, renderStats, renderTree } from "./views.js";

function describeError(error: unknown): string {
  if (error instanceof ServiceError) {
    return `${error.body.code}: ${error.body.message}`;
  }
  return error instanceof Error ? error.message : String(error);
}

export class ConsoleApp {
  state: ConsoleViewState = initialState();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ConsoleApi,
    private readonly operatorId = "operator",
  ) {
    this.root.addEventListener("click", (event) => {
      void this.onClick(event);
    });
    this.render();
  }

  private setState(state: ConsoleViewState): void {
    this.state = state;
    this.render();
  }

  private input(id: string): HTMLInputElement | null {
    return this.root.querySelector(`#${id}`);
  }

  // -- actions ---------------------------------------------------------

  async startDialog(mode: string): Promise<void> {
    try {
      const session = await withRetry(() => this.api.createSession(mode, newIdempotencyKey()));
      this.setState(showPanel(applySession(this.state, session), "dialog"));
    } catch (error) {
      this.setState(applyDialogError(this.state, describeError(error)));
    }
  }

  private parseVolunteered(raw: string): Record<string, string> | undefined {
    const pairs = raw
      .split(",")
      .map((part) => part.trim())
      .filter(Boolean);
    if (!pairs.length) {
      return undefined;
    }
    const volunteered: Record<string, string> = {};
    for (const pair of pairs) {
      const eq = pair.indexOf("=");
      if (eq <= 0) {
        throw new Error(`bad volunteered entry ${pair}; expected name=value`);
      }
      volunteered[pair.slice(0, eq).trim()] = pair.slice(eq + 1).trim();
    }
    return volunteered;
  }

  async submitAnswer(unknown: boolean): Promise<void> {
    const session = this.state.dialog.session;
    if (!session || !session.question) {
      return;
    }
    let payload: AnswerPayload;
    try {
      const volunteered = this.parseVolunteered(this.input("answer-volunteered")?.value ?? "");
      if (unknown) {
        payload = { attribute: session.question.attribute, unknown: true, volunteered };
      } else {
        const value = (this.input("answer-value")?.value ?? "").trim();
        if (!value) {
          throw new Error("type an answer or use Can't answer");
        }
        const confidenceRaw = (this.input("answer-confidence")?.value ?? "1").trim();
        const confidence = Number(confidenceRaw);
        if (Number.isNaN(confidence)) {
          throw new Error(`confidence must be a number, got ${confidenceRaw}`);
        }
        payload = { attribute: session.question.attribute, value, volunteered };
        if (confidence !== 1) {
          payload.confidence = confidence;
        }
      }
    } catch (error) {
      this.setState(applyDialogError(this.state, describeError(error)));
      return;
    }
    const key = newIdempotencyKey(); // retries reuse the key: no duplicate turns
    try {
      const next = await withRetry(() => this.api.answer(session.session_id, payload, key));
      this.setState(applySession(this.state, next));
    } catch (error) {
      this.setState(applyDialogError(this.state, describeError(error)));
    }
  }

  async submitSatisfaction(score: number): Promise<void> {
    const session = this.state.dialog.session;
    if (!session) {
      return;
    }
    try {
      await withRetry(() => this.api.submitSatisfaction(session.session_id, score));
      this.setState(applySatisfaction(this.state, score));
    } catch (error) {
      this.setState(applyDialogError(this.state, describeError(error)));
    }
  }

  async openReview(): Promise<void> {
    try {
      if (!this.state.tree) {
        // the tree document is the authoritative class list for relabeling
        this.state = applyTree(this.state, await this.api.getTree());
      }
      const listing = await this.api.listSessions({ status: "classified" });
      this.setState(showPanel(applyReviewQueue(this.state, listing.sessions), "review"));
    } catch (error) {
      this.setState(applyGlobalError(this.state, describeError(error)));
    }
  }

  async openTranscript(sessionId: string): Promise<void> {
    try {
      const session = await this.api.getSession(sessionId);
      this.setState(applyOpenSession(this.state, session));
    } catch (error) {
      this.setState(applyGlobalError(this.state, describeError(error)));
    }
  }

  async relabel(label: string): Promise<void> {
    const open = this.state.review.openSession;
    if (!open) {
      return;
    }
    try {
      const record = await withRetry(() =>
        this.api.verify(open.session_id, label, this.operatorId),
      );
      this.setState(
        applyReviewNotice(
          this.state,
          `recorded ${record.original_label} -> ${record.corrected_label}; retrain to apply`,
        ),
      );
    } catch (error) {
      this.setState(applyReviewNotice(this.state, describeError(error)));
    }
  }

  async retrain(): Promise<void> {
    try {
      const outcome = await withRetry(() => this.api.retrain());
      this.setState(
        applyReviewNotice(
          this.state,
          `retrained: tree v${outcome.tree_version}, applied ${outcome.applied_verifications} verifications`,
        ),
      );
    } catch (error) {
      this.setState(applyReviewNotice(this.state, describeError(error)));
    }
  }

  async openTree(): Promise<void> {
    try {
      const tree = await this.api.getTree();
      this.setState(showPanel(applyTree(this.state, tree), "tree"));
    } catch (error) {
      this.setState(applyGlobalError(this.state, describeError(error)));
    }
  }

  async openStats(): Promise<void> {
    try {
      const stats = await this.api.getStats();
      this.setState(showPanel(applyStats(this.state, stats), "stats"));
    } catch (error) {
      this.setState(applyGlobalError(this.state, describeError(error)));
    }
  }

  // -- event dispatch ----------------------------------------------------

  private async onClick(event: Event): Promise<void> {
    const target = event.target as HTMLElement | null;
    if (!target) {
      return;
    }
    const id = target.id;
    if (id === "nav-dialog") this.setState(showPanel(this.state, "dialog"));
    else if (id === "nav-review") await this.openReview();
    else if (id === "nav-tree") await this.openTree();
    else if (id === "nav-stats") await this.openStats();
    else if (id === "start-greedy") await this.startDialog("greedy");
    else if (id === "start-belief") await this.startDialog("belief");
    else if (id === "answer-submit") await this.submitAnswer(false);
    else if (id === "answer-unknown") await this.submitAnswer(true);
    else if (id === "review-refresh") await this.openReview();
    else if (id === "review-retrain") await this.retrain();
    else if (target.classList.contains("score")) {
      await this.submitSatisfaction(Number(target.dataset.score));
    } else if (target.classList.contains("open-session")) {
      await this.openTranscript(target.dataset.session ?? "");
    } else if (target.classList.contains("relabel")) {
      await this.relabel(target.dataset.label ?? "");
    } else if (target.classList.contains("toggle")) {
      this.setState(toggleNode(this.state, Number(target.dataset.node)));
    }
  }

  // -- rendering ---------------------------------------------------------

  render(): void {
    const { state } = this;
    let panel: string;
    if (state.panel === "dialog") {
      panel = renderDialog(state.dialog.session, state.dialog.satisfactionScore);
      if (state.dialog.error) {
        panel += `<p class="error" id="dialog-error">${escapeHtml(state.dialog.error)}</p>`;
      }
    } else if (state.panel === "review") {
      panel = renderReview(
        state.review.queue,
        state.review.openSession,
        state.tree?.classes ?? this.knownClasses(),
        state.review.notice,
      );
    } else if (state.panel === "tree") {
      panel = renderTree(state.tree, state.expandedNodes);
    } else {
      panel = renderStats(state.stats);
    }
    const globalError = state.error
      ? `<p class="error" id="global-error">${escapeHtml(state.error)}</p>`
      : "";
    this.root.innerHTML = `
      <nav>
        <button id="nav-dialog">Dialog</button>
        <button id="nav-review">Review</button>
        <button id="nav-tree">Tree</button>
        <button id="nav-stats">Stats</button>
      </nav>
      ${globalError}
      <main id="panel">${panel}</main>`;
  }

  private knownClasses(): string[] {
    // labels seen in the review queue double as relabel choices until the
    // tree document (the authoritative class list) has been fetched
    const labels = new Set<string>();
    for (const summary of this.state.review.queue) {
      if (summary.result) {
        labels.add(summary.result.label);
      }
    }
    const open = this.state.review.openSession;
    if (open?.result) {
      labels.add(open.result.label);
    }
    return [...labels].sort();
  }
}

export function mountConsole(root: HTMLElement, baseUrl: string): ConsoleApp {
  return new ConsoleApp(root, new ConsoleApi(baseUrl));
}

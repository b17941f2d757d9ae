/**
 * Console view state: a verbatim projection of service responses.
 *
 * Nothing here computes classifications, gains or probabilities — the state
 * stores what the service said, and the views format it.  Pure functions so
 * the behavior is unit-testable without a DOM.
 */

import type { SessionState, SessionSummary, Stats, TreeDocument } from "./api.js";

export type Panel = "dialog" | "review" | "tree" | "stats";

export interface DialogView {
  session: SessionState | null;
  busy: boolean;
  error: string | null;
  satisfactionScore: number | null;
}

export interface ReviewView {
  queue: SessionSummary[];
  openSession: SessionState | null;
  notice: string | null;
}

export interface ConsoleViewState {
  panel: Panel;
  dialog: DialogView;
  review: ReviewView;
  tree: TreeDocument | null;
  expandedNodes: ReadonlySet<number>;
  stats: Stats | null;
  error: string | null;
}

export function initialState(): ConsoleViewState {
  return {
    panel: "dialog",
    dialog: { session: null, busy: false, error: null, satisfactionScore: null },
    review: { queue: [], openSession: null, notice: null },
    tree: null,
    expandedNodes: new Set([0]),
    stats: null,
    error: null,
  };
}

export function showPanel(state: ConsoleViewState, panel: Panel): ConsoleViewState {
  return { ...state, panel, error: null };
}

/** Store a session response exactly as the service returned it. */
export function applySession(state: ConsoleViewState, session: SessionState): ConsoleViewState {
  const fresh = state.dialog.session?.session_id !== session.session_id;
  return {
    ...state,
    dialog: {
      ...state.dialog,
      session,
      busy: false,
      error: null,
      satisfactionScore: fresh ? null : state.dialog.satisfactionScore,
    },
  };
}

export function applyDialogError(state: ConsoleViewState, message: string): ConsoleViewState {
  return { ...state, dialog: { ...state.dialog, busy: false, error: message } };
}

export function applySatisfaction(state: ConsoleViewState, score: number): ConsoleViewState {
  return { ...state, dialog: { ...state.dialog, satisfactionScore: score } };
}

/** Review queue ordering: novel cases first, then newest-looking ids last stable. */
export function sortReviewQueue(sessions: SessionSummary[]): SessionSummary[] {
  return [...sessions].sort((a, b) => {
    if (a.novel !== b.novel) {
      return a.novel ? -1 : 1;
    }
    return a.session_id.localeCompare(b.session_id);
  });
}

export function applyReviewQueue(
  state: ConsoleViewState,
  sessions: SessionSummary[],
): ConsoleViewState {
  return {
    ...state,
    review: { ...state.review, queue: sortReviewQueue(sessions) },
  };
}

export function applyOpenSession(
  state: ConsoleViewState,
  session: SessionState,
): ConsoleViewState {
  return { ...state, review: { ...state.review, openSession: session } };
}

export function applyReviewNotice(state: ConsoleViewState, notice: string): ConsoleViewState {
  return { ...state, review: { ...state.review, notice } };
}

export function applyTree(state: ConsoleViewState, tree: TreeDocument): ConsoleViewState {
  return { ...state, tree, expandedNodes: new Set([tree.root]) };
}

export function toggleNode(state: ConsoleViewState, nodeId: number): ConsoleViewState {
  const expanded = new Set(state.expandedNodes);
  if (expanded.has(nodeId)) {
    expanded.delete(nodeId);
  } else {
    expanded.add(nodeId);
  }
  return { ...state, expandedNodes: expanded };
}

export function applyStats(state: ConsoleViewState, stats: Stats): ConsoleViewState {
  return { ...state, stats };
}

export function applyGlobalError(state: ConsoleViewState, message: string): ConsoleViewState {
  return { ...state, error: message };
}

/**
 * HTML rendering for the console panels.
 *
 * Probabilities and turn counts print verbatim (String of the service's
 * number) — formatting never rounds or recomputes a value the operator will
 * act on.  Edge shares in the tree view show the raw support counts the
 * service shipped, plus a percentage derived from them for readability.
 */

import type {
  SessionState,
  SessionSummary,
  Stats,
  TreeDocument,
  TurnRecord,
} from "./api.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function verbatim(value: number): string {
  return String(value);
}

function turnLine(turn: TurnRecord): string {
  if (turn.turn === "question") {
    return `<li class="turn system"><b>system:</b> ${escapeHtml(turn.text ?? "")}</li>`;
  }
  if (turn.turn === "confirm") {
    return `<li class="turn confirm"><b>system:</b> ${escapeHtml(turn.text ?? "")}</li>`;
  }
  if (turn.turn === "unknown") {
    let line = `<li class="turn user"><b>user:</b> (cannot answer)`;
    if (turn.volunteered) {
      line += ` <i>volunteers ${escapeHtml(JSON.stringify(turn.volunteered))}</i>`;
    }
    return line + "</li>";
  }
  let line = `<li class="turn user"><b>user:</b> ${escapeHtml(String(turn.value))}`;
  if (turn.confidence !== undefined && turn.confidence !== null && turn.confidence < 1) {
    line += ` <i>(confidence ${verbatim(turn.confidence)})</i>`;
  }
  if (turn.volunteered) {
    line += ` <i>volunteers ${escapeHtml(JSON.stringify(turn.volunteered))}</i>`;
  }
  return line + "</li>";
}

export function renderTranscript(turns: TurnRecord[]): string {
  return `<ul class="transcript">${turns.map(turnLine).join("")}</ul>`;
}

export function renderDialog(session: SessionState | null, satisfactionScore: number | null): string {
  if (!session) {
    return `
      <p>Start a screening dialog.</p>
      <button id="start-greedy">New dialog (greedy)</button>
      <button id="start-belief">New dialog (belief)</button>`;
  }
  const head = `
    <p class="meta">
      session <code>${escapeHtml(session.session_id)}</code>
      · tree v<span id="dialog-version">${session.tree_version}</span>
      · ${escapeHtml(session.mode)} mode
      · questions so far: <span id="question-count">${session.questions}</span>
      ${session.novel ? '· <b class="novel">novel case — review required</b>' : ""}
    </p>
    ${renderTranscript(session.transcript)}`;
  if (session.status === "classified" && session.result) {
    const satisfaction =
      satisfactionScore === null
        ? `<p>How satisfied was the user? ${[1, 2, 3, 4, 5]
            .map((s) => `<button class="score" data-score="${s}">${s}</button>`)
            .join(" ")}</p>`
        : `<p>satisfaction recorded: ${satisfactionScore}</p>`;
    return `${head}
      <p class="result">decision: <b id="result-label">${escapeHtml(session.result.label)}</b>
         with probability <span id="result-probability">${verbatim(session.result.probability)}</span>
         after <span id="result-questions">${session.questions}</span> questions</p>
      ${satisfaction}
      <button id="start-greedy">New dialog (greedy)</button>
      <button id="start-belief">New dialog (belief)</button>`;
  }
  const question = session.question;
  return `${head}
    <div class="ask">
      <p class="question" id="question-text">${escapeHtml(question?.text ?? "")}</p>
      <input id="answer-value" placeholder="answer" />
      <label>confidence <input id="answer-confidence" value="1.0" size="4" /></label>
      <input id="answer-volunteered" placeholder="volunteer: name=value, name=value" size="34" />
      <button id="answer-submit">Answer</button>
      <button id="answer-unknown">Can't answer</button>
    </div>`;
}

export function renderReview(
  queue: SessionSummary[],
  openSession: SessionState | null,
  classes: string[],
  notice: string | null,
): string {
  const rows = queue
    .map(
      (s) => `
      <tr class="${s.novel ? "novel" : ""}">
        <td><code>${escapeHtml(s.session_id.slice(0, 8))}</code></td>
        <td>v${s.tree_version}</td>
        <td>${s.result ? escapeHtml(s.result.label) : "—"}</td>
        <td>${s.result ? verbatim(s.result.probability) : ""}</td>
        <td>${s.questions}</td>
        <td>${s.novel ? "novel" : ""}</td>
        <td><button class="open-session" data-session="${escapeHtml(s.session_id)}">transcript</button></td>
      </tr>`,
    )
    .join("");
  const table = `
    <table class="queue">
      <thead><tr><th>session</th><th>tree</th><th>label</th><th>p</th><th>questions</th><th></th><th></th></tr></thead>
      <tbody>${rows || '<tr><td colspan="7">no classified sessions yet</td></tr>'}</tbody>
    </table>
    <button id="review-refresh">Refresh</button>
    <button id="review-retrain">Retrain with pending verifications</button>
    ${notice ? `<p class="notice" id="review-notice">${escapeHtml(notice)}</p>` : ""}`;
  if (!openSession) {
    return table;
  }
  const relabel = classes
    .map((c) => `<button class="relabel" data-label="${escapeHtml(c)}">${escapeHtml(c)}</button>`)
    .join(" ");
  const verdict = openSession.result
    ? `${escapeHtml(openSession.result.label)} (p=${verbatim(openSession.result.probability)})`
    : "still active";
  return `${table}
    <div class="open-transcript" data-session="${escapeHtml(openSession.session_id)}">
      <h3>session <code>${escapeHtml(openSession.session_id.slice(0, 8))}</code> — ${verdict}</h3>
      ${renderTranscript(openSession.transcript)}
      ${openSession.status === "classified" ? `<p>correct the label: ${relabel}</p>` : "<p>(session still active; relabeling disabled)</p>"}
    </div>`;
}

export function renderTree(tree: TreeDocument | null, expanded: ReadonlySet<number>): string {
  if (!tree) {
    return "<p>no tree loaded</p>";
  }

  function nodeHtml(nodeId: number): string {
    const node = tree!.nodes[String(nodeId)];
    const counts = Object.entries(node.counts)
      .map(([label, count]) => `${escapeHtml(label)}: ${count}`)
      .join(", ");
    if (node.leaf !== undefined) {
      return `<li class="leaf">→ <b>${escapeHtml(node.leaf)}</b> <small>(${counts})</small></li>`;
    }
    const isOpen = expanded.has(nodeId);
    const children = isOpen
      ? `<ul>${Object.entries(node.children ?? {})
          .map(([edge, childId]) => {
            const support = node.edge_support?.[edge] ?? 0;
            const share = node.total ? ((100 * support) / node.total).toFixed(0) : "0";
            return `<li><span class="edge">${escapeHtml(edge)}</span>
              <small>support ${support}/${node.total} (${share}%)</small>
              <ul>${nodeHtml(childId as number)}</ul></li>`;
          })
          .join("")}</ul>`
      : "";
    return `<li class="internal">
      <button class="toggle" data-node="${nodeId}">${isOpen ? "−" : "+"}</button>
      asks <b>${escapeHtml(node.attribute ?? "")}</b>
      <small>(${counts})</small>
      ${children}</li>`;
  }

  return `
    <p class="meta">tree v${tree.version} · classes: ${tree.classes.map(escapeHtml).join(", ")}</p>
    <ul class="tree">${nodeHtml(tree.root)}</ul>`;
}

export function renderStats(stats: Stats | null): string {
  if (!stats) {
    return "<p>no stats loaded</p>";
  }
  const perVersion = Object.entries(stats.per_version_turn_means)
    .map(
      ([version, mean]) =>
        `<tr><td>v${escapeHtml(version)}</td><td id="turn-mean-v${escapeHtml(version)}">${verbatim(mean)}</td></tr>`,
    )
    .join("");
  return `
    <p class="meta">current tree: v<span id="stats-version">${stats.tree_version ?? "—"}</span></p>
    <table class="stats">
      <tr><th>classified sessions</th><td>${stats.sessions_classified}</td></tr>
      <tr><th>novel sessions</th><td>${stats.novel_sessions}</td></tr>
      <tr><th>verified accuracy</th><td>${stats.verified_accuracy === null ? "—" : verbatim(stats.verified_accuracy)}</td></tr>
      <tr><th>satisfaction mean</th><td id="satisfaction-mean">${stats.satisfaction_mean === null ? "—" : verbatim(stats.satisfaction_mean)}</td></tr>
    </table>
    <h3>mean questions per tree version</h3>
    <table class="stats"><tr><th>version</th><th>mean questions</th></tr>${perVersion}</table>`;
}

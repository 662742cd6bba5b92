// View builders: pure functions from server payloads to HTML strings.
// Numbers shown anywhere come straight from the server (display strings);
// the client neither computes scores nor consensus.

import type {
  BibliometricsSummary,
  BibRecord,
  ConsensusStatus,
  SessionState,
  Taxonomy,
} from "./types.js";
import type { ScreenSpec } from "./screens.js";
import {
  EVALUATION_VERDICTS,
  FAMILIARITY_OPTIONS,
  QUALITY_OPTIONS,
  displayScore,
  pathOptions,
} from "./widgets.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function navView(session: SessionState, screens: ScreenSpec[]): string {
  const caps = session.capabilities;
  const links = screens
    .map(
      (s) =>
        `<a class="nav-card" data-screen="${s.id}" href="${s.hash}">${escapeHtml(s.title)}</a>`,
    )
    .join("");
  const user = session.user
    ? `${escapeHtml(session.user.username)} (${escapeHtml(session.user.role)})`
    : "not signed in";
  return `
    <header>
      <h1>revbib</h1>
      <p class="deployment">scenario ${caps.scenario} · ${escapeHtml(caps.environment)} · ${user}</p>
    </header>
    <nav class="screens">${links}</nav>`;
}

export function scoreLine(record: BibRecord): string {
  const score = record.score;
  if (!score) {
    return "";
  }
  return `<span class="score">${escapeHtml(displayScore(score.score_display, score.rating_count))}</span>`;
}

export function recordCard(record: BibRecord, actionsHtml = ""): string {
  const authors = record.authors.map(escapeHtml).join(", ");
  return `
    <article class="record" data-record-id="${record.record_id}">
      <h3>${escapeHtml(record.title)}</h3>
      <p>${authors} · ${escapeHtml(record.venue)} · ${record.year}</p>
      <p class="meta">${escapeHtml(record.field_id)}/${escapeHtml(record.subfield_id)}
        · status ${escapeHtml(record.status)} ${scoreLine(record)}</p>
      ${actionsHtml}
    </article>`;
}

export function ratingWidget(recordId: string): string {
  const options = (name: string, opts: { label: string; value: number }[]) =>
    opts
      .map((o) => `<label><input type="radio" name="${name}-${recordId}" value="${o.value}">${o.label}</label>`)
      .join("");
  return `
    <form class="rating-widget" data-record-id="${recordId}">
      <fieldset>
        <legend>Quality level of article</legend>
        ${options("quality", QUALITY_OPTIONS)}
      </fieldset>
      <fieldset>
        <legend>Familiarity level with article topic</legend>
        ${options("familiarity", FAMILIARITY_OPTIONS)}
      </fieldset>
      <button type="submit">Rate</button>
    </form>`;
}

export function evaluationCard(record: BibRecord, taxonomy: Taxonomy): string {
  const verdicts = EVALUATION_VERDICTS.map(
    (v) =>
      `<label><input type="radio" name="verdict-${record.record_id}" value="${v.value}">${v.label}</label>`,
  ).join("");
  const paths = pathOptions(taxonomy)
    .map(
      (p) =>
        `<option value="${p.fieldId}/${p.subfieldId}">${escapeHtml(p.label)}</option>`,
    )
    .join("");
  return recordCard(
    record,
    `
    <form class="evaluation-card" data-record-id="${record.record_id}">
      <fieldset>
        <legend>Is this a review/survey article?</legend>
        ${verdicts}
      </fieldset>
      <fieldset>
        <legend>Most relevant field and sub-field</legend>
        <select name="path-${record.record_id}">${paths}</select>
      </fieldset>
      <button type="submit">Submit evaluation</button>
    </form>`,
  );
}

export function consensusPanel(status: ConsensusStatus): string {
  const rows = status.groups
    .map((g) => {
      const label = g.is_review
        ? `review · ${escapeHtml(g.field_id ?? "")}/${escapeHtml(g.subfield_id ?? "")}`
        : "not a review";
      return `<li>${label}: ${g.count}</li>`;
    })
    .join("");
  return `
    <div class="consensus">
      <p>${status.evaluation_count} evaluation(s); threshold ${status.threshold};
         would decide: ${escapeHtml(status.would_decide.outcome)}</p>
      <ul>${rows}</ul>
    </div>`;
}

export function moderationCard(
  record: BibRecord,
  canOpenForEvaluation: boolean,
  consensusHtml = "",
): string {
  const open = canOpenForEvaluation
    ? `<button data-action="open_for_evaluation">Open for evaluation</button>`
    : "";
  return recordCard(
    record,
    `
    ${consensusHtml}
    <div class="decision-buttons" data-record-id="${record.record_id}">
      <button data-action="approve">Approve</button>
      <button data-action="reject">Reject</button>
      ${open}
    </div>`,
  );
}

export function bibliometricsPanel(summary: BibliometricsSummary & { avg_rating_display?: string | null }): string {
  const years =
    summary.year_min === null ? "–" : `${summary.year_min}–${summary.year_max}`;
  const avg =
    summary.avg_rating_display == null ? "unrated" : `${summary.avg_rating_display}%`;
  return `
    <aside class="bibliometrics">
      <h4>Sub-field bibliometrics</h4>
      <dl>
        <dt>Review papers</dt><dd>${summary.paper_count}</dd>
        <dt>Publication years</dt><dd>${years}</dd>
        <dt>Total citations</dt><dd>${summary.total_citations}</dd>
        <dt>Average rating score</dt><dd>${escapeHtml(avg)}</dd>
        <dt>Raters</dt><dd>${summary.rater_count}</dd>
      </dl>
    </aside>`;
}

export function taxonomyBrowser(taxonomy: Taxonomy): string {
  const fields = taxonomy.fields
    .map((f) => {
      const subs = f.subfields
        .map(
          (sf) =>
            `<li><a href="#/browse/${f.field_id}/${sf.subfield_id}">${escapeHtml(sf.name)}</a></li>`,
        )
        .join("");
      return `<details><summary>${escapeHtml(f.name)}</summary><ul>${subs}</ul></details>`;
    })
    .join("");
  return `<div class="taxonomy-browser">${fields}</div>`;
}

export function submissionForm(taxonomy: Taxonomy): string {
  const paths = pathOptions(taxonomy)
    .map((p) => `<option value="${p.fieldId}/${p.subfieldId}">${escapeHtml(p.label)}</option>`)
    .join("");
  return `
    <form id="submit-form">
      <label>Title <input name="title" required></label>
      <label>Authors (semicolon-separated) <input name="authors" required></label>
      <label>Venue <input name="venue"></label>
      <label>Year <input name="year" type="number" required></label>
      <label>Field / sub-field <select name="path">${paths}</select></label>
      <label>Keywords (comma-separated) <input name="keywords"></label>
      <label>DOI <input name="doi"></label>
      <label>Abstract <textarea name="abstract"></textarea></label>
      <button type="submit">Submit</button>
    </form>`;
}

export function notAvailable(message: string): string {
  return `<p class="not-available">${escapeHtml(message)}</p>`;
}

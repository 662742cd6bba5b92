// Rendered views: widgets expose exact scales, server numbers appear
// verbatim, and unsafe text is escaped.

import { describe, expect, it } from "vitest";

import {
  bibliometricsPanel,
  consensusPanel,
  escapeHtml,
  evaluationCard,
  moderationCard,
  ratingWidget,
  recordCard,
} from "../src/views";
import type { BibliometricsSummary, BibRecord, ConsensusStatus, Taxonomy } from "../src/types";

const record: BibRecord = {
  record_id: "r1",
  area_id: "computing",
  field_id: "networks",
  subfield_id: "network-types",
  title: "Wireless <Sensor> Networks",
  authors: ["A. Author", "B. Writer"],
  venue: "Journal",
  year: 2012,
  citation_count: 10,
  keywords: ["wireless"],
  abstract: null,
  doi: null,
  submitter_id: "u1",
  status: "approved",
  submitted_at: "2024-01-01T00:00:00+00:00",
  decided_at: "2024-01-01T00:00:00+00:00",
  reject_reason: null,
  score: { score_percent: 83.33333333333334, score_display: "83.33", rating_count: 2 },
};

const taxonomy: Taxonomy = {
  area_id: "computing",
  name: "Computing",
  fields: [
    {
      field_id: "networks",
      name: "Networks",
      subfields: [{ subfield_id: "network-types", name: "Network Types" }],
    },
  ],
};

describe("record card", () => {
  it("shows the server's score string verbatim", () => {
    const html = recordCard(record);
    expect(html).toContain("83.33% (2 ratings)");
    // the raw float from the payload is never rendered
    expect(html).not.toContain("83.33333333333334");
  });

  it("escapes markup in titles", () => {
    const html = recordCard(record);
    expect(html).toContain("Wireless &lt;Sensor&gt; Networks");
    expect(html).not.toContain("<Sensor>");
  });
});

describe("rating widget", () => {
  it("offers exactly three quality and three familiarity choices", () => {
    const html = ratingWidget("r1");
    for (const label of ["Low", "Medium", "High", "Moderate", "Expert"]) {
      expect(html).toContain(label);
    }
    expect(html.match(/name="quality-r1"/g)).toHaveLength(3);
    expect(html.match(/name="familiarity-r1"/g)).toHaveLength(3);
    expect(html).toContain("Quality level of article");
    expect(html).toContain("Familiarity level with article topic");
  });
});

describe("evaluation card", () => {
  it("has the two-verdict toggle and the path picker", () => {
    const html = evaluationCard(record, taxonomy);
    expect(html.match(/name="verdict-r1"/g)).toHaveLength(2);
    expect(html).toContain("Review/survey article");
    expect(html).toContain("Not review/survey article");
    expect(html).toContain('<option value="networks/network-types">');
  });
});

describe("moderation card", () => {
  it("offers open-for-evaluation only when the deployment supports it", () => {
    expect(moderationCard(record, true)).toContain("Open for evaluation");
    expect(moderationCard(record, false)).not.toContain("Open for evaluation");
  });
});

describe("bibliometrics panel", () => {
  it("renders server-supplied display strings untouched", () => {
    const summary: BibliometricsSummary & { avg_rating_display: string | null } = {
      area_id: "computing",
      field_id: "networks",
      subfield_id: "network-types",
      paper_count: 3,
      year_min: 2008,
      year_max: 2012,
      total_citations: 17,
      avg_rating_score: 75.0,
      avg_rating_display: "75.00",
      rater_count: 4,
      computed_at: "2024-01-01T00:00:00+00:00",
    };
    const html = bibliometricsPanel(summary);
    expect(html).toContain("75.00%");
    expect(html).toContain("2008–2012");
    expect(html).toContain("<dd>17</dd>");
  });
});

describe("consensus panel", () => {
  it("shows the server tally without recomputing anything", () => {
    const status: ConsensusStatus = {
      record_id: "r1",
      evaluation_count: 7,
      threshold: 10,
      auto_decide: false,
      would_decide: { outcome: "none", supporting_count: 5, field_id: null, subfield_id: null },
      groups: [
        { is_review: true, field_id: "networks", subfield_id: "network-types", count: 5 },
        { is_review: false, field_id: null, subfield_id: null, count: 2 },
      ],
    };
    const html = consensusPanel(status);
    expect(html).toContain("7 evaluation(s); threshold 10");
    expect(html).toContain("would decide: none");
    expect(html).toContain("review · networks/network-types: 5");
    expect(html).toContain("not a review: 2");
  });
});

describe("escapeHtml", () => {
  it("neutralizes the usual suspects", () => {
    expect(escapeHtml(`<img src=x onerror="pwn('&')">`)).toBe(
      "&lt;img src=x onerror=&quot;pwn(&#39;&amp;&#39;)&quot;&gt;",
    );
  });
});

// Server payload shapes (the HTTP+JSON surface is the only contract).

export interface CapabilityCell {
  supported: boolean;
  description: string;
  note: string | null;
}

export interface AreaRef {
  area_id: string;
  name: string;
}

export interface Capabilities {
  scenario: number;
  environment: string;
  consensus_threshold: number;
  auto_decide: boolean;
  roles: string[];
  functionality: Record<string, CapabilityCell>;
  areas: AreaRef[];
  endpoints: { method: string; path: string; functionality: string }[];
}

export interface Score {
  score_percent: number | null;
  score_display: string | null;
  rating_count: number;
}

export interface BibRecord {
  record_id: string;
  area_id: string;
  field_id: string;
  subfield_id: string;
  title: string;
  authors: string[];
  venue: string;
  year: number;
  citation_count: number | null;
  keywords: string[];
  abstract: string | null;
  doi: string | null;
  submitter_id: string;
  status: string;
  submitted_at: string;
  decided_at: string | null;
  reject_reason: string | null;
  score?: Score;
}

export interface Subfield {
  subfield_id: string;
  name: string;
}

export interface TaxonomyField {
  field_id: string;
  name: string;
  subfields: Subfield[];
}

export interface Taxonomy {
  area_id: string;
  name: string;
  fields: TaxonomyField[];
}

export interface User {
  user_id: string;
  username: string;
  first_name: string;
  last_name: string;
  email: string;
  role: string;
  created_at: string;
  preferences: Record<string, string>;
}

export interface BibliometricsSummary {
  area_id: string;
  field_id: string;
  subfield_id: string;
  paper_count: number;
  year_min: number | null;
  year_max: number | null;
  total_citations: number;
  avg_rating_score: number | null;
  rater_count: number;
  computed_at: string;
}

export interface ConsensusDecision {
  outcome: string;
  supporting_count: number;
  field_id: string | null;
  subfield_id: string | null;
}

export interface ConsensusStatus {
  record_id: string;
  evaluation_count: number;
  threshold: number;
  auto_decide: boolean;
  would_decide: ConsensusDecision;
  groups: {
    is_review: boolean;
    field_id: string | null;
    subfield_id: string | null;
    count: number;
  }[];
}

export interface Recommendation {
  record: BibRecord;
  predicted_score: number;
}

export interface SessionState {
  token: string | null;
  user: User | null;
  capabilities: Capabilities;
  areaId: string | null;
}

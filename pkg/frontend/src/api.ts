// Thin fetch client for the service's HTTP+JSON surface. The only
// configuration is the base URL.

import type {
  BibliometricsSummary,
  BibRecord,
  Capabilities,
  ConsensusDecision,
  ConsensusStatus,
  Recommendation,
  Score,
  Taxonomy,
  User,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public code: string,
    message: string,
    public status: number,
  ) {
    super(message);
  }

  /** Capability errors render as a deployment notice, not a failure. */
  get isCapabilityError(): boolean {
    return this.code === "capability_not_supported";
  }

  get displayMessage(): string {
    if (this.isCapabilityError) {
      return "not available in this deployment";
    }
    return this.message;
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    public baseUrl: string,
    private token: string | null = null,
    private fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  setToken(token: string | null): void {
    this.token = token;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) {
      headers["Authorization"] = `Bearer ${this.token}`;
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    let payload: any;
    try {
      payload = await response.json();
    } catch {
      throw new ApiError("bad_response", `non-JSON response (${response.status})`, response.status);
    }
    if (!response.ok || payload.ok !== true) {
      const error = payload?.error ?? {};
      throw new ApiError(
        error.code ?? "error",
        error.message ?? `HTTP ${response.status}`,
        response.status,
      );
    }
    return payload as T;
  }

  capabilities(): Promise<Capabilities> {
    return this.request<Capabilities>("GET", "/api/v1/capabilities");
  }

  register(body: {
    username: string;
    password_digest: string;
    email: string;
    first_name?: string;
    last_name?: string;
  }): Promise<{ user: User }> {
    return this.request("POST", "/api/v1/auth/register", body);
  }

  login(username: string, passwordDigest: string): Promise<{ token: string; user: User }> {
    return this.request("POST", "/api/v1/auth/login", {
      username,
      password_digest: passwordDigest,
    });
  }

  profile(): Promise<{ user: User }> {
    return this.request("GET", "/api/v1/profile");
  }

  taxonomy(areaId: string): Promise<{ taxonomy: Taxonomy }> {
    return this.request("GET", `/api/v1/areas/${areaId}/taxonomy`);
  }

  search(areaId: string, query: string): Promise<{ results: (BibRecord & { match_count: number })[] }> {
    const q = encodeURIComponent(query);
    return this.request("GET", `/api/v1/search?q=${q}&area=${encodeURIComponent(areaId)}`);
  }

  listRecords(
    areaId: string,
    fieldId: string,
    subfieldId: string,
    page = 1,
  ): Promise<{ records: BibRecord[] }> {
    const params = `field=${encodeURIComponent(fieldId)}&subfield=${encodeURIComponent(subfieldId)}&page=${page}`;
    return this.request("GET", `/api/v1/areas/${areaId}/records?${params}`);
  }

  submitRecord(areaId: string, draft: Record<string, unknown>): Promise<{ record: BibRecord }> {
    return this.request("POST", `/api/v1/areas/${areaId}/records`, draft);
  }

  bibliometrics(
    areaId: string,
    fieldId: string,
    subfieldId: string,
  ): Promise<{ summary: BibliometricsSummary }> {
    return this.request(
      "GET",
      `/api/v1/areas/${areaId}/bibliometrics/${fieldId}/${subfieldId}`,
    );
  }

  rate(
    areaId: string,
    recordId: string,
    quality: number,
    familiarity: number,
  ): Promise<{ score: Score }> {
    return this.request("POST", `/api/v1/areas/${areaId}/records/${recordId}/rating`, {
      quality,
      familiarity,
    });
  }

  recommendations(areaId: string, n = 10): Promise<{ recommendations: Recommendation[] }> {
    return this.request("GET", `/api/v1/areas/${areaId}/recommendations?n=${n}`);
  }

  pending(areaId: string, kind: "moderation" | "evaluation"): Promise<{ records: BibRecord[] }> {
    return this.request("GET", `/api/v1/areas/${areaId}/pending?kind=${kind}`);
  }

  evaluate(
    areaId: string,
    recordId: string,
    isReview: boolean,
    fieldId: string | null,
    subfieldId: string | null,
  ): Promise<{ decision: ConsensusDecision; record_status: string }> {
    const body: Record<string, unknown> = { is_review: isReview };
    if (isReview) {
      body["field_id"] = fieldId;
      body["subfield_id"] = subfieldId;
    }
    return this.request("POST", `/api/v1/areas/${areaId}/records/${recordId}/evaluation`, body);
  }

  consensus(areaId: string, recordId: string): Promise<ConsensusStatus> {
    return this.request("GET", `/api/v1/areas/${areaId}/records/${recordId}/consensus`);
  }

  decide(
    areaId: string,
    recordId: string,
    action: string,
    reason?: string,
  ): Promise<{ record: BibRecord }> {
    const body: Record<string, unknown> = { action };
    if (reason) {
      body["reason"] = reason;
    }
    return this.request("POST", `/api/v1/areas/${areaId}/records/${recordId}/decision`, body);
  }

  addSubfield(areaId: string, fieldId: string, name: string): Promise<{ taxonomy: Taxonomy }> {
    return this.request("POST", `/api/v1/areas/${areaId}/fields/${fieldId}/subfields`, { name });
  }

  renameSubfield(
    areaId: string,
    fieldId: string,
    subfieldId: string,
    name: string,
  ): Promise<{ taxonomy: Taxonomy }> {
    return this.request(
      "PATCH",
      `/api/v1/areas/${areaId}/fields/${fieldId}/subfields/${subfieldId}`,
      { name },
    );
  }

  deleteSubfield(
    areaId: string,
    fieldId: string,
    subfieldId: string,
  ): Promise<{ taxonomy: Taxonomy }> {
    return this.request(
      "DELETE",
      `/api/v1/areas/${areaId}/fields/${fieldId}/subfields/${subfieldId}`,
    );
  }

  addArea(name: string, fields: { name: string; subfields: string[] }[]): Promise<{ taxonomy: Taxonomy }> {
    return this.request("POST", "/api/v1/areas", { name, fields });
  }
}

/** SHA1 hex digest computed locally; the cleartext never leaves the browser. */
export async function sha1Hex(text: string): Promise<string> {
  const data = new TextEncoder().encode(text);
  const digest = await crypto.subtle.digest("SHA-1", data);
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("");
}

// Typed client over the engine's HTTP API. The UI never recomputes engine
// math; everything rendered comes straight from these payloads.

export interface QuestionPayload {
  keyword: string;
  memberships: Record<string, number>;
  spread: number;
  asked: number;
  budget: number;
}

export interface CategoryEntry {
  keyword: string;
  membership: number;
  contexts: string[];
}

export interface Recommendation {
  record_id: string;
  score: number;
  context_id: string;
}

export interface RelatedDocument {
  document_id: string;
  activation: number;
}

export interface QueryOutcome {
  question?: QuestionPayload;
  recommendations?: Recommendation[];
  category?: CategoryEntry[];
  missing?: Record<string, string[]>;
}

export interface ContextStats {
  context_id: string;
  records: number;
  keywords: number;
  documents: number;
  propagated_keywords: string[];
  path_triples: number;
  clicks_total: number;
  [key: string]: unknown;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseDetail(resp: Response): Promise<string> {
  try {
    const body = await resp.json();
    if (typeof body?.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return resp.statusText;
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, await parseDetail(resp));
    }
    return (await resp.json()) as T;
  }

  createSession(user: string, autoAnswerLevel: number): Promise<{ session_id: string }> {
    return this.request("POST", "/sessions", { user, auto_answer_level: autoAnswerLevel });
  }

  query(sessionId: string, keywords: string[]): Promise<QueryOutcome> {
    return this.request("POST", `/sessions/${sessionId}/query`, { keywords });
  }

  answer(sessionId: string, keyword: string, relevant: boolean): Promise<QueryOutcome> {
    return this.request("POST", `/sessions/${sessionId}/answer`, { keyword, relevant });
  }

  recommendations(sessionId: string, n = 20): Promise<{ recommendations: Recommendation[] }> {
    return this.request("GET", `/sessions/${sessionId}/recommendations?n=${n}`);
  }

  click(sessionId: string, documentId: string): Promise<{ related: RelatedDocument[] }> {
    return this.request("POST", `/sessions/${sessionId}/click`, { document_id: documentId });
  }

  related(documentId: string, network = "composite", n = 10): Promise<{ related: RelatedDocument[] }> {
    const doc = encodeURIComponent(documentId);
    return this.request("GET", `/documents/${doc}/related?network=${network}&n=${n}`);
  }

  contexts(): Promise<{ contexts: string[] }> {
    return this.request("GET", "/admin/contexts");
  }

  contextStats(contextId: string): Promise<ContextStats> {
    return this.request("GET", `/admin/contexts/${encodeURIComponent(contextId)}/stats`);
  }
}

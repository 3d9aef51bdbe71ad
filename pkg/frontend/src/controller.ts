// Session view state and the flows that drive it. Deliberately DOM-free so
// the whole conversation loop is testable headlessly against a live server.
//
// One in-flight request per user action: every action bumps a step counter
// and responses carrying a superseded step are discarded.

import {
  ApiClient,
  ApiError,
  CategoryEntry,
  QueryOutcome,
  QuestionPayload,
  Recommendation,
  RelatedDocument,
} from "./api.js";

export interface SessionView {
  sessionId: string | null;
  user: string;
  autoAnswerLevel: number;
  lastKeywords: string[];
  question: QuestionPayload | null;
  questionsAnswered: number;
  recommendations: Recommendation[];
  category: CategoryEntry[];
  missing: Record<string, string[]>;
  currentDocument: string | null;
  related: RelatedDocument[];
  error: string | null;
  busy: boolean;
}

function emptyView(user: string): SessionView {
  return {
    sessionId: null,
    user,
    autoAnswerLevel: 0,
    lastKeywords: [],
    question: null,
    questionsAnswered: 0,
    recommendations: [],
    category: [],
    missing: {},
    currentDocument: null,
    related: [],
    error: null,
    busy: false,
  };
}

export class SessionController {
  readonly view: SessionView;
  private step = 0;
  private listeners: Array<(view: SessionView) => void> = [];

  constructor(
    private readonly api: ApiClient,
    user = "browser",
    initialSessionId: string | null = null,
  ) {
    this.view = emptyView(user);
    this.view.sessionId = initialSessionId;
  }

  onChange(listener: (view: SessionView) => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const fn of this.listeners) fn(this.view);
  }

  /** The slider value applies to the next created session. */
  setAutoAnswerLevel(level: number): void {
    if (level !== this.view.autoAnswerLevel) {
      this.view.autoAnswerLevel = level;
      this.view.sessionId = null; // the level is fixed at session creation
      this.emit();
    }
  }

  private async ensureSession(): Promise<string> {
    if (this.view.sessionId === null) {
      const created = await this.api.createSession(this.view.user, this.view.autoAnswerLevel);
      this.view.sessionId = created.session_id;
    }
    return this.view.sessionId;
  }

  private applyOutcome(outcome: QueryOutcome): void {
    this.view.question = outcome.question ?? null;
    this.view.missing = outcome.missing ?? {};
    if (outcome.recommendations !== undefined) {
      this.view.recommendations = outcome.recommendations;
      this.view.category = outcome.category ?? [];
    }
  }

  /** Query -> first question or straight to recommendations. */
  async searchFlow(keywords: string[]): Promise<void> {
    const step = ++this.step;
    this.view.busy = true;
    this.view.error = null;
    this.view.question = null;
    this.view.questionsAnswered = 0;
    this.view.recommendations = [];
    this.view.category = [];
    this.view.currentDocument = null;
    this.view.related = [];
    this.view.lastKeywords = keywords;
    this.emit();
    try {
      const sid = await this.ensureSession();
      const outcome = await this.api.query(sid, keywords);
      if (step !== this.step) return; // superseded
      this.applyOutcome(outcome);
    } catch (err) {
      if (step !== this.step) return;
      if (err instanceof ApiError && err.status === 404 && this.view.sessionId !== null) {
        // expired session: re-create once and retry the same query
        this.view.sessionId = null;
        try {
          const sid = await this.ensureSession();
          const outcome = await this.api.query(sid, keywords);
          if (step !== this.step) return;
          this.applyOutcome(outcome);
        } catch (retryErr) {
          if (step !== this.step) return;
          this.view.error = String(retryErr instanceof Error ? retryErr.message : retryErr);
        }
      } else {
        this.view.error = String(err instanceof Error ? err.message : err);
      }
    } finally {
      if (step === this.step) {
        this.view.busy = false;
        this.emit();
      }
    }
  }

  /** Answer the current question; the server returns the next step. */
  async answer(relevant: boolean): Promise<void> {
    const question = this.view.question;
    const sid = this.view.sessionId;
    if (!question || !sid) return;
    const step = ++this.step;
    this.view.busy = true;
    this.view.error = null;
    this.emit();
    try {
      const outcome = await this.api.answer(sid, question.keyword, relevant);
      if (step !== this.step) return;
      this.view.questionsAnswered += 1;
      this.applyOutcome(outcome);
    } catch (err) {
      if (step !== this.step) return;
      this.view.error = String(err instanceof Error ? err.message : err);
    } finally {
      if (step === this.step) {
        this.view.busy = false;
        this.emit();
      }
    }
  }

  /** Click a recommended (or related) document; render its related panel. */
  async clickDocument(documentId: string): Promise<void> {
    const step = ++this.step;
    this.view.busy = true;
    this.view.error = null;
    this.emit();
    try {
      const sid = await this.ensureSession();
      const result = await this.api.click(sid, documentId);
      if (step !== this.step) return;
      this.view.currentDocument = documentId;
      this.view.related = result.related;
    } catch (err) {
      if (step !== this.step) return;
      this.view.error = String(err instanceof Error ? err.message : err);
    } finally {
      if (step === this.step) {
        this.view.busy = false;
        this.emit();
      }
    }
  }

  /** Peak membership of the category chart; 1 whenever a category exists. */
  categoryPeak(): number {
    return this.view.category.reduce((m, e) => Math.max(m, e.membership), 0);
  }
}

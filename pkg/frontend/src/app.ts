// DOM wiring for the three-pane layout: conversation, recommendations,
// document + related. All state lives in the controller; this file only
// renders SessionView and forwards clicks.

import { ApiClient } from "./api.js";
import { SessionController, SessionView } from "./controller.js";

// the session id is the only state surviving a reload
const api = new ApiClient("");
const controller = new SessionController(api, "browser", sessionStorage.getItem("recnet-session"));
controller.onChange((view) => {
  if (view.sessionId) sessionStorage.setItem("recnet-session", view.sessionId);
  else sessionStorage.removeItem("recnet-session");
});

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function bar(label: string, value: number, title = ""): string {
  const pct = Math.round(value * 100);
  return `
    <div class="bar-row" title="${title}">
      <span class="bar-label">${label}</span>
      <span class="bar-track"><span class="bar-fill" style="width:${pct}%"></span></span>
      <span class="bar-value">${value.toFixed(3)}</span>
    </div>`;
}

function renderQuestion(view: SessionView): string {
  const q = view.question;
  if (!q) return "";
  const rows = Object.entries(q.memberships)
    .sort(([a], [b]) => a.localeCompare(b))
    .map(([ctx, mu]) => bar(ctx, mu))
    .join("");
  return `
    <div class="question-card">
      <p>Is <strong>${q.keyword}</strong> relevant to your search?</p>
      <p class="hint">question ${q.asked + 1} of at most ${q.budget}; the sources disagree by ${q.spread.toFixed(2)}</p>
      ${rows}
      <div class="answer-buttons">
        <button id="answer-yes">relevant</button>
        <button id="answer-no">irrelevant</button>
      </div>
    </div>`;
}

function renderCategory(view: SessionView): string {
  if (view.category.length === 0) return "<p class='hint'>no category yet</p>";
  return view.category
    .map((e) => bar(e.keyword, e.membership, `from: ${e.contexts.join(", ")}`))
    .join("");
}

function renderRecommendations(view: SessionView): string {
  if (view.recommendations.length === 0) return "<p class='hint'>nothing recommended yet</p>";
  return view.recommendations
    .map(
      (r) => `
      <div class="rec-row" data-doc="${r.record_id}">
        <button class="rec-link" data-doc="${r.record_id}">${r.record_id}</button>
        <span class="rec-context">${r.context_id}</span>
        <span class="rec-score">${r.score.toFixed(3)}</span>
      </div>`,
    )
    .join("");
}

function renderRelated(view: SessionView): string {
  if (!view.currentDocument) return "<p class='hint'>click a record to open it</p>";
  const rows =
    view.related.length === 0
      ? "<p class='hint'>no related documents</p>"
      : view.related
          .map(
            (r) => `
        <div class="rec-row">
          <button class="rec-link" data-doc="${r.document_id}">${r.document_id}</button>
          <span class="rec-score">${r.activation.toFixed(3)}</span>
        </div>`,
          )
          .join("");
  return `<p>viewing <strong>${view.currentDocument}</strong></p>${rows}`;
}

function render(view: SessionView): void {
  el("session-label").textContent = view.sessionId ? `session ${view.sessionId}` : "no session";
  el("error-banner").textContent = view.error ?? "";
  el("error-banner").style.display = view.error ? "block" : "none";
  el("busy").style.visibility = view.busy ? "visible" : "hidden";

  const missing = Object.entries(view.missing)
    .map(([kw, ctxs]) => `${kw} is unknown to ${ctxs.join(", ")}`)
    .join("; ");
  el("missing-note").textContent = missing;

  el("question-pane").innerHTML = renderQuestion(view);
  el("category-chart").innerHTML = renderCategory(view);
  el("recommendations-pane").innerHTML = renderRecommendations(view);
  el("document-pane").innerHTML = renderRelated(view);

  const yes = document.getElementById("answer-yes");
  const no = document.getElementById("answer-no");
  if (yes) yes.addEventListener("click", () => void controller.answer(true));
  if (no) no.addEventListener("click", () => void controller.answer(false));
  for (const link of document.querySelectorAll<HTMLButtonElement>(".rec-link")) {
    link.addEventListener("click", () => void controller.clickDocument(link.dataset.doc ?? ""));
  }
}

function boot(): void {
  controller.onChange(render);

  el<HTMLFormElement>("search-form").addEventListener("submit", (ev) => {
    ev.preventDefault();
    const raw = el<HTMLInputElement>("search-input").value;
    const keywords = raw
      .split(",")
      .map((s) => s.trim())
      .filter((s) => s.length > 0);
    if (keywords.length > 0) void controller.searchFlow(keywords);
  });

  const slider = el<HTMLInputElement>("auto-answer");
  slider.addEventListener("input", () => {
    controller.setAutoAnswerLevel(Number(slider.value) / 100);
    el("auto-answer-value").textContent = (Number(slider.value) / 100).toFixed(2);
  });

  render(controller.view);
}

boot();

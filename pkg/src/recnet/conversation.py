"""Category construction in dialogue with the user, and what it feeds.

A query projects the user's interest keywords onto the working keyword
proximity of every participating context, giving one fuzzy keyword set per
context.  Keywords the contexts disagree about are put to the user (or
answered silently by their history context); union/intersection semantics
resolve each answer.  The finalized category recommends records, reinforces
keyword proximity inside each context, and seeds keywords into contexts that
lack them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Mapping

from .corpus import KnowledgeContext
from .proximity import SparseProximity, derived_proximity

CATEGORY_HEADER = "#cat 1"
HISTORY_CONTEXT_ID = "history"


@dataclass(frozen=True)
class InterestProfile:
    keywords: frozenset[str]

    def __post_init__(self) -> None:
        if not self.keywords:
            raise ValueError("interest profile is empty")


@dataclass
class UserHistoryContext:
    """The user's own retrieval history as one more knowledge context.

    auto_answer_level 0 means the user answers every question themselves;
    1 lets the history answer everything it knows about; in between only
    high-confidence questions are answered silently.
    """

    context: KnowledgeContext
    auto_answer_level: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.auto_answer_level <= 1.0:
            raise ValueError(f"auto_answer_level out of [0,1]: {self.auto_answer_level}")


@dataclass
class FuzzyCategory:
    membership: dict[str, float]
    provenance: dict[str, tuple[str, ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class Question:
    keyword: str
    memberships: dict[str, float]  # context id -> membership (0 where absent)
    spread: float


@dataclass(frozen=True)
class Answer:
    relevant: bool
    answered_by: str = "user"  # "user" | "history"


@dataclass
class ConversationConfig:
    dispute_threshold: float = 0.2
    question_budget: int = 10
    entropy_floor: float = 0.25
    auto_answer_threshold: float = 0.5
    membership_floor: float = 0.01


@dataclass
class ConversationState:
    profile: InterestProfile
    contexts: dict[str, KnowledgeContext]
    fuzzy: dict[str, dict[str, float]]       # context id -> F_c
    blend: dict[str, float]                  # B(k) = max_c F_c(k)
    resolved: set[str] = field(default_factory=set)
    questions_asked: int = 0
    config: ConversationConfig = field(default_factory=ConversationConfig)
    auto_answer_level: float = 0.0
    missing: dict[str, list[str]] = field(default_factory=dict)  # profile kw -> contexts lacking it


def ensure_working_ksp(ctx: KnowledgeContext) -> SparseProximity:
    """The context's adaptable keyword proximity; starts as a copy of the
    derived matrix so the raw one stays recoverable from the incidence."""
    if ctx.working_ksp is None:
        ctx.working_ksp = derived_proximity(ctx, "keyword_semantic").copy()
    return ctx.working_ksp


def _project_profile(profile: InterestProfile, ctx: KnowledgeContext) -> dict[str, float]:
    """F_c: pointwise max of the zero-threshold proximity neighborhoods of the
    profile keywords present in the context, each self-included at 1."""
    W = ensure_working_ksp(ctx)
    fuzzy: dict[str, float] = {}
    for kw in sorted(profile.keywords):
        if kw not in ctx.keyword_index:
            continue
        idx = ctx.keyword_index[kw]
        fuzzy[kw] = 1.0
        for j, v in W.row(idx).items():
            label = W.labels[j]
            if v > fuzzy.get(label, 0.0):
                fuzzy[label] = v
    return fuzzy


def init_category(
    profile: InterestProfile,
    contexts: Mapping[str, KnowledgeContext],
    user_history: UserHistoryContext | None = None,
    config: ConversationConfig | None = None,
) -> ConversationState:
    """Project the profile onto every participating context and blend.

    The user's history joins as one more context when it has anything to say.
    A profile keyword absent from every participating context is an error;
    keywords missing from only some contexts are reported on the state.
    """
    participating = dict(contexts)
    auto_level = 0.0
    if user_history is not None and user_history.context.n > 0:
        participating[HISTORY_CONTEXT_ID] = user_history.context
        auto_level = user_history.auto_answer_level
    if not participating:
        raise ValueError("no participating contexts")

    fuzzy = {cid: _project_profile(profile, ctx) for cid, ctx in participating.items()}

    missing: dict[str, list[str]] = {}
    for kw in sorted(profile.keywords):
        absent = [cid for cid, ctx in participating.items() if kw not in ctx.keyword_index]
        if len(absent) == len(participating):
            raise KeyError(f"profile keyword absent from every context: {kw!r}")
        if absent:
            missing[kw] = absent

    blend: dict[str, float] = {}
    for f in fuzzy.values():
        for kw, v in f.items():
            if v > blend.get(kw, 0.0):
                blend[kw] = v

    return ConversationState(
        profile=profile,
        contexts=participating,
        fuzzy=fuzzy,
        blend=blend,
        config=config or ConversationConfig(),
        auto_answer_level=auto_level,
        missing=missing,
    )


def fuzzy_entropy(memberships: Mapping[str, float]) -> float:
    """Normalized fuzzy entropy: 1 for all-0.5 memberships, 0 for crisp sets."""
    if not memberships:
        return 0.0
    total = 0.0
    for mu in memberships.values():
        for x in (mu, 1.0 - mu):
            if x > 0.0:
                total -= x * math.log(x)
    return total / (len(memberships) * math.log(2.0))


def _spread(state: ConversationState, keyword: str) -> float:
    values = [f.get(keyword, 0.0) for f in state.fuzzy.values()]
    return max(values) - min(values)


def next_question(
    state: ConversationState, dispute_threshold: float | None = None
) -> Question | None:
    """The unresolved keyword the contexts disagree on most, or None when done.

    Done means: nothing above the dispute threshold remains, the blend's
    entropy fell below the floor, or the question budget ran out.
    """
    threshold = state.config.dispute_threshold if dispute_threshold is None else dispute_threshold
    if state.questions_asked >= state.config.question_budget:
        return None
    if fuzzy_entropy(state.blend) < state.config.entropy_floor:
        return None
    best: tuple[float, str] | None = None
    for kw in state.blend:
        if kw in state.resolved:
            continue
        spread = _spread(state, kw)
        if spread > threshold and (best is None or (-spread, kw) < (-best[0], best[1])):
            best = (spread, kw)
    if best is None:
        return None
    spread, kw = best
    memberships = {cid: f.get(kw, 0.0) for cid, f in state.fuzzy.items()}
    return Question(keyword=kw, memberships=memberships, spread=spread)


def apply_answer(state: ConversationState, question: Question, answer: Answer) -> ConversationState:
    """Union semantics for a relevant answer, intersection for irrelevant."""
    kw = question.keyword
    if kw in state.resolved:
        raise ValueError(f"keyword already resolved: {kw!r}")
    values = [f.get(kw, 0.0) for f in state.fuzzy.values()]
    state.blend[kw] = max(values) if answer.relevant else min(values)
    state.resolved.add(kw)
    state.questions_asked += 1
    return state


def auto_answer(state: ConversationState, question: Question) -> Answer | None:
    """Let the history context answer when it knows the keyword confidently.

    Confidence is distance from the 0.5 midpoint; the auto_answer_level sets
    how much confidence is required (1 answers everything the history knows).
    """
    level = state.auto_answer_level
    history = state.contexts.get(HISTORY_CONTEXT_ID)
    if level <= 0.0 or history is None or question.keyword not in history.keyword_index:
        return None
    mu = state.fuzzy[HISTORY_CONTEXT_ID].get(question.keyword, 0.0)
    confidence = 2.0 * abs(mu - 0.5)
    if confidence < 1.0 - level:
        return None
    return Answer(relevant=mu >= state.config.auto_answer_threshold, answered_by="history")


def run_to_completion(state: ConversationState) -> ConversationState:
    """Resolve every remaining question via the history context or, failing
    that, by keeping the blended reading (a non-interactive default)."""
    while (q := next_question(state)) is not None:
        ans = auto_answer(state, q) or Answer(relevant=True, answered_by="user")
        apply_answer(state, q, ans)
    return state


def finalize_preview(state: ConversationState) -> FuzzyCategory:
    """The category the current blend would produce; does not require Done."""
    peak = max(state.blend.values(), default=0.0)
    if peak <= 0.0:
        return FuzzyCategory(membership={}, provenance={})
    floor = state.config.membership_floor
    membership: dict[str, float] = {}
    provenance: dict[str, tuple[str, ...]] = {}
    for kw in sorted(state.blend):
        mu = state.blend[kw] / peak
        if mu < floor:
            continue
        membership[kw] = mu
        provenance[kw] = tuple(sorted(cid for cid, f in state.fuzzy.items() if f.get(kw, 0.0) > 0.0))
    return FuzzyCategory(membership=membership, provenance=provenance)


def finalize(state: ConversationState) -> FuzzyCategory:
    """Rescale the blend to peak 1 and drop floor-level memberships."""
    if next_question(state) is not None:
        raise ValueError("conversation still has outstanding questions")
    return finalize_preview(state)


def recommend_records(
    category: FuzzyCategory, ctx: KnowledgeContext, top_n: int | None = None
) -> list[tuple[str, float]]:
    """Records ranked by membership-weighted share of category keywords.

    score(r) = sum_k mu(k) * a_kr / sum_k mu(k); zero-scoring records are
    omitted, ties break by record id.
    """
    if not category.membership:
        raise ValueError("empty category")
    denom = sum(category.membership.values())
    scores: dict[int, float] = {}
    for kw in sorted(category.membership):
        ki = ctx.keyword_index.get(kw)
        if ki is None:
            continue
        mu = category.membership[kw]
        for r in ctx.keyword_records[ki]:
            scores[r] = scores.get(r, 0.0) + mu
    ranked = sorted(
        ((ctx.records[r], s / denom) for r, s in scores.items()),
        key=lambda rs: (-rs[1], rs[0]),
    )
    return ranked if top_n is None else ranked[:top_n]


def adapt(
    ctx: KnowledgeContext,
    category: FuzzyCategory,
    lambda_plus: float = 0.1,
    lambda_minus: float = 0.02,
) -> KnowledgeContext:
    """Hebbian update of the working keyword proximity.

    Pairs inside the category move toward 1 by lambda_plus scaled with both
    memberships; pairs straddling the category boundary (where the outside
    keyword currently co-occurs with the inside one) decay by lambda_minus.
    The incidence-derived matrix is untouched and stays recoverable.
    """
    if not 0.0 < lambda_plus < 1.0 or not 0.0 < lambda_minus < 1.0:
        raise ValueError("adaptation rates must lie in (0,1)")
    W = ensure_working_ksp(ctx)
    members = {
        ctx.keyword_index[kw]: mu
        for kw, mu in category.membership.items()
        if kw in ctx.keyword_index
    }
    # decay: one endpoint in the category, the other currently associated with it
    for i in sorted(members):
        for j, v in sorted(W.row(i).items()):
            if j not in members:
                W.set(i, j, (1.0 - lambda_minus) * v)
    # reinforcement: every unordered pair inside the category
    ordered = sorted(members)
    for a_pos, i in enumerate(ordered):
        for j in ordered[a_pos + 1 :]:
            v = W.get(i, j)
            W.set(i, j, v + lambda_plus * members[i] * members[j] * (1.0 - v))
    return ctx


def propagate_keywords(
    category: FuzzyCategory, ctx: KnowledgeContext, lambda_plus: float = 0.1
) -> KnowledgeContext:
    """Create category keywords the context lacks.

    New keywords qualify no records; they enter only the working proximity,
    seeded at lambda_plus * mu(k) * mu(k_j) toward every co-member, and grow
    from there through later adapt() calls.
    """
    W = ensure_working_ksp(ctx)
    new_kws = sorted(kw for kw in category.membership if kw not in ctx.keyword_index)
    for kw in new_kws:
        ctx.add_keyword(kw)
        W.add_label(kw)
    for kw in new_kws:
        mu = category.membership[kw]
        for other in sorted(category.membership):
            if other == kw or other not in ctx.keyword_index:
                continue
            W.set(kw, other, lambda_plus * mu * category.membership[other])
    return ctx


def write_category(category: FuzzyCategory, dest: IO[str]) -> None:
    """Export as ``#cat 1``: keyword, membership, contributing context ids."""
    dest.write(CATEGORY_HEADER + "\n")
    for kw in sorted(category.membership):
        contexts = ",".join(category.provenance.get(kw, ()))
        dest.write(f"{kw}\t{category.membership[kw]!r}\t{contexts}\n")

"""Batch selection: robust per-anchor classifiers combined into a weighted ensemble.

One cycle works on the current seen/unseen split: pick the positive anchors
(top seen ligands above the PIC threshold, capped, help-limited), collect the
negative set (seen ligands below both the threshold count and the top-beta
fraction), train one robust classifier per anchor, standardize each
classifier's scores over the unseen pool, combine them with exponential
PIC weights, and propose the top-scoring batch.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .classifier import TrainingProblem, train
from .core import PolicyConfig


@dataclass
class PolicyContext:
    """Per-cycle view of a campaign handed to a policy.

    Embeddings are the raw pool matrix; `mu` is the pool mean used to center
    training vectors (scoring only needs an offset shift, so the matrix is
    never copied).  `rng` is the cycle's seeded generator; policies must draw
    randomness from it and nowhere else.
    """

    ids: list[str]
    X: np.ndarray                 # (n, d) raw embeddings
    mu: np.ndarray                # (d,) pool mean
    id_rank: np.ndarray           # lexicographic rank of each id
    seen_indices: np.ndarray      # dataset indices tested so far
    seen_pics: np.ndarray         # PICs aligned with seen_indices
    rest_indices: np.ndarray      # dataset indices not yet tested
    help_counts: np.ndarray       # per-ligand help counters (full pool length)
    rng: np.random.Generator
    kind: str = "binary"


@dataclass(frozen=True)
class Proposal:
    """A proposed batch plus per-ligand anchor attribution for help counting."""

    batch: list[int]                       # dataset indices
    helper_of: dict[int, int] = field(default_factory=dict)  # batch idx -> anchor idx


def rank_ids(ids: Sequence[str]) -> np.ndarray:
    """Lexicographic rank of each ligand id (used for all tie-breaking)."""
    order = sorted(range(len(ids)), key=lambda i: ids[i])
    id_rank = np.empty(len(ids), dtype=np.int64)
    id_rank[order] = np.arange(len(ids))
    return id_rank


def make_context(ids: Sequence[str], X: np.ndarray, seen_indices, seen_pics,
                 rest_indices, help_counts, rng, kind: str = "binary",
                 mu: Optional[np.ndarray] = None,
                 id_rank: Optional[np.ndarray] = None) -> PolicyContext:
    X = np.asarray(X, dtype=np.float64)
    ids = list(ids)
    if id_rank is None:
        id_rank = rank_ids(ids)
    return PolicyContext(
        ids=ids,
        X=X,
        mu=X.mean(axis=0) if mu is None else np.asarray(mu, dtype=np.float64),
        id_rank=id_rank,
        seen_indices=np.asarray(seen_indices, dtype=np.int64),
        seen_pics=np.asarray(seen_pics, dtype=np.float64),
        rest_indices=np.asarray(rest_indices, dtype=np.int64),
        help_counts=np.asarray(help_counts, dtype=np.int64),
        rng=rng,
        kind=kind,
    )


def random_batch(ctx: PolicyContext, b: int) -> list[int]:
    """b unseen ligands drawn without replacement from the cycle generator.

    Candidates are ordered by ligand id so the draw depends only on the seed,
    never on pool construction order.  Shared by every policy's first cycle.
    """
    cands = ctx.rest_indices[np.argsort(ctx.id_rank[ctx.rest_indices], kind="stable")]
    take = min(b, len(cands))
    pick = ctx.rng.choice(len(cands), size=take, replace=False)
    return [int(i) for i in cands[pick]]


def seen_order(ctx: PolicyContext) -> np.ndarray:
    """Positions into seen_* arrays sorted by PIC descending, id ascending."""
    return np.lexsort((ctx.id_rank[ctx.seen_indices], -ctx.seen_pics))


def select_positive_set(ctx: PolicyContext, config: PolicyConfig) -> list[int]:
    """Positions (into seen arrays) of the anchors, best PIC first.

    Anchors are the top seen ligands with PIC >= p_plus whose help counter is
    below the limit, capped at n_max.  Before any ligand reaches p_plus the
    single best eligible ligand is used, so early cycles are not random.
    Returns [] only when every seen ligand is help-limited.
    """
    if len(ctx.seen_indices) == 0:
        raise ValueError("positive-set selection requires a non-empty seen set")
    order = seen_order(ctx)
    if config.help_limit is None:
        eligible = order
    else:
        counts = ctx.help_counts[ctx.seen_indices[order]]
        eligible = order[counts < config.help_limit]
    if eligible.size == 0:
        return []
    above = eligible[ctx.seen_pics[eligible] >= config.p_plus]
    if above.size == 0:
        return [int(eligible[0])]
    return [int(i) for i in above[:config.n_max]]


def select_negative_set(ctx: PolicyContext, config: PolicyConfig,
                        positives: Sequence[int]) -> np.ndarray:
    """Positions (into seen arrays) of the negative ligands.

    In the PIC-sorted order, ranks strictly beyond max(ceil(beta*n), m) where
    m counts seen ligands at or above p_plus; positive-set members are always
    removed (relevant only under the below-threshold fallback anchor).
    """
    order = seen_order(ctx)
    n_seen = order.size
    m = int((ctx.seen_pics >= config.p_plus).sum())
    cut = max(math.ceil(config.beta * n_seen), m)
    negatives = order[cut:]
    if positives and negatives.size:
        pos = {int(p) for p in positives}
        mask = np.fromiter((int(i) not in pos for i in negatives), dtype=bool,
                           count=negatives.size)
        negatives = negatives[mask]
    return negatives


def standardize(scores: np.ndarray) -> np.ndarray:
    """Shift/scale to population mean 0 and variance 1; constant input -> zeros."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("cannot standardize an empty score list")
    mean = scores.mean()
    var = scores.var()
    if var < 1e-12:
        return np.zeros_like(scores)
    return (scores - mean) / math.sqrt(var)


def ensemble_weights(pics: np.ndarray, alpha: float) -> np.ndarray:
    """alpha**pic per anchor; rescaled by the top weight if it would overflow."""
    pics = np.asarray(pics, dtype=np.float64)
    if alpha == 1.0:
        return np.ones_like(pics)
    with np.errstate(over="ignore"):
        weights = np.power(alpha, pics)
    if not np.all(np.isfinite(weights)):
        # Positive rescaling preserves the ranking and keeps scores finite.
        weights = np.power(alpha, pics - pics.max())
    return weights


def ensemble_score(raw_scores: np.ndarray, pics: np.ndarray,
                   alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Combine per-classifier scores over the unseen pool.

    raw_scores has one row per classifier; each row is standardized over the
    pool, then summed with weight alpha**pic.  Returns (total, contributions)
    where contributions[i, j] is anchor i's weighted term for ligand j.
    """
    raw_scores = np.atleast_2d(np.asarray(raw_scores, dtype=np.float64))
    if raw_scores.shape[1] == 0:
        raise ValueError("no unseen ligands to score")
    weights = ensemble_weights(pics, alpha)
    standardized = np.vstack([standardize(row) for row in raw_scores])
    contributions = weights[:, None] * standardized
    return contributions.sum(axis=0), contributions


def top_batch(ctx: PolicyContext, scores: np.ndarray, b: int) -> list[int]:
    """Highest-scoring unseen ligands, score ties broken by id ascending."""
    order = np.lexsort((ctx.id_rank[ctx.rest_indices], -scores))
    return [int(i) for i in ctx.rest_indices[order[:min(b, order.size)]]]


class SpadePolicy:
    """The ensemble selection policy (one propose() call per cycle)."""

    name = "spade"

    def __init__(self, config: PolicyConfig):
        self.config = config

    def propose(self, ctx: PolicyContext) -> Proposal:
        cfg = self.config
        b = cfg.batch_size
        if len(ctx.seen_indices) == 0:
            return Proposal(batch=random_batch(ctx, b))

        positives = select_positive_set(ctx, cfg)
        if not positives:
            return Proposal(batch=random_batch(ctx, b))
        negatives = select_negative_set(ctx, cfg, positives)
        if negatives.size == 0:
            # Tiny campaign: the training objective needs at least one negative.
            return Proposal(batch=random_batch(ctx, b))

        Xc_neg = ctx.X[ctx.seen_indices[negatives]] - ctx.mu
        rest = ctx.rest_indices
        W = np.empty((ctx.X.shape[1], len(positives)))
        offsets = np.empty(len(positives))
        for col, pos in enumerate(positives):
            anchor_idx = int(ctx.seen_indices[pos])
            anchor = ctx.X[anchor_idx] - ctx.mu
            clf, _ = train(TrainingProblem(anchor, Xc_neg, cfg.sigma),
                           max_iter=cfg.solver_max_iter, tol=cfg.solver_tol)
            W[:, col] = clf.w
            # Centering only shifts the offset; score on raw embeddings.
            offsets[col] = clf.c - float(ctx.mu @ clf.w)
        raw = (ctx.X[rest] @ W + offsets).T

        pics = ctx.seen_pics[np.asarray(positives)]
        total, contributions = ensemble_score(raw, pics, cfg.alpha)
        batch = top_batch(ctx, total, b)

        pos_col = {int(r): row for row, r in enumerate(rest)}
        anchors = ctx.seen_indices[np.asarray(positives)]
        helper_of = {}
        for chosen in batch:
            col = pos_col[chosen]
            helper_of[chosen] = int(anchors[int(np.argmax(contributions[:, col]))])
        return Proposal(batch=batch, helper_of=helper_of)


def update_help_counters(help_counts: np.ndarray, proposal: Proposal) -> np.ndarray:
    """Credit each selected ligand to its strongest-contributing anchor."""
    out = help_counts.copy()
    for anchor in proposal.helper_of.values():
        out[anchor] += 1
    return out


class RandomPolicy:
    """Uniform selection without replacement; the control arm."""

    name = "random"

    def __init__(self, config: PolicyConfig):
        self.config = config

    def propose(self, ctx: PolicyContext) -> Proposal:
        return Proposal(batch=random_batch(ctx, self.config.batch_size))

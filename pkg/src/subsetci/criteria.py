"""Information-criterion scoring and exhaustive best-subset search.

Scores have the form ``penalty(size) + n * log(rss)`` where only penalty
differences matter for selection.  The pairwise penalty ratio
``omega(S1, S2) = exp{(penalty(|S1|) - penalty(|S2|)) / n}`` turns a score
comparison into a threshold on an RSS ratio, which is what the selection
geometry consumes.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import errors
from .linmodel import Dataset, IndexSet


class Criterion(enum.Enum):
    AIC = "aic"
    BIC = "bic"
    AICC = "aicc"

    @classmethod
    def parse(cls, text: str) -> "Criterion":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise errors.InputError(
                f"unknown criterion {text!r}; expected aic, bic or aicc"
            ) from None


@dataclass(frozen=True)
class CriterionSpec:
    kind: Criterion
    n: int

    def __post_init__(self):
        if self.n < 3:
            raise errors.InputError(f"criterion needs n >= 3, got n={self.n}")

    def penalty(self, size: int) -> float:
        """Size penalty of a model with ``size`` free columns."""
        n = self.n
        if self.kind is Criterion.AIC:
            return 2.0 * size
        if self.kind is Criterion.BIC:
            return math.log(n) * size
        # small-sample corrected AIC; equals 2k + 2k(k+1)/(n-k-1)
        if n - size - 1 <= 0:
            raise errors.AICcDegenerate(
                f"AICc undefined for size {size} at n={n}")
        return 2.0 * n * size / (n - size - 1)


@dataclass(frozen=True)
class ScoredModel:
    model: IndexSet
    score: float
    rss: float


@dataclass(frozen=True)
class CandidatePolicy:
    """Which submodels compete.

    All subsets of the free columns (forced columns always included), the
    empty free set excluded unless ``include_empty``, optionally capped at
    ``max_size`` free columns.
    """

    max_size: Optional[int] = None
    include_empty: bool = False


DEFAULT_POLICY = CandidatePolicy()


def criterion_score(
    S: IndexSet,
    rss: float,
    spec: CriterionSpec,
    free_size: Optional[int] = None,
) -> float:
    """Score of model ``S`` with residual sum of squares ``rss``.

    ``free_size`` overrides the size used in the penalty (needed when a
    forced column should not count); defaults to ``len(S)``.
    """
    if not rss > 0.0:
        raise errors.NonPositiveRSS(
            "rss must be positive for a finite score", model=S)
    k = len(S) if free_size is None else free_size
    return spec.penalty(k) + spec.n * math.log(rss)


def penalty_ratio(
    S_tilde: IndexSet,
    S: IndexSet,
    spec: CriterionSpec,
    free_sizes: Optional[Tuple[int, int]] = None,
) -> float:
    """Threshold on ``rss(S)/rss(S_tilde)`` above which ``S_tilde`` wins.

    ``score(S_tilde) < score(S)`` iff ``rss(S)/rss(S_tilde)`` exceeds this
    ratio.
    """
    if free_sizes is None:
        k1, k2 = len(S_tilde), len(S)
    else:
        k1, k2 = free_sizes
    return penalty_ratio_sizes(k1, k2, spec)


def penalty_ratio_sizes(size_tilde: int, size: int, spec: CriterionSpec) -> float:
    return math.exp((spec.penalty(size_tilde) - spec.penalty(size)) / spec.n)


def enumerate_candidates(data: Dataset, policy: CandidatePolicy) -> List[IndexSet]:
    """All candidate models in canonical order (free size, then lexicographic)."""
    forced = data.forced_indices
    free = data.free_indices
    cap = len(free) if policy.max_size is None else min(policy.max_size, len(free))
    start = 0 if policy.include_empty else 1
    out = []
    for k in range(start, cap + 1):
        for combo in itertools.combinations(free, k):
            out.append(IndexSet(tuple(sorted(forced + combo))))
    if not out:
        raise errors.InputError("candidate policy admits no models")
    return out


class _Group:
    """Candidates sharing a column count, with their stacked thin-Q factors."""

    __slots__ = ("width", "positions", "q")

    def __init__(self, width: int, positions: np.ndarray, q: np.ndarray):
        self.width = width
        self.positions = positions  # indices into the canonical model list
        self.q = q  # (m, n, width)


class CandidateSet:
    """Candidate models of one design plus batched per-model kernels.

    Built once per (design, policy) and cached on the dataset; every kernel
    here is a pure function of the design columns and its vector argument.
    """

    def __init__(self, data: Dataset, policy: CandidatePolicy):
        self.data = data
        self.policy = policy
        self.models = enumerate_candidates(data, policy)
        forced = set(data.forced_indices)
        self.free_sizes = np.array(
            [sum(1 for i in m.indices if i not in forced) for m in self.models],
            dtype=int,
        )
        # column-membership bitmasks, for fast subset/superset tests
        self.masks = np.array(
            [sum(1 << (i - 1) for i in m.indices) for m in self.models],
            dtype=np.int64,
        )
        by_width: dict[int, list[int]] = {}
        for pos, m in enumerate(self.models):
            by_width.setdefault(len(m), []).append(pos)
        self.groups: List[_Group] = []
        n = data.n
        for width in sorted(by_width):
            positions = np.array(by_width[width], dtype=int)
            q = np.empty((len(positions), n, width))
            for row, pos in enumerate(positions):
                q[row] = data.thin_q(self.models[pos])
            self.groups.append(_Group(width, positions, q))

    def __len__(self) -> int:
        return len(self.models)

    def index_of(self, S: IndexSet) -> int:
        try:
            return self.models.index(S)
        except ValueError:
            raise errors.InputError(
                f"model {S} is not a candidate under the current policy"
            ) from None

    def rss_all(self, y: np.ndarray) -> np.ndarray:
        """Residual sum of squares of every candidate, canonical order."""
        y = np.asarray(y, dtype=float).reshape(-1)
        out = np.empty(len(self.models))
        for g in self.groups:
            if g.width == 0:
                out[g.positions] = float(y @ y)
                continue
            qty = np.einsum("mnw,n->mw", g.q, y)
            resid = y[None, :] - np.einsum("mnw,mw->mn", g.q, qty)
            out[g.positions] = np.einsum("mn,mn->m", resid, resid)
        return out

    def scores(self, y: np.ndarray, spec: CriterionSpec) -> Tuple[np.ndarray, np.ndarray]:
        """(scores, rss) arrays over all candidates; raises on interpolation."""
        if spec.n != self.data.n:
            raise errors.InputError(
                f"criterion has n={spec.n} but data has n={self.data.n}")
        rss = self.rss_all(y)
        bad = np.flatnonzero(rss <= 0.0)
        if bad.size:
            raise errors.NonPositiveRSS(
                "a candidate interpolates the response exactly",
                model=self.models[bad[0]])
        penalties = np.array([spec.penalty(int(k)) for k in self.free_sizes])
        return penalties + spec.n * np.log(rss), rss

    def argmin_model(self, y: np.ndarray, spec: CriterionSpec) -> IndexSet:
        scores, _ = self.scores(y, spec)
        return self.models[int(np.argmin(scores))]

    def projections(self, v: np.ndarray) -> np.ndarray:
        """Residual-maker of every candidate applied to ``v``: an (M, n) array."""
        v = np.asarray(v, dtype=float).reshape(-1)
        out = np.empty((len(self.models), self.data.n))
        for g in self.groups:
            if g.width == 0:
                out[g.positions] = v[None, :]
                continue
            qtv = np.einsum("mnw,n->mw", g.q, v)
            out[g.positions] = v[None, :] - np.einsum("mnw,mw->mn", g.q, qtv)
        return out


def candidate_set(data: Dataset, policy: CandidatePolicy = DEFAULT_POLICY) -> CandidateSet:
    key = ("candidates", policy)
    hit = data._cache.get(key)
    if hit is None:
        hit = CandidateSet(data, policy)
        data._cache[key] = hit
    return hit


def best_subset(
    data: Dataset,
    spec: CriterionSpec,
    policy: CandidatePolicy = DEFAULT_POLICY,
) -> Tuple[IndexSet, List[ScoredModel]]:
    """Exhaustively score all candidates and return the winner plus the field.

    Ties break toward the smaller model, then the lexicographically smaller
    index list; the canonical enumeration order makes the first minimum the
    tie-break winner.
    """
    cs = candidate_set(data, policy)
    scores, rss = cs.scores(data.y, spec)
    best = int(np.argmin(scores))
    scored = [
        ScoredModel(model=m, score=float(s), rss=float(r))
        for m, s, r in zip(cs.models, scores, rss)
    ]
    return cs.models[best], scored

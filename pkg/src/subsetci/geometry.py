"""Selection-event geometry along a one-dimensional direction.

Fixing a direction ``eta``, the response splits as
``y = (eta'y) * eta_tilde + z`` with ``z`` independent of ``eta'y`` under
spherical normal noise.  Each pairwise criterion comparison
"selected model beats competitor S" is then a quadratic inequality in the
scalar ``t = eta'y``, so the event "the criterion picks this model" is a
finite union of open intervals in ``t``.  This module builds those unions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from . import errors
from .criteria import (
    CandidatePolicy,
    CriterionSpec,
    DEFAULT_POLICY,
    candidate_set,
    penalty_ratio_sizes,
)
from .intervals import EMPTY, FULL_LINE, IntervalUnion, interval_union
from .linmodel import Dataset, IndexSet, residual_project

# |leading coefficient| below LEAD_TOL times its natural scale is treated as
# zero; the scale is the Cauchy-Schwarz bound of the coefficient.
LEAD_TOL = 1e-10

# eta counts as lying in the selected model's column span when the residual
# projection leaves less than this fraction of its norm.
ETA_SPAN_TOL = 1e-8


@dataclass(frozen=True)
class EtaDecomposition:
    """Split of a response into its ``eta`` component and the rest."""

    eta: np.ndarray
    eta_tilde: np.ndarray
    eta_dot_y: float
    z: np.ndarray

    @property
    def eta_norm2(self) -> float:
        return float(self.eta @ self.eta)

    def reconstruct(self) -> np.ndarray:
        return self.eta_dot_y * self.eta_tilde + self.z


@dataclass(frozen=True)
class ComparisonQuadratic:
    """Coefficients of ``a2*t^2 + a1*t + a0 > 0`` for one pairwise comparison."""

    a2: float
    a1: float
    a0: float
    competitor: IndexSet


@dataclass(frozen=True)
class ComparisonRecord:
    competitor: IndexSet
    region: Optional[IntervalUnion]
    skipped: bool = False
    reason: Optional[str] = None


@dataclass(frozen=True)
class SelectionEvent:
    """The set of ``eta'y`` values under which ``selected`` wins."""

    selected: IndexSet
    region: IntervalUnion
    comparisons: Tuple[ComparisonRecord, ...]


def decompose(y: np.ndarray, eta: np.ndarray) -> EtaDecomposition:
    """Split ``y`` into ``(eta'y) * eta_tilde + z`` with ``eta'z = 0``."""
    y = np.asarray(y, dtype=float).reshape(-1)
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if y.shape != eta.shape:
        raise errors.DimensionMismatch(
            f"y has length {y.shape[0]}, eta has length {eta.shape[0]}")
    nrm2 = float(eta @ eta)
    if nrm2 == 0.0:
        raise errors.ZeroEta("eta must be nonzero")
    eta_tilde = eta / nrm2
    eta_dot_y = float(eta @ y)
    z = y - eta_dot_y * eta_tilde
    return EtaDecomposition(eta=eta, eta_tilde=eta_tilde,
                            eta_dot_y=eta_dot_y, z=z)


def _stable_roots(a2: float, a1: float, a0: float, disc: float) -> Tuple[float, float]:
    """Both roots of ``a2 t^2 + a1 t + a0`` for ``disc > 0``, cancellation-free."""
    sq = math.sqrt(disc)
    q = -0.5 * (a1 + math.copysign(sq, a1))
    r1 = q / a2
    r2 = a0 / q
    return (r1, r2) if r1 <= r2 else (r2, r1)


def feasible_from_quadratic(
    a2: float, a1: float, a0: float, scale2: float, scale1: float
) -> IntervalUnion:
    """Solution set of ``a2 t^2 + a1 t + a0 > 0`` as an interval union.

    ``scale2`` and ``scale1`` are the natural magnitudes of the leading and
    linear coefficients; values within ``LEAD_TOL`` of zero relative to them
    are treated as exact zeros.
    """
    if abs(a2) > LEAD_TOL * scale2:
        disc = a1 * a1 - 4.0 * a2 * a0
        if a2 > 0.0:
            if disc <= 0.0:
                return FULL_LINE
            r1, r2 = _stable_roots(a2, a1, a0, disc)
            return interval_union([(-math.inf, r1), (r2, math.inf)])
        if disc <= 0.0:
            return EMPTY
        r1, r2 = _stable_roots(a2, a1, a0, disc)
        return interval_union([(r1, r2)])
    if abs(a1) > LEAD_TOL * scale1:
        t0 = -a0 / a1
        if a1 > 0.0:
            return interval_union([(t0, math.inf)])
        return interval_union([(-math.inf, t0)])
    return FULL_LINE if a0 > 0.0 else EMPTY


def _pair_scales(decomp: EtaDecomposition, omega: float) -> Tuple[float, float]:
    et2 = float(decomp.eta_tilde @ decomp.eta_tilde)
    z2 = float(decomp.z @ decomp.z)
    big = max(1.0, omega)
    return et2 * big, 2.0 * math.sqrt(et2 * z2) * big


def comparison_quadratic(
    decomp: EtaDecomposition,
    data: Dataset,
    S_hat: IndexSet,
    S: IndexSet,
    spec: CriterionSpec,
) -> ComparisonQuadratic:
    """Quadratic in ``t`` whose positivity means ``S_hat`` beats ``S``."""
    if S == S_hat:
        raise errors.InputError("competitor must differ from the selected model")
    omega = penalty_ratio_sizes(data.free_size(S_hat), data.free_size(S), spec)
    p_eta_s = residual_project(data, S, decomp.eta_tilde)
    p_eta_hat = residual_project(data, S_hat, decomp.eta_tilde)
    p_z_s = residual_project(data, S, decomp.z)
    p_z_hat = residual_project(data, S_hat, decomp.z)
    a2 = float(p_eta_s @ p_eta_s) - omega * float(p_eta_hat @ p_eta_hat)
    a1 = 2.0 * (float(p_z_s @ p_eta_s) - omega * float(p_z_hat @ p_eta_hat))
    a0 = float(p_z_s @ p_z_s) - omega * float(p_z_hat @ p_z_hat)
    return ComparisonQuadratic(a2=a2, a1=a1, a0=a0, competitor=S)


def comparison_feasible_set(
    decomp: EtaDecomposition,
    data: Dataset,
    S_hat: IndexSet,
    S: IndexSet,
    spec: CriterionSpec,
) -> IntervalUnion:
    """Exact set of ``t`` for which the criterion prefers ``S_hat`` over ``S``.

    Substituting ``y(t) = t * eta_tilde + z`` into the score comparison
    yields a quadratic inequality; an empty result is legal and simply says
    the comparison can never favor ``S_hat`` at this ``z``.
    """
    quad = comparison_quadratic(decomp, data, S_hat, S, spec)
    omega = penalty_ratio_sizes(data.free_size(S_hat), data.free_size(S), spec)
    scale2, scale1 = _pair_scales(decomp, omega)
    return feasible_from_quadratic(quad.a2, quad.a1, quad.a0, scale2, scale1)


def _require_eta_in_span(decomp: EtaDecomposition, data: Dataset, S_hat: IndexSet):
    resid = residual_project(data, S_hat, decomp.eta)
    nrm = math.sqrt(decomp.eta_norm2)
    if float(np.linalg.norm(resid)) > ETA_SPAN_TOL * nrm:
        raise errors.EtaNotInSpan(
            "eta must lie in the column span of the selected model")


def simplified_comparison(
    decomp: EtaDecomposition,
    data: Dataset,
    S_hat: IndexSet,
    S: IndexSet,
    spec: CriterionSpec,
) -> IntervalUnion:
    """Feasible set using the closed form available when ``eta`` is in the
    selected model's column span.

    The leading coefficient reduces to ``|P_S eta_tilde|^2 >= 0``; competitors
    containing the selected model contribute a comparison that is constant in
    ``t`` (decided by ``z`` alone).
    """
    if S == S_hat:
        raise errors.InputError("competitor must differ from the selected model")
    _require_eta_in_span(decomp, data, S_hat)
    omega = penalty_ratio_sizes(data.free_size(S_hat), data.free_size(S), spec)
    p_z_s = residual_project(data, S, decomp.z)
    p_z_hat = residual_project(data, S_hat, decomp.z)
    if S.issuperset(S_hat):
        # eta in span of the competitor too: constant-in-t comparison
        a0 = float(p_z_s @ p_z_s) - omega * float(p_z_hat @ p_z_hat)
        return FULL_LINE if a0 > 0.0 else EMPTY
    p_eta_s = residual_project(data, S, decomp.eta_tilde)
    a2 = float(p_eta_s @ p_eta_s)
    a1 = 2.0 * float(p_z_s @ p_eta_s)
    a0 = float(p_z_s @ p_z_s) - omega * float(p_z_hat @ p_z_hat)
    scale2, scale1 = _pair_scales(decomp, omega)
    return feasible_from_quadratic(a2, a1, a0, scale2, scale1)


def selection_event(
    data: Dataset,
    decomp: EtaDecomposition,
    S_hat: IndexSet,
    spec: CriterionSpec,
    skip_supersets: bool = True,
    policy: CandidatePolicy = DEFAULT_POLICY,
    keep_comparisons: bool = True,
) -> SelectionEvent:
    """Intersect all pairwise comparisons into the event region for ``S_hat``.

    Requires that ``S_hat`` actually is the criterion argmin for the response
    encoded in ``decomp``.  With ``skip_supersets``, comparisons against
    strict supersets of the selected model are recorded but left out of the
    intersection: they are constant in ``t`` whenever ``eta`` lies in the
    selected span, so they cannot move the conditional distribution.

    ``keep_comparisons=False`` drops the per-comparison records (the region
    is unaffected); replication loops use it to avoid building thousands of
    record objects.
    """
    cs = candidate_set(data, policy)
    y = decomp.reconstruct()
    observed_best = cs.argmin_model(y, spec)
    if observed_best != S_hat:
        raise errors.NotSelectedModel(
            f"criterion selects {observed_best}, not {S_hat}, for this response")

    eta_in_span = True
    try:
        _require_eta_in_span(decomp, data, S_hat)
    except errors.EtaNotInSpan:
        eta_in_span = False
    if skip_supersets and not eta_in_span:
        raise errors.EtaNotInSpan(
            "skipping superset comparisons is only valid when eta lies in "
            "the selected model's column span")

    # batched projections of eta_tilde and z through every candidate
    r_eta = cs.projections(decomp.eta_tilde)
    r_z = cs.projections(decomp.z)
    c2 = np.einsum("mn,mn->m", r_eta, r_eta)
    c1 = np.einsum("mn,mn->m", r_z, r_eta)
    c0 = np.einsum("mn,mn->m", r_z, r_z)
    p_eta_hat = residual_project(data, S_hat, decomp.eta_tilde)
    p_z_hat = residual_project(data, S_hat, decomp.z)
    h2 = float(p_eta_hat @ p_eta_hat)
    h1 = float(p_z_hat @ p_eta_hat)
    h0 = float(p_z_hat @ p_z_hat)
    k_hat = data.free_size(S_hat)
    pen_hat = spec.penalty(k_hat)
    omegas = np.exp(
        (pen_hat - np.array([spec.penalty(int(k)) for k in cs.free_sizes]))
        / spec.n
    )

    a2 = c2 - omegas * h2
    a1 = 2.0 * (c1 - omegas * h1)
    a0 = c0 - omegas * h0
    et2 = float(decomp.eta_tilde @ decomp.eta_tilde)
    z2 = float(decomp.z @ decomp.z)
    big = np.maximum(1.0, omegas)
    scale2 = et2 * big
    scale1 = 2.0 * math.sqrt(et2 * z2) * big

    hat_mask = sum(1 << (i - 1) for i in S_hat.indices)
    superset = ((cs.masks & hat_mask) == hat_mask) & (cs.masks != hat_mask)

    records: List[ComparisonRecord] = []
    region = FULL_LINE
    for m, model in enumerate(cs.models):
        if model == S_hat:
            continue
        is_superset = bool(superset[m])
        if skip_supersets and is_superset:
            if keep_comparisons:
                records.append(ComparisonRecord(
                    competitor=model, region=None, skipped=True,
                    reason="superset of the selected model; constant in t"))
            continue
        if is_superset and eta_in_span:
            # exact simplification: the comparison does not involve t
            piece = FULL_LINE if float(a0[m]) > 0.0 else EMPTY
        else:
            piece = feasible_from_quadratic(
                float(a2[m]), float(a1[m]), float(a0[m]),
                float(scale2[m]), float(scale1[m]))
        if keep_comparisons:
            records.append(ComparisonRecord(competitor=model, region=piece))
        if not piece.is_full_line:
            region = region.intersect(piece)

    if not region.contains(decomp.eta_dot_y):
        raise errors.InvariantViolation(
            "observed eta'y fell outside its own selection event; "
            "endpoints may be numerically degenerate")
    return SelectionEvent(selected=S_hat, region=region,
                          comparisons=tuple(records))


def superset_lower_bound(
    decomp: EtaDecomposition,
    data: Dataset,
    S_hat: IndexSet,
    coefficient_index: int,
    spec: CriterionSpec,
    policy: CandidatePolicy = DEFAULT_POLICY,
) -> float:
    """Lower bound on ``(eta'y)^2`` implied by beating the sub-models that
    drop ``coefficient_index``.

    For a coefficient direction, each comparison against a candidate
    contained in the selected model but missing the coefficient reduces to
    ``(eta'y)^2 > |eta|^2 (omega(S) z'P_hat z - z'P_S z)``; the bound is the
    max over that family, floored at zero (vacuously zero when the family is
    empty).
    """
    if coefficient_index not in S_hat:
        raise errors.IndexNotInModel(
            f"column {coefficient_index} not in selected model {S_hat}")
    cs = candidate_set(data, policy)
    p_z_hat = residual_project(data, S_hat, decomp.z)
    h0 = float(p_z_hat @ p_z_hat)
    k_hat = data.free_size(S_hat)
    allowed = set(S_hat.indices) - {coefficient_index}
    best = 0.0
    found = False
    for model in cs.models:
        if model == S_hat or not set(model.indices) <= allowed:
            continue
        omega = penalty_ratio_sizes(k_hat, data.free_size(model), spec)
        p_z_s = residual_project(data, model, decomp.z)
        val = omega * h0 - float(p_z_s @ p_z_s)
        best = max(best, val)
        found = True
    if not found:
        return 0.0
    return decomp.eta_norm2 * best

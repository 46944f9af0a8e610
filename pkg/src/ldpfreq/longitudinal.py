"""Two-round memoization protocols for repeated collection.

A user randomizes the true value once with budget ``eps_inf`` and stores the
result (the memo). Every later report re-randomizes the memo, never the true
value, with parameters chosen so that a single report leaks only ``eps_1``.
The lifetime leakage is capped at ``eps_inf`` however many reports are sent.

Protocol names give the first/second round randomizers: L-GRR uses GRR twice;
the unary ones are L-SUE, L-OUE, L-OSUE (OUE then SUE) and L-SOUE (SUE then
OUE).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.optimize import bisect

from ldpfreq.errors import (
    DegenerateParameterError,
    EmptyInputError,
    EnumerationLimitError,
    InfeasibleBudgetError,
    InvalidParameterError,
    MemoizationError,
)
from ldpfreq.oracles import (
    FrequencyEstimate,
    OneRoundParams,
    grr_params,
    grr_perturb_many,
    oue_params,
    sue_params,
    ue_encode_many,
    ue_perturb,
)

L_GRR = "L-GRR"
L_SUE = "L-SUE"
L_OUE = "L-OUE"
L_OSUE = "L-OSUE"
L_SOUE = "L-SOUE"
L_UE_KINDS = (L_OSUE, L_SUE, L_SOUE, L_OUE)
L_KINDS = (L_GRR,) + L_UE_KINDS

# first-round randomizer and whether the second round is symmetric (p2 + q2 = 1)
_UE_LAYOUT = {
    L_SUE: ("SUE", True),
    L_OSUE: ("OUE", True),
    L_OUE: ("OUE", False),
    L_SOUE: ("SUE", False),
}

_Q2_LO = 1e-12
_Q2_HI = 0.5 - 1e-12
MAX_GRR_ENUM = 2**12


@dataclass(frozen=True)
class BudgetPair:
    eps_inf: float
    eps_1: float

    def __post_init__(self):
        check_budgets(self.eps_inf, self.eps_1)


def check_budgets(eps_inf: float, eps_1: float) -> None:
    if not (0 < eps_1 < eps_inf and math.isfinite(eps_inf)):
        raise InvalidParameterError(
            f"need 0 < eps_1 < eps_inf, got eps_inf={eps_inf!r}, eps_1={eps_1!r}"
        )


@dataclass(frozen=True)
class TwoRoundParams:
    """First-round ``(p1, q1)`` and second-round ``(p2, q2)`` probabilities.

    The second round may be the identity (``p2 = 1, q2 = 0``); solved
    parameters always lie strictly inside (0, 1).
    """

    p1: float
    q1: float
    p2: float
    q2: float
    kind: str
    c: int | None = None
    eps_inf: float | None = None
    eps_1: float | None = None

    def __post_init__(self):
        if self.kind not in L_KINDS:
            raise InvalidParameterError(f"unknown longitudinal kind {self.kind!r}")
        if not 0 < self.q1 < self.p1 < 1:
            raise InvalidParameterError(f"need 0 < q1 < p1 < 1, got {self.p1}, {self.q1}")
        if not 0 <= self.q2 < self.p2 <= 1:
            raise InvalidParameterError(f"need 0 <= q2 < p2 <= 1, got {self.p2}, {self.q2}")
        if self.kind == L_GRR and self.c is None:
            raise InvalidParameterError("L-GRR parameters need a domain size")

    @property
    def unary(self) -> bool:
        return self.kind != L_GRR

    def first_round(self) -> OneRoundParams:
        kind = "GRR" if self.kind == L_GRR else _UE_LAYOUT[self.kind][0]
        return OneRoundParams(self.p1, self.q1, self.eps_inf, kind, self.c)

    def chained(self) -> tuple[float, float]:
        """Single-report probabilities of reporting value i (or bit i = 1) given truth i / not i."""
        ps = self.p1 * self.p2 + (1 - self.p1) * self.q2
        qs = self.q1 * self.p2 + (1 - self.q1) * self.q2
        return ps, qs


def chain_epsilon_grr(p1: float, q1: float, p2: float, q2: float) -> float:
    """Single-report epsilon of L-GRR in its two-value form ``ln((p1p2 + q1q2) / (p1q2 + q1p2))``.

    Exact for binary domains; for ``c > 2`` see :func:`effective_single_report_epsilon`.
    """
    return math.log((p1 * p2 + q1 * q2) / (p1 * q2 + q1 * p2))


def chain_epsilon_ue(p1: float, q1: float, p2: float, q2: float) -> float:
    """Single-report epsilon of a two-round unary protocol (per-bit chain)."""
    ps = p1 * p2 - q2 * (p1 - 1)
    qs = p2 * q1 - q2 * (q1 - 1)
    return math.log(ps * (qs - 1) / (qs * (ps - 1)))


def lgrr_params(eps_inf: float, eps_1: float, c: int) -> TwoRoundParams:
    """L-GRR: GRR(eps_inf) memo, then a GRR second round tuned to ``eps_1``."""
    check_budgets(eps_inf, eps_1)
    first = grr_params(eps_inf, c)
    ei, e1, e_sum = math.exp(eps_inf), math.exp(eps_1), math.exp(eps_1 + eps_inf)
    p2 = (e_sum - 1) / (-c * e1 + (c - 1) * ei + e1 + e_sum - 1)
    q2 = (1 - p2) / (c - 1)
    if not 0 < p2 < 1:
        raise InfeasibleBudgetError(f"L-GRR p2={p2} outside (0, 1)")
    if not p2 > q2:
        raise InfeasibleBudgetError(f"L-GRR p2={p2} not above q2={q2}")
    return TwoRoundParams(first.p, first.q, p2, q2, L_GRR, int(c), eps_inf, eps_1)


def _solve_q2(p1: float, q1: float, eps_1: float, kind: str) -> float:
    def gap(q2):
        return chain_epsilon_ue(p1, q1, 0.5, q2) - eps_1

    if gap(_Q2_LO) <= 0:
        best = chain_epsilon_ue(p1, q1, 0.5, _Q2_LO)
        raise InfeasibleBudgetError(
            f"{kind}: eps_1={eps_1} exceeds the largest single-report epsilon {best:.6g} "
            "reachable with p2 = 1/2"
        )
    # chain epsilon falls monotonically from its maximum to 0 as q2 goes to 1/2
    return bisect(gap, _Q2_LO, _Q2_HI, xtol=1e-15, maxiter=200)


def lue_params(eps_inf: float, eps_1: float, kind: str) -> TwoRoundParams:
    """Parameters of one of the unary protocols L-SUE, L-OUE, L-OSUE, L-SOUE."""
    check_budgets(eps_inf, eps_1)
    if kind not in _UE_LAYOUT:
        raise InvalidParameterError(f"unknown unary longitudinal kind {kind!r}")
    first_kind, symmetric = _UE_LAYOUT[kind]
    first = oue_params(eps_inf) if first_kind == "OUE" else sue_params(eps_inf)
    p1, q1 = first.p, first.q
    if symmetric:
        if first_kind == "OUE":
            ei, e1, e_sum = math.exp(eps_inf), math.exp(eps_1), math.exp(eps_1 + eps_inf)
            p2 = (1 - e_sum) / (e1 - ei - e_sum + 1)
        else:
            # a symmetric first round keeps the chain symmetric, so the chain is SUE(eps_1)
            h = math.exp(eps_1 / 2)
            ps = h / (h + 1)
            p2 = (ps - 1 + p1) / (2 * p1 - 1)
        q2 = 1 - p2
        if not 0.5 < p2 < 1:
            raise InfeasibleBudgetError(f"{kind}: symmetric p2={p2} outside (1/2, 1)")
    else:
        p2 = 0.5
        q2 = _solve_q2(p1, q1, eps_1, kind)
    return TwoRoundParams(p1, q1, p2, q2, kind, None, eps_inf, eps_1)


def longitudinal_params(kind: str, eps_inf: float, eps_1: float, c: int | None = None) -> TwoRoundParams:
    if kind == L_GRR:
        return lgrr_params(eps_inf, eps_1, c)
    params = lue_params(eps_inf, eps_1, kind)
    if c is not None:
        params = TwoRoundParams(params.p1, params.q1, params.p2, params.q2,
                                kind, int(c), eps_inf, eps_1)
    return params


def longitudinal_estimate(counts, n: int, params: TwoRoundParams,
                          clip: bool = False) -> FrequencyEstimate:
    """Unbiased estimate from second-round counts.

    ``(N_i - n q1 (p2 - q2) - n q2) / (n (p1 - q1)(p2 - q2))``.
    """
    if n < 1:
        raise EmptyInputError("cannot estimate frequencies from zero reports")
    p1, q1, p2, q2 = params.p1, params.q1, params.p2, params.q2
    if p1 == q1 or p2 == q2:
        raise DegenerateParameterError("p1 == q1 or p2 == q2")
    counts = np.asarray(counts, dtype=float)
    freqs = (counts - n * q1 * (p2 - q2) - n * q2) / (n * (p1 - q1) * (p2 - q2))
    var = np.full(freqs.shape, longitudinal_variance_approx(params, n))
    est = FrequencyEstimate(freqs, int(n), var)
    return est.clipped() if clip else est


def longitudinal_variance(params: TwoRoundParams, n: int, f) -> float | np.ndarray:
    """``gamma (1 - gamma) / (n (p1 - q1)^2 (p2 - q2)^2)`` with ``gamma = qs + f (ps - qs)``.

    ``gamma`` is the chance that a report supports a value whose true
    frequency is ``f``. The coefficient ``2 p1 p2 - 2 p1 q2 + 2 q2 - 1`` seen
    in some write-ups agrees with ``ps - qs`` only when ``p1 + q1 = 1``.
    """
    p1, q1, p2, q2 = params.p1, params.q1, params.p2, params.q2
    f = np.asarray(f, dtype=float)
    ps, qs = params.chained()
    gamma = qs + f * (ps - qs)
    out = gamma * (1 - gamma) / (n * (p1 - q1) ** 2 * (p2 - q2) ** 2)
    return float(out) if out.ndim == 0 else out


def longitudinal_variance_approx(params: TwoRoundParams, n: int) -> float:
    return longitudinal_variance(params, n, 0.0)


def effective_single_report_epsilon(params: TwoRoundParams, c: int | None = None) -> float:
    """Max log-ratio of the exact two-round channel seen by one report.

    For GRR the composition of two symmetric channels ``a I + b J`` is again
    of that form, so the ``c x c`` product is evaluated in closed form.
    """
    if params.unary:
        ps, qs = params.chained()
        return math.log(ps * (1 - qs) / ((1 - ps) * qs))
    c = c if c is not None else params.c
    if c > MAX_GRR_ENUM:
        raise EnumerationLimitError(f"domain size {c} above {MAX_GRR_ENUM}")
    a1, b1 = params.p1 - params.q1, params.q1
    a2, b2 = params.p2 - params.q2, params.q2
    diag_extra = a1 * a2
    off = a1 * b2 + b1 * a2 + c * b1 * b2
    return math.log((diag_extra + off) / off)


def _log_cosh(x: float) -> float:
    """``ln cosh x`` for ``x >= 0``, non-decreasing in ``x`` after rounding."""
    if x < 20.0:
        return math.log1p(2.0 * math.sinh(0.5 * x) ** 2)
    # the dropped log1p(e^-2x) term is below half an ulp here
    return x - _LN2


_LN2 = math.log(2.0)


def privacy_over_time(eps_inf: float, eps_1: float, t: int) -> float:
    """Budget spent after ``t`` reports: ``ln((e^(eps_inf + t eps_1) + 1) / (e^eps_inf + e^(t eps_1)))``.

    Written so that every step is monotone in ``t`` under rounding: the ratio
    equals ``cosh((a+b)/2) / cosh((a-b)/2)`` with ``a = eps_inf, b = t eps_1``,
    used while ``b <= a``; past that point it is ``a`` minus a term that only
    shrinks as ``b`` grows.
    """
    if t < 0 or int(t) != t:
        raise InvalidParameterError(f"t must be a non-negative integer, got {t!r}")
    a, b = eps_inf, t * eps_1
    if b <= a:
        return _log_cosh(0.5 * (a + b)) - _log_cosh(0.5 * (a - b))
    gap = b - a
    if gap > 700.0:
        return a
    return a - math.log1p(-math.expm1(-2.0 * a) / (math.exp(gap) + math.exp(-2.0 * a)))


# -- client side ------------------------------------------------------------


@dataclass
class MemoState:
    """The permanent first-round report of one user for one attribute."""

    memoized_report: Any
    attribute_index: int = 0


def memoize(v: int, params: TwoRoundParams, rng: np.random.Generator,
            attribute_index: int = 0) -> MemoState:
    memo = memoize_many(np.array([v]), params, rng)[0]
    return MemoState(memo if params.unary else int(memo), attribute_index)


def memoize_many(values: np.ndarray, params: TwoRoundParams,
                 rng: np.random.Generator) -> np.ndarray:
    """First round for many users: an int array (L-GRR) or a bool matrix (unary)."""
    if params.unary:
        if params.c is None:
            raise InvalidParameterError("unary memoization needs the domain size on the params")
        return ue_perturb(ue_encode_many(values, params.c), params.p1, params.q1, rng)
    return grr_perturb_many(values, params.first_round(), rng)


def report(memo: MemoState, params: TwoRoundParams, rng: np.random.Generator):
    """One second-round report built from the memo alone."""
    out = report_many(np.asarray([memo.memoized_report]), params, rng)[0]
    return out if params.unary else int(out)


def report_many(memos: np.ndarray, params: TwoRoundParams, rng: np.random.Generator) -> np.ndarray:
    if params.unary:
        return ue_perturb(memos, params.p2, params.q2, rng)
    c = params.c
    memos = np.asarray(memos, dtype=np.int64)
    keep = rng.random(memos.shape) < params.p2
    offset = rng.integers(1, c, size=memos.shape)
    return np.where(keep, memos, (memos + offset) % c)


class MemoClient:
    """Holds the memos of simulated users, keyed by ``(user, attribute)``.

    A memo is bound to the true value it was drawn from. Asking to memoize a
    key that already has a memo raises; :meth:`report` reuses the memo.
    """

    def __init__(self, params_by_attribute, rng: np.random.Generator):
        self._params = params_by_attribute
        self._rng = rng
        self._memos: dict[tuple[Any, int], tuple[int, MemoState]] = {}

    def memoize(self, user, attribute: int, value: int) -> MemoState:
        key = (user, attribute)
        if key in self._memos:
            raise MemoizationError(f"user {user!r} already memoized attribute {attribute}")
        state = memoize(value, self._params[attribute], self._rng, attribute)
        self._memos[key] = (value, state)
        return state

    def report(self, user, attribute: int, value: int):
        key = (user, attribute)
        if key not in self._memos:
            self.memoize(user, attribute, value)
        stored_value, state = self._memos[key]
        if stored_value != value:
            raise MemoizationError(
                f"user {user!r} attribute {attribute}: value changed from {stored_value} to {value}"
            )
        return report(state, self._params[attribute], self._rng)

    def __len__(self):
        return len(self._memos)


# -- ALLOMFREE ---------------------------------------------------------------


def allomfree_params(c: int, eps_inf: float, eps_1: float) -> TwoRoundParams:
    """L-GRR if its approximate variance is no larger than L-OSUE's, else L-OSUE."""
    grr = lgrr_params(eps_inf, eps_1, c)
    osue = longitudinal_params(L_OSUE, eps_inf, eps_1, c)
    # n cancels in the comparison
    if longitudinal_variance_approx(grr, 1) <= longitudinal_variance_approx(osue, 1):
        return grr
    return osue


def allomfree_client(v, domains, eps_inf: float, eps_1: float, tau: int,
                     rng: np.random.Generator) -> list[tuple[int, Any]]:
    """User side of ALLOMFREE: one sampled attribute, one memo, ``tau`` reports."""
    d = len(v)
    if d < 1 or len(domains) != d:
        raise InvalidParameterError("tuple and domain list must be non-empty and equally long")
    if tau < 1:
        raise InvalidParameterError("tau must be at least 1")
    j = int(rng.integers(d))
    params = allomfree_params(domains[j], eps_inf, eps_1)
    state = memoize(v[j], params, rng, attribute_index=j)
    return [(state.attribute_index, report(state, params, rng)) for _ in range(tau)]

"""One-shot frequency oracles: GRR, SUE, OUE and the adaptive GRR/OUE choice.

Each protocol is described by a pair of probabilities ``(p, q)``. For GRR,
``p`` is the chance of reporting the true value and ``q`` the chance of
reporting one specific other value. For unary encoding (UE), ``p`` and ``q``
are the chances that a bit is reported as 1 when the encoded bit is 1 or 0.
The same estimator ``(N_i - n q) / (n (p - q))`` serves all three.

Every randomizer takes an explicit ``numpy.random.Generator`` so that
experiments are reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ldpfreq.errors import (
    DegenerateParameterError,
    EmptyInputError,
    InvalidInputError,
    InvalidParameterError,
)

GRR = "GRR"
SUE = "SUE"
OUE = "OUE"
UNARY_KINDS = (SUE, OUE)

MAX_UNARY_SIZE = 2**20


def _check_epsilon(epsilon: float) -> None:
    if not (epsilon > 0 and math.isfinite(epsilon)):
        raise InvalidParameterError(f"epsilon must be positive and finite, got {epsilon!r}")


def _check_domain_size(c: int) -> None:
    if int(c) != c or c < 2:
        raise InvalidParameterError(f"domain size must be an integer >= 2, got {c!r}")


@dataclass(frozen=True)
class AttributeDomain:
    """A categorical attribute whose values are indexed ``0 .. size - 1``."""

    size: int

    def __post_init__(self):
        _check_domain_size(self.size)

    def __contains__(self, v) -> bool:
        return 0 <= v < self.size


@dataclass(frozen=True)
class OneRoundParams:
    """Perturbation probabilities of a one-shot oracle and the epsilon they realize.

    ``c`` is the domain size. GRR needs it for perturbation; UE kinds carry it
    only so that encoders and estimators know the bit-vector length.
    """

    p: float
    q: float
    epsilon: float
    kind: str
    c: int | None = None

    def __post_init__(self):
        if self.kind not in (GRR, SUE, OUE):
            raise InvalidParameterError(f"unknown protocol kind {self.kind!r}")
        # p may round to exactly 1 in floating point at very large epsilon
        if not 0 < self.q < self.p <= 1:
            raise InvalidParameterError(
                f"need 0 < q < p <= 1, got p={self.p!r}, q={self.q!r}"
            )
        if self.kind == GRR and self.c is None:
            raise InvalidParameterError("GRR parameters need a domain size")

    @property
    def unary(self) -> bool:
        return self.kind in UNARY_KINDS


@dataclass(frozen=True)
class FrequencyEstimate:
    """Per-value frequency estimates with the estimator's approximate variance.

    ``freqs`` are raw unbiased estimates and may be negative or exceed 1.
    """

    freqs: np.ndarray
    n: int
    analytic_var: np.ndarray = field(repr=False)

    def clipped(self) -> "FrequencyEstimate":
        """Clip to [0, 1] and renormalize to sum 1 (uniform if everything clips to 0)."""
        f = np.clip(self.freqs, 0.0, 1.0)
        total = f.sum()
        if total > 0:
            f = f / total
        else:
            f = np.full_like(f, 1.0 / f.size)
        return FrequencyEstimate(f, self.n, self.analytic_var)


def grr_params(epsilon: float, c: int) -> OneRoundParams:
    """GRR probabilities ``p = e^eps / (e^eps + c - 1)`` and ``q = 1 / (e^eps + c - 1)``."""
    _check_epsilon(epsilon)
    _check_domain_size(c)
    e = math.exp(epsilon)
    return OneRoundParams(e / (e + c - 1), 1.0 / (e + c - 1), epsilon, GRR, int(c))


def sue_params(epsilon: float, c: int | None = None) -> OneRoundParams:
    """Symmetric unary encoding (basic one-time RAPPOR): ``p + q = 1``."""
    _check_epsilon(epsilon)
    h = math.exp(epsilon / 2)
    return OneRoundParams(h / (h + 1), 1.0 / (h + 1), epsilon, SUE, c)


def oue_params(epsilon: float, c: int | None = None) -> OneRoundParams:
    """Optimized unary encoding: ``p = 1/2``, ``q = 1 / (e^eps + 1)``."""
    _check_epsilon(epsilon)
    return OneRoundParams(0.5, 1.0 / (math.exp(epsilon) + 1), epsilon, OUE, c)


def params_for(kind: str, epsilon: float, c: int) -> OneRoundParams:
    """Dispatch to the parameter function of ``kind`` (GRR, SUE or OUE)."""
    if kind == GRR:
        return grr_params(epsilon, c)
    if kind == SUE:
        return sue_params(epsilon, c)
    if kind == OUE:
        return oue_params(epsilon, c)
    raise InvalidParameterError(f"unknown protocol kind {kind!r}")


def ue_epsilon(p: float, q: float) -> float:
    """Privacy level of a unary-encoding channel: ``ln(p (1 - q) / ((1 - p) q))``."""
    if not (0 < q < p < 1):
        raise InvalidParameterError(f"need 0 < q < p < 1 for positive epsilon, got p={p}, q={q}")
    return math.log(p * (1 - q) / ((1 - p) * q))


def grr_perturb(v: int, params: OneRoundParams, rng: np.random.Generator) -> int:
    """Report ``v`` with probability p, otherwise a uniformly chosen other value."""
    c = params.c
    if not 0 <= v < c:
        raise InvalidInputError(f"value {v} outside domain of size {c}")
    return int(grr_perturb_many(np.array([v]), params, rng)[0])


def grr_perturb_many(values: np.ndarray, params: OneRoundParams,
                     rng: np.random.Generator) -> np.ndarray:
    """Vectorized :func:`grr_perturb` over an integer array of user values."""
    c = params.c
    values = np.asarray(values, dtype=np.int64)
    if values.size and (values.min() < 0 or values.max() >= c):
        raise InvalidInputError(f"values outside domain of size {c}")
    keep = rng.random(values.shape) < params.p
    # a uniform offset in 1..c-1 lands on each other value with probability q / (1 - p)
    offset = rng.integers(1, c, size=values.shape)
    return np.where(keep, values, (values + offset) % c)


def ue_encode(v: int, c: int) -> np.ndarray:
    """One-hot bit vector of length ``c`` with bit ``v`` set."""
    _check_domain_size(c)
    if c > MAX_UNARY_SIZE:
        raise InvalidParameterError(f"unary domain larger than {MAX_UNARY_SIZE}")
    if not 0 <= v < c:
        raise InvalidInputError(f"value {v} outside domain of size {c}")
    bits = np.zeros(c, dtype=bool)
    bits[v] = True
    return bits


def ue_encode_many(values: np.ndarray, c: int) -> np.ndarray:
    """Stack of one-hot rows, shape ``(len(values), c)``."""
    values = np.asarray(values, dtype=np.int64)
    if values.size and (values.min() < 0 or values.max() >= c):
        raise InvalidInputError(f"values outside domain of size {c}")
    bits = np.zeros((values.size, c), dtype=bool)
    bits[np.arange(values.size), values] = True
    return bits


def _check_flip_probs(p: float, q: float) -> None:
    if not (0 <= p <= 1 and 0 <= q <= 1):
        raise InvalidParameterError(f"bit probabilities must lie in [0, 1], got p={p}, q={q}")


def ue_perturb(bits: np.ndarray, p: float, q: float, rng: np.random.Generator) -> np.ndarray:
    """Flip bits independently: a 1 stays 1 with probability p, a 0 becomes 1 with probability q.

    Works on a single vector or on a stack of vectors (one row per user).
    """
    _check_flip_probs(p, q)
    bits = np.asarray(bits, dtype=bool)
    u = rng.random(bits.shape)
    return np.where(bits, u < p, u < q)


def estimate_freq(counts, n: int, params: OneRoundParams, clip: bool = False) -> FrequencyEstimate:
    """Unbiased frequency estimate ``(N_i - n q) / (n (p - q))`` for every value."""
    if n < 1:
        raise EmptyInputError("cannot estimate frequencies from zero reports")
    p, q = params.p, params.q
    if p == q:
        raise DegenerateParameterError("p == q")
    counts = np.asarray(counts, dtype=float)
    freqs = (counts - n * q) / (n * (p - q))
    var = np.full(freqs.shape, variance_approx(params, n))
    est = FrequencyEstimate(freqs, int(n), var)
    return est.clipped() if clip else est


def variance_exact(params: OneRoundParams, n: int, f) -> float | np.ndarray:
    """Variance of :func:`estimate_freq` when the true frequency is ``f``."""
    p, q = params.p, params.q
    f = np.asarray(f, dtype=float)
    out = q * (1 - q) / (n * (p - q) ** 2) + f * (1 - p - q) / (n * (p - q))
    return float(out) if out.ndim == 0 else out


def variance_approx(params: OneRoundParams, n: int) -> float:
    """Variance at ``f = 0``; the usual stand-in when the truth is unknown."""
    p, q = params.p, params.q
    return q * (1 - q) / (n * (p - q) ** 2)


def var_grr(epsilon: float, c: int, n: int) -> float:
    e = math.exp(epsilon)
    return (e + c - 2) / (n * (e - 1) ** 2)


def var_sue(epsilon: float, n: int) -> float:
    h = math.exp(epsilon / 2)
    return h / (n * (h - 1) ** 2)


def var_oue(epsilon: float, n: int) -> float:
    e = math.exp(epsilon)
    return 4 * e / (n * (e - 1) ** 2)


def adp_choose(epsilon: float, c: int) -> str:
    """GRR when ``c < 3 e^eps + 2``, else OUE; a tie goes to OUE."""
    _check_epsilon(epsilon)
    _check_domain_size(c)
    return GRR if c < 3 * math.exp(epsilon) + 2 else OUE

"""Collecting several categorical attributes per user.

Three ways to spend one budget ``epsilon`` on a ``d``-attribute tuple:

* Spl: perturb every attribute with ``epsilon / d``.
* Smp: sample one attribute, perturb it with the full ``epsilon`` and tell the
  server which one it was.
* RS+FD: sample one attribute, perturb it with the amplified budget
  ``ln(d (e^eps - 1) + 1)`` and send uniformly generated fake reports for the
  other ``d - 1`` attributes, so the sampled position stays hidden.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from ldpfreq.errors import (
    DegenerateParameterError,
    EmptyInputError,
    InvalidInputError,
    InvalidParameterError,
)
from ldpfreq.oracles import (
    GRR,
    OUE,
    SUE,
    FrequencyEstimate,
    adp_choose,
    grr_params,
    grr_perturb_many,
    oue_params,
    params_for,
    ue_encode_many,
    ue_perturb,
)

ADP = "ADP"
RSFD_GRR = "GRR"
RSFD_OUE_Z = "OUE-z"
RSFD_OUE_R = "OUE-r"
RSFD_ADP = "ADP"
RSFD_VARIANTS = (RSFD_GRR, RSFD_OUE_Z, RSFD_OUE_R, RSFD_ADP)

SLOT_GRR = "grr"
SLOT_UE = "ue"


@dataclass(frozen=True)
class MultidimConfig:
    """Domain sizes of the ``d`` attributes."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sizes", tuple(int(c) for c in self.sizes))
        if len(self.sizes) < 1:
            raise InvalidParameterError("need at least one attribute")
        if any(c < 2 for c in self.sizes):
            raise InvalidParameterError(f"every domain size must be >= 2, got {self.sizes}")

    @property
    def d(self) -> int:
        return len(self.sizes)

    def check_tuple(self, v) -> None:
        if len(v) != self.d:
            raise InvalidInputError(f"tuple of length {len(v)} for {self.d} attributes")
        for j, (x, c) in enumerate(zip(v, self.sizes)):
            if not 0 <= x < c:
                raise InvalidInputError(f"attribute {j}: value {x} outside domain of size {c}")


@dataclass(frozen=True)
class SampledReport:
    """A Smp report: the disclosed attribute index and its perturbed value."""

    attribute_index: int
    payload: Any
    slot_kind: str = SLOT_GRR


@dataclass(frozen=True)
class TupleReport:
    """One report per attribute; ``slot_kinds`` tells the server how to decode each."""

    per_attribute: tuple
    slot_kinds: tuple[str, ...]


def _as_config(config) -> MultidimConfig:
    return config if isinstance(config, MultidimConfig) else MultidimConfig(tuple(config))


def slot_kind(protocol: str) -> str:
    return SLOT_GRR if protocol == GRR else SLOT_UE


# -- amplification -----------------------------------------------------------


def amplify(epsilon: float, d: int) -> float:
    """Budget usable on a slot sampled with rate ``1/d``: ``ln(d (e^eps - 1) + 1)``."""
    if not epsilon > 0:
        raise InvalidParameterError(f"epsilon must be positive, got {epsilon!r}")
    if d < 1:
        raise InvalidParameterError(f"d must be >= 1, got {d!r}")
    return math.log(d * math.expm1(epsilon) + 1)


def deamplify(eps_prime: float, d: int) -> float:
    """Inverse of :func:`amplify`."""
    return math.log1p(math.expm1(eps_prime) / d)


# -- Spl / Smp ---------------------------------------------------------------


def resolve_protocol(protocol: str, epsilon: float, c: int) -> str:
    """Turn ``ADP`` into GRR or OUE for a domain of size ``c``."""
    if protocol == ADP:
        return adp_choose(epsilon, c)
    if protocol not in (GRR, SUE, OUE):
        raise InvalidParameterError(f"unknown protocol {protocol!r}")
    return protocol


def _perturb_one(value: int, protocol: str, epsilon: float, c: int, rng: np.random.Generator):
    params = params_for(protocol, epsilon, c)
    if protocol == GRR:
        return int(grr_perturb_many(np.array([value]), params, rng)[0])
    return ue_perturb(ue_encode_many(np.array([value]), c), params.p, params.q, rng)[0]


def spl_client(v, config, epsilon: float, protocol: str, rng: np.random.Generator) -> TupleReport:
    """Perturb every attribute with ``epsilon / d``."""
    config = _as_config(config)
    config.check_tuple(v)
    eps = epsilon / config.d
    slots, kinds = [], []
    for x, c in zip(v, config.sizes):
        proto = resolve_protocol(protocol, eps, c)
        slots.append(_perturb_one(x, proto, eps, c, rng))
        kinds.append(slot_kind(proto))
    return TupleReport(tuple(slots), tuple(kinds))


def smp_client(v, config, epsilon: float, protocol: str, rng: np.random.Generator) -> SampledReport:
    """Sample one attribute uniformly and perturb it with the whole budget."""
    config = _as_config(config)
    config.check_tuple(v)
    j = int(rng.integers(config.d))
    c = config.sizes[j]
    proto = resolve_protocol(protocol, epsilon, c)
    return SampledReport(j, _perturb_one(v[j], proto, epsilon, c, rng), slot_kind(proto))


def spl_variance(epsilon: float, d: int, c: int, n: int, protocol: str = GRR) -> float:
    """Approximate per-value variance of Spl."""
    return smp_variance(epsilon, d, c, n, protocol, r=d)


def smp_variance(epsilon: float, d: int, c: int, n: int, protocol: str = GRR, r: int = 1) -> float:
    """Approximate variance when each user reports ``r`` of ``d`` attributes with ``epsilon / r`` each.

    Each attribute is then seen by ``n r / d`` users. ``r = d`` is Spl.
    """
    eps = epsilon / r
    m = n * r / d
    if protocol == GRR:
        e = math.exp(eps)
        return (e + c - 2) / (m * (e - 1) ** 2)
    if protocol == SUE:
        h = math.exp(eps / 2)
        return h / (m * (h - 1) ** 2)
    if protocol == OUE:
        e = math.exp(eps)
        return 4 * e / (m * (e - 1) ** 2)
    raise InvalidParameterError(f"unknown protocol {protocol!r}")


def smp_optimal_r(epsilon: float, d: int, c: int, protocol: str = GRR) -> int:
    """Number of sampled attributes in ``1..d`` minimizing :func:`smp_variance`."""
    variances = [smp_variance(epsilon, d, c, 1, protocol, r) for r in range(1, d + 1)]
    return int(np.argmin(variances)) + 1


# -- RS+FD -------------------------------------------------------------------


def rsfd_one_round(variant: str, eps_prime: float, c: int):
    if variant == RSFD_GRR:
        return grr_params(eps_prime, c)
    if variant in (RSFD_OUE_Z, RSFD_OUE_R):
        return oue_params(eps_prime, c)
    raise InvalidParameterError(f"unknown RS+FD variant {variant!r}")


def rsfd_gamma(d: int, c: int, p: float, q: float, variant: str, f) -> np.ndarray | float:
    """Probability that one slot reports value ``i`` (or sets bit ``i``) when ``f(i) = f``."""
    f = np.asarray(f, dtype=float)
    if variant == RSFD_GRR:
        g = (q + f * (p - q) + (d - 1) / c) / d
    elif variant == RSFD_OUE_Z:
        g = (d * q + f * (p - q)) / d
    elif variant == RSFD_OUE_R:
        g = (q + f * (p - q) + (d - 1) / c * (p + (c - 1) * q)) / d
    else:
        raise InvalidParameterError(f"unknown RS+FD variant {variant!r}")
    return float(g) if g.ndim == 0 else g


def rsfd_adp_choose(d: int, c: int, eps_prime: float, n: int = 1) -> str:
    """GRR when its f = 0 variance is no larger than OUE-z's, else OUE-z."""
    g = grr_params(eps_prime, c)
    o = oue_params(eps_prime, c)
    gamma_grr = (g.q + (d - 1) / c) / d
    gamma_oue = o.q
    var_grr = d**2 * gamma_grr * (1 - gamma_grr) / (n * (g.p - g.q) ** 2)
    var_oue = d**2 * gamma_oue * (1 - gamma_oue) / (n * (o.p - o.q) ** 2)
    return RSFD_GRR if var_grr <= var_oue else RSFD_OUE_Z


def rsfd_slot_variants(config, epsilon: float, variant: str) -> tuple[str, ...]:
    """Per-attribute variant, resolving ADP attribute by attribute."""
    config = _as_config(config)
    if variant not in RSFD_VARIANTS:
        raise InvalidParameterError(f"unknown RS+FD variant {variant!r}")
    if variant != RSFD_ADP:
        return (variant,) * config.d
    eps_prime = amplify(epsilon, config.d)
    return tuple(rsfd_adp_choose(config.d, c, eps_prime) for c in config.sizes)


def rsfd_perturb_many(data: np.ndarray, config, epsilon: float, variant: str,
                      rng: np.random.Generator) -> list[np.ndarray]:
    """RS+FD for a batch of users.

    Returns one array per attribute: integer values for GRR slots, boolean
    matrices of shape ``(n, c_j)`` for unary slots.
    """
    config = _as_config(config)
    data = np.asarray(data, dtype=np.int64)
    n, d = data.shape
    if d != config.d:
        raise InvalidInputError(f"data has {d} columns for {config.d} attributes")
    eps_prime = amplify(epsilon, d)
    variants = rsfd_slot_variants(config, epsilon, variant)
    sampled = rng.integers(d, size=n)
    out = []
    for j, (c, var) in enumerate(zip(config.sizes, variants)):
        params = rsfd_one_round(var, eps_prime, c)
        mask = sampled == j
        if var == RSFD_GRR:
            slot = rng.integers(c, size=n)
            slot[mask] = grr_perturb_many(data[mask, j], params, rng)
        else:
            if var == RSFD_OUE_Z:
                bits = np.zeros((n, c), dtype=bool)
                bits[mask] = ue_encode_many(data[mask, j], c)
            else:
                values = rng.integers(c, size=n)
                values[mask] = data[mask, j]
                bits = ue_encode_many(values, c)
            slot = ue_perturb(bits, params.p, params.q, rng)
        out.append(slot)
    return out


def _rsfd_client(v, config, epsilon, variant, rng) -> TupleReport:
    config = _as_config(config)
    config.check_tuple(v)
    slots = rsfd_perturb_many(np.asarray([v]), config, epsilon, variant, rng)
    variants = rsfd_slot_variants(config, epsilon, variant)
    kinds = tuple(SLOT_GRR if var == RSFD_GRR else SLOT_UE for var in variants)
    values = tuple(int(s[0]) if k == SLOT_GRR else s[0] for s, k in zip(slots, kinds))
    return TupleReport(values, kinds)


def rsfd_grr_client(v, config, epsilon: float, rng: np.random.Generator) -> TupleReport:
    """Sampled slot through GRR at the amplified budget, uniform fake values elsewhere."""
    return _rsfd_client(v, config, epsilon, RSFD_GRR, rng)


def rsfd_ouez_client(v, config, epsilon: float, rng: np.random.Generator) -> TupleReport:
    """Sampled slot one-hot then OUE; other slots are OUE-perturbed zero vectors."""
    return _rsfd_client(v, config, epsilon, RSFD_OUE_Z, rng)


def rsfd_ouer_client(v, config, epsilon: float, rng: np.random.Generator) -> TupleReport:
    """Like OUE-z but fakes are OUE-perturbed one-hot encodings of uniform values."""
    return _rsfd_client(v, config, epsilon, RSFD_OUE_R, rng)


def rsfd_adp_client(v, config, epsilon: float, rng: np.random.Generator) -> TupleReport:
    """Each slot uses GRR or OUE-z, whichever has the smaller approximate variance."""
    return _rsfd_client(v, config, epsilon, RSFD_ADP, rng)


def rsfd_estimate(counts, n: int, d: int, c: int, epsilon: float, variant: str,
                  clip: bool = False) -> FrequencyEstimate:
    """Estimate one attribute's frequencies from RS+FD counts over all ``n`` users.

    ``epsilon`` is the overall budget; the amplified one is derived here.
    """
    if n < 1:
        raise EmptyInputError("cannot estimate frequencies from zero reports")
    eps_prime = amplify(epsilon, d)
    params = rsfd_one_round(variant, eps_prime, c)
    p, q = params.p, params.q
    if p == q:
        raise DegenerateParameterError("p == q")
    counts = np.asarray(counts, dtype=float)
    if variant == RSFD_GRR:
        freqs = (counts * d * c - n * (d - 1 + q * c)) / (n * c * (p - q))
    elif variant == RSFD_OUE_Z:
        freqs = d * (counts - n * q) / (n * (p - q))
    else:
        shift = q * c + (p - q) * (d - 1) + q * c * (d - 1)
        freqs = (counts * d * c - n * shift) / (n * c * (p - q))
    var = np.full(freqs.shape, rsfd_variance(d, c, epsilon, variant, n, 0.0))
    est = FrequencyEstimate(freqs, int(n), var)
    return est.clipped() if clip else est


def rsfd_variance(d: int, c: int, epsilon: float, variant: str, n: int, f=0.0):
    """``d^2 gamma (1 - gamma) / (n (p - q)^2)`` at the amplified budget."""
    eps_prime = amplify(epsilon, d)
    params = rsfd_one_round(variant, eps_prime, c)
    p, q = params.p, params.q
    g = np.asarray(rsfd_gamma(d, c, p, q, variant, f))
    out = d**2 * g * (1 - g) / (n * (p - q) ** 2)
    return float(out) if out.ndim == 0 else out

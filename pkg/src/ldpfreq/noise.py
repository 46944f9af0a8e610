"""Continuous-noise mechanisms.

Scalar Laplace and Gaussian mechanisms, the polar Laplace mechanism used for
geo-indistinguishability, and the negative real branch of Lambert W that the
polar mechanism needs to invert its radius CDF.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ldpfreq.errors import DomainError, InvalidInputError, InvalidParameterError, OutOfRegimeError

BRANCH_POINT = -1.0 / math.e
_MAX_ITER = 50
_TOL = 1e-14


# -- Lambert W_{-1} -------------------------------------------------------------


def _initial_guess(x: np.ndarray) -> np.ndarray:
    # series in p = -sqrt(2 (1 + e x)) around the branch point
    p = -np.sqrt(np.maximum(2.0 * (1.0 + math.e * x), 0.0))
    near = -1.0 + p - p**2 / 3.0 + 11.0 / 72.0 * p**3
    # asymptotic log expansion for x -> 0-
    with np.errstate(divide="ignore", invalid="ignore"):
        l1 = np.log(-x)
        l2 = np.log(-l1)
        far = l1 - l2 + l2 / l1
    return np.where(x < -0.25, near, far)


def lambert_w_minus1_array(x) -> np.ndarray:
    """Vectorized :func:`lambert_w_minus1`."""
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.reshape(-1)
    if np.any(~np.isfinite(x)) or np.any(x < BRANCH_POINT) or np.any(x >= 0):
        raise DomainError("W_{-1} is defined on [-1/e, 0)")
    w = _initial_guess(x)
    at_branch = x == BRANCH_POINT
    near = x < -0.25
    log_x = np.log(-x)
    active = ~at_branch
    for _ in range(_MAX_ITER):
        if not active.any():
            break
        wa = w[active]
        xa = x[active]
        na = near[active]
        step = np.empty_like(wa)
        # near the branch point: Halley on w e^w - x
        if na.any():
            wn = wa[na]
            ew = np.exp(wn)
            f = wn * ew - xa[na]
            denom = ew * (wn + 1.0) - (wn + 2.0) * f / (2.0 * wn + 2.0)
            with np.errstate(divide="ignore", invalid="ignore"):
                s = np.where(denom != 0, f / denom, 0.0)
            step[na] = s
        # elsewhere: Halley on w + ln(-w) - ln(-x), which stays well scaled for tiny |x|
        fa = ~na
        if fa.any():
            wf = wa[fa]
            g = wf + np.log(-wf) - log_x[active][fa]
            g1 = (wf + 1.0) / wf
            g2 = -1.0 / wf**2
            step[fa] = 2.0 * g * g1 / (2.0 * g1**2 - g * g2)
        w_new = wa - step
        w_new = np.minimum(w_new, -1.0)
        done = np.abs(step) <= _TOL * np.maximum(np.abs(w_new), 1.0)
        w[active] = w_new
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    w[at_branch] = -1.0
    return w.reshape(shape)


def lambert_w_minus1(x: float) -> float:
    """The ``w <= -1`` solution of ``w e^w = x`` for ``-1/e <= x < 0``."""
    return float(lambert_w_minus1_array(np.array([x], dtype=float))[0])


# -- planar (polar) Laplace ---------------------------------------------------


@dataclass(frozen=True)
class PlanarPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidInputError(f"non-finite coordinates ({self.x}, {self.y})")

    def __add__(self, other: "PlanarPoint") -> "PlanarPoint":
        return PlanarPoint(self.x + other.x, self.y + other.y)

    def distance(self, other: "PlanarPoint") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class GeoBudget:
    """Privacy per unit distance, in 1/meters."""

    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise InvalidParameterError(f"geo epsilon must be positive, got {self.epsilon!r}")

    @classmethod
    def from_level(cls, level: float, radius: float) -> "GeoBudget":
        """Budget giving distinguishability ``level`` within ``radius`` meters."""
        if not (level > 0 and radius > 0):
            raise InvalidParameterError("level and radius must be positive")
        return cls(level / radius)


def polar_radius(p, epsilon: float):
    """Inverse radius CDF: ``-(W_{-1}((p - 1)/e) + 1) / epsilon`` for ``p`` in [0, 1)."""
    p = np.asarray(p, dtype=float)
    r = -(lambert_w_minus1_array((p - 1.0) / math.e) + 1.0) / epsilon
    r = np.maximum(r, 0.0)
    return float(r) if r.ndim == 0 else r


def radius_cdf(r, epsilon: float):
    """``1 - (1 + eps r) e^{-eps r}``."""
    er = epsilon * np.asarray(r, dtype=float)
    return 1.0 - (1.0 + er) * np.exp(-er)


def planar_laplace(loc: PlanarPoint, budget: GeoBudget, rng: np.random.Generator) -> PlanarPoint:
    """One draw of the polar Laplace mechanism around ``loc``."""
    theta = rng.uniform(0.0, 2.0 * math.pi)
    r = polar_radius(rng.random(), budget.epsilon)
    return PlanarPoint(loc.x + r * math.cos(theta), loc.y + r * math.sin(theta))


def planar_laplace_many(xy, budget: GeoBudget, rng: np.random.Generator) -> np.ndarray:
    """Independent polar Laplace draws for each row of an ``(n, 2)`` array."""
    xy = np.asarray(xy, dtype=float)
    if xy.ndim != 2 or xy.shape[1] != 2:
        raise InvalidInputError(f"expected an (n, 2) array, got shape {xy.shape}")
    if not np.all(np.isfinite(xy)):
        raise InvalidInputError("non-finite coordinates")
    n = xy.shape[0]
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    r = polar_radius(rng.random(n), budget.epsilon)
    return xy + np.column_stack([r * np.cos(theta), r * np.sin(theta)])


# -- scalar mechanisms --------------------------------------------------------


def laplace_mechanism(value, sensitivity1: float, epsilon: float, rng: np.random.Generator):
    """``value + Lap(sensitivity1 / epsilon)``; ``value`` may be an array."""
    if not sensitivity1 > 0:
        raise InvalidParameterError("sensitivity must be positive")
    if not epsilon > 0:
        raise InvalidParameterError("epsilon must be positive")
    value = np.asarray(value, dtype=float)
    out = value + rng.laplace(0.0, sensitivity1 / epsilon, size=value.shape)
    return float(out) if out.ndim == 0 else out


def gaussian_sigma(sensitivity2: float, epsilon: float, delta: float) -> float:
    """``(sensitivity2 / epsilon) sqrt(2 ln(1.25 / delta))``, valid for ``epsilon < 1``."""
    if not sensitivity2 > 0:
        raise InvalidParameterError("sensitivity must be positive")
    if not 0 < delta < 1:
        raise InvalidParameterError(f"delta must lie in (0, 1), got {delta!r}")
    if not epsilon > 0:
        raise InvalidParameterError("epsilon must be positive")
    if epsilon >= 1:
        raise OutOfRegimeError(f"the Gaussian calibration needs epsilon < 1, got {epsilon!r}")
    return sensitivity2 / epsilon * math.sqrt(2.0 * math.log(1.25 / delta))


def gaussian_mechanism(value, sensitivity2: float, epsilon: float, delta: float,
                       rng: np.random.Generator):
    sigma = gaussian_sigma(sensitivity2, epsilon, delta)
    value = np.asarray(value, dtype=float)
    out = value + rng.normal(0.0, sigma, size=value.shape)
    return float(out) if out.ndim == 0 else out

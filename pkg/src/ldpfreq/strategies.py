"""Collection strategies: client randomizer plus the matching server estimator.

A strategy knows, for a fixed set of attribute domains and budget, how a
single user reports (:meth:`client`), how to simulate a whole population
into an accumulator in one vectorized pass (:meth:`simulate`) and how to turn
an accumulator back into frequency estimates (:meth:`estimate`).
"""

from __future__ import annotations

import numpy as np

from ldpfreq.aggregator import HistogramAccumulator
from ldpfreq.errors import EmptyInputError, InvalidParameterError
from ldpfreq.longitudinal import (
    L_KINDS,
    allomfree_params,
    longitudinal_estimate,
    longitudinal_params,
    longitudinal_variance,
    memoize_many,
    report_many,
)
from ldpfreq.multidim import (
    ADP,
    RSFD_ADP,
    RSFD_GRR,
    RSFD_OUE_R,
    RSFD_OUE_Z,
    SLOT_GRR,
    SLOT_UE,
    MultidimConfig,
    SampledReport,
    TupleReport,
    amplify,
    resolve_protocol,
    rsfd_estimate,
    rsfd_perturb_many,
    rsfd_slot_variants,
    rsfd_variance,
    slot_kind,
)
from ldpfreq.oracles import (
    GRR,
    OUE,
    SUE,
    estimate_freq,
    grr_perturb_many,
    params_for,
    ue_encode_many,
    ue_perturb,
    variance_exact,
)

ALLOMFREE = "ALLOMFREE"


def _perturb_batch(values, params):
    def run(rng):
        if params.kind == GRR:
            return grr_perturb_many(values, params, rng)
        return ue_perturb(ue_encode_many(values, params.c), params.p, params.q, rng)
    return run


class Strategy:
    name = "abstract"

    def __init__(self, sizes):
        self.config = MultidimConfig(tuple(sizes))

    @property
    def sizes(self):
        return self.config.sizes

    @property
    def d(self):
        return self.config.d

    slot_kinds: tuple[str, ...] = ()

    def new_accumulator(self) -> HistogramAccumulator:
        return HistogramAccumulator(self.sizes, self.slot_kinds)

    def client(self, v, rng):
        raise NotImplementedError

    def simulate(self, data, rng, acc=None) -> HistogramAccumulator:
        raise NotImplementedError

    def estimate(self, acc, clip=False):
        raise NotImplementedError

    def analytic_variance(self, n, true_freqs=None):
        raise NotImplementedError

    def _check_nonempty(self, acc, j):
        if acc.n[j] < 1:
            raise EmptyInputError(f"no reports for attribute {j}")


class SplStrategy(Strategy):
    """Every attribute perturbed with ``epsilon / d``."""

    def __init__(self, sizes, epsilon, protocol=ADP):
        super().__init__(sizes)
        self.epsilon = epsilon
        self.protocol = protocol
        self.name = f"Spl-{protocol}"
        eps = epsilon / self.d
        self.params = [params_for(resolve_protocol(protocol, eps, c), eps, c) for c in self.sizes]
        self.slot_kinds = tuple(slot_kind(p.kind) for p in self.params)

    def client(self, v, rng):
        self.config.check_tuple(v)
        slots = []
        for x, params in zip(v, self.params):
            out = _perturb_batch(np.array([x]), params)(rng)[0]
            slots.append(int(out) if params.kind == GRR else out)
        return TupleReport(tuple(slots), self.slot_kinds)

    def simulate(self, data, rng, acc=None):
        acc = acc if acc is not None else self.new_accumulator()
        data = np.asarray(data, dtype=np.int64)
        for j, params in enumerate(self.params):
            acc.add_slot_batch(j, _perturb_batch(data[:, j], params)(rng))
        return acc

    def estimate(self, acc, clip=False):
        out = []
        for j, params in enumerate(self.params):
            self._check_nonempty(acc, j)
            out.append(estimate_freq(acc.counts[j], int(acc.n[j]), params, clip))
        return out

    def analytic_variance(self, n, true_freqs=None):
        return [np.broadcast_to(variance_exact(p, n, 0.0 if true_freqs is None else true_freqs[j]),
                                (p.c,)).copy()
                for j, p in enumerate(self.params)]


class SmpStrategy(Strategy):
    """One sampled attribute per user at the full budget; the index is disclosed."""

    def __init__(self, sizes, epsilon, protocol=ADP):
        super().__init__(sizes)
        self.epsilon = epsilon
        self.protocol = protocol
        self.name = f"Smp-{protocol}"
        self.params = [params_for(resolve_protocol(protocol, epsilon, c), epsilon, c)
                       for c in self.sizes]
        self.slot_kinds = tuple(slot_kind(p.kind) for p in self.params)

    def client(self, v, rng):
        self.config.check_tuple(v)
        j = int(rng.integers(self.d))
        params = self.params[j]
        out = _perturb_batch(np.array([v[j]]), params)(rng)[0]
        return SampledReport(j, int(out) if params.kind == GRR else out, self.slot_kinds[j])

    def simulate(self, data, rng, acc=None):
        acc = acc if acc is not None else self.new_accumulator()
        data = np.asarray(data, dtype=np.int64)
        sampled = rng.integers(self.d, size=data.shape[0])
        for j, params in enumerate(self.params):
            values = data[sampled == j, j]
            acc.add_slot_batch(j, _perturb_batch(values, params)(rng))
        return acc

    def estimate(self, acc, clip=False):
        out = []
        for j, params in enumerate(self.params):
            self._check_nonempty(acc, j)
            out.append(estimate_freq(acc.counts[j], int(acc.n[j]), params, clip))
        return out

    def analytic_variance(self, n, true_freqs=None):
        m = n / self.d
        return [np.broadcast_to(variance_exact(p, m, 0.0 if true_freqs is None else true_freqs[j]),
                                (p.c,)).copy()
                for j, p in enumerate(self.params)]


class RSFDStrategy(Strategy):
    """Random sampling plus fake data with one of the GRR / OUE-z / OUE-r / ADP variants."""

    def __init__(self, sizes, epsilon, variant):
        super().__init__(sizes)
        self.epsilon = epsilon
        self.variant = variant
        self.name = f"RSFD-{variant}"
        self.eps_prime = amplify(epsilon, self.d)
        self.slot_variants = rsfd_slot_variants(self.config, epsilon, variant)
        self.slot_kinds = tuple(SLOT_GRR if v == RSFD_GRR else SLOT_UE for v in self.slot_variants)

    def client(self, v, rng):
        self.config.check_tuple(v)
        slots = rsfd_perturb_many(np.asarray([v]), self.config, self.epsilon, self.variant, rng)
        values = tuple(int(s[0]) if k == SLOT_GRR else s[0] for s, k in zip(slots, self.slot_kinds))
        return TupleReport(values, self.slot_kinds)

    def simulate(self, data, rng, acc=None):
        acc = acc if acc is not None else self.new_accumulator()
        slots = rsfd_perturb_many(data, self.config, self.epsilon, self.variant, rng)
        for j, slot in enumerate(slots):
            acc.add_slot_batch(j, slot)
        return acc

    def estimate(self, acc, clip=False):
        out = []
        for j, (c, var) in enumerate(zip(self.sizes, self.slot_variants)):
            self._check_nonempty(acc, j)
            out.append(rsfd_estimate(acc.counts[j], int(acc.n[j]), self.d, c, self.epsilon, var, clip))
        return out

    def analytic_variance(self, n, true_freqs=None):
        out = []
        for j, (c, var) in enumerate(zip(self.sizes, self.slot_variants)):
            f = 0.0 if true_freqs is None else true_freqs[j]
            out.append(np.broadcast_to(rsfd_variance(self.d, c, self.epsilon, var, n, f), (c,)).copy())
        return out


class LongitudinalStrategy(Strategy):
    """Sampled attribute reported through a memoizing two-round protocol.

    ``kind`` is one of the L-* protocols or ``ALLOMFREE`` (per-attribute
    choice between L-GRR and L-OSUE). Simulation covers one collection round.
    """

    def __init__(self, sizes, eps_inf, eps_1, kind):
        super().__init__(sizes)
        if kind != ALLOMFREE and kind not in L_KINDS:
            raise InvalidParameterError(f"unknown longitudinal strategy {kind!r}")
        self.eps_inf = eps_inf
        self.eps_1 = eps_1
        self.kind = kind
        self.name = kind
        if kind == ALLOMFREE:
            self.params = [allomfree_params(c, eps_inf, eps_1) for c in self.sizes]
        else:
            self.params = [longitudinal_params(kind, eps_inf, eps_1, c) for c in self.sizes]
        self.slot_kinds = tuple(SLOT_UE if p.unary else SLOT_GRR for p in self.params)

    def client(self, v, rng):
        self.config.check_tuple(v)
        j = int(rng.integers(self.d))
        params = self.params[j]
        memo = memoize_many(np.array([v[j]]), params, rng)
        out = report_many(memo, params, rng)[0]
        return SampledReport(j, out if params.unary else int(out), self.slot_kinds[j])

    def simulate(self, data, rng, acc=None):
        acc = acc if acc is not None else self.new_accumulator()
        return self.simulate_rounds(data, rng, 1, [acc])[0]

    def simulate_rounds(self, data, rng, tau: int, accs=None):
        """``tau`` collection rounds over unchanged data; memos are drawn once."""
        if tau < 1:
            raise InvalidParameterError("tau must be at least 1")
        accs = accs if accs is not None else [self.new_accumulator() for _ in range(tau)]
        data = np.asarray(data, dtype=np.int64)
        sampled = rng.integers(self.d, size=data.shape[0])
        for j, params in enumerate(self.params):
            memos = memoize_many(data[sampled == j, j], params, rng)
            for acc in accs:
                acc.add_slot_batch(j, report_many(memos, params, rng))
        return accs

    def estimate(self, acc, clip=False):
        out = []
        for j, params in enumerate(self.params):
            self._check_nonempty(acc, j)
            out.append(longitudinal_estimate(acc.counts[j], int(acc.n[j]), params, clip))
        return out

    def analytic_variance(self, n, true_freqs=None):
        m = n / self.d
        return [np.broadcast_to(longitudinal_variance(p, m, 0.0 if true_freqs is None else true_freqs[j]),
                                (c,)).copy()
                for j, (p, c) in enumerate(zip(self.params, self.sizes))]


_ONE_SHOT = {"ADP": ADP, "GRR": GRR, "SUE": SUE, "OUE": OUE}
_RSFD = {"RSFD-GRR": RSFD_GRR, "RSFD-OUEz": RSFD_OUE_Z, "RSFD-OUEr": RSFD_OUE_R, "RSFD-ADP": RSFD_ADP}

STRATEGY_NAMES = (
    ["Spl", "Smp"]
    + [f"{base}-{p}" for base in ("Spl", "Smp") for p in _ONE_SHOT]
    + list(_RSFD)
    + list(L_KINDS)
    + [ALLOMFREE]
)


def is_longitudinal(name: str) -> bool:
    return name == ALLOMFREE or name in L_KINDS


def make_strategy(name: str, sizes, epsilon: float, eps1_frac: float | None = None) -> Strategy:
    """Build a strategy from its command-line name.

    For longitudinal names ``epsilon`` is ``eps_inf`` and ``eps_1 = eps1_frac * eps_inf``.
    """
    if name in ("Spl", "Smp"):
        name = f"{name}-ADP"
    base, _, proto = name.partition("-")
    if base == "Spl" and proto in _ONE_SHOT:
        return SplStrategy(sizes, epsilon, _ONE_SHOT[proto])
    if base == "Smp" and proto in _ONE_SHOT:
        return SmpStrategy(sizes, epsilon, _ONE_SHOT[proto])
    if name in _RSFD:
        return RSFDStrategy(sizes, epsilon, _RSFD[name])
    if is_longitudinal(name):
        if eps1_frac is None or not 0 < eps1_frac < 1:
            raise InvalidParameterError("longitudinal strategies need eps1_frac in (0, 1)")
        return LongitudinalStrategy(sizes, epsilon, eps1_frac * epsilon, name)
    raise InvalidParameterError(f"unknown strategy {name!r}; choose from {', '.join(STRATEGY_NAMES)}")

"""Server side: histogram accumulation, estimation dispatch and utility metrics.

Also holds the routing of daily reports into per-day and union-of-consecutive-
days databases, so that each union database counts every user present on
any of its days exactly once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ldpfreq.errors import DecodeError, EmptyInputError, InvalidInputError, InvalidParameterError
from ldpfreq.multidim import SLOT_GRR, SLOT_UE, SampledReport, TupleReport


class HistogramAccumulator:
    """Per-attribute report counts.

    For a GRR slot ``counts[j][i]`` is how many reports named value ``i``; for
    a unary slot it is how many reports had bit ``i`` set. ``n[j]`` counts the
    reports that reached attribute ``j``.
    """

    def __init__(self, sizes, slot_kinds):
        sizes = tuple(int(c) for c in sizes)
        slot_kinds = tuple(slot_kinds)
        if len(sizes) != len(slot_kinds):
            raise InvalidParameterError("one slot kind per attribute is required")
        for k in slot_kinds:
            if k not in (SLOT_GRR, SLOT_UE):
                raise InvalidParameterError(f"unknown slot kind {k!r}")
        self.sizes = sizes
        self.slot_kinds = slot_kinds
        self.counts = [np.zeros(c, dtype=np.int64) for c in sizes]
        self.n = np.zeros(len(sizes), dtype=np.int64)

    @property
    def d(self) -> int:
        return len(self.sizes)

    def copy(self) -> "HistogramAccumulator":
        out = HistogramAccumulator(self.sizes, self.slot_kinds)
        out.counts = [c.copy() for c in self.counts]
        out.n = self.n.copy()
        return out

    def _add_slot(self, j: int, kind: str, payload) -> None:
        if kind != self.slot_kinds[j]:
            raise DecodeError(f"attribute {j}: got a {kind} report, expected {self.slot_kinds[j]}")
        if kind == SLOT_GRR:
            v = int(payload)
            if not 0 <= v < self.sizes[j]:
                raise DecodeError(f"attribute {j}: value {v} outside domain")
            self.counts[j][v] += 1
        else:
            bits = np.asarray(payload, dtype=bool)
            if bits.shape != (self.sizes[j],):
                raise DecodeError(f"attribute {j}: bit vector of shape {bits.shape}")
            self.counts[j] += bits
        self.n[j] += 1

    def accumulate(self, report) -> "HistogramAccumulator":
        """Add one report; Smp reports touch only the disclosed attribute."""
        if isinstance(report, SampledReport):
            j = report.attribute_index
            if not 0 <= j < self.d:
                raise DecodeError(f"attribute index {j} out of range")
            self._add_slot(j, report.slot_kind, report.payload)
        elif isinstance(report, TupleReport):
            if len(report.per_attribute) != self.d:
                raise DecodeError(f"tuple of length {len(report.per_attribute)} for {self.d} attributes")
            for j, (kind, payload) in enumerate(zip(report.slot_kinds, report.per_attribute)):
                self._add_slot(j, kind, payload)
        else:
            raise DecodeError(f"cannot decode report of type {type(report).__name__}")
        return self

    def add_counts(self, j: int, counts, n: int) -> "HistogramAccumulator":
        """Add already tallied counts from ``n`` reports on attribute ``j``."""
        counts = np.asarray(counts, dtype=np.int64)
        if counts.shape != (self.sizes[j],):
            raise DecodeError(f"attribute {j}: counts of shape {counts.shape}")
        self.counts[j] += counts
        self.n[j] += int(n)
        return self

    def add_slot_batch(self, j: int, slot: np.ndarray) -> "HistogramAccumulator":
        """Tally a batch of attribute-``j`` reports (int values or a bool matrix)."""
        if self.slot_kinds[j] == SLOT_GRR:
            slot = np.asarray(slot, dtype=np.int64)
            return self.add_counts(j, np.bincount(slot, minlength=self.sizes[j]), slot.size)
        slot = np.asarray(slot, dtype=bool)
        return self.add_counts(j, slot.sum(axis=0), slot.shape[0])

    def merge(self, other: "HistogramAccumulator") -> "HistogramAccumulator":
        """New accumulator holding both sets of counts."""
        if self.sizes != other.sizes or self.slot_kinds != other.slot_kinds:
            raise DecodeError("cannot merge accumulators of different protocols")
        out = self.copy()
        for j in range(self.d):
            out.counts[j] += other.counts[j]
        out.n += other.n
        return out

    def is_empty(self) -> bool:
        return int(self.n.sum()) == 0

    def __eq__(self, other):
        if not isinstance(other, HistogramAccumulator):
            return NotImplemented
        return (self.sizes == other.sizes and self.slot_kinds == other.slot_kinds
                and np.array_equal(self.n, other.n)
                and all(np.array_equal(a, b) for a, b in zip(self.counts, other.counts)))


def accumulate(acc: HistogramAccumulator, report) -> HistogramAccumulator:
    return acc.accumulate(report)


def merge(a: HistogramAccumulator, b: HistogramAccumulator) -> HistogramAccumulator:
    return a.merge(b)


def estimate_all(acc: HistogramAccumulator, strategy, clip: bool = False):
    """Per-attribute frequency estimates using the estimator that matches ``strategy``."""
    if acc.is_empty():
        raise EmptyInputError("accumulator holds no reports")
    return strategy.estimate(acc, clip=clip)


# -- metrics -----------------------------------------------------------------


def mse_avg(true_freqs, est_freqs) -> float:
    """Mean over attributes of the per-value mean squared error."""
    if len(true_freqs) != len(est_freqs) or len(true_freqs) == 0:
        raise InvalidInputError("need the same, non-zero number of attributes")
    total = 0.0
    for f, g in zip(true_freqs, est_freqs):
        f = np.asarray(f, dtype=float)
        g = np.asarray(getattr(g, "freqs", g), dtype=float)
        if f.shape != g.shape:
            raise InvalidInputError(f"shape mismatch {f.shape} vs {g.shape}")
        total += float(np.mean((f - g) ** 2))
    return total / len(true_freqs)


def mse_avg_over_time(true_seq, est_seq) -> float:
    """:func:`mse_avg` averaged over collection rounds."""
    if len(true_seq) != len(est_seq) or len(true_seq) == 0:
        raise InvalidInputError("need the same, non-zero number of rounds")
    return float(np.mean([mse_avg(t, e) for t, e in zip(true_seq, est_seq)]))


# -- union of consecutive days -----------------------------------------------


@dataclass(frozen=True)
class UnionDayPlan:
    """Databases for every day and every union of consecutive days.

    Database ``(start, end)`` covers days ``start..end`` (1-based). They are
    listed by end day, then from the single day backwards:
    D1, D2, D2uD1, D3, D3uD2, D3uD2uD1, ...
    """

    nb: int

    def __post_init__(self):
        if self.nb < 1:
            raise InvalidParameterError("need at least one day")

    @property
    def databases(self) -> list[tuple[int, int]]:
        return [(start, end) for end in range(1, self.nb + 1) for start in range(end, 0, -1)]

    def __len__(self):
        return self.nb * (self.nb + 1) // 2

    def index(self, start: int, end: int) -> int:
        if not 1 <= start <= end <= self.nb:
            raise InvalidInputError(f"no database for days {start}..{end}")
        return end * (end - 1) // 2 + (end - start)

    def label(self, idx: int) -> str:
        start, end = self.databases[idx]
        return "u".join(f"D{day}" for day in range(end, start - 1, -1))


def route_user(days, nb: int) -> dict[int, list[int]]:
    """Databases receiving this user's report on each day they are present.

    A union database gets the report from the first present day it covers,
    and from no other day.
    """
    plan = UnionDayPlan(nb)
    present = sorted(set(int(x) for x in days))
    for day in present:
        if not 1 <= day <= nb:
            raise InvalidInputError(f"day {day} outside 1..{nb}")
    routing = {}
    for day in present:
        targets = []
        for start, end in plan.databases:
            if not start <= day <= end:
                continue
            # already filled by an earlier present day inside the window
            if any(start <= prev < day for prev in present):
                continue
            targets.append(plan.index(start, end))
        routing[day] = targets
    return routing


def route_union_days(presence, nb: int) -> list[dict[int, list[int]]]:
    """:func:`route_user` for every user's presence set."""
    return [route_user(days, nb) for days in presence]


def collect_union_days(presence, data: np.ndarray, strategy, nb: int,
                       rng: np.random.Generator) -> list[HistogramAccumulator]:
    """Simulate daily reports routed into union-of-days databases.

    Each user sends one fresh report per present day; a copy goes to every
    database on that day's routing list. Returns one accumulator per database.
    """
    plan = UnionDayPlan(nb)
    dbs = [strategy.new_accumulator() for _ in range(len(plan))]
    for user, days in enumerate(presence):
        for day, targets in sorted(route_user(days, nb).items()):
            rep = strategy.client(data[user], rng)
            for idx in targets:
                dbs[idx].accumulate(rep)
    return dbs

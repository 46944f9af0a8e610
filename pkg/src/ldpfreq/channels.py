"""Exact output distributions of randomizers, for privacy verification.

A channel is a row-stochastic matrix with one row per input and one column
per possible output. Unary channels enumerate all ``2**c`` bit vectors, so
they are limited to small domains.
"""

from __future__ import annotations

import itertools

import numpy as np

from ldpfreq.errors import EnumerationLimitError

MAX_UNARY_ENUM = 16
MAX_OUTPUTS = 2**22


def grr_channel(c: int, p: float, q: float) -> np.ndarray:
    m = np.full((c, c), q, dtype=float)
    np.fill_diagonal(m, p)
    return m


def unary_outputs(c: int) -> np.ndarray:
    """All bit vectors of length ``c`` as rows of a boolean array."""
    if c > MAX_UNARY_ENUM:
        raise EnumerationLimitError(f"cannot enumerate 2**{c} unary outputs")
    return np.array(list(itertools.product((False, True), repeat=c)), dtype=bool)


def unary_channel(inputs: np.ndarray, p: float, q: float) -> np.ndarray:
    """Rows are input bit vectors, columns all ``2**c`` outputs; bits flip independently."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=bool))
    outs = unary_outputs(inputs.shape[1])
    # per-bit probability of reporting 1, shape (inputs, 1, c)
    one = np.where(inputs, p, q)[:, None, :]
    probs = np.where(outs[None, :, :], one, 1.0 - one)
    return probs.prod(axis=2)


def one_hot_inputs(c: int) -> np.ndarray:
    return np.eye(c, dtype=bool)


def max_log_ratio(channel: np.ndarray) -> float:
    """``max over y, x1, x2 of ln(P[y | x1] / P[y | x2])``.

    Returns ``inf`` when some output is possible from one input but not another.
    """
    channel = np.asarray(channel, dtype=float)
    hi = channel.max(axis=0)
    lo = channel.min(axis=0)
    live = hi > 0
    if np.any(lo[live] == 0):
        return float("inf")
    return float(np.max(np.log(hi[live]) - np.log(lo[live])))


def max_log_ratio_pairs(channel: np.ndarray, pairs) -> float:
    """Max log-ratio restricted to the given ``(row, row)`` input pairs."""
    best = 0.0
    for a, b in pairs:
        ra, rb = channel[a], channel[b]
        live = (ra > 0) | (rb > 0)
        if np.any((ra[live] == 0) | (rb[live] == 0)):
            return float("inf")
        best = max(best, float(np.max(np.log(ra[live]) - np.log(rb[live]))))
    return best


def compose(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Channel of running ``second`` on the output of ``first``."""
    return first @ second


def tuple_inputs(sizes) -> list[tuple[int, ...]]:
    return list(itertools.product(*[range(c) for c in sizes]))


def product_channel(channels) -> np.ndarray:
    """Independent per-slot channels: rows over the input tuples, columns over output tuples."""
    out = np.ones((1, 1))
    for ch in channels:
        out = np.kron(out, ch)
        if out.shape[1] > MAX_OUTPUTS:
            raise EnumerationLimitError("product channel too large to enumerate")
    return out


def mixture_tuple_channel(true_channels, fake_dists) -> np.ndarray:
    """Sample one slot uniformly, report it through its channel, others from fixed fakes.

    ``true_channels[j]`` has one row per value of attribute ``j``;
    ``fake_dists[j]`` is the output distribution of a non-sampled slot.
    """
    d = len(true_channels)
    sizes = [ch.shape[0] for ch in true_channels]
    rows = []
    for v in tuple_inputs(sizes):
        total = None
        for j in range(d):
            part = np.ones(1)
            for i in range(d):
                vec = true_channels[i][v[i]] if i == j else fake_dists[i]
                part = np.outer(part, vec).ravel()
                if part.size > MAX_OUTPUTS:
                    raise EnumerationLimitError("tuple channel too large to enumerate")
            total = part if total is None else total + part
        rows.append(total / d)
    return np.array(rows)


def disclosed_sample_channel(channels) -> np.ndarray:
    """Sample one slot uniformly and disclose its index with the perturbed value.

    Output columns are the concatenation, over attributes ``j``, of the
    outputs of ``channels[j]``.
    """
    d = len(channels)
    sizes = [ch.shape[0] for ch in channels]
    rows = []
    for v in tuple_inputs(sizes):
        rows.append(np.concatenate([channels[j][v[j]] / d for j in range(d)]))
    return np.array(rows)

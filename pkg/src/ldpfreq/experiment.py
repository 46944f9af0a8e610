"""Monte Carlo sweeps over privacy budgets, strategies and repetitions.

Every ``(grid point, run)`` pair draws from its own generator seeded from
``(base seed, grid index, run index)``, so results do not depend on the order
or the process in which pairs are evaluated.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ldpfreq.aggregator import mse_avg, mse_avg_over_time
from ldpfreq.errors import InfeasibleBudgetError, InvalidParameterError
from ldpfreq.strategies import STRATEGY_NAMES, is_longitudinal, make_strategy

ONE_SHOT_GRID = tuple(math.log(k) for k in range(2, 8))
LONGITUDINAL_GRID = tuple(0.5 * k for k in range(1, 9))
DEFAULT_EPS1_FRACS = (0.3, 0.6)

RUN_FIELDS = ("strategy", "epsilon", "eps_1", "grid_index", "run", "seed", "status", "mse")
SUMMARY_FIELDS = ("strategy", "epsilon", "eps_1", "runs", "status", "mse_mean", "mse_std")


@dataclass(frozen=True)
class ExperimentSpec:
    """What to run. For longitudinal strategies ``eps_grid`` holds ``eps_inf``."""

    strategies: tuple[str, ...]
    eps_grid: tuple[float, ...] | None = None
    eps1_fracs: tuple[float, ...] = DEFAULT_EPS1_FRACS
    runs: int = 100
    seed: int = 0
    tau: int = 1
    clip: bool = False

    def __post_init__(self):
        if isinstance(self.strategies, str):
            object.__setattr__(self, "strategies", (self.strategies,))
        if not self.strategies:
            raise InvalidParameterError("at least one strategy is required")
        for s in self.strategies:
            if s not in STRATEGY_NAMES:
                raise InvalidParameterError(f"unknown strategy {s!r}")
        if self.eps_grid is not None:
            if len(self.eps_grid) == 0:
                raise InvalidParameterError("epsilon grid is empty")
            if any(not (e > 0 and math.isfinite(e)) for e in self.eps_grid):
                raise InvalidParameterError(f"epsilons must be positive and finite: {self.eps_grid}")
        if not self.eps1_fracs or any(not 0 < f < 1 for f in self.eps1_fracs):
            raise InvalidParameterError(f"eps1 fractions must lie in (0, 1): {self.eps1_fracs}")
        if self.runs < 1:
            raise InvalidParameterError("runs must be >= 1")
        if self.tau < 1:
            raise InvalidParameterError("tau must be >= 1")
        if self.seed < 0:
            raise InvalidParameterError("seed must be non-negative")

    def grid_for(self, strategy: str) -> list[tuple[float, float | None]]:
        """``(epsilon, eps_1)`` points for one strategy, ``eps_1`` None for one-shot ones."""
        if is_longitudinal(strategy):
            grid = self.eps_grid or LONGITUDINAL_GRID
            return [(e, f * e) for f in self.eps1_fracs for e in grid]
        grid = self.eps_grid or ONE_SHOT_GRID
        return [(e, None) for e in grid]

    def tasks(self) -> list[tuple[str, int, float, float | None, int]]:
        out = []
        for s in self.strategies:
            for gi, (eps, eps1) in enumerate(self.grid_for(s)):
                for run in range(self.runs):
                    out.append((s, gi, eps, eps1, run))
        return out


def derive_seed(base_seed: int, grid_index: int, run: int) -> int:
    """64-bit seed for one ``(grid point, run)`` cell."""
    state = np.random.SeedSequence([base_seed, grid_index, run]).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    runs: list[dict] = field(default_factory=list)
    summary: list[dict] = field(default_factory=list)


# one dataset per worker process, set by the pool initializer
_WORKER_DATA: dict = {}


def _init_worker(rows, sizes, truth):
    _WORKER_DATA.update(rows=rows, sizes=sizes, truth=truth)


def _run_cell(spec: ExperimentSpec, task) -> dict:
    strategy_name, gi, eps, eps1, run = task
    rows, sizes, truth = _WORKER_DATA["rows"], _WORKER_DATA["sizes"], _WORKER_DATA["truth"]
    seed = derive_seed(spec.seed, gi, run)
    row = {"strategy": strategy_name, "epsilon": eps, "eps_1": eps1, "grid_index": gi,
           "run": run, "seed": seed, "status": "ok", "mse": None}
    frac = None if eps1 is None else eps1 / eps
    try:
        strategy = make_strategy(strategy_name, sizes, eps, frac)
    except InfeasibleBudgetError:
        row["status"] = "infeasible"
        return row
    rng = np.random.default_rng(seed)
    if is_longitudinal(strategy_name):
        accs = strategy.simulate_rounds(rows, rng, spec.tau)
        ests = [strategy.estimate(acc, clip=spec.clip) for acc in accs]
        row["mse"] = mse_avg_over_time([truth] * len(ests), ests)
    else:
        acc = strategy.simulate(rows, rng)
        row["mse"] = mse_avg(truth, strategy.estimate(acc, clip=spec.clip))
    return row


def _run_chunk(spec, tasks):
    return [_run_cell(spec, t) for t in tasks]


def summarize(spec: ExperimentSpec, runs: list[dict]) -> list[dict]:
    groups: dict[tuple, list[dict]] = {}
    for r in runs:
        groups.setdefault((r["strategy"], r["grid_index"]), []).append(r)
    out = []
    for s in spec.strategies:
        for gi, (eps, eps1) in enumerate(spec.grid_for(s)):
            rs = groups.get((s, gi), [])
            mses = np.array([r["mse"] for r in rs if r["status"] == "ok"], dtype=float)
            ok = len(mses) == len(rs) and len(rs) > 0
            out.append({
                "strategy": s, "epsilon": eps, "eps_1": eps1, "runs": len(mses),
                "status": "ok" if ok else "infeasible",
                "mse_mean": float(mses.mean()) if ok else None,
                "mse_std": float(mses.std()) if ok else None,
            })
    return out


def run_experiment(dataset, spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Run every ``(strategy, grid point, run)`` cell and summarize per grid point.

    Truth is the exact frequency vector of ``dataset``. Infeasible budget
    pairs are recorded with status ``infeasible`` instead of aborting.
    """
    rows = np.ascontiguousarray(dataset.rows)
    truth = dataset.frequencies()
    tasks = spec.tasks()
    if workers <= 1:
        _init_worker(rows, list(dataset.sizes), truth)
        results = _run_chunk(spec, tasks)
    else:
        chunk = max(1, len(tasks) // (workers * 4))
        chunks = [tasks[i:i + chunk] for i in range(0, len(tasks), chunk)]
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(rows, list(dataset.sizes), truth)) as ex:
            results = [r for part in ex.map(_run_chunk, [spec] * len(chunks), chunks) for r in part]
    order = {s: i for i, s in enumerate(spec.strategies)}
    results.sort(key=lambda r: (order[r["strategy"]], r["grid_index"], r["run"]))
    return ExperimentResult(spec, results, summarize(spec, results))


# -- output -------------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(records: list[dict], fields) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(fields)
    for r in records:
        w.writerow([_fmt(r[f]) for f in fields])
    return buf.getvalue()


def manifest(result: ExperimentResult, dataset) -> dict:
    from ldpfreq import __version__

    return {
        "library": "ldpfreq",
        "version": __version__,
        "spec": asdict(result.spec),
        "dataset": {"names": list(dataset.names), "sizes": list(dataset.sizes), "n": dataset.n},
        "truth": "exact frequencies of the simulated population",
    }


def write_result(result: ExperimentResult, dataset, out) -> tuple[Path, Path, Path]:
    """Write per-run rows to ``out``, the summary next to it and a JSON manifest."""
    out = Path(out)
    summary_path = out.with_name(out.stem + ".summary.csv")
    manifest_path = out.with_name(out.stem + ".json")
    out.write_text(to_csv(result.runs, RUN_FIELDS), encoding="utf-8")
    summary_path.write_text(to_csv(result.summary, SUMMARY_FIELDS), encoding="utf-8")
    manifest_path.write_text(json.dumps(manifest(result, dataset), indent=2) + "\n", encoding="utf-8")
    return out, summary_path, manifest_path

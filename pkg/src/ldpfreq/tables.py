"""Closed-form approximate-variance tables for one-shot and longitudinal protocols."""

from __future__ import annotations

import csv
import io

from ldpfreq.errors import InfeasibleBudgetError
from ldpfreq.longitudinal import L_GRR, L_OSUE, L_OUE, L_SOUE, L_SUE, longitudinal_params, longitudinal_variance_approx
from ldpfreq.oracles import var_grr, var_oue, var_sue

TABLE_N = 10000
TABLE_EPS = (0.5, 1.0, 2.0, 4.0)
TABLE_FRACS = (0.6, 0.5, 0.4, 0.3, 0.2, 0.1)
TABLE_GRR_SIZES = (2, 32, 1024)
INFEASIBLE = "infeasible"

ONE_SHOT_COLUMNS = tuple(f"GRR(c={c})" for c in TABLE_GRR_SIZES) + ("OUE", "SUE")
LONGITUDINAL_COLUMNS = tuple(f"L-GRR(c={c})" for c in TABLE_GRR_SIZES) + (L_OSUE, L_SUE, L_SOUE, L_OUE)


def one_shot_table(eps_grid=TABLE_EPS, n=TABLE_N) -> list[dict]:
    rows = []
    for eps in eps_grid:
        row = {"epsilon": eps}
        for c in TABLE_GRR_SIZES:
            row[f"GRR(c={c})"] = var_grr(eps, c, n)
        row["OUE"] = var_oue(eps, n)
        row["SUE"] = var_sue(eps, n)
        rows.append(row)
    return rows


def _lvar(kind, eps_inf, eps_1, c, n):
    try:
        return longitudinal_variance_approx(longitudinal_params(kind, eps_inf, eps_1, c), n)
    except InfeasibleBudgetError:
        return None


def longitudinal_row(eps_inf: float, eps_1: float, n: int = TABLE_N, frac: float | None = None) -> dict:
    """Var* of every longitudinal protocol at one budget pair; ``None`` marks infeasible cells."""
    row = {"frac": frac, "eps_inf": eps_inf, "eps_1": eps_1}
    for c in TABLE_GRR_SIZES:
        row[f"L-GRR(c={c})"] = _lvar(L_GRR, eps_inf, eps_1, c, n)
    for kind in (L_OSUE, L_SUE, L_SOUE, L_OUE):
        row[kind] = _lvar(kind, eps_inf, eps_1, None, n)
    return row


def longitudinal_table(eps_grid=TABLE_EPS, fracs=TABLE_FRACS, n=TABLE_N) -> list[dict]:
    return [longitudinal_row(e, f * e, n, f) for f in fracs for e in eps_grid]


def variance_table(n: int = TABLE_N, eps_grid=TABLE_EPS, fracs=TABLE_FRACS) -> dict[str, list[dict]]:
    """Both tables: ``{"one_shot": [...], "longitudinal": [...]}``."""
    return {"one_shot": one_shot_table(eps_grid, n),
            "longitudinal": longitudinal_table(eps_grid, fracs, n)}


def _cell(v) -> str:
    if v is None:
        return INFEASIBLE
    return repr(float(v))


def table_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = [k for k in rows[0] if k not in columns]
    w.writerow(keys + list(columns))
    for r in rows:
        w.writerow(["" if r[k] is None else repr(r[k]) for k in keys] + [_cell(r[c]) for c in columns])
    return buf.getvalue()


def format_text(tables: dict[str, list[dict]]) -> str:
    """Fixed-width rendering with six decimals, the way such tables are usually printed."""
    lines = ["one-shot Var* (n=%d)" % TABLE_N, "eps     " + " ".join(f"{c:>14}" for c in ONE_SHOT_COLUMNS)]
    for r in tables["one_shot"]:
        lines.append(f"{r['epsilon']:<7} " + " ".join(f"{r[c]:>14.6f}" for c in ONE_SHOT_COLUMNS))
    lines += ["", "longitudinal Var*",
              "eps_inf eps_1  " + " ".join(f"{c:>14}" for c in LONGITUDINAL_COLUMNS)]
    for r in tables["longitudinal"]:
        cells = [f"{INFEASIBLE:>14}" if r[c] is None else f"{r[c]:>14.6f}" for c in LONGITUDINAL_COLUMNS]
        lines.append(f"{r['eps_inf']:<7} {r['eps_1']:<6.2f} " + " ".join(cells))
    return "\n".join(lines) + "\n"

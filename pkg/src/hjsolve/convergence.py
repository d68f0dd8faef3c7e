"""Convergence-study harness: mesh sequences, sup-norm errors against exact
solutions, observed orders, and table rendering.

Errors are always measured on the u scale: S1 fields directly, S2 through
u = n v^(1/n), S3 through u = n (x_1...x_n)^(1/n) w. The default mesh
sequences per dimension are m = 40*4^k (n=2), m = 20*2^k (n=3) and
m = 4*2^k (n=4) for k = 0..5, truncatable via max_k.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .grid import GridField, GridSpec
from .schemes import SchemeKind, SolveReport, solve
from .testcases import TestCase, u_from_v_values, u_from_w_values

_SEQUENCES = {2: (40, 4), 3: (20, 2), 4: (4, 2)}

FULL_STORAGE_BYTE_CAP = 8 << 30  # refuse full-grid fields above this


def default_mesh_sequence(n: int, max_k: int = 5) -> list[int]:
    if n not in _SEQUENCES:
        raise ValueError(f"no default mesh sequence for n={n}; pass ms explicitly")
    if max_k < 0:
        raise ValueError("max_k must be >= 0")
    base, ratio = _SEQUENCES[n]
    return [base * ratio ** k for k in range(max_k + 1)]


@dataclass(frozen=True)
class StudySpec:
    case: TestCase
    schemes: tuple[SchemeKind, ...] = (SchemeKind.S1, SchemeKind.S2, SchemeKind.S3)
    ms: tuple[int, ...] = ()
    jobs: int = 1
    force_bisection: bool = False
    byte_cap: int = FULL_STORAGE_BYTE_CAP

    def __post_init__(self):
        if not self.ms:
            raise ValueError("empty mesh sequence")
        if any(m2 <= m1 for m1, m2 in zip(self.ms, self.ms[1:])):
            raise ValueError(f"mesh sequence must be strictly increasing, got {self.ms}")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclass(frozen=True)
class ConvergenceRow:
    m: int
    h: float
    error: float
    order: float | None


def linf_error(numeric_u: GridField, exact_u) -> float:
    """Max over all grid nodes (boundary included) of |numeric - exact(x)|."""
    xs = numeric_u.spec.mesh()
    return float(np.max(np.abs(numeric_u.values - exact_u(xs))))


def observed_order(e_prev: float, e_cur: float, h_prev: float, h_cur: float) -> float:
    """log(e_prev/e_cur) / log(h_prev/h_cur)."""
    if min(e_prev, e_cur, h_prev, h_cur) <= 0.0:
        raise ValueError("observed order undefined for nonpositive errors or mesh sizes")
    return math.log(e_prev / e_cur) / math.log(h_prev / h_cur)


def u_scale_error_fn(kind: SchemeKind, case: TestCase):
    """Per-node |numeric - exact| on the u scale, as a function of the raw
    solved values and the node coordinates."""
    n = case.n
    if kind is SchemeKind.S1:
        return lambda vals, xs: np.abs(vals - case.u(xs))
    if kind is SchemeKind.S2:
        return lambda vals, xs: np.abs(u_from_v_values(vals, n) - case.u(xs))
    return lambda vals, xs: np.abs(u_from_w_values(vals, xs, n) - case.u(xs))


def _solve_row(case: TestCase, kind: SchemeKind, m: int, force_bisection: bool,
               byte_cap: int) -> SolveReport:
    spec = GridSpec(case.n, m)
    err = u_scale_error_fn(kind, case)
    field_bytes = spec.num_nodes * 8
    storage = "full" if field_bytes <= byte_cap else "rolling"
    return solve(spec, kind, case.f, storage=storage,
                 force_bisection=force_bisection, error_fn=err)


def run_study(study: StudySpec) -> dict[SchemeKind, list[ConvergenceRow]]:
    """Solve every (scheme, m) pair, measure u-scale sup errors and chain
    observed orders. Row solves are independent; `jobs` > 1 runs them in a
    thread pool, with output ordered deterministically by m."""
    pairs = [(kind, m) for kind in study.schemes for m in study.ms]

    def work(pair):
        kind, m = pair
        return pair, _solve_row(study.case, kind, m, study.force_bisection,
                                study.byte_cap)

    results = {}
    if study.jobs == 1:
        for pair in pairs:
            results[pair] = work(pair)[1]
    else:
        with ThreadPoolExecutor(max_workers=study.jobs) as pool:
            for pair, rep in pool.map(work, pairs):
                results[pair] = rep

    out: dict[SchemeKind, list[ConvergenceRow]] = {}
    for kind in study.schemes:
        rows = []
        prev = None
        for m in study.ms:
            rep = results[(kind, m)]
            e = rep.linf_error
            h = 1.0 / m
            order = None
            if prev is not None and e > 0.0 and prev.error > 0.0:
                order = observed_order(prev.error, e, prev.h, h)
            row = ConvergenceRow(m=m, h=h, error=e, order=order)
            rows.append(row)
            prev = row
        out[kind] = rows
    return out


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _fmt_error(e: float) -> str:
    return f"{e:.1e}"


def _fmt_order(o: float | None) -> str:
    return "" if o is None else f"{o:.2f}"


def render_markdown(rows_by_scheme: dict[SchemeKind, list[ConvergenceRow]],
                    title: str = "") -> str:
    """One h column, then an error/order pair per scheme."""
    kinds = list(rows_by_scheme)
    ms = [row.m for row in rows_by_scheme[kinds[0]]]
    header = ["Mesh size h"]
    for kind in kinds:
        name = kind.value.upper()
        header += [f"({name}) linf error", f"({name}) order"]
    lines = []
    if title:
        lines.append(f"**{title}**")
        lines.append("")
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "|".join(["---"] * len(header)) + "|")
    for i, m in enumerate(ms):
        cells = [f"{1.0 / m:.1e}"]
        for kind in kinds:
            row = rows_by_scheme[kind][i]
            cells += [_fmt_error(row.error), _fmt_order(row.order)]
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def render_csv(rows_by_scheme: dict[SchemeKind, list[ConvergenceRow]],
               case: TestCase) -> str:
    lines = ["scheme,n,case,m,h,error,order"]
    for kind, rows in rows_by_scheme.items():
        for row in rows:
            order = "" if row.order is None else f"{row.order:.17g}"
            lines.append(f"{kind.value},{case.n},{case.label},{row.m},"
                         f"{row.h:.17g},{row.error:.17g},{order}")
    return "\n".join(lines) + "\n"


def render_json(rows_by_scheme: dict[SchemeKind, list[ConvergenceRow]],
                case: TestCase) -> str:
    payload = {
        "case": case.label,
        "n": case.n,
        "rows": [
            {"scheme": kind.value, "m": row.m, "h": row.h,
             "error": row.error, "order": row.order}
            for kind, rows in rows_by_scheme.items() for row in rows
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_levelset_csv(path, case: TestCase, kind: SchemeKind, m: int,
                       force_bisection: bool = False) -> None:
    """Contour-ready node data (coordinates and u value, one node per row)."""
    spec = GridSpec(case.n, m)
    rep = solve(spec, kind, case.f, force_bisection=force_bisection)
    vals = rep.field.values
    if kind is SchemeKind.S2:
        vals = u_from_v_values(vals, case.n)
    elif kind is SchemeKind.S3:
        vals = u_from_w_values(vals, spec.mesh(), case.n)
    GridField(spec, vals).save_csv(path)

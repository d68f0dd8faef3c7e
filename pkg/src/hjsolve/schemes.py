"""Monotone single-pass schemes for the gradient-product equation.

Three node-update rules are provided, each defining the node value as the
largest root of a scalar monotone equation in terms of the backward-neighbor
values a_i and the right-hand side f at the node:

  S1:  prod_i (t - a_i)_+            = h^n f      (zero boundary condition)
  S2:  prod_i (t - a_i)_+            = h^n f t^(n-1)   (zero boundary condition)
  S3:  prod_i ((1+c_i) t - c_i a_i)_+ = f,  c_i = n x_i / h   (no boundary condition)

In dimension 2 every update is a quadratic solved in closed form. In higher
dimensions the root is bracketed and bisected until the residual product lands
in the multiplicative band [target, (1+h)*target], which keeps the iteration
error below the truncation error of the scheme.

Two engines compute full-grid solutions. The "wavefront" engine vectorizes
over groups of nodes with equal index digit-sum (all backward neighbors of a
node lie in the previous group, so this is still a single pass). The "sweep"
engine is a scalar reference that walks nodes in lexicographic order and can
run on a rolling window instead of a full array; both engines produce
bit-identical values.
"""

from __future__ import annotations

import enum
import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .grid import (GridField, GridSpec, RollingWindow, backward_offsets,
                   wavefront_order)

BISECTION_CAP = 200


class SchemeDomainError(ValueError):
    """Negative right-hand side or neighbor value fed to an update."""


class BisectionCapError(RuntimeError):
    """Bisection failed to enter the acceptance band within the cap."""

    def __init__(self, message, local_indices=None):
        super().__init__(message)
        self.local_indices = local_indices


class SolveError(RuntimeError):
    """Update failure during a solve, annotated with the offending node."""

    def __init__(self, message, multi_index=None):
        super().__init__(message)
        self.multi_index = multi_index


class SchemeKind(enum.Enum):
    S1 = "s1"
    S2 = "s2"
    S3 = "s3"

    @classmethod
    def parse(cls, name) -> "SchemeKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower())
        except ValueError:
            raise ValueError(f"unknown scheme {name!r}; expected s1, s2 or s3") from None

    @property
    def has_boundary_condition(self) -> bool:
        return self is not SchemeKind.S3


@dataclass(frozen=True)
class UpdateInputs:
    """One node update: dimension, mesh size, node coordinates, rhs value and
    the n backward-neighbor values (0 across the zero-boundary for S1/S2)."""

    n: int
    h: float
    x: tuple[float, ...]
    f_x: float
    a: tuple[float, ...]

    def validate(self) -> None:
        if self.n < 2:
            raise SchemeDomainError(f"n must be >= 2, got {self.n}")
        if not self.h > 0.0:
            raise SchemeDomainError(f"h must be positive, got {self.h}")
        if len(self.a) != self.n:
            raise SchemeDomainError(f"expected {self.n} neighbor values, got {len(self.a)}")
        if self.f_x < 0.0:
            raise SchemeDomainError(f"negative right-hand side f={self.f_x}")
        if any(ai < 0.0 for ai in self.a):
            raise SchemeDomainError(f"negative neighbor value in a={self.a}")


# ---------------------------------------------------------------------------
# Closed forms (n = 2).  These kernels accept scalars or arrays; the exact
# staging of the arithmetic is shared by every engine so that results are
# bit-identical regardless of how nodes are batched.
# ---------------------------------------------------------------------------

def _s1_closed(a1, a2, h, f):
    d = a1 - a2
    return 0.5 * (a1 + a2) + 0.5 * np.sqrt(d * d + (4.0 * (h * h)) * f)


def _s2_closed(a1, a2, h, f):
    b = (h * h) * f
    A = a1 + a2
    B = a1 - a2
    return 0.5 * (A + b) + 0.5 * np.sqrt(B * B + 2.0 * b * A + b * b)


def _s3_closed(x1, x2, a1, a2, h, f):
    # Largest root of ((2x1+h)t - 2x1*a1)((2x2+h)t - 2x2*a2) = h^2 f,
    # normalized by the leading coefficient (2x1+h)(2x2+h).
    q1 = 2.0 * x1 + h
    q2 = 2.0 * x2 + h
    A1 = (x1 * q2) * a1
    A2 = (x2 * q1) * a2
    C = A1 + A2
    D = A1 - A2
    P = q1 * q2
    return (C + np.sqrt(D * D + P * ((h * h) * f))) / P


# ---------------------------------------------------------------------------
# Band bisection (n >= 3, and n = 2 when bisection is forced)
# ---------------------------------------------------------------------------

def _band_bisect(residual, lo, hi, target, band):
    """Vectorized bisection into the band [target, (1+band)*target].

    residual(t, idx) evaluates the (nondecreasing) residual for the subset
    idx of the problem batch. Preconditions: residual(lo) < target and
    residual(hi) >= target, elementwise. The upper endpoint is accepted
    outright when it already lies in the band. Returns (roots, iterations).
    """
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    upper = (1.0 + band) * target
    t_out = np.empty_like(lo)
    iters = np.zeros(lo.shape, dtype=np.int64)

    all_idx = np.arange(lo.size)
    r = residual(hi, all_idx)
    done = r <= upper
    t_out[done] = hi[done]
    act = np.nonzero(~done)[0]
    lo = lo[act]
    hi = hi[act]
    tgt = target[act]
    up = upper[act]

    it = 0
    while act.size:
        it += 1
        if it > BISECTION_CAP:
            raise BisectionCapError(
                f"bisection exceeded {BISECTION_CAP} iterations for "
                f"{act.size} node(s)", local_indices=act)
        mid = 0.5 * (lo + hi)
        r = residual(mid, act)
        ok = (r >= tgt) & (r <= up)
        stuck = (mid <= lo) | (mid >= hi)
        take = ok | stuck
        if take.any():
            sel = np.nonzero(take)[0]
            # a stuck interval has collapsed to float resolution; its upper
            # endpoint carries residual >= target and is the best answer
            t_out[act[sel]] = np.where(ok[sel], mid[sel], hi[sel])
            iters[act[sel]] = it
            keep = ~take
            act = act[keep]
            lo = lo[keep]
            hi = hi[keep]
            mid = mid[keep]
            r = r[keep]
            tgt = tgt[keep]
            up = up[keep]
        high = r > up
        hi = np.where(high, mid, hi)
        lo = np.where(high, lo, mid)
    return t_out, iters


def bisect_max_root(residual: Callable[[float], float], interval, target: float,
                    band: float) -> float:
    """Largest-root band search for one monotone scalar residual.

    Finds t in `interval` = (lo, hi) with residual(t) in
    [target, (1+band)*target]. Requires residual(hi) >= target and residual
    nondecreasing on the interval.
    """
    lo, hi = interval
    if hi < lo:
        raise ValueError(f"invalid interval: hi={hi} < lo={lo}")
    if target < 0.0:
        raise ValueError(f"target must be nonnegative, got {target}")
    if residual(hi) < target:
        raise ValueError("invalid interval: residual at hi is below the target band")

    def vec_res(t, idx):
        return np.asarray([residual(float(t[0]))])

    t, _ = _band_bisect(vec_res, np.array([lo]), np.array([hi]),
                        np.array([target]), band)
    return float(t[0])


# ---------------------------------------------------------------------------
# Vectorized node updates.  A is the list of n backward-neighbor arrays in
# axis order; C (S3 only) the per-axis arrays c_i = n*x_i/h.  Scalar updates
# run the very same code on length-1 arrays.
# ---------------------------------------------------------------------------

class _BisectStats:
    __slots__ = ("nodes", "iters_total", "iters_max")

    def __init__(self):
        self.nodes = 0
        self.iters_total = 0
        self.iters_max = 0

    def add(self, iters: np.ndarray) -> None:
        self.nodes += iters.size
        self.iters_total += int(iters.sum())
        self.iters_max = max(self.iters_max, int(iters.max(initial=0)))

    def merge(self, other: "_BisectStats") -> None:
        self.nodes += other.nodes
        self.iters_total += other.iters_total
        self.iters_max = max(self.iters_max, other.iters_max)


def _pow_int(base: float, exponent: int) -> float:
    out = base
    for _ in range(exponent - 1):
        out = out * base
    return out


def _run_bisect(res, lo, hi, target, band, nz):
    """_band_bisect with cap diagnostics remapped from the bisected subset
    back to the caller's batch indices."""
    try:
        return _band_bisect(res, lo, hi, target, band)
    except BisectionCapError as exc:
        exc.local_indices = nz[exc.local_indices]
        raise


def _maxa(A: Sequence[np.ndarray]) -> np.ndarray:
    out = A[0].copy()
    for a in A[1:]:
        np.maximum(out, a, out=out)
    return out


def _update_s1_vec(A, f, h, n, stats: _BisectStats) -> np.ndarray:
    B = _pow_int(h, n) * f
    t = _maxa(A)
    nz = np.nonzero(B > 0.0)[0]
    if nz.size:
        Az = [a[nz] for a in A]

        def res(tt, idx):
            aa = [a[idx] for a in Az]
            r = np.maximum(tt - aa[0], 0.0)
            for j in range(1, n):
                r = r * np.maximum(tt - aa[j], 0.0)
            return r

        lo = t[nz]
        hi = lo + h * np.power(f[nz], 1.0 / n)
        roots, iters = _run_bisect(res, lo, hi, B[nz], h, nz)
        t[nz] = roots
        stats.add(iters)
    return t


def _update_s2_vec(A, f, h, n, stats: _BisectStats) -> np.ndarray:
    b = _pow_int(h, n) * f
    maxa = _maxa(A)
    t = maxa.copy()
    pos = b > 0.0
    corner = pos & (maxa <= 0.0)
    t[corner] = b[corner]  # all a_i = 0: t^n = b t^(n-1)
    nz = np.nonzero(pos & (maxa > 0.0))[0]
    if nz.size:
        Az = [a[nz] for a in A]

        def res(tt, idx):
            # G(t) = prod (t - a_i)_+ / t^(n-1), strictly increasing past max a
            aa = [a[idx] for a in Az]
            r = np.maximum(tt - aa[0], 0.0)
            for j in range(1, n):
                r = r * np.maximum(tt - aa[j], 0.0)
            den = tt
            for _ in range(n - 2):
                den = den * tt
            return r / den

        lo = maxa[nz]
        hi = Az[0].copy()
        for a in Az[1:]:
            hi = hi + a
        hi = hi + b[nz]  # S(a, b) <= sum a_i + b
        roots, iters = _run_bisect(res, lo, hi, b[nz], h, nz)
        t[nz] = roots
        stats.add(iters)
    return t


def _update_s3_vec(A, C, f, h, n, stats: _BisectStats) -> np.ndarray:
    sigma = C[0] * A[0] / (1.0 + C[0])
    for j in range(1, n):
        np.maximum(sigma, C[j] * A[j] / (1.0 + C[j]), out=sigma)
    t = sigma.copy()
    nz = np.nonzero(f > 0.0)[0]
    if nz.size:
        Az = [a[nz] for a in A]
        Cz = [c[nz] for c in C]

        def res(tt, idx):
            aa = [a[idx] for a in Az]
            cc = [c[idx] for c in Cz]
            r = np.maximum((1.0 + cc[0]) * tt - cc[0] * aa[0], 0.0)
            for j in range(1, n):
                r = r * np.maximum((1.0 + cc[j]) * tt - cc[j] * aa[j], 0.0)
            return r

        prodc = 1.0 + Cz[0]
        for c in Cz[1:]:
            prodc = prodc * (1.0 + c)
        lo = sigma[nz]
        hi = lo + np.power(f[nz] / prodc, 1.0 / n)
        roots, iters = _run_bisect(res, lo, hi, f[nz], h, nz)
        t[nz] = roots
        stats.add(iters)
    return t


# ---------------------------------------------------------------------------
# Scalar updates (public operations)
# ---------------------------------------------------------------------------

def _scalar_via_vec(kind: SchemeKind, inp: UpdateInputs, cs=None) -> float:
    A = [np.array([ai], dtype=np.float64) for ai in inp.a]
    f = np.array([inp.f_x], dtype=np.float64)
    stats = _BisectStats()
    if kind is SchemeKind.S1:
        t = _update_s1_vec(A, f, inp.h, inp.n, stats)
    elif kind is SchemeKind.S2:
        t = _update_s2_vec(A, f, inp.h, inp.n, stats)
    else:
        if cs is None:
            cs = [inp.n * xi / inp.h for xi in inp.x]
        C = [np.array([c], dtype=np.float64) for c in cs]
        t = _update_s3_vec(A, C, f, inp.h, inp.n, stats)
    return float(t[0])


def s1_update(inp: UpdateInputs, method: str = "auto") -> float:
    """Largest t with prod (t - a_i)_+ = h^n f. Closed form in n=2."""
    inp.validate()
    if method == "auto":
        method = "closed" if inp.n == 2 else "bisect"
    if method == "closed":
        if inp.n != 2:
            raise ValueError("closed form only available in n=2")
        return float(_s1_closed(inp.a[0], inp.a[1], inp.h, inp.f_x))
    return _scalar_via_vec(SchemeKind.S1, inp)


def s2_update(inp: UpdateInputs, method: str = "auto") -> float:
    """Maximal root of prod (t - a_i)_+ = (h^n f) t^(n-1). Closed form in n=2."""
    inp.validate()
    if method == "auto":
        method = "closed" if inp.n == 2 else "bisect"
    if method == "closed":
        if inp.n != 2:
            raise ValueError("closed form only available in n=2")
        return float(_s2_closed(inp.a[0], inp.a[1], inp.h, inp.f_x))
    return _scalar_via_vec(SchemeKind.S2, inp)


def s3_update(inp: UpdateInputs, method: str = "auto") -> float:
    """Largest t with prod ((1+c_i) t - c_i a_i)_+ = f, c_i = n x_i / h.

    Factors with x_i = 0 collapse to t alone; at the origin the update is
    exactly f^(1/n).
    """
    inp.validate()
    if len(inp.x) != inp.n:
        raise SchemeDomainError(f"expected {inp.n} coordinates, got {len(inp.x)}")
    if any(xi < 0.0 for xi in inp.x):
        raise SchemeDomainError(f"negative coordinate in x={inp.x}")
    if method == "auto":
        method = "closed" if inp.n == 2 else "bisect"
    if method == "closed":
        if inp.n != 2:
            raise ValueError("closed form only available in n=2")
        return float(_s3_closed(inp.x[0], inp.x[1], inp.a[0], inp.a[1],
                                inp.h, inp.f_x))
    return _scalar_via_vec(SchemeKind.S3, inp)


# ---------------------------------------------------------------------------
# Right-hand-side plumbing
# ---------------------------------------------------------------------------

def _as_rhs(f, spec: GridSpec):
    """Normalize f (constant, callable on coordinate tuples, or GridField)
    into a callable taking a tuple of broadcastable coordinate arrays."""
    if isinstance(f, GridField):
        if f.spec != spec:
            raise ValueError(f"rhs field spec {f.spec} != solve spec {spec}")
        return None  # caller indexes the field directly
    if isinstance(f, (int, float)):
        c = float(f)
        if c < 0.0:
            raise SchemeDomainError(f"negative constant right-hand side {c}")
        return lambda xs: np.broadcast_arrays(*(np.asarray(x, dtype=np.float64)
                                                for x in xs))[0] * 0.0 + c
    if callable(f):
        return f
    raise TypeError(f"unsupported rhs type {type(f)!r}")


def _eval_rhs_full(f, spec: GridSpec) -> np.ndarray:
    if isinstance(f, GridField):
        return f.values
    fn = _as_rhs(f, spec)
    F = np.asarray(fn(spec.mesh()), dtype=np.float64)
    F = np.broadcast_to(F, spec.shape).copy() if F.shape != spec.shape else F
    return F


def _check_rhs_nonneg(F: np.ndarray, spec: GridSpec) -> None:
    if F.min() < 0.0:
        bad = np.unravel_index(int(np.argmin(F.reshape(-1))), spec.shape)
        raise SolveError(f"negative right-hand side f={F[bad]} at node {bad}",
                         multi_index=bad)


# ---------------------------------------------------------------------------
# Solve report
# ---------------------------------------------------------------------------

@dataclass
class SolveReport:
    spec: GridSpec
    kind: SchemeKind
    engine: str
    storage: str
    field: GridField | None
    max_band_violation: float
    bisect_nodes: int
    bisect_iters_max: int
    bisect_iters_mean: float
    wall_time: float
    linf_error: float | None = None
    final_slab: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "scheme": self.kind.value,
            "n": self.spec.n,
            "m": self.spec.m,
            "h": self.spec.h,
            "engine": self.engine,
            "storage": self.storage,
            "max_band_violation": self.max_band_violation,
            "bisect_nodes": self.bisect_nodes,
            "bisect_iters_max": self.bisect_iters_max,
            "bisect_iters_mean": self.bisect_iters_mean,
            "wall_time_s": self.wall_time,
            "linf_error": self.linf_error,
        }


# ---------------------------------------------------------------------------
# Engine: n = 2 closed-form wavefront (anti-diagonals)
# ---------------------------------------------------------------------------

def _solve_diag_2d(spec, kind, f, store, error_fn):
    m, h = spec.m, spec.h
    R = m + 1
    xs = spec.axis_coords()
    f_field = f if isinstance(f, GridField) else None
    f_fn = None if f_field is not None else _as_rhs(f, spec)

    W = np.zeros((R, R)) if store else None
    prev = np.zeros(R)
    cur = np.zeros(R)
    slab = None if store else np.zeros(R)
    linf = 0.0
    max_viol = 0.0
    base = np.arange(R)

    for d in range(0, 2 * m + 1):
        ilo = max(0, d - m)
        ihi = min(d, m)
        ii = base[ilo:ihi + 1]
        x1 = xs[ilo:ihi + 1]
        x2 = xs[d - ihi:d - ilo + 1][::-1]
        if f_field is not None:
            fd = f_field.values[ii, d - ii]
        else:
            fd = np.asarray(f_fn((x1, x2)), dtype=np.float64)
            fd = np.broadcast_to(fd, x1.shape).copy() if fd.shape != x1.shape else fd
        if fd.min() < 0.0:
            k = int(np.argmin(fd))
            raise SolveError(f"negative right-hand side f={fd[k]} at node "
                             f"{(ilo + k, d - ilo - k)}",
                             multi_index=(ilo + k, d - ilo - k))
        cur.fill(0.0)
        if kind is SchemeKind.S3:
            a1 = np.where(ii >= 1, prev[np.maximum(ii - 1, 0)], 0.0)
            a2 = np.where(d - ii >= 1, prev[ii], 0.0)
            cur[ilo:ihi + 1] = _s3_closed(x1, x2, a1, a2, h, fd)
        else:
            jlo = max(1, d - m)
            jhi = min(d - 1, m)
            if jlo <= jhi:
                s = slice(jlo, jhi + 1)
                off = slice(jlo - ilo, jhi - ilo + 1)
                a1 = prev[jlo - 1:jhi]
                a2 = prev[s]
                if kind is SchemeKind.S1:
                    cur[s] = _s1_closed(a1, a2, h, fd[off])
                else:
                    cur[s] = _s2_closed(a1, a2, h, fd[off])
        vals = cur[ilo:ihi + 1]
        if store:
            W[ii, d - ii] = vals
        else:
            max_viol = max(max_viol, _diag_violation_2d(kind, vals, cur, prev,
                                                        ii, x1, x2, fd, h, d, m))
            if d >= m:
                slab[d - m] = cur[m]
        if error_fn is not None:
            e = error_fn(vals, (x1, x2))
            linf = max(linf, float(np.max(e)))
        prev, cur = cur, prev

    return W, slab, linf, max_viol


def _diag_violation_2d(kind, vals, cur, prev, ii, x1, x2, fd, h, d, m):
    """Band-violation of the residual product on one anti-diagonal (used by
    the streaming path; stored solves recompute this over the full field)."""
    n = 2
    if kind is SchemeKind.S3:
        a1 = np.where(ii >= 1, prev[np.maximum(ii - 1, 0)], 0.0)
        a2 = np.where(d - ii >= 1, prev[ii], 0.0)
        c1 = n * x1 / h
        c2 = n * x2 / h
        q = np.maximum((1.0 + c1) * vals - c1 * a1, 0.0) \
            * np.maximum((1.0 + c2) * vals - c2 * a2, 0.0)
        return _violation(q, fd, h)
    jlo = max(1, d - m)
    jhi = min(d - 1, m)
    if jlo > jhi:
        return 0.0
    t = cur[jlo:jhi + 1]
    a1 = prev[jlo - 1:jhi]
    a2 = prev[jlo:jhi + 1]
    p = np.maximum(t - a1, 0.0) * np.maximum(t - a2, 0.0)
    fsub = fd[jlo - ii[0]:jhi - ii[0] + 1]
    if kind is SchemeKind.S1:
        return _violation(p, (h * h) * fsub, h)
    return _violation(p, ((h * h) * fsub) * t, h)


def _violation(product, target, band):
    """How far the residual product falls outside [target, (1+band)*target],
    relative to target; absolute where target == 0."""
    out = np.where(target > 0.0,
                   np.maximum(np.maximum(target - product,
                                         product - (1.0 + band) * target), 0.0)
                   / np.where(target > 0.0, target, 1.0),
                   product)
    return float(np.max(out, initial=0.0))


# ---------------------------------------------------------------------------
# Engine: general-n bisection wavefront (digit-sum groups)
# ---------------------------------------------------------------------------

def _solve_wavefront_nd(spec, kind, f, error_fn):
    n, m, h = spec.n, spec.m, spec.h
    R = m + 1
    strides = backward_offsets(spec)
    order, offsets = wavefront_order(spec)
    F = _eval_rhs_full(f, spec)
    _check_rhs_nonneg(F, spec)
    Ff = F.reshape(-1)
    Wf = np.zeros(spec.num_nodes)
    stats = _BisectStats()

    for d in range(0, n * m + 1):
        idx = order[offsets[d]:offsets[d + 1]]
        if idx.size == 0:
            continue
        iax = [(idx // strides[ax]) % R for ax in range(n)]
        try:
            if kind.has_boundary_condition:
                interior = iax[0] >= 1
                for ax in range(1, n):
                    interior &= iax[ax] >= 1
                idx = idx[interior]
                if idx.size == 0:
                    continue
                A = [Wf[idx - strides[ax]] for ax in range(n)]
                if kind is SchemeKind.S1:
                    t = _update_s1_vec(A, Ff[idx], h, n, stats)
                else:
                    t = _update_s2_vec(A, Ff[idx], h, n, stats)
            else:
                A = []
                C = []
                for ax in range(n):
                    has = iax[ax] >= 1
                    nb = np.where(has, idx - strides[ax], idx)
                    A.append(np.where(has, Wf[nb], 0.0))
                    C.append((n * iax[ax]).astype(np.float64))
                t = _update_s3_vec(A, C, Ff[idx], h, n, stats)
        except BisectionCapError as exc:
            node = np.unravel_index(int(idx[exc.local_indices[0]]), spec.shape)
            raise SolveError(f"{exc} (first at node {node})",
                             multi_index=node) from exc
        Wf[idx] = t

    W = Wf.reshape(spec.shape)
    linf = None
    if error_fn is not None:
        linf = float(np.max(error_fn(W, spec.mesh())))
    return W, linf, stats


# ---------------------------------------------------------------------------
# Engine: lexicographic scalar sweep (reference; full or rolling storage)
# ---------------------------------------------------------------------------

def _solve_sweep(spec, kind, f, storage, force_bisection, error_fn):
    # Scalar reference engine. One python-level pass in lexicographic order,
    # batched per last-axis row for f evaluation and error tracking. The
    # closed forms below mirror the staging of _s1_closed/_s2_closed/
    # _s3_closed exactly (+, *, - and sqrt are correctly rounded, so the
    # math-module scalars agree bit for bit with the numpy kernels).
    n, m, h = spec.n, spec.m, spec.h
    R = m + 1
    offs = backward_offsets(spec)
    f_field = f if isinstance(f, GridField) else None
    f_fn = None if f_field is not None else _as_rhs(f, spec)
    rolling = storage == "rolling"
    window = RollingWindow(spec) if rolling else None
    full = None if rolling else np.zeros(spec.num_nodes)
    stats = _BisectStats()
    use_closed = (n == 2) and not force_bisection
    linf = 0.0
    max_viol = 0.0
    hh = h * h
    four_hh = 4.0 * hh
    xs_axis = spec.axis_coords()
    row_vals = np.zeros(R)
    prev_row = np.zeros(R)  # n=2 streaming violation check
    s1 = kind is SchemeKind.S1

    if rolling:
        lookup = window.value_at
    else:
        lookup = full.__getitem__

    for row_idx, head in enumerate(itertools.product(range(R), repeat=n - 1)):
        x_head = tuple(i / m for i in head)
        xs_row = tuple(np.float64(xh) for xh in x_head) + (xs_axis,)
        if f_field is not None:
            f_row = f_field.values[head]
        else:
            f_row = np.asarray(f_fn(xs_row), dtype=np.float64)
            if f_row.shape != (R,):
                f_row = np.broadcast_to(f_row, (R,)).copy()
        if f_row.min() < 0.0:
            j_bad = int(np.argmin(f_row))
            mi = head + (j_bad,)
            raise SolveError(f"negative right-hand side f={f_row[j_bad]} at "
                             f"node {mi}", multi_index=mi)
        base_lin = row_idx * R
        head_boundary = any(i == 0 for i in head)

        for j in range(R):
            lin = base_lin + j
            f_x = float(f_row[j])
            try:
                if kind.has_boundary_condition:
                    if head_boundary or j == 0:
                        t = 0.0
                    else:
                        a = tuple(lookup(lin - off) for off in offs)
                        if use_closed:
                            a1, a2 = a
                            if s1:
                                d = a1 - a2
                                t = 0.5 * (a1 + a2) + 0.5 * math.sqrt(
                                    d * d + four_hh * f_x)
                            else:
                                b = hh * f_x
                                A = a1 + a2
                                B = a1 - a2
                                t = 0.5 * (A + b) + 0.5 * math.sqrt(
                                    B * B + 2.0 * b * A + b * b)
                        else:
                            A1 = [np.array([ai]) for ai in a]
                            fv = np.array([f_x])
                            upd = _update_s1_vec if s1 else _update_s2_vec
                            t = float(upd(A1, fv, h, n, stats)[0])
                            if rolling:
                                max_viol = max(max_viol, _node_violation(
                                    kind, t, a, None, f_x, h, n))
                else:
                    mi = head + (j,)
                    a = tuple(lookup(lin - offs[ax]) if mi[ax] >= 1 else 0.0
                              for ax in range(n))
                    if use_closed:
                        x1 = x_head[0]
                        x2 = j / m
                        q1 = 2.0 * x1 + h
                        q2 = 2.0 * x2 + h
                        A1v = (x1 * q2) * a[0]
                        A2v = (x2 * q1) * a[1]
                        C = A1v + A2v
                        D = A1v - A2v
                        P = q1 * q2
                        t = (C + math.sqrt(D * D + P * (hh * f_x))) / P
                    else:
                        cs = [float(n * mi[ax]) for ax in range(n)]
                        A1 = [np.array([ai]) for ai in a]
                        C1 = [np.array([c]) for c in cs]
                        t = float(_update_s3_vec(A1, C1, np.array([f_x]), h,
                                                 n, stats)[0])
                        if rolling:
                            max_viol = max(max_viol, _node_violation(
                                kind, t, a, cs, f_x, h, n))
            except BisectionCapError as exc:
                mi = head + (j,)
                raise SolveError(f"{exc} at node {mi}", multi_index=mi) from exc

            row_vals[j] = t
            if rolling:
                window.append(t)
            else:
                full[lin] = t

        if rolling and use_closed:
            max_viol = max(max_viol, _row_violation_2d(
                kind, row_vals, prev_row, x_head[0], xs_axis, f_row, h))
        if error_fn is not None:
            e = error_fn(row_vals, xs_row)
            linf = max(linf, float(np.max(e)))
        prev_row, row_vals = row_vals, prev_row

    W = None if rolling else full.reshape(spec.shape)
    slab = window.final_slab() if rolling else None
    return W, slab, (linf if error_fn is not None else None), max_viol, stats


def _row_violation_2d(kind, row, prev, x1, xs_axis, f_row, h):
    """Residual band-violation of one axis-2 row in a 2-d sweep (rolling
    storage only; stored solves use residual_stats on the whole field)."""
    if kind is SchemeKind.S3:
        c1 = 2.0 * x1 / h
        c2 = 2.0 * xs_axis / h
        a1 = prev
        a2 = np.concatenate(([0.0], row[:-1]))
        q = np.maximum((1.0 + c1) * row - c1 * a1, 0.0) \
            * np.maximum((1.0 + c2) * row - c2 * a2, 0.0)
        return _violation(q, f_row, h)
    if x1 == 0.0:
        return float(np.max(np.abs(row)))
    t = row[1:]
    p = np.maximum(t - prev[1:], 0.0) * np.maximum(t - row[:-1], 0.0)
    target = (h * h) * f_row[1:]
    if kind is SchemeKind.S2:
        target = target * t
    return max(_violation(p, target, h), abs(float(row[0])))


def _node_violation(kind, t, a, cs, f_x, h, n):
    if kind is SchemeKind.S3:
        q = 1.0
        for j in range(n):
            q *= max((1.0 + cs[j]) * t - cs[j] * a[j], 0.0)
        return _violation(np.float64(q), np.float64(f_x), h)
    p = 1.0
    for aj in a:
        p *= max(t - aj, 0.0)
    hn = _pow_int(h, n)
    if kind is SchemeKind.S1:
        return _violation(np.float64(p), np.float64(hn * f_x), h)
    return _violation(np.float64(p), np.float64((hn * f_x) * _pow_int(t, n - 1)), h)


# ---------------------------------------------------------------------------
# Residual certificate over a finished field
# ---------------------------------------------------------------------------

def residual_stats(field: GridField, kind: SchemeKind, f) -> float:
    """Max band-violation of the scheme's residual over the whole field.

    Zero (up to float dust) certifies that every node is either inside the
    (1+h) acceptance band or solved exactly (closed form / degenerate cases).
    """
    spec = field.spec
    kind = SchemeKind.parse(kind)
    n, h = spec.n, spec.h
    V = field.values
    F = _eval_rhs_full(f, spec)
    if kind.has_boundary_condition:
        inner = tuple([slice(1, None)] * n)
        t = V[inner]
        prod = None
        for ax in range(n):
            sl = [slice(1, None)] * n
            sl[ax] = slice(None, -1)
            a = V[tuple(sl)]
            fac = np.maximum(t - a, 0.0)
            prod = fac if prod is None else prod * fac
        hn = _pow_int(h, n)
        if kind is SchemeKind.S1:
            target = hn * F[inner]
        else:
            den = t.copy()
            for _ in range(n - 2):
                den = den * t
            target = (hn * F[inner]) * den
        viol = _violation(prod, target, h)
        # boundary nodes must hold exactly zero
        for ax in range(n):
            sl = [slice(None)] * n
            sl[ax] = 0
            viol = max(viol, float(np.max(np.abs(V[tuple(sl)]), initial=0.0)))
        return viol
    prod = None
    for ax in range(n):
        c_shape = [1] * n
        c_shape[ax] = spec.m + 1
        c = (n * np.arange(spec.m + 1, dtype=np.float64)).reshape(c_shape)
        a = np.zeros_like(V)
        sl_to = [slice(None)] * n
        sl_to[ax] = slice(1, None)
        sl_from = [slice(None)] * n
        sl_from[ax] = slice(None, -1)
        a[tuple(sl_to)] = V[tuple(sl_from)]
        fac = np.maximum((1.0 + c) * V - c * a, 0.0)
        prod = fac if prod is None else prod * fac
    return _violation(prod, F, h)


# ---------------------------------------------------------------------------
# Public solve
# ---------------------------------------------------------------------------

def solve(spec: GridSpec, kind, f, *, engine: str = "auto", storage: str = "full",
          force_bisection: bool = False, error_fn=None) -> SolveReport:
    """Solve one scheme over the grid in a single pass.

    f may be a nonnegative constant, a callable on a tuple of broadcastable
    coordinate arrays, or a GridField on the same spec. With
    storage="rolling" the field is not retained; the report then carries the
    final axis-1 slab and, if error_fn is given, the running sup of
    error_fn(values, coords) over all nodes.
    """
    kind = SchemeKind.parse(kind)
    if storage not in ("full", "rolling"):
        raise ValueError(f"unknown storage mode {storage!r}")
    if engine not in ("auto", "wavefront", "sweep"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine == "auto":
        if storage == "rolling" and (spec.n > 2 or force_bisection):
            engine = "sweep"
        else:
            engine = "wavefront"
    if engine == "wavefront" and storage == "rolling" and (spec.n > 2 or force_bisection):
        raise ValueError("rolling storage on the wavefront engine is only "
                         "available for n=2 closed forms; use engine='sweep'")

    t0 = time.perf_counter()
    stats = _BisectStats()
    slab = None
    linf = None
    max_viol = 0.0

    if engine == "wavefront":
        if spec.n == 2 and not force_bisection:
            W, slab, lf, max_viol = _solve_diag_2d(spec, kind, f,
                                                   store=(storage == "full"),
                                                   error_fn=error_fn)
            linf = lf if error_fn is not None else None
        else:
            W, linf, stats = _solve_wavefront_nd(spec, kind, f, error_fn)
    else:
        W, slab, linf, max_viol, stats = _solve_sweep(
            spec, kind, f, storage, force_bisection, error_fn)

    field = GridField(spec, W) if W is not None else None
    if field is not None:
        max_viol = residual_stats(field, kind, f)
    wall = time.perf_counter() - t0
    mean = stats.iters_total / stats.nodes if stats.nodes else 0.0
    return SolveReport(spec=spec, kind=kind, engine=engine, storage=storage,
                       field=field, max_band_violation=max_viol,
                       bisect_nodes=stats.nodes, bisect_iters_max=stats.iters_max,
                       bisect_iters_mean=mean, wall_time=wall,
                       linf_error=linf, final_slab=slab)

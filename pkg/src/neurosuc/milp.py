"""Solver-agnostic MILP representation with a bundled branch-and-bound backend.

The model layer (VarRef/LinExpr/MilpModel) is deliberately minimal: sparse
linear expressions, range constraints lo <= expr <= hi, and a minimize
objective. The bundled solver is a dense bounded-variable simplex plus
best-first branch and bound, sized for desk-scale models (up to a few
thousand variables). Larger jobs go through the external-backend adapter,
which shells out via an LP file and reads back a solution file.
"""

from __future__ import annotations

import heapq
import math
import os
import re
import shlex
import subprocess
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

INF = math.inf

CONTINUOUS = "continuous"
BINARY = "binary"

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
TIME_LIMIT = "time_limit"

FEAS_TOL = 1e-6  # feasibility/integrality tolerance, shared across the toolkit


class ModelError(ValueError):
    """Raised for malformed models or inconsistent solver inputs."""


class BackendError(RuntimeError):
    """Raised when an external solver backend cannot be launched or parsed."""


@dataclass(frozen=True)
class VarRef:
    """Opaque handle to a model variable (bounds live in the owning model)."""

    id: int
    kind: str
    name: str

    def __mul__(self, coef):
        return LinExpr({self.id: float(coef)})

    __rmul__ = __mul__

    def __add__(self, other):
        return LinExpr({self.id: 1.0}) + other

    __radd__ = __add__

    def __sub__(self, other):
        return LinExpr({self.id: 1.0}) - other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __neg__(self):
        return LinExpr({self.id: -1.0})


class LinExpr:
    """Sparse linear expression: sum of coef*var plus a constant."""

    __slots__ = ("terms", "const")

    def __init__(self, terms=None, const=0.0):
        self.terms: dict[int, float] = dict(terms) if terms else {}
        self.const = float(const)

    @staticmethod
    def of(pairs, const=0.0):
        """Build from (var, coef) pairs, merging duplicate variables."""
        e = LinExpr(const=const)
        for var, coef in pairs:
            if coef:
                e.terms[var.id] = e.terms.get(var.id, 0.0) + float(coef)
        return e

    def copy(self):
        return LinExpr(self.terms, self.const)

    def add_term(self, var, coef):
        if coef:
            self.terms[var.id] = self.terms.get(var.id, 0.0) + float(coef)
        return self

    def __add__(self, other):
        e = self.copy()
        if isinstance(other, LinExpr):
            for j, c in other.terms.items():
                e.terms[j] = e.terms.get(j, 0.0) + c
            e.const += other.const
        elif isinstance(other, VarRef):
            e.terms[other.id] = e.terms.get(other.id, 0.0) + 1.0
        else:
            e.const += float(other)
        return e

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, VarRef):
            other = LinExpr({other.id: 1.0})
        if isinstance(other, LinExpr):
            return self + (-1.0) * other
        return self + (-float(other))

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, coef):
        coef = float(coef)
        return LinExpr({j: c * coef for j, c in self.terms.items()}, self.const * coef)

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def value(self, x):
        """Evaluate against a dense value array indexed by variable id."""
        return self.const + sum(c * x[j] for j, c in self.terms.items())


@dataclass
class _Constr:
    expr: LinExpr
    lo: float
    hi: float
    name: str


class MilpModel:
    """A minimize-only linear model over continuous and binary variables."""

    def __init__(self, name="model"):
        self.name = name
        self._vars: list[VarRef] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.constrs: list[_Constr] = []
        self.objective = LinExpr()

    # -- variables -----------------------------------------------------------

    def add_var(self, name, lo=0.0, hi=INF, kind=CONTINUOUS):
        if kind not in (CONTINUOUS, BINARY):
            raise ModelError(f"unknown variable kind {kind!r}")
        if kind == BINARY:
            lo = max(0.0, math.ceil(lo - FEAS_TOL))
            hi = min(1.0, math.floor(hi + FEAS_TOL))
        if lo > hi:
            raise ModelError(f"variable {name}: lower bound {lo} exceeds upper {hi}")
        ref = VarRef(len(self._vars), kind, name)
        self._vars.append(ref)
        self.lb.append(float(lo))
        self.ub.append(float(hi))
        return ref

    def add_binary(self, name):
        return self.add_var(name, 0.0, 1.0, BINARY)

    def set_bounds(self, var, lo, hi):
        if lo > hi:
            raise ModelError(f"variable {var.name}: lower bound {lo} exceeds upper {hi}")
        self.lb[var.id] = float(lo)
        self.ub[var.id] = float(hi)

    def var_bounds(self, var):
        return self.lb[var.id], self.ub[var.id]

    @property
    def variables(self):
        return tuple(self._vars)

    @property
    def num_vars(self):
        return len(self._vars)

    @property
    def num_constrs(self):
        return len(self.constrs)

    @property
    def num_binaries(self):
        return sum(1 for v in self._vars if v.kind == BINARY)

    # -- constraints and objective --------------------------------------------

    def _as_expr(self, expr):
        if isinstance(expr, VarRef):
            expr = LinExpr({expr.id: 1.0})
        if not isinstance(expr, LinExpr):
            raise ModelError(f"expected LinExpr or VarRef, got {type(expr).__name__}")
        for j in expr.terms:
            if j >= len(self._vars):
                raise ModelError(f"expression references unknown variable id {j}")
        return expr

    def add_range(self, expr, lo, hi, name=""):
        """Add lo <= expr <= hi (either side may be infinite)."""
        expr = self._as_expr(expr)
        if lo > hi:
            raise ModelError(f"constraint {name}: lo {lo} > hi {hi}")
        c = _Constr(LinExpr(expr.terms),
                    lo - expr.const if lo > -INF else -INF,
                    hi - expr.const if hi < INF else INF,
                    name or f"c{len(self.constrs)}")
        self.constrs.append(c)
        return c

    def add_le(self, expr, rhs, name=""):
        return self.add_range(expr, -INF, rhs, name)

    def add_ge(self, expr, rhs, name=""):
        return self.add_range(expr, rhs, INF, name)

    def add_eq(self, expr, rhs, name=""):
        return self.add_range(expr, rhs, rhs, name)

    def set_objective(self, expr):
        self.objective = self._as_expr(expr).copy()

    # -- checking --------------------------------------------------------------

    def violation(self, x):
        """Worst constraint/bound/integrality violation of a dense value array."""
        worst = 0.0
        for j, v in enumerate(self._vars):
            worst = max(worst, self.lb[j] - x[j], x[j] - self.ub[j])
            if v.kind == BINARY:
                worst = max(worst, abs(x[j] - round(x[j])))
        for c in self.constrs:
            a = sum(coef * x[j] for j, coef in c.expr.terms.items())
            if c.lo > -INF:
                worst = max(worst, c.lo - a)
            if c.hi < INF:
                worst = max(worst, a - c.hi)
        return worst

    def objective_value(self, x):
        return self.objective.value(x)


@dataclass
class SolverOptions:
    """Knobs shared by the bundled and external backends."""

    time_limit: float = 600.0
    mip_gap_target: float = 1e-4
    backend: str = "bundled"
    threads: int = 1

    def __post_init__(self):
        if self.mip_gap_target < 0:
            raise ModelError("mip_gap_target must be >= 0")


@dataclass
class Solution:
    status: str
    objective: float | None
    values: dict[VarRef, float] = field(default_factory=dict)
    mip_gap: float = INF
    wall_time: float = 0.0

    def value(self, var):
        return self.values[var]

    def dense(self, model):
        x = np.zeros(model.num_vars)
        for v, val in self.values.items():
            x[v.id] = val
        return x


# ---------------------------------------------------------------------------
# Dense bounded-variable simplex
# ---------------------------------------------------------------------------

_AT_LO, _AT_HI, _BASIC, _FREE = 0, 1, 2, 3

_PIVOT_TOL = 1e-9
_RC_TOL = 1e-9
_BOUND_TOL = 1e-7


class _StandardForm:
    """Rows normalized to a.x + s = rhs with slack bounds [0, hi-lo]."""

    def __init__(self, model: MilpModel):
        self.model = model
        n = model.num_vars
        rows = []
        rhs = []
        shi = []
        for c in model.constrs:
            if c.lo <= -INF and c.hi >= INF:
                continue
            if c.hi < INF:
                rows.append((c.expr.terms, 1.0))
                rhs.append(c.hi)
                shi.append(c.hi - c.lo if c.lo > -INF else INF)
            else:
                # lo-only row: flip sign so the slack keeps coefficient +1
                rows.append((c.expr.terms, -1.0))
                rhs.append(-c.lo)
                shi.append(INF)
        m = len(rows)
        self.n, self.m = n, m
        self.A = np.zeros((m, n))
        for i, (terms, sign) in enumerate(rows):
            for j, coef in terms.items():
                self.A[i, j] += sign * coef
        self.rhs = np.asarray(rhs, dtype=float)
        self.c = np.zeros(n + m)
        for j, coef in model.objective.terms.items():
            self.c[j] = coef
        self.lb = np.concatenate([np.asarray(model.lb, dtype=float), np.zeros(m)])
        self.ub = np.concatenate([np.asarray(model.ub, dtype=float),
                                  np.asarray(shi, dtype=float) if m else np.zeros(0)])
        self.binary_ids = np.array([v.id for v in model.variables if v.kind == BINARY],
                                   dtype=int)
        self.obj_const = model.objective.const

    def candidate_objective(self, x):
        """Objective of x (length n) if feasible within FEAS_TOL, else None."""
        if np.any(x < self.lb[: self.n] - FEAS_TOL) or np.any(x > self.ub[: self.n] + FEAS_TOL):
            return None
        if self.binary_ids.size:
            frac = np.abs(x[self.binary_ids] - np.round(x[self.binary_ids]))
            if frac.size and frac.max() > FEAS_TOL:
                return None
        if self.m:
            slack = self.rhs - self.A @ x
            scale = 1.0 + np.abs(self.rhs)
            if np.any(slack < -FEAS_TOL * scale) or np.any(slack > self.ub[self.n:] + FEAS_TOL * scale):
                return None
        return float(self.c[: self.n] @ x)


def _lp_solve(sf: _StandardForm, lb, ub, deadline=None):
    """Two-phase bounded simplex. Returns (status, x, obj) with x over n+m cols.

    Phase 1 drives bound violations of the slack basis to zero by minimizing
    total infeasibility (no artificial columns); phase 2 uses Dantzig pricing
    and falls back to Bland's rule after a degenerate stall, which guarantees
    termination.
    """
    m, n = sf.m, sf.n
    N = n + m
    if np.any(lb > ub + _BOUND_TOL):
        return INFEASIBLE, None, None
    if m == 0:
        lo, hi = lb[:n], ub[:n]
        if np.any((sf.c[:n] > 0) & ~np.isfinite(lo)) or np.any((sf.c[:n] < 0) & ~np.isfinite(hi)):
            return UNBOUNDED, None, -INF
        x = np.where(sf.c[:n] > 0, lo, np.where(sf.c[:n] < 0, hi,
                     np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))))
        return OPTIMAL, x.copy(), float(sf.c[:n] @ x)

    T = np.empty((m, N))
    T[:, :n] = sf.A
    T[:, n:] = 0.0
    np.fill_diagonal(T[:, n:], 1.0)
    buf = np.empty_like(T)

    # nonbasic start: finite bound nearest zero, else free at 0
    stat = np.full(N, _AT_LO, dtype=np.int8)
    xval = np.where(np.isfinite(lb), lb, 0.0)
    hi_only = ~np.isfinite(lb) & np.isfinite(ub)
    stat[hi_only] = _AT_HI
    xval[hi_only] = ub[hi_only]
    free = ~np.isfinite(lb) & ~np.isfinite(ub)
    stat[free] = _FREE
    xval[free] = 0.0
    basis = np.arange(n, N)
    stat[basis] = _BASIC
    xB = sf.rhs - T[:, :n] @ xval[:n]
    xval[basis] = xB

    movable = (ub - lb) > _BOUND_TOL
    scale = max(1.0, float(np.abs(sf.rhs).max(initial=0.0)))

    def infeas():
        return float(np.maximum(lb[basis] - xB, 0.0).sum()
                     + np.maximum(xB - ub[basis], 0.0).sum())

    phase = 1 if infeas() > 1e-8 * scale else 2
    if phase == 2:
        zrow = sf.c - sf.c[basis] @ T

    max_iter = 50 * (m + n) + 10000
    bland = False
    stall = 0
    last_obj = INF

    for it in range(max_iter):
        if deadline is not None and it % 128 == 0 and time.monotonic() > deadline:
            raise TimeoutError("lp time limit")

        if phase == 1:
            total_inf = infeas()
            if total_inf <= 1e-8 * scale:
                np.clip(xB, lb[basis], ub[basis], out=xB)
                xval[basis] = xB
                zrow = sf.c - sf.c[basis] @ T
                phase = 2
                bland = False
                stall = 0
                last_obj = INF
                continue
            d_b = np.where(xB > ub[basis] + _BOUND_TOL, 1.0, 0.0) \
                - np.where(xB < lb[basis] - _BOUND_TOL, 1.0, 0.0)
            zrow = -(d_b @ T)
            zrow[basis] = 0.0
            cur = total_inf
        else:
            cur = float(sf.c @ xval)

        if cur < last_obj - 1e-11 * max(1.0, abs(last_obj)):
            stall = 0
            last_obj = cur
        else:
            stall += 1
            if stall > 2 * m + 200:
                bland = True

        can_up = ((stat == _AT_LO) | (stat == _FREE)) & (zrow < -_RC_TOL) & movable
        can_dn = ((stat == _AT_HI) | (stat == _FREE)) & (zrow > _RC_TOL) & movable
        cand = can_up | can_dn
        if not cand.any():
            if phase == 1:
                return INFEASIBLE, None, None
            return OPTIMAL, xval[:n].copy(), float(sf.c @ xval)
        if bland:
            q = int(np.flatnonzero(cand)[0])
            go_up = bool(can_up[q])
        else:
            score = np.where(can_up, -zrow, 0.0) + np.where(can_dn, zrow, 0.0)
            q = int(np.argmax(score))
            go_up = bool(can_up[q]) and (not can_dn[q] or zrow[q] < 0)
        sign = 1.0 if go_up else -1.0
        d = sign * T[:, q]

        # first-breakpoint ratio test (infeasible basics block at the violated bound)
        lbB, ubB = lb[basis], ub[basis]
        below = xB < lbB - _BOUND_TOL
        above = xB > ubB + _BOUND_TOL
        bp_dn = np.where(above, ubB, np.where(below, -INF, lbB))
        bp_up = np.where(below, lbB, np.where(above, INF, ubB))
        t = np.full(m, INF)
        dn = d > _PIVOT_TOL
        up = d < -_PIVOT_TOL
        with np.errstate(invalid="ignore"):
            t[dn] = (xB[dn] - bp_dn[dn]) / d[dn]
            t[up] = (bp_up[up] - xB[up]) / (-d[up])
        t = np.maximum(t, 0.0)
        span = ub[q] - lb[q]
        t_self = span if (stat[q] != _FREE and np.isfinite(span)) else INF
        r = int(np.argmin(t))
        t_star = min(float(t[r]), t_self)
        if not np.isfinite(t_star):
            if phase == 1:
                raise ArithmeticError("phase-1 unbounded direction")
            return UNBOUNDED, None, -INF

        if t_self <= t[r] + 1e-12:
            # bound flip, basis unchanged
            xB -= t_self * d
            xval[basis] = xB
            if stat[q] == _AT_LO:
                stat[q] = _AT_HI
                xval[q] = ub[q]
            else:
                stat[q] = _AT_LO
                xval[q] = lb[q]
            continue

        ties = np.flatnonzero(t <= t_star + 1e-12)
        if bland:
            r = int(ties[np.argmin(basis[ties])])
        else:
            r = int(ties[np.argmax(np.abs(d[ties]))])
        piv = T[r, q]
        if abs(piv) < _PIVOT_TOL:
            raise ArithmeticError("numerically singular pivot")

        leave = basis[r]
        x_enter = xval[q] + sign * t_star
        xB -= t_star * d
        hit_lo = d[r] > 0
        xval[leave] = bp_dn[r] if hit_lo else bp_up[r]
        stat[leave] = _AT_LO if xval[leave] == lb[leave] else _AT_HI

        T[r] /= piv
        col = T[:, q].copy()
        col[r] = 0.0
        np.multiply(col[:, None], T[r][None, :], out=buf[: m])
        np.subtract(T, buf[: m], out=T)
        if phase == 2:
            zq = zrow[q]
            if zq:
                zrow = zrow - zq * T[r]
            zrow[q] = 0.0
        xB[r] = x_enter
        basis[r] = q
        stat[q] = _BASIC
        xval[basis] = xB

    raise ArithmeticError("simplex iteration limit exceeded")


# ---------------------------------------------------------------------------
# Branch and bound
# ---------------------------------------------------------------------------

def _dense_from_dict(model, values):
    x = np.zeros(model.num_vars)
    for v, val in values.items():
        x[v.id] = float(val)
    return x


def solve(model, options=None, warm_start=None, heuristic=None):
    """Solve a MilpModel, returning a Solution.

    warm_start: optional {VarRef: value} complete assignment used as the
    initial incumbent (validated before use). heuristic: optional callback
    receiving node LP values ({VarRef: value}) and returning a candidate
    assignment or None; lets callers repair LP points into feasible
    solutions cheaply.
    """
    options = options or SolverOptions()
    if options.backend != "bundled":
        return _solve_external(model, options)

    t0 = time.monotonic()
    deadline = t0 + options.time_limit if options.time_limit else None
    sf = _StandardForm(model)
    lb0, ub0 = sf.lb.copy(), sf.ub.copy()
    n = sf.n

    def finish(status, obj, x, gap):
        values = {}
        if x is not None:
            for v in model.variables:
                val = float(x[v.id])
                if v.kind == BINARY:
                    val = float(round(val))
                values[v] = val
        total = obj + sf.obj_const if obj is not None else None
        return Solution(status, total, values, gap, time.monotonic() - t0)

    incumbent_obj = INF
    incumbent_x = None
    if warm_start is not None:
        x = _dense_from_dict(model, warm_start)
        obj = sf.candidate_objective(x)
        if obj is not None:
            incumbent_obj, incumbent_x = obj, x

    def try_candidate(x):
        nonlocal incumbent_obj, incumbent_x
        obj = sf.candidate_objective(x)
        if obj is not None and obj < incumbent_obj - 1e-12:
            incumbent_obj, incumbent_x = obj, x.copy()

    def rel_gap(inc, bound):
        if inc >= INF:
            return INF
        return max(0.0, inc - bound) / max(1e-10, abs(inc))

    try:
        status, x, obj = _lp_solve(sf, lb0, ub0, deadline)
    except TimeoutError:
        return finish(TIME_LIMIT, incumbent_obj if incumbent_x is not None else None,
                      incumbent_x, INF)
    if status != OPTIMAL:
        return finish(status, None, None, INF)

    bins = sf.binary_ids
    if bins.size == 0:
        return finish(OPTIMAL, obj, x[:n], 0.0)

    seq = 0
    heap = [(obj, seq, {})]  # (parent LP bound, tiebreak, binary bound overrides)
    max_pruned_gap = 0.0

    def timeout_result():
        bound = heap[0][0] if heap else incumbent_obj
        if incumbent_x is not None:
            return finish(TIME_LIMIT, incumbent_obj, incumbent_x,
                          rel_gap(incumbent_obj, bound))
        return finish(TIME_LIMIT, None, None, INF)

    while heap:
        if deadline is not None and time.monotonic() > deadline:
            return timeout_result()
        parent_bound, _, fixes = heapq.heappop(heap)
        if incumbent_x is not None:
            g = rel_gap(incumbent_obj, parent_bound)
            if g <= options.mip_gap_target:
                # best-first: every open node is at least this bound
                return finish(OPTIMAL, incumbent_obj, incumbent_x,
                              max(g, max_pruned_gap))

        lb, ub = lb0.copy(), ub0.copy()
        for j, pin in fixes.items():
            lb[j] = ub[j] = pin
        try:
            status, x, obj = _lp_solve(sf, lb, ub, deadline)
        except TimeoutError:
            heapq.heappush(heap, (parent_bound, seq + 1, fixes))
            return timeout_result()
        if status != OPTIMAL:
            continue
        if incumbent_x is not None:
            g = rel_gap(incumbent_obj, obj)
            if g <= options.mip_gap_target:
                max_pruned_gap = max(max_pruned_gap, g)
                continue

        frac = np.abs(x[bins] - np.round(x[bins]))
        if frac.max() <= FEAS_TOL:
            if obj < incumbent_obj - 1e-12:
                incumbent_obj, incumbent_x = obj, x[:n].copy()
            continue

        if heuristic is not None:
            cand = heuristic({v: float(x[v.id]) for v in model.variables})
            if cand is not None:
                try_candidate(_dense_from_dict(model, cand))

        # endgame dive: with few fractional binaries try the rounded fixing
        if int((frac > FEAS_TOL).sum()) <= 3:
            lbr, ubr = lb.copy(), ub.copy()
            rounded = np.round(x[bins])
            lbr[bins] = rounded
            ubr[bins] = rounded
            try:
                st2, x2, _ = _lp_solve(sf, lbr, ubr, deadline)
            except TimeoutError:
                st2 = None
            if st2 == OPTIMAL:
                try_candidate(x2[:n])

        # most-fractional branching; ties broken by lowest variable id
        order = np.lexsort((bins, -frac))
        jb = int(bins[order[0]])
        for pin in (0.0, 1.0):
            child = dict(fixes)
            child[jb] = pin
            seq += 1
            heapq.heappush(heap, (obj, seq, child))

    if incumbent_x is None:
        return finish(INFEASIBLE, None, None, INF)
    return finish(OPTIMAL, incumbent_obj, incumbent_x, max_pruned_gap)


# ---------------------------------------------------------------------------
# LP-format export and the external-backend adapter
# ---------------------------------------------------------------------------

_NAME_RE = re.compile(r"[^A-Za-z0-9_]")


def _sanitize_names(model):
    seen = set()
    out = {}
    for v in model.variables:
        base = _NAME_RE.sub("_", v.name) or "x"
        if base[0].isdigit() or base[0] == "_":
            base = "v" + base
        name = base
        k = 1
        while name in seen:
            k += 1
            name = f"{base}_{k}"
        seen.add(name)
        out[v.id] = name
    return out


def _fmt(x):
    return format(x, ".17g")


def _expr_text(terms, names, const=0.0):
    parts = []
    for j in sorted(terms):
        c = terms[j]
        if c == 0.0:
            continue
        parts.append(("-" if c < 0 else "+", f"{_fmt(abs(c))} {names[j]}"))
    if const:
        parts.append(("-" if const < 0 else "+", _fmt(abs(const))))
    if not parts:
        return "0"
    sign0, body0 = parts[0]
    text = body0 if sign0 == "+" else f"- {body0}"
    for sign, body in parts[1:]:
        text += f" {sign} {body}"
    return text


def export_lp(model):
    """Emit the model in CPLEX LP format.

    Sections appear in the order Minimize / Subject To / Bounds / Binaries /
    End. Range constraints are split into a <= and a >= row so that any LP
    reader can ingest the file; the objective constant is written as a bare
    trailing term, which mainstream readers accept.
    """
    names = _sanitize_names(model)
    lines = ["\\ " + model.name, "Minimize",
             " obj: " + _expr_text(model.objective.terms, names, model.objective.const)]
    lines.append("Subject To")
    cseen = set()
    for idx, c in enumerate(model.constrs):
        base = _NAME_RE.sub("_", c.name) or f"c{idx}"
        if base[0].isdigit():
            base = "c" + base
        nm = base
        k = 1
        while nm in cseen:
            k += 1
            nm = f"{base}_{k}"
        cseen.add(nm)
        body = _expr_text(c.expr.terms, names)
        if c.lo == c.hi:
            lines.append(f" {nm}: {body} = {_fmt(c.lo)}")
        else:
            if c.hi < INF:
                lines.append(f" {nm}: {body} <= {_fmt(c.hi)}")
            if c.lo > -INF:
                suffix = "_lo" if c.hi < INF else ""
                lines.append(f" {nm}{suffix}: {body} >= {_fmt(c.lo)}")
    lines.append("Bounds")
    for v in model.variables:
        lo, hi = model.lb[v.id], model.ub[v.id]
        nm = names[v.id]
        if v.kind == BINARY and lo == 0.0 and hi == 1.0:
            continue
        if lo == hi:
            lines.append(f" {nm} = {_fmt(lo)}")
        elif lo <= -INF and hi >= INF:
            lines.append(f" {nm} free")
        elif lo <= -INF:
            lines.append(f" -inf <= {nm} <= {_fmt(hi)}")
        elif hi >= INF:
            if lo != 0.0:
                lines.append(f" {nm} >= {_fmt(lo)}")
        else:
            lines.append(f" {_fmt(lo)} <= {nm} <= {_fmt(hi)}")
    binaries = [names[v.id] for v in model.variables if v.kind == BINARY]
    if binaries:
        lines.append("Binaries")
        for i in range(0, len(binaries), 8):
            lines.append(" " + " ".join(binaries[i:i + 8]))
    lines.append("End")
    return "\n".join(lines) + "\n"


def parse_solution_file(text):
    """Parse the external-backend solution format.

    One 'name value' pair per line; a '# objective <v>' header carries the
    solver-reported objective. Other comment lines are ignored.
    """
    objective = None
    values = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            fields = line[1:].split()
            if len(fields) >= 2 and fields[0] == "objective":
                objective = float(fields[1])
            continue
        fields = line.split()
        if len(fields) != 2:
            raise BackendError(f"malformed solution line: {raw!r}")
        values[fields[0]] = float(fields[1])
    return objective, values


def _solve_external(model, options):
    backend = options.backend
    if not backend.startswith("cmd:"):
        raise BackendError(f"unknown backend spec: {backend!r}")
    template = backend[4:]
    t0 = time.monotonic()
    names = _sanitize_names(model)
    with tempfile.TemporaryDirectory(prefix="neurosuc_") as tmp:
        lp_path = os.path.join(tmp, "model.lp")
        sol_path = os.path.join(tmp, "model.sol")
        with open(lp_path, "w") as fh:
            fh.write(export_lp(model))
        cmd = [tok.format(lp=lp_path, sol=sol_path, time_limit=options.time_limit)
               for tok in shlex.split(template)]
        try:
            proc = subprocess.run(cmd, capture_output=True, text=True,
                                  timeout=options.time_limit + 60)
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise BackendError(f"backend launch failed: {exc}") from exc
        if proc.returncode != 0:
            raise BackendError(f"backend exited {proc.returncode}: {proc.stderr[-500:]}")
        if not os.path.exists(sol_path):
            raise BackendError("backend produced no solution file")
        with open(sol_path) as fh:
            _, by_name = parse_solution_file(fh.read())
    wall = time.monotonic() - t0
    rev = {nm: vid for vid, nm in names.items()}
    x = np.zeros(model.num_vars)
    for nm, val in by_name.items():
        if nm in rev:
            x[rev[nm]] = val
    if model.violation(x) > 1e-5:
        raise BackendError("external solution violates model constraints")
    values = {v: (float(round(x[v.id])) if v.kind == BINARY else float(x[v.id]))
              for v in model.variables}
    return Solution(OPTIMAL, model.objective_value(x), values,
                    options.mip_gap_target, wall)

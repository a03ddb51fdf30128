"""Unit-commitment MILP construction and recourse-cost evaluation.

Three builders share one constraint vocabulary: the deterministic UC over a
single net-load matrix, the second-stage dispatch LP for a fixed commitment
and one realization, and the extensive form that replicates the dispatch
block per scenario around shared commitment variables.

Conventions: periods are 0-indexed; commitment transition at t=0 is taken
against the unit's initial state; power balance nets all loads system-wide;
line flows use PTDF sensitivities on nodal injections of generation minus
(net load less shedding plus spill). Unserved and excess energy slacks keep
every dispatch LP feasible and are priced at SLACK_PENALTY per MWh.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import milp
from .grid import GridSpec, build_ptdf
from .milp import LinExpr, MilpModel, SolverOptions

SLACK_PENALTY = 10_000.0  # $/MWh on shed/spill


class FormulationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Commitment schedules
# ---------------------------------------------------------------------------

@dataclass
class CommitmentSchedule:
    """Binary commitment (z), start-up (u) and shut-down (v) matrices [G, T]."""

    z: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @staticmethod
    def from_z(grid: GridSpec, z) -> "CommitmentSchedule":
        """Derive u, v from z via the transition logic (unique integral lift)."""
        z = np.asarray(z, dtype=np.int8)
        ng, nt = z.shape
        u = np.zeros_like(z)
        v = np.zeros_like(z)
        for g, gen in enumerate(grid.generators):
            prev = 1 if gen.init_on else 0
            for t in range(nt):
                d = int(z[g, t]) - prev
                u[g, t] = max(0, d)
                v[g, t] = max(0, -d)
                prev = int(z[g, t])
        return CommitmentSchedule(z, u, v)

    def violations(self, grid: GridSpec) -> list[str]:
        """Transition-logic and minimum up/down violations, empty if valid."""
        out = []
        z, u, v = self.z, self.u, self.v
        ng, nt = z.shape
        if ng != grid.n_gens or nt != grid.horizon:
            return [f"shape {z.shape} != ({grid.n_gens}, {grid.horizon})"]
        for g, gen in enumerate(grid.generators):
            prev = 1 if gen.init_on else 0
            for t in range(nt):
                if u[g, t] - v[g, t] != z[g, t] - (prev if t == 0 else z[g, t - 1]):
                    out.append(f"logic g{g} t{t}")
                if u[g, t] and v[g, t]:
                    out.append(f"simultaneous start/stop g{g} t{t}")
                lo_u = max(0, t - gen.min_up + 1)
                if u[g, lo_u:t + 1].sum() > z[g, t]:
                    out.append(f"min-up g{g} t{t}")
                lo_v = max(0, t - gen.min_dn + 1)
                if v[g, lo_v:t + 1].sum() > 1 - z[g, t]:
                    out.append(f"min-down g{g} t{t}")
            if gen.init_hours is not None:
                need_on = gen.min_up - gen.init_hours if gen.init_on else 0
                need_off = gen.min_dn - gen.init_hours if not gen.init_on else 0
                for t in range(min(nt, max(need_on, 0))):
                    if not z[g, t]:
                        out.append(f"residual min-up g{g} t{t}")
                for t in range(min(nt, max(need_off, 0))):
                    if z[g, t]:
                        out.append(f"residual min-down g{g} t{t}")
        return out

    def first_stage_cost(self, grid: GridSpec) -> float:
        su = np.array([g.startup_cost for g in grid.generators])
        sd = np.array([g.shutdown_cost for g in grid.generators])
        return float(su @ self.u.sum(axis=1) + sd @ self.v.sum(axis=1))


@dataclass
class DispatchSchedule:
    p: np.ndarray      # [G, T] MW
    shed: np.ndarray   # [D, T] MW unserved
    spill: np.ndarray  # [D, T] MW absorbed excess


@dataclass
class RecourseResult:
    cost: float
    dispatch: DispatchSchedule
    feasible_without_slack: bool


# ---------------------------------------------------------------------------
# Shared constraint blocks
# ---------------------------------------------------------------------------

def add_commitment(model: MilpModel, grid: GridSpec, tag="", relax=False):
    """Add z/u/v binaries with transition logic and min up/down windows.

    Windows truncate at the start of the horizon; residual obligations from
    the initial state are pinned only when a generator declares init_hours.
    relax=True creates continuous [0,1] variables instead of binaries.
    Returns (z, u, v) as [G][T] lists of variable handles.
    """
    ng, nt = grid.n_gens, grid.horizon

    def newvar(name):
        if relax:
            return model.add_var(name, 0.0, 1.0)
        return model.add_binary(name)

    z = [[newvar(f"z{tag}_{g}_{t}") for t in range(nt)] for g in range(ng)]
    u = [[newvar(f"u{tag}_{g}_{t}") for t in range(nt)] for g in range(ng)]
    v = [[newvar(f"v{tag}_{g}_{t}") for t in range(nt)] for g in range(ng)]
    for g, gen in enumerate(grid.generators):
        z0 = 1.0 if gen.init_on else 0.0
        for t in range(nt):
            prev = LinExpr(const=z0) if t == 0 else LinExpr({z[g][t - 1].id: 1.0})
            model.add_eq(u[g][t] - v[g][t] - z[g][t] + prev, 0.0, f"logic_{g}_{t}")
            model.add_le(u[g][t] + v[g][t], 1.0, f"uv_{g}_{t}")
            lo = max(0, t - gen.min_up + 1)
            model.add_le(LinExpr.of((u[g][tau], 1.0) for tau in range(lo, t + 1)) - z[g][t],
                         0.0, f"minup_{g}_{t}")
            lo = max(0, t - gen.min_dn + 1)
            model.add_le(LinExpr.of((v[g][tau], 1.0) for tau in range(lo, t + 1)) + z[g][t],
                         1.0, f"mindn_{g}_{t}")
        if gen.init_hours is not None:
            if gen.init_on:
                for t in range(min(nt, max(0, gen.min_up - gen.init_hours))):
                    model.set_bounds(z[g][t], 1.0, 1.0)
            else:
                for t in range(min(nt, max(0, gen.min_dn - gen.init_hours))):
                    model.set_bounds(z[g][t], 0.0, 0.0)
    return z, u, v


def first_stage_expr(grid: GridSpec, u, v) -> LinExpr:
    e = LinExpr()
    for g, gen in enumerate(grid.generators):
        for t in range(grid.horizon):
            e.add_term(u[g][t], gen.startup_cost)
            e.add_term(v[g][t], gen.shutdown_cost)
    return e


@dataclass
class DispatchVars:
    p: list
    shed: list
    spill: list
    cost: LinExpr  # fuel plus slack penalties for this block


def _add_dispatch(model, grid, xi, z=None, z_fixed=None, include_slack=True,
                  slack_penalty=SLACK_PENALTY, ptdf=None, tag="", include_lines=True):
    """One dispatch block: balance, line limits, capacity, ramping.

    Exactly one of z (variable handles) or z_fixed (constant 0/1 matrix) is
    given. With z_fixed, capacity limits become variable bounds.
    """
    ng, nt, nd = grid.n_gens, grid.horizon, grid.n_loads
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (nd, nt):
        raise FormulationError(f"net load shape {xi.shape} != ({nd}, {nt})")
    cost = LinExpr()
    p = [[None] * nt for _ in range(ng)]
    for g, gen in enumerate(grid.generators):
        for t in range(nt):
            hi = gen.p_max if z_fixed is None else gen.p_max * float(z_fixed[g, t])
            lo = 0.0 if z_fixed is None else gen.p_min * float(z_fixed[g, t])
            # ramp at t=0 is a pure bound around the initial output
            if t == 0:
                lo = max(lo, gen.init_power - gen.ramp_dn)
                hi = min(hi, gen.init_power + gen.ramp_up)
            if lo > hi:
                raise FormulationError(
                    f"generator {gen.name}: infeasible output window at t=0 "
                    f"(initial power vs ramp limits)")
            p[g][t] = model.add_var(f"p{tag}_{g}_{t}", lo, hi)
        segs = gen.cost_segments
        if len(segs) == 1:
            for t in range(nt):
                cost.add_term(p[g][t], segs[0][1])
        else:
            prev_bp = 0.0
            segvars = []
            for k, (bp, mc) in enumerate(segs):
                width = bp - prev_bp
                prev_bp = bp
                row = [model.add_var(f"pseg{tag}_{g}_{t}_{k}", 0.0, max(width, 0.0))
                       for t in range(nt)]
                segvars.append(row)
                for t in range(nt):
                    cost.add_term(row[t], mc)
            for t in range(nt):
                link = LinExpr({p[g][t].id: 1.0})
                for row in segvars:
                    link.add_term(row[t], -1.0)
                model.add_eq(link, 0.0, f"seg{tag}_{g}_{t}")
        for t in range(1, nt):
            model.add_range(p[g][t] - p[g][t - 1], -gen.ramp_dn, gen.ramp_up,
                            f"ramp{tag}_{g}_{t}")
        if z is not None:
            for t in range(nt):
                model.add_le(p[g][t] - gen.p_max * z[g][t], 0.0, f"cap_hi{tag}_{g}_{t}")
                model.add_le(gen.p_min * z[g][t] - p[g][t], 0.0, f"cap_lo{tag}_{g}_{t}")

    shed = [[None] * nt for _ in range(nd)]
    spill = [[None] * nt for _ in range(nd)]
    if include_slack:
        for d in range(nd):
            for t in range(nt):
                shed[d][t] = model.add_var(f"shed{tag}_{d}_{t}", 0.0, milp.INF)
                spill[d][t] = model.add_var(f"spill{tag}_{d}_{t}", 0.0, milp.INF)
                cost.add_term(shed[d][t], slack_penalty)
                cost.add_term(spill[d][t], slack_penalty)

    for t in range(nt):
        bal = LinExpr.of((p[g][t], 1.0) for g in range(ng))
        if include_slack:
            for d in range(nd):
                bal.add_term(shed[d][t], 1.0)
                bal.add_term(spill[d][t], -1.0)
        model.add_eq(bal, float(xi[:, t].sum()), f"balance{tag}_{t}")

    limited = [(l, ln) for l, ln in enumerate(grid.lines)
               if np.isfinite(ln.capacity)] if include_lines else []
    if limited:
        gamma = (ptdf if ptdf is not None else build_ptdf(grid)).matrix
        for l, ln in limited:
            for t in range(nt):
                flow = LinExpr()
                for g, gen in enumerate(grid.generators):
                    flow.add_term(p[g][t], gamma[l, gen.bus])
                const = 0.0
                for d, load in enumerate(grid.loads):
                    const -= gamma[l, load.bus] * xi[d, t]
                    if include_slack:
                        flow.add_term(shed[d][t], gamma[l, load.bus])
                        flow.add_term(spill[d][t], -gamma[l, load.bus])
                flow.const = const
                model.add_range(flow, -ln.capacity, ln.capacity, f"line{tag}_{l}_{t}")
    return DispatchVars(p, shed, spill, cost)


# ---------------------------------------------------------------------------
# Full models
# ---------------------------------------------------------------------------

@dataclass
class UcHandles:
    z: list
    u: list
    v: list
    blocks: list  # DispatchVars, one per scenario (single entry when deterministic)


def build_deterministic_uc(grid: GridSpec, net_load, include_slack=False,
                           slack_penalty=SLACK_PENALTY, ptdf=None):
    """Single-scenario UC: fuel + transition costs over all constraints."""
    model = MilpModel(f"uc_{grid.name}")
    z, u, v = add_commitment(model, grid)
    block = _add_dispatch(model, grid, net_load, z=z, include_slack=include_slack,
                          slack_penalty=slack_penalty, ptdf=ptdf)
    model.set_objective(block.cost + first_stage_expr(grid, u, v))
    return model, UcHandles(z, u, v, [block])


def build_recourse_lp(grid: GridSpec, z, xi, slack_penalty=SLACK_PENALTY, ptdf=None):
    """Dispatch LP for a fixed commitment matrix under one realization.

    Always feasible via shed/spill whenever each unit's ramp limits cover its
    minimum output and initial state transitions (warned against otherwise in
    grid validation); contains no binaries.
    """
    z = np.asarray(z)
    sched = CommitmentSchedule.from_z(grid, z)
    bad = sched.violations(grid)
    if bad:
        raise FormulationError(f"commitment violates logic constraints: {bad[:3]}")
    model = MilpModel(f"recourse_{grid.name}")
    block = _add_dispatch(model, grid, xi, z_fixed=np.asarray(z, dtype=float),
                          include_slack=True, slack_penalty=slack_penalty, ptdf=ptdf)
    model.set_objective(block.cost)
    return model, block


def dispatch_from_solution(grid, block: DispatchVars, sol) -> DispatchSchedule:
    ng, nt, nd = grid.n_gens, grid.horizon, grid.n_loads
    p = np.array([[sol.value(block.p[g][t]) for t in range(nt)] for g in range(ng)])
    if block.shed[0] and block.shed[0][0] is not None:
        shed = np.array([[sol.value(block.shed[d][t]) for t in range(nt)] for d in range(nd)])
        spill = np.array([[sol.value(block.spill[d][t]) for t in range(nt)] for d in range(nd)])
    else:
        shed = np.zeros((nd, nt))
        spill = np.zeros((nd, nt))
    return DispatchSchedule(p, shed, spill)


def eval_recourse(grid: GridSpec, z, xi, options=None, ptdf=None,
                  slack_penalty=SLACK_PENALTY) -> RecourseResult:
    """Solve the dispatch LP and report cost plus slack usage."""
    model, block = build_recourse_lp(grid, z, xi, slack_penalty=slack_penalty, ptdf=ptdf)
    sol = milp.solve(model, options or SolverOptions())
    if sol.status != milp.OPTIMAL:
        raise RuntimeError(f"recourse LP unexpectedly {sol.status}; check ramp limits "
                           f"against minimum outputs")
    dispatch = dispatch_from_solution(grid, block, sol)
    total_slack = float(dispatch.shed.sum() + dispatch.spill.sum())
    return RecourseResult(sol.objective, dispatch, total_slack < 1e-6)


def expected_recourse(grid: GridSpec, z, scenarios, options=None, ptdf=None,
                      slack_penalty=SLACK_PENALTY) -> float:
    """Probability-weighted recourse cost over a scenario set."""
    if ptdf is None:
        ptdf = build_ptdf(grid)
    return float(sum(
        s.probability * eval_recourse(grid, z, s.net_load, options=options,
                                      ptdf=ptdf, slack_penalty=slack_penalty).cost
        for s in scenarios))


def build_extensive_form(grid: GridSpec, scenarios, include_slack=True,
                         slack_penalty=SLACK_PENALTY, ptdf=None,
                         relax_binaries=False, include_lines=True):
    """Scenario-replicated two-stage UC with shared commitment variables.

    Objective: start-up/shut-down cost plus the probability-weighted sum of
    per-scenario fuel and slack cost. relax_binaries/include_lines support
    the linearized anchor solve used for hot starts.
    """
    if len(scenarios) < 1:
        raise FormulationError("empty scenario set")
    model = MilpModel(f"ext_{grid.name}_S{len(scenarios)}")
    z, u, v = add_commitment(model, grid, relax=relax_binaries)
    if ptdf is None and include_lines and grid.n_lines:
        ptdf = build_ptdf(grid)
    obj = first_stage_expr(grid, u, v)
    blocks = []
    for s, scen in enumerate(scenarios):
        block = _add_dispatch(model, grid, scen.net_load, z=z,
                              include_slack=include_slack,
                              slack_penalty=slack_penalty, ptdf=ptdf, tag=f"s{s}",
                              include_lines=include_lines)
        obj = obj + scen.probability * block.cost
        blocks.append(block)
    model.set_objective(obj)
    return model, UcHandles(z, u, v, blocks)


def schedule_from_solution(grid: GridSpec, handles: UcHandles, sol) -> CommitmentSchedule:
    """Round z and re-derive u/v so the logic identities hold exactly."""
    ng, nt = grid.n_gens, grid.horizon
    z = np.array([[round(sol.value(handles.z[g][t])) for t in range(nt)]
                  for g in range(ng)], dtype=np.int8)
    return CommitmentSchedule.from_z(grid, z)

"""Power-system data model, MATPOWER case ingestion, and PTDF computation.

Buses are reindexed to 0..n-1 in file order; all cross-references in the
returned GridSpec use the new indices. Unit-commitment parameters that
MATPOWER cases do not carry (start-up/shut-down cost, minimum up/down
times, ramps, initial status) come from a companion supplement file with
one record per generator.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass

import numpy as np

INF = math.inf


class GridError(ValueError):
    """Validation or parse failure in grid data."""


@dataclass(frozen=True)
class Bus:
    id: int
    is_slack: bool = False


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    reactance: float   # per unit, > 0
    capacity: float    # MW flow limit; inf = unlimited

    def __post_init__(self):
        if self.from_bus == self.to_bus:
            raise GridError(f"line {self.from_bus}->{self.to_bus}: self-loop")
        if self.reactance <= 0:
            raise GridError(f"line {self.from_bus}->{self.to_bus}: reactance must be > 0")
        if self.capacity < 0:
            raise GridError(f"line {self.from_bus}->{self.to_bus}: negative capacity")


@dataclass(frozen=True)
class Generator:
    """Thermal unit with piecewise-linear convex fuel cost.

    cost_segments is an ordered list of (breakpoint MW, marginal $/MWh)
    covering output from 0 up to p_max; marginal costs must be
    non-decreasing. Fuel cost at output p is the integral of the marginal
    curve from 0 to p (constant cost offsets are dropped at parse time).
    init_hours optionally records how long the unit has been in its initial
    state; None means long enough that no residual min-up/min-down
    obligation crosses the start of the horizon.
    """

    bus: int
    p_min: float
    p_max: float
    ramp_up: float
    ramp_dn: float
    min_up: int
    min_dn: int
    cost_segments: tuple[tuple[float, float], ...]
    startup_cost: float
    shutdown_cost: float
    init_on: bool
    init_power: float
    init_hours: int | None = None
    name: str = ""

    def __post_init__(self):
        if not (0 <= self.p_min <= self.p_max):
            raise GridError(f"generator {self.name}: need 0 <= p_min <= p_max")
        if self.ramp_up < 0 or self.ramp_dn < 0:
            raise GridError(f"generator {self.name}: ramp limits must be >= 0")
        if self.min_up < 1 or self.min_dn < 1:
            raise GridError(f"generator {self.name}: min_up/min_dn must be >= 1")
        mcs = [mc for _, mc in self.cost_segments]
        if any(m2 < m1 - 1e-12 for m1, m2 in zip(mcs, mcs[1:])):
            raise GridError(f"generator {self.name}: marginal costs must be non-decreasing")
        if not self.init_on and self.init_power != 0:
            raise GridError(f"generator {self.name}: offline unit with nonzero init_power")
        if self.init_on and not (self.p_min - 1e-9 <= self.init_power <= self.p_max + 1e-9):
            raise GridError(f"generator {self.name}: init_power outside [p_min, p_max]")
        # strict ramping (no start/stop exceptions) makes transitions dispatch-
        # infeasible when ramps cannot cover the minimum output
        if min(self.ramp_up, self.ramp_dn) < self.p_min or self.init_power - self.ramp_dn > 1e-9:
            warnings.warn(
                f"generator {self.name}: ramp limits below p_min (or initial power "
                f"above ramp_dn); some commitment transitions will be infeasible",
                stacklevel=2)

    def fuel_cost(self, p):
        """Fuel cost of output p from the marginal curve."""
        cost = 0.0
        prev = 0.0
        for bp, mc in self.cost_segments:
            seg = min(p, bp) - prev
            if seg <= 0:
                break
            cost += mc * seg
            prev = bp
        return cost


@dataclass(frozen=True)
class Load:
    bus: int
    peak: tuple[float, ...]  # per-period peak MW profile

    def __post_init__(self):
        if any(v < 0 for v in self.peak):
            raise GridError(f"load at bus {self.bus}: negative peak value")


@dataclass(frozen=True)
class GridSpec:
    buses: tuple[Bus, ...]
    lines: tuple[Line, ...]
    generators: tuple[Generator, ...]
    loads: tuple[Load, ...]
    horizon: int
    name: str = "grid"

    def __post_init__(self):
        if self.horizon < 1:
            raise GridError("horizon must be >= 1")
        ids = [b.id for b in self.buses]
        if ids != list(range(len(ids))):
            raise GridError("bus ids must be contiguous from 0")
        slacks = [b.id for b in self.buses if b.is_slack]
        if len(slacks) != 1:
            raise GridError(f"need exactly one slack bus, found {len(slacks)}")
        nb = len(self.buses)
        for ln in self.lines:
            if not (0 <= ln.from_bus < nb and 0 <= ln.to_bus < nb):
                raise GridError(f"line {ln.from_bus}->{ln.to_bus}: unknown bus")
        for g in self.generators:
            if not (0 <= g.bus < nb):
                raise GridError(f"generator {g.name}: unknown bus {g.bus}")
        for d in self.loads:
            if not (0 <= d.bus < nb):
                raise GridError(f"load references unknown bus {d.bus}")
            if len(d.peak) != self.horizon:
                raise GridError(f"load at bus {d.bus}: profile length {len(d.peak)} != horizon")
        if not _connected(nb, self.lines):
            raise GridError("network is not connected")

    @property
    def slack(self):
        return next(b.id for b in self.buses if b.is_slack)

    @property
    def n_buses(self):
        return len(self.buses)

    @property
    def n_lines(self):
        return len(self.lines)

    @property
    def n_gens(self):
        return len(self.generators)

    @property
    def n_loads(self):
        return len(self.loads)

    def peak_matrix(self):
        """Loads-by-periods matrix of peak values."""
        return np.array([d.peak for d in self.loads], dtype=float)


@dataclass(frozen=True)
class PtdfMatrix:
    """Line-by-bus injection sensitivities; slack column is identically zero."""

    matrix: np.ndarray

    def flows(self, injections):
        return self.matrix @ injections


def _connected(n_buses, lines):
    if n_buses <= 1:
        return True
    parent = list(range(n_buses))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for ln in lines:
        ra, rb = find(ln.from_bus), find(ln.to_bus)
        if ra != rb:
            parent[ra] = rb
    root = find(0)
    return all(find(b) == root for b in range(n_buses))


def build_ptdf(grid: GridSpec) -> PtdfMatrix:
    """Power transfer distribution factors from the reduced susceptance matrix.

    Entry [l, n] is the MW flow induced on line l (oriented from->to) by
    injecting 1 MW at bus n and withdrawing it at the slack.
    """
    nb, nl = grid.n_buses, grid.n_lines
    slack = grid.slack
    if nl == 0:
        return PtdfMatrix(np.zeros((0, nb)))
    A = np.zeros((nl, nb))
    for i, ln in enumerate(grid.lines):
        A[i, ln.from_bus] = 1.0
        A[i, ln.to_bus] = -1.0
    b = np.array([1.0 / ln.reactance for ln in grid.lines])
    Bf = b[:, None] * A
    Bbus = A.T @ Bf
    keep = [n for n in range(nb) if n != slack]
    try:
        inv = np.linalg.inv(Bbus[np.ix_(keep, keep)])
    except np.linalg.LinAlgError as exc:
        raise GridError("singular susceptance matrix (disconnected network?)") from exc
    gamma = np.zeros((nl, nb))
    gamma[:, keep] = Bf[:, keep] @ inv
    return PtdfMatrix(gamma)


# ---------------------------------------------------------------------------
# MATPOWER parsing
# ---------------------------------------------------------------------------

_MAT_BLOCK = re.compile(r"mpc\.(\w+)\s*=\s*\[")


def _parse_matrix_blocks(text):
    """Extract mpc.<name> = [ ... ]; numeric tables with line numbers."""
    blocks = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        stripped = lines[i].split("%", 1)[0]
        mobj = _MAT_BLOCK.search(stripped)
        if not mobj:
            i += 1
            continue
        name = mobj.group(1)
        rows = []
        rest = stripped[mobj.end():]
        lineno = i + 1
        closed = False
        while i < len(lines):
            chunk = rest if rest is not None else lines[i].split("%", 1)[0]
            rest = None
            if "]" in chunk:
                chunk = chunk.split("]", 1)[0]
                closed = True
            for rowtxt in chunk.replace(",", " ").split(";"):
                vals = rowtxt.split()
                if vals:
                    try:
                        rows.append([float(v) for v in vals])
                    except ValueError as exc:
                        raise GridError(f"line {i + 1}: malformed {name} row: {rowtxt.strip()!r}") from exc
            if closed:
                break
            i += 1
        if not closed:
            raise GridError(f"line {lineno}: unterminated matrix mpc.{name}")
        blocks[name] = (rows, lineno)
        i += 1
    return blocks


def _gencost_to_segments(row, p_max, segments, lineno, name):
    model = int(row[0])
    ncost = int(row[3])
    params = row[4:4 + (2 * ncost if model == 1 else ncost)]
    if model == 2:
        # polynomial, highest order first; constant offsets are dropped
        coeffs = params
        if ncost >= 4:
            raise GridError(f"line {lineno}: {name}: cubic+ gencost unsupported")
        c2 = coeffs[0] if ncost == 3 else 0.0
        c1 = coeffs[-2] if ncost >= 2 else 0.0
        if c2 < -1e-12:
            raise GridError(f"line {lineno}: {name}: concave quadratic cost")
        if abs(c2) < 1e-12:
            return ((p_max, c1),)
        k = max(1, int(segments))
        bps = np.linspace(0.0, p_max, k + 1)
        f = lambda p: c2 * p * p + c1 * p
        segs = []
        for a, b_ in zip(bps[:-1], bps[1:]):
            segs.append((float(b_), (f(b_) - f(a)) / (b_ - a)))
        return tuple(segs)
    if model == 1:
        pts = [(params[2 * i], params[2 * i + 1]) for i in range(ncost)]
        xs = [p[0] for p in pts]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise GridError(f"line {lineno}: {name}: piecewise breakpoints not increasing")
        segs = []
        for (xa, ya), (xb, yb) in zip(pts, pts[1:]):
            segs.append((float(xb), (yb - ya) / (xb - xa)))
        if not segs:
            raise GridError(f"line {lineno}: {name}: piecewise cost needs >= 2 points")
        if xs[0] > 0:
            segs.insert(0, (float(xs[0]), segs[0][1]))
        if segs[-1][0] < p_max:
            segs[-1] = (float(p_max), segs[-1][1])
        return tuple(segs)
    raise GridError(f"line {lineno}: {name}: unknown gencost model {model}")


def parse_uc_supplement(text):
    """Parse the per-generator UC record file.

    Format: one record per line, comma or whitespace separated:
    gen_index, startup_cost, shutdown_cost, min_up, min_dn, ramp_up,
    ramp_dn, init_on, init_power. '#' starts a comment.
    """
    records = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        if len(fields) != 9:
            raise GridError(f"line {lineno}: UC record needs 9 fields, got {len(fields)}")
        try:
            idx = int(fields[0])
            rec = dict(
                startup_cost=float(fields[1]), shutdown_cost=float(fields[2]),
                min_up=int(fields[3]), min_dn=int(fields[4]),
                ramp_up=float(fields[5]), ramp_dn=float(fields[6]),
                init_on=bool(int(fields[7])), init_power=float(fields[8]),
            )
        except ValueError as exc:
            raise GridError(f"line {lineno}: malformed UC record: {raw.strip()!r}") from exc
        if idx in records:
            raise GridError(f"line {lineno}: duplicate UC record for generator {idx}")
        records[idx] = rec
    return records


def default_profile(horizon):
    """Normalized daily net-load shape resampled to the given horizon."""
    base = np.array([
        0.71, 0.67, 0.65, 0.64, 0.66, 0.72, 0.81, 0.89,
        0.93, 0.95, 0.97, 0.98, 0.97, 0.96, 0.95, 0.96,
        0.98, 1.00, 0.99, 0.96, 0.92, 0.86, 0.79, 0.74,
    ])
    if horizon == base.size:
        return base.copy()
    xs = np.linspace(0.0, 1.0, horizon)
    return np.interp(xs, np.linspace(0.0, 1.0, base.size), base)


def parse_matpower(text, uc_supplement, horizon=24, profile=None,
                   segments=3, slack_bus=None, name="grid"):
    """Build a GridSpec from MATPOWER case text plus a UC supplement.

    horizon sets the number of scheduling periods; profile (length horizon,
    defaults to a normalized daily shape) scales each bus's PD into a
    per-period peak-load profile. Quadratic fuel costs are linearized into
    `segments` equal-width pieces. slack_bus overrides the MATPOWER
    reference bus (given as an original MATPOWER bus number).
    """
    blocks = _parse_matrix_blocks(text)
    for required in ("bus", "gen", "branch", "gencost"):
        if required not in blocks:
            raise GridError(f"missing mpc.{required} table")
    bus_rows, bus_ln = blocks["bus"]
    gen_rows, gen_ln = blocks["gen"]
    br_rows, br_ln = blocks["branch"]
    gc_rows, gc_ln = blocks["gencost"]
    if profile is None:
        profile = default_profile(horizon)
    profile = np.asarray(profile, dtype=float)
    if profile.shape != (horizon,):
        raise GridError(f"profile length {profile.size} != horizon {horizon}")

    id_map = {}
    buses = []
    ref_orig = None
    for k, row in enumerate(bus_rows):
        if len(row) < 13:
            raise GridError(f"line {bus_ln}: bus row {k} too short")
        orig = int(row[0])
        if orig in id_map:
            raise GridError(f"line {bus_ln}: duplicate bus number {orig}")
        id_map[orig] = k
        if int(row[1]) == 3:
            ref_orig = orig
    slack_orig = slack_bus if slack_bus is not None else ref_orig
    if slack_orig is None or slack_orig not in id_map:
        raise GridError("no reference bus found (and no valid slack override)")
    for k, row in enumerate(bus_rows):
        buses.append(Bus(id=k, is_slack=(int(row[0]) == slack_orig)))

    lines = []
    for k, row in enumerate(br_rows):
        if len(row) < 11:
            raise GridError(f"line {br_ln}: branch row {k} too short")
        if int(row[10]) == 0:
            continue
        f, t = int(row[0]), int(row[1])
        if f not in id_map or t not in id_map:
            raise GridError(f"line {br_ln}: branch row {k} references unknown bus")
        rate = float(row[5])
        lines.append(Line(id_map[f], id_map[t], float(row[3]),
                          INF if rate == 0 else rate))

    uc = parse_uc_supplement(uc_supplement)
    gens = []
    for k, row in enumerate(gen_rows):
        if len(row) < 10:
            raise GridError(f"line {gen_ln}: gen row {k} too short")
        if int(row[7]) <= 0:
            continue
        if int(row[0]) not in id_map:
            raise GridError(f"line {gen_ln}: gen row {k} references unknown bus {int(row[0])}")
        if k not in uc:
            raise GridError(f"generator {k}: missing UC supplement record")
        if k >= len(gc_rows):
            raise GridError(f"line {gc_ln}: no gencost row for generator {k}")
        p_max, p_min = float(row[8]), float(row[9])
        segs = _gencost_to_segments(gc_rows[k], p_max, segments, gc_ln, f"gen{k}")
        gens.append(Generator(
            bus=id_map[int(row[0])], p_min=p_min, p_max=p_max,
            cost_segments=segs, name=f"g{k}", **uc[k]))

    loads = []
    for k, row in enumerate(bus_rows):
        pd = float(row[2])
        if pd > 0:
            loads.append(Load(bus=k, peak=tuple(float(pd * s) for s in profile)))

    return GridSpec(tuple(buses), tuple(lines), tuple(gens), tuple(loads),
                    horizon=horizon, name=name)


# ---------------------------------------------------------------------------
# GridSpec serialization (round-trips all numeric fields exactly)
# ---------------------------------------------------------------------------

def _r(x):
    return repr(float(x))


def serialize_gridspec(grid: GridSpec) -> str:
    out = ["gridspec v1", f"name={grid.name}", f"horizon={grid.horizon}",
           f"buses={grid.n_buses}", f"slack={grid.slack}"]
    for ln in grid.lines:
        out.append(f"line from={ln.from_bus} to={ln.to_bus} x={_r(ln.reactance)} cap={_r(ln.capacity)}")
    for g in grid.generators:
        segs = ";".join(f"{_r(bp)}:{_r(mc)}" for bp, mc in g.cost_segments)
        out.append(
            f"gen name={g.name} bus={g.bus} p_min={_r(g.p_min)} p_max={_r(g.p_max)}"
            f" ramp_up={_r(g.ramp_up)} ramp_dn={_r(g.ramp_dn)} min_up={g.min_up} min_dn={g.min_dn}"
            f" su={_r(g.startup_cost)} sd={_r(g.shutdown_cost)} init_on={int(g.init_on)}"
            f" init_p={_r(g.init_power)} init_hours={'' if g.init_hours is None else g.init_hours}"
            f" segs={segs}")
    for d in grid.loads:
        out.append(f"load bus={d.bus} peak=" + " ".join(_r(v) for v in d.peak))
    return "\n".join(out) + "\n"


def parse_gridspec(text: str) -> GridSpec:
    lines_in = text.splitlines()
    if not lines_in or lines_in[0].strip() != "gridspec v1":
        raise GridError("not a gridspec v1 file")
    meta = {}
    lines, gens, loads = [], [], []
    for lineno, raw in enumerate(lines_in[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        head, _, rest = line.partition(" ")
        if "=" in head:
            k, _, v = head.partition("=")
            meta[k] = v if not rest else v + " " + rest
            continue
        kv = {}
        for tok in rest.split():
            if "=" in tok:
                k, _, v = tok.partition("=")
                kv[k] = v
            else:
                kv.setdefault("_extra", []).append(tok)
        try:
            if head == "line":
                lines.append(Line(int(kv["from"]), int(kv["to"]),
                                  float(kv["x"]), float(kv["cap"])))
            elif head == "gen":
                segs = tuple(
                    (float(p.split(":")[0]), float(p.split(":")[1]))
                    for p in kv["segs"].split(";") if p)
                gens.append(Generator(
                    bus=int(kv["bus"]), p_min=float(kv["p_min"]), p_max=float(kv["p_max"]),
                    ramp_up=float(kv["ramp_up"]), ramp_dn=float(kv["ramp_dn"]),
                    min_up=int(kv["min_up"]), min_dn=int(kv["min_dn"]),
                    cost_segments=segs, startup_cost=float(kv["su"]),
                    shutdown_cost=float(kv["sd"]), init_on=bool(int(kv["init_on"])),
                    init_power=float(kv["init_p"]),
                    init_hours=int(kv["init_hours"]) if kv.get("init_hours") else None,
                    name=kv.get("name", "")))
            elif head == "load":
                peak_txt = rest.split("peak=", 1)[1]
                loads.append(Load(int(kv["bus"]),
                                  tuple(float(v) for v in peak_txt.split())))
            else:
                raise GridError(f"line {lineno}: unknown record {head!r}")
        except (KeyError, IndexError, ValueError) as exc:
            raise GridError(f"line {lineno}: malformed {head} record") from exc
    try:
        n_buses = int(meta["buses"])
        slack = int(meta["slack"])
        horizon = int(meta["horizon"])
    except (KeyError, ValueError) as exc:
        raise GridError("missing or malformed header fields") from exc
    buses = tuple(Bus(i, is_slack=(i == slack)) for i in range(n_buses))
    return GridSpec(buses, tuple(lines), tuple(gens), tuple(loads),
                    horizon=horizon, name=meta.get("name", "grid"))

"""Net-load scenario sampling and scenario-set management.

Randomness comes from numpy's seedable PCG64 generator. A scenario set is
drawn from a single stream seeded by the given integer; callers that need
several independent sets derive child seeds with
numpy.random.SeedSequence(seed).spawn(k), which is reproducible across
platforms. Values are drawn scenario-major, then load-major, then
period-major, so identical seeds give bitwise-identical sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    """One net-load realization: loads-by-periods matrix plus its probability."""

    net_load: np.ndarray
    probability: float

    def __post_init__(self):
        object.__setattr__(self, "net_load", np.asarray(self.net_load, dtype=float))
        self.net_load.setflags(write=False)
        if not (0.0 <= self.probability <= 1.0):
            raise ScenarioError(f"probability {self.probability} outside [0, 1]")
        if np.any(self.net_load < 0):
            raise ScenarioError("negative net load")


@dataclass(frozen=True)
class ScenarioSet:
    scenarios: tuple[Scenario, ...]
    seed: int | None = None

    def __post_init__(self):
        if not self.scenarios:
            raise ScenarioError("empty scenario set")
        total = sum(s.probability for s in self.scenarios)
        if abs(total - 1.0) > 1e-9:
            raise ScenarioError(f"probabilities sum to {total}, expected 1")
        shapes = {s.net_load.shape for s in self.scenarios}
        if len(shapes) != 1:
            raise ScenarioError("inconsistent net-load shapes")

    def __len__(self):
        return len(self.scenarios)

    def __iter__(self):
        return iter(self.scenarios)

    @property
    def shape(self):
        return self.scenarios[0].net_load.shape

    def stacked(self):
        """All net loads as one [S, loads, periods] array."""
        return np.stack([s.net_load for s in self.scenarios])


def sample_uniform(grid, count, lo=0.7, hi=1.0, seed=0):
    """Draw `count` scenarios with each (load, period) value independently
    uniform in [lo, hi] times that load's peak; probabilities are 1/count."""
    if not (0 <= lo <= hi):
        raise ScenarioError(f"invalid range [{lo}, {hi}]")
    if count < 1:
        raise ScenarioError("count must be >= 1")
    peaks = grid.peak_matrix()
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    draws = rng.uniform(lo, hi, size=(count,) + peaks.shape)
    scens = tuple(Scenario(draws[s] * peaks, 1.0 / count) for s in range(count))
    return ScenarioSet(scens, seed=seed)


def expected_scenario(sset: ScenarioSet) -> Scenario:
    """Probability-weighted mean net load, carrying probability 1."""
    mean = sum(s.probability * s.net_load for s in sset.scenarios)
    return Scenario(mean, 1.0)


def save_scenarios(sset: ScenarioSet) -> str:
    d, t = sset.shape
    lines = [f"seed={'none' if sset.seed is None else sset.seed}",
             f"S={len(sset)}", f"loads={d}", f"T={t}"]
    probs = [s.probability for s in sset.scenarios]
    if any(abs(p - 1.0 / len(sset)) > 1e-12 for p in probs):
        lines.append("probs=" + " ".join(repr(p) for p in probs))
    for s in sset.scenarios:
        lines.append("")
        for row in s.net_load:
            lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def load_scenarios(text: str) -> ScenarioSet:
    header = {}
    rows = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if "=" in line and not rows and line.split("=")[0] in ("seed", "S", "loads", "T", "probs"):
            k, _, v = line.partition("=")
            header[k] = v
            continue
        try:
            rows.append([float(x) for x in line.split()])
        except ValueError as exc:
            raise ScenarioError(f"malformed value row: {raw!r}") from exc
    try:
        count, d, t = int(header["S"]), int(header["loads"]), int(header["T"])
    except (KeyError, ValueError) as exc:
        raise ScenarioError("missing scenario-set header") from exc
    seed = None if header.get("seed", "none") == "none" else int(header["seed"])
    if len(rows) != count * d or any(len(r) != t for r in rows):
        raise ScenarioError("scenario block shape mismatch with header")
    if "probs" in header:
        probs = [float(x) for x in header["probs"].split()]
        if len(probs) != count:
            raise ScenarioError("probs length mismatch")
    else:
        probs = [1.0 / count] * count
    scens = []
    for s in range(count):
        block = np.array(rows[s * d:(s + 1) * d])
        scens.append(Scenario(block, probs[s]))
    return ScenarioSet(tuple(scens), seed=seed)

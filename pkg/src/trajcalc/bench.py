"""Benchmark harness: timed solving over instance families.

Two experiment shapes.  ``exp1`` fixes one known relation per trajectory and
scales the number of trajectories; ``exp2`` fixes the trajectory count and
scales how many relations per trajectory are revealed.  Constraints always
come from classifying an actual trajectory configuration, so every generated
instance is satisfiable by construction; a solver returning ``unsat`` on one
is a bug, not a data point.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .calculus import builtin_tc6, builtin_tc10
from .grids import GridSpec
from .solver import Instance, SolveTimeout, make_instance, solve
from .trajectories import Mode, Trajectory, classify, random_trajectory

log = logging.getLogger(__name__)

EXPERIMENTS = ("exp1", "exp2")

DEFAULT_GRID = GridSpec(0.0, 1.0, 0.0, 1.0, 100, 200)
DEFAULT_LENGTH = 60


@dataclass(frozen=True)
class BenchRow:
    experiment: str
    calculus: str
    n_elements: int
    known_per_element: int
    wall_ms: float
    peak_rss_bytes: int
    status: str  # sat | unsat | timeout


CSV_FIELDS = ("experiment", "calculus", "n_elements", "known_per_element",
              "wall_ms", "peak_rss_bytes", "status")


def rows_to_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(CSV_FIELDS)
    for r in rows:
        writer.writerow([r.experiment, r.calculus, r.n_elements, r.known_per_element,
                         f"{r.wall_ms:.3f}", r.peak_rss_bytes, r.status])
    return buf.getvalue()


def peak_rss_bytes() -> int:
    """Best-effort peak resident set size; 0 where the platform offers none."""
    try:
        import resource
        rss_kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
        return int(rss_kb) * 1024
    except Exception:
        return 0


def synthetic_trajectories(mode: Mode, n: int, seed: int,
                           grid: GridSpec = DEFAULT_GRID,
                           length: int = DEFAULT_LENGTH) -> list[Trajectory]:
    """n seeded random trajectories named "1".."n"; prefixes agree across sizes."""
    return [random_trajectory(grid, length, mode, seed=seed + i).with_id(str(i + 1))
            for i in range(n)]


def reveal_pairs_exp1(n: int, seed: int) -> list[tuple[int, int]]:
    """One revealed pair per element: each picks a uniform partner, deduplicated."""
    rng = random.Random(f"exp1:{seed}:{n}")
    seen: set[tuple[int, int]] = set()
    out: list[tuple[int, int]] = []
    for i in range(n):
        j = rng.randrange(n - 1)
        if j >= i:
            j += 1
        key = (min(i, j), max(i, j))
        if key not in seen:
            seen.add(key)
            out.append(key)
    return out


def reveal_pairs_exp2(n: int, k: int, seed: int) -> list[tuple[int, int]]:
    """Edges of a random graph aiming at degree ``k`` per node.

    Exact regular degree sequences are not always reachable greedily; the
    achieved degrees are best-effort and logged.
    """
    rng = random.Random(f"exp2:{seed}:{n}:{k}")
    pairs = list(itertools.combinations(range(n), 2))
    rng.shuffle(pairs)
    deg = [0] * n
    chosen: list[tuple[int, int]] = []
    taken: set[tuple[int, int]] = set()
    for i, j in pairs:
        if deg[i] < k and deg[j] < k:
            chosen.append((i, j))
            taken.add((i, j))
            deg[i] += 1
            deg[j] += 1
    for i, j in pairs:
        if (i, j) in taken:
            continue
        if deg[i] < k or deg[j] < k:
            chosen.append((i, j))
            deg[i] += 1
            deg[j] += 1
    log.debug("exp2 reveal n=%d k=%d: %d pairs, degree min=%d mean=%.1f",
              n, k, len(chosen), min(deg), sum(deg) / n)
    return chosen


def revealed_instance(mode: Mode, trajectories: Sequence[Trajectory],
                      pairs: Sequence[tuple[int, int]]) -> Instance:
    """Singleton constraints carrying the true classified relation of each pair."""
    calc = builtin_tc6() if mode == "tc6" else builtin_tc10()
    constraints = []
    for i, j in pairs:
        rid = classify(mode, trajectories[i], trajectories[j])
        constraints.append((trajectories[i].id, trajectories[j].id, [calc.rel_name(rid)]))
    return make_instance(calc, [t.id for t in trajectories], constraints)


@dataclass(frozen=True)
class RowSpec:
    experiment: str
    mode: Mode
    n_elements: int
    known_per_element: int
    seed: int
    budget_ms: float | None
    grid: GridSpec
    length: int
    trajectories: tuple[Trajectory, ...] | None  # None -> synthetic


def _build_instance(spec: RowSpec) -> Instance:
    if spec.trajectories is not None:
        if len(spec.trajectories) < spec.n_elements:
            raise ValueError(
                f"need {spec.n_elements} trajectories, file provides {len(spec.trajectories)}")
        trajs = list(spec.trajectories[:spec.n_elements])
    else:
        trajs = synthetic_trajectories(spec.mode, spec.n_elements, spec.seed,
                                       spec.grid, spec.length)
    if spec.experiment == "exp1":
        pairs = reveal_pairs_exp1(spec.n_elements, spec.seed)
    else:
        pairs = reveal_pairs_exp2(spec.n_elements, spec.known_per_element, spec.seed)
    return revealed_instance(spec.mode, trajs, pairs)


def run_row(spec: RowSpec) -> BenchRow:
    inst = _build_instance(spec)
    deadline = None
    started = time.perf_counter()
    if spec.budget_ms is not None:
        deadline = time.monotonic() + spec.budget_ms / 1000.0
    try:
        model = solve(inst, deadline=deadline)
        status = "sat" if model is not None else "unsat"
    except SolveTimeout:
        status = "timeout"
    wall_ms = (time.perf_counter() - started) * 1000.0
    if status == "timeout" and spec.budget_ms is not None:
        wall_ms = max(wall_ms, spec.budget_ms)
    return BenchRow(spec.experiment, inst.calculus.name, spec.n_elements,
                    spec.known_per_element, wall_ms, peak_rss_bytes(), status)


def run_experiment(experiment: str, mode: Mode, values: Sequence[int], seed: int,
                   budget_ms: float | None = None,
                   trajectories: Sequence[Trajectory] | None = None,
                   grid: GridSpec = DEFAULT_GRID, length: int = DEFAULT_LENGTH,
                   n_fixed: int = 50, parallel: int = 0) -> list[BenchRow]:
    """One BenchRow per value.

    ``values`` are trajectory counts for exp1 and known-relations-per-
    trajectory for exp2 (with ``n_fixed`` trajectories).  ``parallel`` > 0
    runs rows in that many worker processes; timings of concurrent rows
    contend for the machine, so keep it 0 for timing runs.
    """
    if experiment not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {experiment!r}, expected one of {EXPERIMENTS}")
    specs = []
    for v in values:
        if experiment == "exp1":
            n, k = v, 1
        else:
            n, k = n_fixed, v
        specs.append(RowSpec(experiment, mode, n, k, seed, budget_ms, grid, length,
                             tuple(trajectories) if trajectories is not None else None))
    if parallel > 0:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(run_row, specs))
    return [run_row(spec) for spec in specs]

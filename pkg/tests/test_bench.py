import pytest

from trajcalc.bench import (BenchRow, reveal_pairs_exp1, reveal_pairs_exp2,
                            revealed_instance, rows_to_csv, run_experiment,
                            synthetic_trajectories)
from trajcalc.grids import GridSpec
from trajcalc.solver import solve, verify_assignment
from trajcalc.trajectories import validate_trajectory

SMALL_GRID = GridSpec(0.0, 1.0, 0.0, 1.0, 8, 8)


class TestRevealGraphs:
    def test_exp1_covers_every_element(self):
        pairs = reveal_pairs_exp1(30, seed=4)
        touched = {i for p in pairs for i in p}
        assert touched == set(range(30))
        assert len(set(pairs)) == len(pairs)
        assert pairs == reveal_pairs_exp1(30, seed=4)

    def test_exp2_degrees(self):
        n, k = 20, 4
        pairs = reveal_pairs_exp2(n, k, seed=9)
        deg = [0] * n
        for i, j in pairs:
            deg[i] += 1
            deg[j] += 1
        assert min(deg) >= k  # reachable for this n and k
        assert pairs == reveal_pairs_exp2(n, k, seed=9)

    def test_exp2_full_knowledge(self):
        pairs = reveal_pairs_exp2(10, 10, seed=0)
        assert len(pairs) == 45  # every pair


class TestInstances:
    @pytest.mark.parametrize("mode", ["tc6", "tc10"])
    def test_synthetic_valid_and_prefix_stable(self, mode):
        small = synthetic_trajectories(mode, 5, seed=21, grid=SMALL_GRID, length=7)
        big = synthetic_trajectories(mode, 8, seed=21, grid=SMALL_GRID, length=7)
        assert big[:5] == small
        for t in big:
            assert validate_trajectory(t, SMALL_GRID, mode) == []

    @pytest.mark.parametrize("mode", ["tc6", "tc10"])
    def test_revealed_instance_is_sat(self, mode):
        trajs = synthetic_trajectories(mode, 10, seed=2, grid=SMALL_GRID, length=7)
        inst = revealed_instance(mode, trajs, reveal_pairs_exp1(10, seed=2))
        model = solve(inst)
        assert model is not None
        assert verify_assignment(inst, model).ok


class TestRunExperiment:
    def test_exp1_rows_and_reproducibility(self):
        kwargs = dict(seed=5, grid=SMALL_GRID, length=6)
        rows = run_experiment("exp1", "tc6", [5, 8], **kwargs)
        again = run_experiment("exp1", "tc6", [5, 8], **kwargs)
        assert [r.status for r in rows] == ["sat", "sat"]
        assert [(r.n_elements, r.known_per_element) for r in rows] == [(5, 1), (8, 1)]
        stable = [(r.experiment, r.calculus, r.n_elements, r.known_per_element, r.status)
                  for r in rows]
        assert stable == [(r.experiment, r.calculus, r.n_elements, r.known_per_element,
                           r.status) for r in again]

    def test_exp2_rows(self):
        rows = run_experiment("exp2", "tc10", [2, 5], seed=5, grid=SMALL_GRID,
                              length=6, n_fixed=8)
        assert all(r.status == "sat" for r in rows)
        assert [(r.n_elements, r.known_per_element) for r in rows] == [(8, 2), (8, 5)]

    def test_timeout_row(self):
        rows = run_experiment("exp1", "tc6", [25], seed=5, grid=SMALL_GRID,
                              length=6, budget_ms=0.0001)
        assert rows[0].status == "timeout"
        assert rows[0].wall_ms >= 0.0001

    def test_parallel_matches_sequential(self):
        kwargs = dict(seed=8, grid=SMALL_GRID, length=6)
        seq = run_experiment("exp1", "tc6", [5, 6], **kwargs)
        par = run_experiment("exp1", "tc6", [5, 6], parallel=2, **kwargs)
        strip = lambda rows: [(r.n_elements, r.status) for r in rows]
        assert strip(seq) == strip(par)

    def test_csv_shape(self):
        rows = [BenchRow("exp1", "tc6", 5, 1, 12.5, 1024, "sat")]
        text = rows_to_csv(rows)
        assert text.splitlines()[0] == \
            "experiment,calculus,n_elements,known_per_element,wall_ms,peak_rss_bytes,status"
        assert text.splitlines()[1] == "exp1,tc6,5,1,12.500,1024,sat"

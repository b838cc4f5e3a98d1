import pytest

from trajcalc.grids import GridSpec
from trajcalc.oracle import relations_holding
from trajcalc.trajectories import (InfeasibleError, InvalidTrajectoryError, Trajectory,
                                   classify, classify_name, enumerate_trajectories,
                                   random_trajectory, validate_trajectory)


def traj(*regions, id="t"):
    return Trajectory(id, tuple(regions))


class TestValidation:
    def test_cycle_back_to_start(self, grid3):
        assert validate_trajectory(traj(0, 1, 0), grid3, "tc6") == []
        assert validate_trajectory(traj(0, 1, 0), grid3, "tc10") == ["t1 = tn"]

    def test_consecutive_equal(self, grid3):
        assert "consecutive equal at (0,1)" in validate_trajectory(traj(0, 0, 1), grid3, "tc6")
        assert "consecutive equal at (0,1)" in validate_trajectory(traj(0, 0, 1), grid3, "tc10")

    def test_disconnected_step(self, grid3):
        assert validate_trajectory(traj(0, 8), grid3, "tc6") == \
            ["not externally connected at (0,1)"]

    def test_too_short_and_out_of_range(self, grid3):
        assert "length < 2" in validate_trajectory(traj(0), grid3, "tc6")
        assert "region out of range at 1" in validate_trajectory(traj(0, 99), grid3, "tc6")


class TestClassify:
    def test_eq_self(self, grid3):
        t = traj(0, 1, 2)
        assert classify_name("tc6", t, t) == "eq"
        assert classify_name("tc10", t, t) == "eq"

    def test_rev(self):
        assert classify_name("tc10", traj(0, 1, 2), traj(2, 1, 0)) == "rev"

    def test_alt(self):
        assert classify_name("tc6", traj(0, 1, 2), traj(0, 4, 2)) == "alt"
        assert classify_name("tc10", traj(0, 1, 2), traj(0, 4, 2)) == "alt"

    def test_s(self):
        assert classify_name("tc6", traj(0, 1), traj(0, 3)) == "s"

    def test_f(self):
        assert classify_name("tc6", traj(1, 4), traj(3, 4)) == "f"

    def test_ret(self):
        assert classify_name("tc10", traj(0, 1, 2), traj(2, 4, 0)) == "ret"

    def test_ex_exi(self):
        # t1 starts where t2 finishes -> t1 extends t2
        assert classify_name("tc10", traj(4, 8), traj(0, 4)) == "ex"
        assert classify_name("tc10", traj(0, 4), traj(4, 8)) == "exi"

    def test_i_and_dis(self, grid3):
        assert classify_name("tc6", traj(0, 1), traj(1, 4)) == "i"
        assert classify_name("tc6", traj(3, 4), traj(0, 1)) == "dis"
        assert classify_name("tc10", traj(3, 4), traj(0, 1)) == "dis"

    def test_rejects_mode_breaking_input(self):
        with pytest.raises(InvalidTrajectoryError):
            classify("tc10", traj(0, 1, 0), traj(0, 1))
        with pytest.raises(InvalidTrajectoryError):
            classify("tc6", traj(0, 0), traj(0, 1))
        with pytest.raises(InvalidTrajectoryError):
            classify("tc6", traj(0), traj(0, 1))


def _random_pair(mode, grid, rng_seed):
    lengths = (2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12)
    t1 = random_trajectory(grid, lengths[rng_seed % len(lengths)], mode, seed=rng_seed)
    t2 = random_trajectory(grid, lengths[(rng_seed // 7) % len(lengths)], mode, seed=rng_seed + 10_000_019)
    return t1, t2


class TestAgainstLiteralDefinitions:
    """The ladder must agree with the table definitions read as raw formulas."""

    @pytest.mark.parametrize("mode", ["tc6", "tc10"])
    def test_exactly_one_definition_holds(self, mode, grid10):
        for seed in range(1500):
            t1, t2 = _random_pair(mode, grid10, seed)
            holding = relations_holding(mode, t1, t2)
            assert len(holding) == 1, (t1.regions, t2.regions, holding)
            assert classify_name(mode, t1, t2) == holding[0]

    @pytest.mark.parametrize("mode", ["tc6", "tc10"])
    def test_symmetry(self, mode, grid10):
        for seed in range(400):
            t1, t2 = _random_pair(mode, grid10, seed + 50_000)
            ab = classify_name(mode, t1, t2)
            ba = classify_name(mode, t2, t1)
            if ab == "ex":
                assert ba == "exi"
            elif ab == "exi":
                assert ba == "ex"
            else:
                assert ab == ba

    def test_reverse_is_rev(self, grid10):
        for seed in range(300):
            t = random_trajectory(grid10, 2 + seed % 11, "tc10", seed=seed + 99_000)
            assert classify_name("tc10", t, t.reversed()) == "rev"


class TestRandomTrajectory:
    @pytest.mark.parametrize("mode", ["tc6", "tc10"])
    def test_valid_and_deterministic(self, mode, grid10):
        for seed in (0, 1, 17):
            t = random_trajectory(grid10, 9, mode, seed=seed)
            assert validate_trajectory(t, grid10, mode) == []
            assert t == random_trajectory(grid10, 9, mode, seed=seed)

    def test_tc10_never_closes_the_loop(self, grid10):
        for seed in range(10_000):
            t = random_trajectory(grid10, 2 + seed % 7, "tc10", seed=seed)
            assert t.regions[0] != t.regions[-1]

    def test_infeasible(self):
        tiny = GridSpec(0.0, 1.0, 0.0, 1.0, 1, 2)
        with pytest.raises(InfeasibleError):
            random_trajectory(tiny, 3, "tc10", seed=0, max_retries=50)
        one = GridSpec(0.0, 1.0, 0.0, 1.0, 1, 1)
        with pytest.raises(InfeasibleError):
            random_trajectory(one, 2, "tc6", seed=0)


class TestEnumerate:
    def test_count_len2_3x3(self, grid3):
        # degree sum over the 8-neighbour graph: 4 corners x 3 + 4 edges x 5 + 8
        got = list(enumerate_trajectories(grid3, 2, "tc6"))
        assert len(got) == 40

    def test_count_1x2(self):
        g = GridSpec(0.0, 1.0, 0.0, 1.0, 1, 2)
        assert [t.regions for t in enumerate_trajectories(g, 2, "tc6")] == [(0, 1), (1, 0)]
        tc10_len3 = [t for t in enumerate_trajectories(g, 3, "tc10") if len(t.regions) == 3]
        assert tc10_len3 == []

    def test_counts_len3_3x3(self, grid3):
        tc6 = [t for t in enumerate_trajectories(grid3, 3, "tc6")]
        tc10 = [t for t in enumerate_trajectories(grid3, 3, "tc10")]
        # walk counts derived from the degree sequence: sum(deg^2) = 200 for
        # length 3; tc10 drops the sum(deg) = 40 walks that return to start
        assert len(tc6) == 240
        assert len(tc10) == 200

    def test_unique_valid_lexicographic(self, grid3):
        seqs = [t.regions for t in enumerate_trajectories(grid3, 3, "tc10")]
        assert len(set(seqs)) == len(seqs)
        assert seqs == sorted(seqs)
        for t in enumerate_trajectories(grid3, 3, "tc10"):
            assert validate_trajectory(t, grid3, "tc10") == []

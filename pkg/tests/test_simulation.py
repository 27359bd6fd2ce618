"""Grid simulation: init, step phases, invariants, determinism."""

import math

import numpy as np
import pytest

from mutualaid._gridstep import (
    ALARM,
    INFORMAL,
    NEUTRAL,
    NORMAL,
    PARTICIPANT,
    PROFESSIONAL,
)
from mutualaid.simulation import (
    Grid,
    InvalidParamsError,
    SimParams,
    check_invariants,
    init_grid,
    run,
    step,
)

IDENTITY = tuple(tuple(1.0 if i == j else 0.0 for j in range(6)) for i in range(6))


def make_params(n=3, fractions=None, steps=10, seed=1, **kw):
    fractions = fractions or {"neutral": 1.0}
    return SimParams(n=n, init_fractions=fractions, max_steps=steps, seed=seed, **kw)


def blank_grid(params):
    """All-neutral grid with a private seeded generator."""
    ncells = params.n * params.n
    return Grid(
        n=params.n,
        role=np.full(ncells, NEUTRAL, dtype=np.int64),
        link=np.full(ncells, -1, dtype=np.int64),
        work=np.zeros(ncells, dtype=np.int64),
        birth=np.full(ncells, -1, dtype=np.int64),
        rng=np.random.default_rng(params.seed),
    )


def place_requester(grid, index, kind, birth=0):
    grid.role[index] = kind
    grid.birth[index] = birth


class TestParams:
    def test_fractions_must_sum_to_one(self):
        with pytest.raises(InvalidParamsError):
            make_params(fractions={"neutral": 0.5})

    def test_bad_workload_order(self):
        with pytest.raises(InvalidParamsError):
            make_params(workload_min=10, workload_max=5)

    def test_transition_rows_must_sum_to_one(self):
        bad = tuple(tuple(0.5 for _ in range(6)) for _ in range(6))
        with pytest.raises(InvalidParamsError):
            make_params(transition_mode="matrix", transition_matrix=bad)

    def test_roundtrip_through_dict(self):
        p = make_params(n=7, fractions={"neutral": 0.8, "normal": 0.2}, radius=2,
                        torus=True, timely_window=3)
        assert SimParams.from_dict(p.to_dict()).to_dict() == p.to_dict()

    def test_with_fraction_renormalizes_against_neutral(self):
        p = make_params(fractions={"neutral": 0.9, "informal": 0.1})
        q = p.with_fraction("informal", 0.3)
        assert q.init_fractions["neutral"] == pytest.approx(0.7)

    def test_with_fraction_complement_pool(self):
        p = make_params(fractions={"neutral": 0.4, "normal": 0.5, "participant": 0.1})
        q = p.with_fraction("participant", 0.35, complement="normal")
        assert q.init_fractions["normal"] == pytest.approx(0.25)
        assert q.init_fractions["neutral"] == pytest.approx(0.4)


class TestInitGrid:
    def test_degenerate_all_neutral(self):
        grid = init_grid(make_params(n=5))
        assert np.all(grid.role == NEUTRAL)
        assert np.all(grid.link == -1)

    def test_fixed_seed_reproducible(self):
        p = make_params(n=20, fractions={"neutral": 0.5, "normal": 0.3, "informal": 0.2},
                        seed=99)
        g1, g2 = init_grid(p), init_grid(p)
        assert np.array_equal(g1.role, g2.role)
        assert np.array_equal(g1.work, g2.work)

    def test_requester_count_within_binomial_bound(self):
        # 3 sigma for binomial(10000, 0.2): mean 2000, sigma = sqrt(10000*0.2*0.8) = 40
        p = make_params(n=100, fractions={"neutral": 0.8, "normal": 0.2}, seed=4)
        grid = init_grid(p)
        count = int(np.count_nonzero(grid.role == NORMAL))
        assert abs(count - 2000) <= 3 * math.sqrt(10000 * 0.2 * 0.8)

    def test_initial_requesters_have_workload_and_birth(self):
        p = make_params(n=10, fractions={"neutral": 0.5, "alarm": 0.5}, seed=2)
        grid = init_grid(p)
        alarms = grid.role == ALARM
        assert np.all(grid.birth[alarms] == 0)
        assert np.all((grid.work[alarms] >= p.workload_min)
                      & (grid.work[alarms] <= p.workload_max))


class TestStepPhases:
    def test_alarm_links_professional_neighbor_same_step(self):
        p = make_params(transition_mode="matrix", transition_matrix=IDENTITY)
        grid = blank_grid(p)
        place_requester(grid, 4, ALARM)
        grid.role[5] = PROFESSIONAL
        new, ev = step(grid, p, 0)
        assert new.link[4] == 5 and new.link[5] == 4
        assert ev.served == (1, 0, 0)
        assert ev.latency_sum == 0

    def test_alarm_ignores_informal(self):
        p = make_params(transition_mode="matrix", transition_matrix=IDENTITY)
        grid = blank_grid(p)
        place_requester(grid, 4, ALARM)
        grid.role[5] = INFORMAL
        new, _ = step(grid, p, 0)
        assert new.link[4] == -1

    def test_normal_prefers_informal_over_professional(self):
        p = make_params(transition_mode="matrix", transition_matrix=IDENTITY)
        grid = blank_grid(p)
        place_requester(grid, 4, NORMAL)
        grid.role[0] = PROFESSIONAL  # earlier in row-major neighbor order
        grid.role[8] = INFORMAL
        new, _ = step(grid, p, 0)
        assert new.link[4] == 8

    def test_completion_frees_provider_and_neutralizes_requester(self):
        p = make_params(transition_mode="matrix", transition_matrix=IDENTITY)
        grid = blank_grid(p)
        place_requester(grid, 4, NORMAL)
        grid.role[5] = INFORMAL
        grid.link[4], grid.link[5] = 5, 4
        grid.work[4] = grid.work[5] = 1
        new, ev = step(grid, p, 3)
        assert new.role[4] == NEUTRAL and new.birth[4] == -1
        assert new.role[5] == INFORMAL
        assert new.link[4] == -1 and new.link[5] == -1
        assert ev.completions == 1

    def test_participant_pair_both_neutral_on_completion(self):
        p = make_params(transition_mode="matrix", transition_matrix=IDENTITY)
        grid = blank_grid(p)
        place_requester(grid, 4, PARTICIPANT)
        place_requester(grid, 5, PARTICIPANT)
        grid.link[4], grid.link[5] = 5, 4
        grid.work[4] = grid.work[5] = 1
        new, _ = step(grid, p, 1)
        assert new.role[4] == NEUTRAL and new.role[5] == NEUTRAL

    def test_row_major_earlier_requester_wins_contested_provider(self):
        p = make_params(transition_mode="matrix", transition_matrix=IDENTITY)
        grid = blank_grid(p)
        place_requester(grid, 1, NORMAL)
        place_requester(grid, 3, NORMAL)
        grid.role[4] = INFORMAL  # adjacent to both
        new, _ = step(grid, p, 0)
        assert new.link[1] == 4
        assert new.link[3] == -1

    def test_participants_pair_with_each_other(self):
        p = make_params(transition_mode="matrix", transition_matrix=IDENTITY)
        grid = blank_grid(p)
        place_requester(grid, 0, PARTICIPANT)
        place_requester(grid, 1, PARTICIPANT)
        new, ev = step(grid, p, 0)
        assert new.link[0] == 1 and new.link[1] == 0
        assert new.work[0] == new.work[1]
        assert p.workload_min <= new.work[0] <= p.workload_max
        assert ev.served == (0, 0, 2)

    def test_step_leaves_input_grid_untouched(self):
        p = make_params(transition_mode="matrix", transition_matrix=IDENTITY)
        grid = blank_grid(p)
        place_requester(grid, 4, ALARM)
        grid.role[5] = PROFESSIONAL
        before = (grid.role.copy(), grid.link.copy(), grid.work.copy(), grid.birth.copy())
        step(grid, p, 0)
        assert np.array_equal(grid.role, before[0])
        assert np.array_equal(grid.link, before[1])
        assert np.array_equal(grid.work, before[2])
        assert np.array_equal(grid.birth, before[3])

    def test_churned_requester_counts_as_failure(self):
        always_neutral = tuple(
            tuple(1.0 if j == NEUTRAL else 0.0 for j in range(6)) for _ in range(6))
        p = make_params(transition_mode="matrix", transition_matrix=always_neutral)
        grid = blank_grid(p)
        place_requester(grid, 0, ALARM)  # no professional anywhere
        new, ev = step(grid, p, 0)
        assert ev.failed == (1, 0, 0)
        assert new.role[0] == NEUTRAL


class TestNeighborhoods:
    def test_von_neumann_excludes_diagonal(self):
        p = make_params(neighborhood="vonneumann4",
                        transition_mode="matrix", transition_matrix=IDENTITY)
        grid = blank_grid(p)
        place_requester(grid, 4, ALARM)
        grid.role[0] = PROFESSIONAL  # diagonal neighbor
        new, _ = step(grid, p, 0)
        assert new.link[4] == -1

    def test_torus_wraps_edges(self):
        p = make_params(torus=True, transition_mode="matrix", transition_matrix=IDENTITY)
        grid = blank_grid(p)
        place_requester(grid, 0, ALARM)
        grid.role[8] = PROFESSIONAL  # opposite corner, adjacent on the torus
        new, _ = step(grid, p, 0)
        assert new.link[0] == 8

    def test_bounded_grid_has_no_wraparound(self):
        p = make_params(transition_mode="matrix", transition_matrix=IDENTITY)
        grid = blank_grid(p)
        place_requester(grid, 0, ALARM)
        grid.role[8] = PROFESSIONAL
        new, _ = step(grid, p, 0)
        assert new.link[0] == -1

    def test_radius_two_reaches_further(self):
        p = make_params(n=5, radius=2, transition_mode="matrix",
                        transition_matrix=IDENTITY)
        grid = blank_grid(p)
        place_requester(grid, 0, ALARM)
        grid.role[2] = PROFESSIONAL  # two columns away
        new, _ = step(grid, p, 0)
        assert new.link[0] == 2


MIXED = {"professional": 0.05, "informal": 0.15, "neutral": 0.55,
         "alarm": 0.05, "normal": 0.15, "participant": 0.05}


class TestRun:
    def test_starvation_counts_open_not_failed(self):
        p = make_params(n=3, fractions={"neutral": 8 / 9, "alarm": 1 / 9}, seed=11,
                        steps=20, transition_mode="matrix", transition_matrix=IDENTITY)
        report = None
        for seed in range(40):  # find a seed with exactly one initial requester
            grid = init_grid(p.replace(seed=seed))
            if int(np.count_nonzero(grid.role == ALARM)) == 1:
                report = run(p.replace(seed=seed))
                break
        assert report is not None
        assert report.total_requests == 1
        assert report.failed == 0 and report.served == 0 and report.open == 1
        assert report.satisfaction_rate == 0.0

    def test_all_neutral_reports_absent_rates(self):
        p = make_params(n=4, steps=15, transition_mode="matrix",
                        transition_matrix=IDENTITY)
        report = run(p)
        assert report.total_requests == 0
        assert report.satisfaction_rate is None
        assert report.mean_latency is None
        assert report.failure_rate is None

    def test_request_accounting_balances(self):
        p = make_params(n=20, fractions=MIXED, steps=150, seed=5)
        report = run(p)
        assert report.served + report.failed + report.open == report.total_requests
        for counts in report.by_kind.values():
            assert counts["served"] + counts["failed"] <= counts["created"]
            assert counts["timely"] <= counts["served"]

    def test_deterministic_outputs(self):
        p = make_params(n=10, fractions=MIXED, steps=100, seed=77)
        r1, r2 = run(p), run(p)
        assert r1.to_json() == r2.to_json()
        assert r1.series_csv() == r2.series_csv()

    def test_seed_changes_trajectory(self):
        p = make_params(n=10, fractions=MIXED, steps=100, seed=77)
        assert run(p).to_json() != run(p.replace(seed=78)).to_json()

    def test_golden_report(self, repo_root):
        p = make_params(n=10, fractions=MIXED, steps=100, seed=20260823)
        golden = (repo_root / "tests" / "data" / "run_10x10.golden.json").read_text()
        assert run(p).to_json() + "\n" == golden

    def test_csv_header(self):
        p = make_params(n=4, steps=3)
        csv = run(p).series_csv()
        assert csv.splitlines()[0] == (
            "step,open_requests,served_cum,failed_cum,mean_latency_cum,satisfaction_cum")

    def test_shuffled_scan_stays_valid(self):
        p = make_params(n=10, fractions=MIXED, steps=50, seed=9, scan="shuffled")
        report = run(p)
        assert report.served + report.failed + report.open == report.total_requests


class TestInvariantsOverTime:
    def test_stepwise_invariants_hold(self):
        p = make_params(n=15, fractions=MIXED, steps=0, seed=31)
        grid = init_grid(p)
        for t in range(120):
            prev = grid
            grid, _ = step(prev, p, t)
            assert check_invariants(grid, p) == []
            both = (prev.link >= 0) & (grid.link == prev.link)
            # pairs that stayed linked: workload fell by exactly 1, role frozen
            assert np.all(grid.work[both] == prev.work[both] - 1)
            assert np.all(grid.role[both] == prev.role[both])

    def test_population_conserved(self):
        p = make_params(n=12, fractions=MIXED, steps=0, seed=13)
        grid = init_grid(p)
        for t in range(80):
            grid, _ = step(grid, p, t)
            assert grid.role.shape[0] == 144
            assert np.all((grid.role >= 0) & (grid.role < 6))

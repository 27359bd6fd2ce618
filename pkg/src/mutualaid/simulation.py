"""Deterministic discrete-time cell-grid simulation of the community.

Each cell is one individual: a caregiver (professional or informal), neutral,
or a requester of one of three kinds (alarm, normal, participant). Requesters
look for an unlinked partner in their neighborhood each step; linked pairs
work down a shared workload; unlinked cells change role probabilistically.
Every run is fully determined by its parameters and seed.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _gridstep
from ._gridstep import (
    ALARM,
    INFORMAL,
    NEUTRAL,
    NORMAL,
    N_COUNTERS,
    N_ROLES,
    PARTICIPANT,
    PROFESSIONAL,
    REQUESTER_BASE,
    step_kernel,
)

ROLE_NAMES = ("professional", "informal", "neutral", "alarm", "normal", "participant")
KIND_NAMES = ("alarm", "normal", "participant")

FRACTION_TOL = 1e-9


class InvalidParamsError(ValueError):
    """Simulation parameters violate an invariant."""


@dataclass(frozen=True)
class SimParams:
    n: int
    init_fractions: dict[str, float]
    max_steps: int
    seed: int
    transition_mode: str = "uniform"  # "uniform" | "redraw" | "matrix"
    churn: float = 0.02
    transition_matrix: tuple[tuple[float, ...], ...] | None = None
    workload_min: int = 5
    workload_max: int = 25
    neighborhood: str = "moore8"  # "moore8" | "vonneumann4"
    radius: int = 1
    torus: bool = False
    timely_window: int = 0
    scan: str = "row_major"  # "row_major" | "shuffled"

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        if self.n < 1:
            raise InvalidParamsError("grid side n must be >= 1")
        if self.max_steps < 0:
            raise InvalidParamsError("max_steps must be >= 0")
        unknown = set(self.init_fractions) - set(ROLE_NAMES)
        if unknown:
            raise InvalidParamsError(f"unknown roles in init_fractions: {sorted(unknown)}")
        fracs = self.fraction_vector()
        if np.any(fracs < -FRACTION_TOL):
            raise InvalidParamsError("init_fractions must be non-negative")
        if abs(float(fracs.sum()) - 1.0) > FRACTION_TOL:
            raise InvalidParamsError(f"init_fractions must sum to 1, got {fracs.sum()!r}")
        if not (1 <= self.workload_min <= self.workload_max):
            raise InvalidParamsError("need 1 <= workload_min <= workload_max")
        if self.neighborhood not in ("moore8", "vonneumann4"):
            raise InvalidParamsError(f"unknown neighborhood {self.neighborhood!r}")
        if self.radius < 1:
            raise InvalidParamsError("radius must be >= 1")
        if self.timely_window < 0:
            raise InvalidParamsError("timely_window must be >= 0")
        if self.scan not in ("row_major", "shuffled"):
            raise InvalidParamsError(f"unknown scan mode {self.scan!r}")
        if self.transition_mode not in ("uniform", "redraw", "matrix"):
            raise InvalidParamsError(f"unknown transition mode {self.transition_mode!r}")
        if self.transition_mode == "matrix":
            if self.transition_matrix is None:
                raise InvalidParamsError("transition_mode 'matrix' requires transition_matrix")
        elif not (0.0 <= self.churn <= 1.0):
            raise InvalidParamsError("churn must be in [0, 1]")
        m = self.resolve_transition()
        if m.shape != (N_ROLES, N_ROLES):
            raise InvalidParamsError(f"transition matrix must be {N_ROLES}x{N_ROLES}")
        if np.any(m < -FRACTION_TOL):
            raise InvalidParamsError("transition probabilities must be non-negative")
        rowsums = m.sum(axis=1)
        if np.any(np.abs(rowsums - 1.0) > FRACTION_TOL):
            raise InvalidParamsError("every transition row must sum to 1")

    def fraction_vector(self) -> np.ndarray:
        return np.array([self.init_fractions.get(r, 0.0) for r in ROLE_NAMES], dtype=np.float64)

    def resolve_transition(self) -> np.ndarray:
        """Materialize the 6x6 transition matrix for the configured mode."""
        if self.transition_mode == "matrix":
            return np.array(self.transition_matrix, dtype=np.float64)
        eye = np.eye(N_ROLES)
        if self.transition_mode == "uniform":
            off = self.churn / (N_ROLES - 1)
            return (1.0 - self.churn) * eye + off * (1.0 - eye)
        # "redraw": re-sample the role from init_fractions with probability churn,
        # which keeps the community composition stationary at init_fractions.
        fracs = self.fraction_vector()
        return (1.0 - self.churn) * eye + self.churn * np.tile(fracs, (N_ROLES, 1))

    def with_fraction(self, role: str, value: float,
                      complement: str | None = None) -> "SimParams":
        """Set one role fraction, renormalizing against the neutral share.

        With `complement`, the changed mass is taken from that role first (the
        two fractions share a fixed pool), and neutral only absorbs rounding.
        """
        if role not in ROLE_NAMES or role == "neutral":
            raise InvalidParamsError(f"cannot sweep fraction {role!r}")
        fracs = dict(self.init_fractions)
        if complement is not None:
            if complement not in ROLE_NAMES or complement in ("neutral", role):
                raise InvalidParamsError(f"invalid complement role {complement!r}")
            pool = fracs.get(role, 0.0) + fracs.get(complement, 0.0)
            rest = pool - value
            if rest < -FRACTION_TOL:
                raise InvalidParamsError(
                    f"fractions cannot renormalize: {role}={value} exceeds the "
                    f"{role}+{complement} pool {pool}")
            fracs[complement] = max(rest, 0.0)
        fracs[role] = value
        others = sum(v for k, v in fracs.items() if k != "neutral")
        neutral = 1.0 - others
        if neutral < -FRACTION_TOL:
            raise InvalidParamsError(
                f"fractions cannot renormalize: non-neutral mass {others} exceeds 1")
        fracs["neutral"] = max(neutral, 0.0)
        return self.replace(init_fractions=fracs)

    def replace(self, **changes) -> "SimParams":
        d = self.__dict__ | changes
        return SimParams(**d)

    def to_dict(self) -> dict:
        transition: dict = {"mode": self.transition_mode}
        if self.transition_mode == "matrix":
            transition["matrix"] = [list(row) for row in self.transition_matrix]
        else:
            transition["churn"] = self.churn
        return {
            "n": self.n,
            "init_fractions": {r: self.init_fractions.get(r, 0.0) for r in ROLE_NAMES},
            "transition": transition,
            "workload_min": self.workload_min,
            "workload_max": self.workload_max,
            "neighborhood": self.neighborhood,
            "radius": self.radius,
            "torus": self.torus,
            "timely_window": self.timely_window,
            "max_steps": self.max_steps,
            "seed": self.seed,
            "scan": self.scan,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimParams":
        transition = d.get("transition", {"mode": "uniform", "churn": 0.02})
        mode = transition.get("mode", "uniform")
        matrix = transition.get("matrix")
        return cls(
            n=int(d["n"]),
            init_fractions=dict(d["init_fractions"]),
            max_steps=int(d["max_steps"]),
            seed=int(d["seed"]),
            transition_mode=mode,
            churn=float(transition.get("churn", 0.02)),
            transition_matrix=tuple(tuple(row) for row in matrix) if matrix else None,
            workload_min=int(d.get("workload_min", 5)),
            workload_max=int(d.get("workload_max", 25)),
            neighborhood=d.get("neighborhood", "moore8"),
            radius=int(d.get("radius", 1)),
            torus=bool(d.get("torus", False)),
            timely_window=int(d.get("timely_window", 0)),
            scan=d.get("scan", "row_major"),
        )


@dataclass
class Grid:
    n: int
    role: np.ndarray   # int64, role code per cell (row-major flat)
    link: np.ndarray   # int64, partner cell index or -1
    work: np.ndarray   # int64, remaining workload steps (0 = none)
    birth: np.ndarray  # int64, step the request was born, or -1
    rng: np.random.Generator

    def copy(self) -> "Grid":
        return Grid(self.n, self.role.copy(), self.link.copy(), self.work.copy(),
                    self.birth.copy(), copy.deepcopy(self.rng))


@dataclass(frozen=True)
class StepEvents:
    """Aggregate counts produced by one simulation step (per requester kind)."""

    served: tuple[int, int, int]
    timely: tuple[int, int, int]
    failed: tuple[int, int, int]
    born: tuple[int, int, int]
    latency_sum: int
    completions: int


@lru_cache(maxsize=32)
def neighborhood_offsets(kind: str, radius: int) -> tuple[tuple[int, int], ...]:
    """Relative neighbor offsets in row-major order (center excluded)."""
    offs = []
    for dr in range(-radius, radius + 1):
        for dc in range(-radius, radius + 1):
            if dr == 0 and dc == 0:
                continue
            if kind == "vonneumann4" and abs(dr) + abs(dc) > radius:
                continue
            offs.append((dr, dc))
    return tuple(offs)


@lru_cache(maxsize=16)
def _neighbor_table(n: int, kind: str, radius: int, torus: bool) -> np.ndarray:
    """(ncells, k) table of neighbor indices, -1 where the grid edge cuts off."""
    offsets = neighborhood_offsets(kind, radius)
    idx = np.arange(n * n, dtype=np.int64).reshape(n, n)
    table = np.full((n * n, len(offsets)), -1, dtype=np.int64)
    for j, (dr, dc) in enumerate(offsets):
        if torus:
            shifted = np.roll(np.roll(idx, -dr, axis=0), -dc, axis=1)
            table[:, j] = shifted.ravel()
        else:
            m = np.full((n, n), -1, dtype=np.int64)
            r0, r1 = max(0, -dr), n - max(0, dr)
            c0, c1 = max(0, -dc), n - max(0, dc)
            if r0 < r1 and c0 < c1:
                m[r0:r1, c0:c1] = idx[r0 + dr:r1 + dr, c0 + dc:c1 + dc]
            table[:, j] = m.ravel()
    return table


def init_grid(params: SimParams) -> Grid:
    """Seeded independent role draw per cell; initial requesters are born at step 0."""
    params.validate()
    ncells = params.n * params.n
    rng = np.random.default_rng(params.seed)
    cum = np.cumsum(params.fraction_vector())
    role = np.searchsorted(cum, rng.random(ncells), side="right").astype(np.int64)
    np.clip(role, 0, N_ROLES - 1, out=role)
    draws = rng.integers(params.workload_min, params.workload_max + 1, size=ncells)
    requester = role >= REQUESTER_BASE
    work = np.where(requester, draws, 0).astype(np.int64)
    birth = np.where(requester, 0, -1).astype(np.int64)
    link = np.full(ncells, -1, dtype=np.int64)
    return Grid(params.n, role, link, work, birth, rng)


def _advance(grid: Grid, params: SimParams, step_index: int,
             nbrs: np.ndarray, cum_rows: np.ndarray) -> StepEvents:
    """Advance the grid in place by one step and return the step's counts."""
    ncells = grid.role.shape[0]
    u_churn = grid.rng.random(ncells)
    u_work = grid.rng.random(ncells)
    if params.scan == "shuffled":
        scan_order = grid.rng.permutation(ncells).astype(np.int64)
    else:
        scan_order = np.arange(ncells, dtype=np.int64)
    counters = np.zeros(N_COUNTERS, dtype=np.int64)
    step_kernel(grid.role, grid.link, grid.work, grid.birth, nbrs, cum_rows,
                params.workload_min, params.workload_max, params.timely_window,
                step_index, u_churn, u_work, scan_order, counters)
    c = counters
    return StepEvents(
        served=(int(c[0]), int(c[1]), int(c[2])),
        timely=(int(c[3]), int(c[4]), int(c[5])),
        failed=(int(c[7]), int(c[8]), int(c[9])),
        born=(int(c[10]), int(c[11]), int(c[12])),
        latency_sum=int(c[6]),
        completions=int(c[13]),
    )


def _tables(params: SimParams) -> tuple[np.ndarray, np.ndarray]:
    nbrs = _neighbor_table(params.n, params.neighborhood, params.radius, params.torus)
    cum_rows = np.cumsum(params.resolve_transition(), axis=1)
    return nbrs, cum_rows


def step(grid: Grid, params: SimParams, step_index: int) -> tuple[Grid, StepEvents]:
    """Pure step: returns a new grid, leaving the input untouched."""
    nbrs, cum_rows = _tables(params)
    out = grid.copy()
    events = _advance(out, params, step_index, nbrs, cum_rows)
    return out, events


@dataclass(frozen=True)
class MetricsReport:
    satisfaction_rate: float | None
    mean_latency: float | None
    failure_rate: float | None
    total_requests: int
    served: int
    timely: int
    failed: int
    open: int
    by_kind: dict[str, dict[str, int]]
    # per-step rows: (step, open_requests, served_cum, failed_cum,
    #                 latency_sum_cum, timely_cum, created_cum)
    series: list[tuple[int, int, int, int, int, int, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        rows = []
        for s, open_, served, failed, latsum, timely, created in self.series:
            rows.append({
                "step": s,
                "open_requests": open_,
                "served_cum": served,
                "failed_cum": failed,
                "mean_latency_cum": (latsum / served) if served else None,
                "satisfaction_cum": (timely / created) if created else None,
            })
        return {
            "satisfaction_rate": self.satisfaction_rate,
            "mean_latency": self.mean_latency,
            "failure_rate": self.failure_rate,
            "requests": {
                "total": self.total_requests,
                "served": self.served,
                "timely": self.timely,
                "failed": self.failed,
                "open": self.open,
            },
            "by_kind": self.by_kind,
            "series": rows,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def series_csv(self) -> str:
        lines = ["step,open_requests,served_cum,failed_cum,mean_latency_cum,satisfaction_cum"]
        for s, open_, served, failed, latsum, timely, created in self.series:
            lat = f"{latsum / served:.6f}" if served else ""
            sat = f"{timely / created:.6f}" if created else ""
            lines.append(f"{s},{open_},{served},{failed},{lat},{sat}")
        return "\n".join(lines) + "\n"


def run(params: SimParams, collect_series: bool = True) -> MetricsReport:
    """Run init + max_steps steps and aggregate the metrics."""
    params.validate()
    nbrs, cum_rows = _tables(params)
    grid = init_grid(params)

    created = [int(np.count_nonzero(grid.role == REQUESTER_BASE + k)) for k in range(3)]
    served = [0, 0, 0]
    timely = [0, 0, 0]
    failed = [0, 0, 0]
    latency_sum = 0
    series: list[tuple[int, int, int, int, int, int, int]] = []

    for t in range(params.max_steps):
        ev = _advance(grid, params, t, nbrs, cum_rows)
        for k in range(3):
            served[k] += ev.served[k]
            timely[k] += ev.timely[k]
            failed[k] += ev.failed[k]
            created[k] += ev.born[k]
        latency_sum += ev.latency_sum
        if collect_series:
            open_now = int(np.count_nonzero(
                (grid.role >= REQUESTER_BASE) & (grid.link == -1)))
            series.append((t, open_now, sum(served), sum(failed),
                           latency_sum, sum(timely), sum(created)))

    total = sum(created)
    n_served = sum(served)
    n_timely = sum(timely)
    n_failed = sum(failed)
    by_kind = {
        KIND_NAMES[k]: {
            "created": created[k],
            "served": served[k],
            "timely": timely[k],
            "failed": failed[k],
        }
        for k in range(3)
    }
    return MetricsReport(
        satisfaction_rate=(n_timely / total) if total else None,
        mean_latency=(latency_sum / n_served) if n_served else None,
        failure_rate=(n_failed / total) if total else None,
        total_requests=total,
        served=n_served,
        timely=n_timely,
        failed=n_failed,
        open=total - n_served - n_failed,
        by_kind=by_kind,
        series=series,
    )


def check_invariants(grid: Grid, params: SimParams) -> list[str]:
    """Structural checks on a grid snapshot; returns a list of violations."""
    problems: list[str] = []
    ncells = params.n * params.n
    if grid.role.shape[0] != ncells:
        problems.append(f"cell count {grid.role.shape[0]} != {ncells}")
    if np.any((grid.role < 0) | (grid.role >= N_ROLES)):
        problems.append("role code out of range")
    linked = grid.link >= 0
    idx = np.flatnonzero(linked)
    if idx.size:
        partners = grid.link[idx]
        if np.any(grid.link[partners] != idx):
            problems.append("link is not mutual")
        if np.any(partners == idx):
            problems.append("cell linked to itself")
        if np.any(grid.work[idx] < 1):
            problems.append("linked cell without positive workload")
        if np.any(grid.work[idx] != grid.work[partners]):
            problems.append("linked pair workload mismatch")
    if np.any(grid.work < 0) or np.any(grid.work > params.workload_max):
        problems.append("workload outside [0, workload_max]")
    # pairing eligibility, seen from the requester side
    for p in idx:
        q = int(grid.link[p])
        r = int(grid.role[p])
        if r < REQUESTER_BASE:
            continue
        partner_role = int(grid.role[q])
        if r == ALARM and partner_role != PROFESSIONAL:
            problems.append(f"alarm requester {p} linked to role {partner_role}")
        elif r == NORMAL and partner_role not in (PROFESSIONAL, INFORMAL):
            problems.append(f"normal requester {p} linked to role {partner_role}")
        elif r == PARTICIPANT and partner_role != PARTICIPANT:
            problems.append(f"participant requester {p} linked to role {partner_role}")
    requester = grid.role >= REQUESTER_BASE
    if np.any(requester & (grid.birth < 0)):
        problems.append("requester without request_birth")
    if np.any(~requester & (grid.birth >= 0)):
        problems.append("non-requester with request_birth")
    return problems

"""Replicated parameter sweeps over the grid simulation.

A sweep varies one axis (a role fraction or the contact radius) over an
ordered list of values, runs a fixed number of replicates per value, and
aggregates satisfaction, latency and failure into one row per value.
Replicate seeds derive from a stable hash, so adding replicates or
reordering execution never changes existing results.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

from .simulation import FRACTION_TOL, InvalidParamsError, ROLE_NAMES, SimParams, run

SWEEP_CSV_HEADER = (
    "axis_value,satisfaction_mean,satisfaction_sd,latency_mean,latency_sd,"
    "failure_mean,failure_sd,replicates"
)


def stable_hash(value: float, replicate: int) -> int:
    """Platform-independent 63-bit hash of (axis value, replicate index)."""
    token = f"{value!r}|{replicate}".encode()
    digest = hashlib.sha256(token).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass(frozen=True)
class SweepSpec:
    base: SimParams
    axis: str  # role fraction name or "radius"
    values: tuple[float, ...]
    replicates: int = 30
    seed_base: int = 0
    # when set, the swept mass is traded against this role's fraction instead
    # of the neutral share (the two fractions form a fixed pool)
    complement: str | None = None

    def __post_init__(self) -> None:
        if self.replicates < 1:
            raise InvalidParamsError("replicates must be >= 1")
        if self.axis != "radius" and (self.axis not in ROLE_NAMES or self.axis == "neutral"):
            raise InvalidParamsError(f"unknown sweep axis {self.axis!r}")
        if self.complement is not None and self.axis == "radius":
            raise InvalidParamsError("complement only applies to fraction axes")
        for v in self.values:
            self.substitute(v, 0)  # fail fast on impossible substitutions

    def substitute(self, value: float, replicate: int) -> SimParams:
        """Base params with the axis value applied and the replicate seed set."""
        seed = (self.seed_base + stable_hash(value, replicate)) % (1 << 63)
        if self.axis == "radius":
            return self.base.replace(radius=int(value), seed=seed)
        swapped = self.base.with_fraction(self.axis, float(value), self.complement)
        return swapped.replace(seed=seed)

    def to_dict(self) -> dict:
        d = {
            "base": self.base.to_dict(),
            "axis": self.axis,
            "values": list(self.values),
            "replicates": self.replicates,
            "seed_base": self.seed_base,
        }
        if self.complement is not None:
            d["complement"] = self.complement
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        return cls(
            base=SimParams.from_dict(d["base"]),
            axis=d["axis"],
            values=tuple(d["values"]),
            replicates=int(d.get("replicates", 30)),
            seed_base=int(d.get("seed_base", 0)),
            complement=d.get("complement"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    satisfaction_mean: float
    satisfaction_sd: float
    latency_mean: float
    latency_sd: float
    failure_mean: float
    failure_sd: float
    replicates: int


def _mean_sd(values: list[float]) -> tuple[float, float]:
    """Mean and sample standard deviation, ignoring undefined (nan) replicates."""
    clean = [v for v in values if not math.isnan(v)]
    if not clean:
        return float("nan"), float("nan")
    mean = sum(clean) / len(clean)
    if len(clean) < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in clean) / (len(clean) - 1)
    return mean, math.sqrt(var)


def run_sweep(spec: SweepSpec) -> list[SweepRow]:
    rows = []
    for value in spec.values:
        sats, lats, fails = [], [], []
        for k in range(spec.replicates):
            report = run(spec.substitute(value, k), collect_series=False)
            sats.append(report.satisfaction_rate if report.satisfaction_rate is not None
                        else float("nan"))
            lats.append(report.mean_latency if report.mean_latency is not None
                        else float("nan"))
            fails.append(report.failure_rate if report.failure_rate is not None
                         else float("nan"))
        s_mean, s_sd = _mean_sd(sats)
        l_mean, l_sd = _mean_sd(lats)
        f_mean, f_sd = _mean_sd(fails)
        rows.append(SweepRow(float(value), s_mean, s_sd, l_mean, l_sd, f_mean, f_sd,
                             spec.replicates))
    return rows


def rows_to_csv(rows: list[SweepRow]) -> str:
    lines = [SWEEP_CSV_HEADER]
    for r in rows:
        lines.append(
            f"{r.axis_value:g},{r.satisfaction_mean:.6f},{r.satisfaction_sd:.6f},"
            f"{r.latency_mean:.6f},{r.latency_sd:.6f},"
            f"{r.failure_mean:.6f},{r.failure_sd:.6f},{r.replicates}"
        )
    return "\n".join(lines) + "\n"


def _axis_grid(start: float = 0.05, stop: float = 0.60, step: float = 0.05) -> tuple[float, ...]:
    count = int(round((stop - start) / step)) + 1
    return tuple(round(start + i * step, 2) for i in range(count))


def preset_caregiver_sweep(client_fraction: float = 0.20, *, n: int = 40,
                           max_steps: int = 500, replicates: int = 30,
                           seed_base: int = 901) -> SweepSpec:
    """Informal-caregiver fraction swept 5%..60% at a fixed normal-client rate.

    Axis values that would push the total non-neutral mass over 1 are dropped,
    so high client rates sweep a truncated caregiver range.
    """
    base = SimParams(
        n=n,
        init_fractions={
            "professional": 0.0,
            "informal": 0.05,
            "neutral": 1.0 - 0.05 - client_fraction,
            "alarm": 0.0,
            "normal": client_fraction,
            "participant": 0.0,
        },
        max_steps=max_steps,
        seed=0,
        transition_mode="uniform",
        churn=0.02,
    )
    values = tuple(v for v in _axis_grid() if client_fraction + v <= 1.0 + FRACTION_TOL)
    return SweepSpec(base=base, axis="informal", values=values,
                     replicates=replicates, seed_base=seed_base)


def preset_participant_sweep(*, n: int = 40, max_steps: int = 500,
                             replicates: int = 30, seed_base: int = 902) -> SweepSpec:
    """Participant-requester fraction swept 5%..60%; composition-preserving churn.

    The client pool (normal + participant requesters) is fixed at 65% of the
    community, so raising the participant share lowers the care demand on the
    scarce informal caregivers in equal measure. The value grid includes 0.15,
    0.25 and 0.60 so latency can be compared at those rates directly.
    """
    base = SimParams(
        n=n,
        init_fractions={
            "professional": 0.0,
            "informal": 0.03,
            "neutral": 0.32,
            "alarm": 0.0,
            "normal": 0.60,
            "participant": 0.05,
        },
        max_steps=max_steps,
        seed=0,
        transition_mode="redraw",
        churn=0.01,
        radius=2,
    )
    return SweepSpec(base=base, axis="participant", values=_axis_grid(),
                     replicates=replicates, seed_base=seed_base,
                     complement="normal")

"""Unit commitment instances, schedules and the ground-truth cost evaluator.

Time is indexed ``0 .. T-1`` throughout; the state before period 0 is the
per-unit ``initial_on`` constant.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import ValidationError


class DemandMode(str, enum.Enum):
    #: ``A * sum_t (sum_i maxp_i on_ti - D_t)^2``
    PER_PERIOD = "per_period"
    #: ``A * (sum_t (sum_i maxp_i on_ti - D_t))^2``, the formula exactly as typeset
    VERBATIM = "verbatim"


class MinDownMode(str, enum.Enum):
    #: backward window ``tau in [t+1-mindown, t]``
    VERBATIM = "verbatim"
    #: forward window ``tau in [t, t+mindown-1]``
    FORWARD = "forward"


@dataclass(frozen=True)
class PenaltyFactors:
    """Weights of the demand, startup-logic, min-up and min-down blocks."""

    A: float = 10000.0
    B: float = 100.0
    C: float = 100.0
    D: float = 10.0

    def __post_init__(self):
        for name in "ABCD":
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValidationError(f"penalty {name} must be finite and >= 0, got {value}")

    def as_dict(self) -> dict:
        return {"A": self.A, "B": self.B, "C": self.C, "D": self.D}


@dataclass(frozen=True)
class UnitSpec:
    linear_cost: float
    startup_cost: float
    max_power: float
    min_up: int = 1
    min_down: int = 1
    initial_on: int = 0

    def __post_init__(self):
        if not self.max_power > 0:
            raise ValidationError(f"maxp must be > 0, got {self.max_power}")
        if self.linear_cost < 0:
            raise ValidationError(f"c must be >= 0, got {self.linear_cost}")
        if self.startup_cost < 0:
            raise ValidationError(f"h must be >= 0, got {self.startup_cost}")
        if int(self.min_up) != self.min_up or self.min_up < 1:
            raise ValidationError(f"minup must be an integer >= 1, got {self.min_up}")
        if int(self.min_down) != self.min_down or self.min_down < 1:
            raise ValidationError(f"mindown must be an integer >= 1, got {self.min_down}")
        if self.initial_on not in (0, 1):
            raise ValidationError(f"initial_on must be 0 or 1, got {self.initial_on}")


@dataclass(frozen=True)
class UcpInstance:
    units: tuple[UnitSpec, ...]
    horizon: int
    demand: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "demand", tuple(float(d) for d in self.demand))
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValidationError(f"horizon must be an integer >= 1, got {self.horizon}")
        if len(self.demand) != self.horizon:
            raise ValidationError(
                f"demand has {len(self.demand)} entries but horizon is {self.horizon}"
            )
        if any(d < 0 or not math.isfinite(d) for d in self.demand):
            raise ValidationError("demand entries must be finite and >= 0")
        if not self.units:
            raise ValidationError("units must not be empty")

    @property
    def n_units(self) -> int:
        return len(self.units)

    @property
    def n_variables(self) -> int:
        return 2 * self.horizon * self.n_units

    @property
    def max_power(self) -> np.ndarray:
        return np.array([u.max_power for u in self.units], dtype=float)

    @property
    def linear_cost(self) -> np.ndarray:
        return np.array([u.linear_cost for u in self.units], dtype=float)

    @property
    def startup_cost(self) -> np.ndarray:
        return np.array([u.startup_cost for u in self.units], dtype=float)

    @property
    def initial_on(self) -> np.ndarray:
        return np.array([u.initial_on for u in self.units], dtype=np.int8)

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "demand": list(self.demand),
            "units": [
                {
                    "c": u.linear_cost,
                    "h": u.startup_cost,
                    "maxp": u.max_power,
                    "minup": u.min_up,
                    "mindown": u.min_down,
                    "initial_on": u.initial_on,
                }
                for u in self.units
            ],
        }


@dataclass(frozen=True)
class Schedule:
    """Binary ``on`` and ``start`` matrices, both shaped ``(T, n_units)``."""

    on: np.ndarray
    start: np.ndarray

    def __post_init__(self):
        on = np.asarray(self.on, dtype=np.int8)
        start = np.asarray(self.start, dtype=np.int8)
        if on.ndim != 2 or on.shape != start.shape:
            raise ValidationError(f"on {on.shape} and start {start.shape} must be equal 2-d shapes")
        if not (np.isin(on, (0, 1)).all() and np.isin(start, (0, 1)).all()):
            raise ValidationError("schedule entries must be 0 or 1")
        on.flags.writeable = False
        start.flags.writeable = False
        object.__setattr__(self, "on", on)
        object.__setattr__(self, "start", start)

    @classmethod
    def empty(cls, instance: UcpInstance) -> Schedule:
        shape = (instance.horizon, instance.n_units)
        return cls(np.zeros(shape, np.int8), np.zeros(shape, np.int8))

    @classmethod
    def consistent(cls, instance: UcpInstance, on) -> Schedule:
        """Schedule whose start bits are derived from ``on`` transitions."""
        on = np.asarray(on, dtype=np.int8)
        prev = np.vstack([instance.initial_on[None, :], on[:-1]])
        return cls(on, on * (1 - prev))

    def to_dict(self) -> dict:
        return {"on": self.on.tolist(), "start": self.start.tolist()}


@dataclass
class CostReport:
    generation_cost: float
    demand_mismatch: list[float]
    startup_inconsistency_count: int
    min_up_violations: int
    min_down_violations: int
    penalized_objective: float
    blocks: dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "generation_cost": self.generation_cost,
            "demand_mismatch": list(self.demand_mismatch),
            "startup_inconsistency_count": self.startup_inconsistency_count,
            "min_up_violations": self.min_up_violations,
            "min_down_violations": self.min_down_violations,
            "penalized_objective": self.penalized_objective,
            "blocks": dict(self.blocks),
        }


def _require(doc, key, where):
    if not isinstance(doc, dict) or key not in doc:
        raise ValidationError(f"{where}{key}: missing required field")
    return doc[key]


def _number(value, where, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where}: expected a number, got {value!r}")
    if integer and int(value) != value:
        raise ValidationError(f"{where}: expected an integer, got {value!r}")
    return int(value) if integer else float(value)


def instance_from_dict(doc) -> UcpInstance:
    if not isinstance(doc, dict):
        raise ValidationError("instance document must be a mapping")
    horizon = _number(_require(doc, "horizon", ""), "horizon", integer=True)
    demand = _require(doc, "demand", "")
    if not isinstance(demand, list):
        raise ValidationError("demand: expected a list")
    demand = [_number(d, f"demand[{k}]") for k, d in enumerate(demand)]
    units_doc = _require(doc, "units", "")
    if not isinstance(units_doc, list):
        raise ValidationError("units: expected a list")
    units = []
    for k, u in enumerate(units_doc):
        where = f"units[{k}]."
        fields = {}
        for key in ("c", "h", "maxp"):
            fields[key] = _number(_require(u, key, where), where + key)
        for key in ("minup", "mindown"):
            fields[key] = _number(_require(u, key, where), where + key, integer=True)
        initial_on = _number(u.get("initial_on", 0), where + "initial_on", integer=True)
        try:
            units.append(
                UnitSpec(
                    linear_cost=fields["c"],
                    startup_cost=fields["h"],
                    max_power=fields["maxp"],
                    min_up=fields["minup"],
                    min_down=fields["mindown"],
                    initial_on=initial_on,
                )
            )
        except ValidationError as exc:
            raise ValidationError(f"{where[:-1]}: {exc}") from None
    return UcpInstance(units=tuple(units), horizon=horizon, demand=tuple(demand))


def parse_instance(text: str) -> UcpInstance:
    """Parse a JSON or YAML instance document."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ValidationError(f"instance document is not valid JSON/YAML: {exc}") from None
    return instance_from_dict(doc)


def generate_synthetic(n_units: int, horizon: int, seed: int) -> UcpInstance:
    """Random instance with a two-peak daily demand curve.

    Ranges: ``maxp`` in [50, 400] MW, ``c`` in [10, 50] per MW-period,
    ``h`` in [100, 2000] per start, min up/down in {1, 2, 3, 4},
    ``initial_on`` Bernoulli(0.3). Demand is scaled so that
    ``0.4 * capacity <= max(demand) <= capacity``.
    """
    if n_units < 1 or horizon < 1:
        raise ValidationError("n_units and horizon must be >= 1")
    rng = np.random.default_rng(seed)
    maxp = np.round(rng.uniform(50, 400, n_units), 1)
    cost = np.round(rng.uniform(10, 50, n_units), 2)
    startup = np.round(rng.uniform(100, 2000, n_units), 0)
    min_up = rng.integers(1, 5, n_units)
    min_down = rng.integers(1, 5, n_units)
    initial = (rng.random(n_units) < 0.3).astype(int)

    hours = np.arange(horizon) * 24.0 / max(horizon, 1)
    shape = (
        0.55
        + 0.25 * np.exp(-((hours - 10.0) ** 2) / 8.0)
        + 0.35 * np.exp(-((hours - 19.0) ** 2) / 6.0)
        + rng.normal(0.0, 0.03, horizon)
    )
    shape = np.clip(shape, 0.05, None)
    capacity = maxp.sum()
    peak = rng.uniform(0.5, 0.9) * capacity
    demand = np.round(shape / shape.max() * peak, 1)

    units = tuple(
        UnitSpec(float(cost[i]), float(startup[i]), float(maxp[i]), int(min_up[i]), int(min_down[i]), int(initial[i]))
        for i in range(n_units)
    )
    return UcpInstance(units=units, horizon=horizon, demand=tuple(demand.tolist()))


def _check_dims(instance: UcpInstance, schedule: Schedule):
    expected = (instance.horizon, instance.n_units)
    if schedule.on.shape != expected:
        raise ValidationError(f"schedule shape {schedule.on.shape} does not match instance {expected}")


def _penalty_blocks(instance, on, start, penalties, demand_mode, min_down_mode):
    T, n = on.shape
    on = on.astype(float)
    start = start.astype(float)
    maxp = instance.max_power
    prev = np.vstack([instance.initial_on[None, :].astype(float), on[:-1]])

    generation = float((on @ (instance.linear_cost * maxp)).sum() + (start @ instance.startup_cost).sum())

    mismatch = on @ maxp - np.asarray(instance.demand)
    if DemandMode(demand_mode) is DemandMode.PER_PERIOD:
        demand_block = float((mismatch**2).sum())
    else:
        demand_block = float(mismatch.sum() ** 2)

    startup_block = float((on * (1 - prev) + 2 * start * (prev - on) + start).sum())

    up_block = 0.0
    down_block = 0.0
    forward = MinDownMode(min_down_mode) is MinDownMode.FORWARD
    cum = np.vstack([np.zeros((1, n)), np.cumsum(on, axis=0)])
    for i, unit in enumerate(instance.units):
        for t in range(T):
            stop = min(t + unit.min_up, T)
            up_block += start[t, i] * ((stop - t) - (cum[stop, i] - cum[t, i]))
            if forward:
                lo, hi = t, min(t + unit.min_down, T)
            else:
                lo, hi = max(t + 1 - unit.min_down, 0), t + 1
            down_block += (start[t, i] + prev[t, i] - on[t, i]) * (cum[hi, i] - cum[lo, i])

    blocks = {
        "generation": generation,
        "demand": demand_block,
        "startup": startup_block,
        "min_up": float(up_block),
        "min_down": float(down_block),
    }
    total = (
        generation
        + penalties.A * demand_block
        + penalties.B * startup_block
        + penalties.C * up_block
        + penalties.D * down_block
    )
    return blocks, mismatch, float(total)


def _count_violations(instance, on, start):
    T = on.shape[0]
    prev = np.vstack([instance.initial_on[None, :], on[:-1]])
    logical_start = on * (1 - prev)
    inconsistent = int((start != logical_start).sum())
    up = down = 0
    for i, unit in enumerate(instance.units):
        for t in range(T):
            if on[t, i] and not prev[t, i]:
                if not on[t : min(t + unit.min_up, T), i].all():
                    up += 1
            elif prev[t, i] and not on[t, i]:
                if on[t : min(t + unit.min_down, T), i].any():
                    down += 1
    return inconsistent, up, down


def evaluate_schedule(
    instance: UcpInstance,
    schedule: Schedule,
    penalties: PenaltyFactors | None = None,
    demand_mode: DemandMode = DemandMode.PER_PERIOD,
    min_down_mode: MinDownMode = MinDownMode.VERBATIM,
) -> CostReport:
    """Generation cost, logical violation counts and the full penalized objective.

    The min-up block uses the horizon-clamped window length, so a unit that
    starts late and stays on until the horizon end is not penalized.
    """
    penalties = penalties or PenaltyFactors()
    _check_dims(instance, schedule)
    blocks, mismatch, total = _penalty_blocks(
        instance, schedule.on, schedule.start, penalties, demand_mode, min_down_mode
    )
    inconsistent, up, down = _count_violations(instance, schedule.on, schedule.start)
    return CostReport(
        generation_cost=blocks["generation"],
        demand_mismatch=[float(v) for v in mismatch],
        startup_inconsistency_count=inconsistent,
        min_up_violations=up,
        min_down_violations=down,
        penalized_objective=total,
        blocks=blocks,
    )

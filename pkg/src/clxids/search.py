"""Seeded random search over declared parameter ranges."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter, ObjectiveFailure


@dataclass(frozen=True)
class Continuous:
    low: float
    high: float
    log: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.low) and math.isfinite(self.high)) or self.low > self.high:
            raise InvalidParameter(f"empty range [{self.low}, {self.high}]")
        if self.log and self.low <= 0:
            raise InvalidParameter("log-scale range needs a positive lower bound")

    def sample(self, rng):
        if self.log:
            v = math.exp(rng.uniform(math.log(self.low), math.log(self.high)))
        else:
            v = rng.uniform(self.low, self.high)
        # exp/log round trips can land a hair outside the interval.
        return float(min(max(v, self.low), self.high))

    def contains(self, v):
        return self.low <= v <= self.high

    def to_dict(self):
        return {"type": "continuous", "low": self.low, "high": self.high, "log": self.log}


@dataclass(frozen=True)
class Discrete:
    values: tuple

    def __post_init__(self):
        if len(self.values) == 0:
            raise InvalidParameter("discrete range needs at least one value")
        object.__setattr__(self, "values", tuple(self.values))

    def sample(self, rng):
        v = self.values[int(rng.integers(len(self.values)))]
        return v.item() if isinstance(v, np.generic) else v

    def contains(self, v):
        return v in self.values

    def to_dict(self):
        return {"type": "discrete", "values": list(self.values)}


@dataclass(frozen=True)
class SearchSpace:
    params: dict

    def __post_init__(self):
        if not self.params:
            raise InvalidParameter("search space is empty")

    def sample(self, rng):
        # Sorted names keep the draw order independent of dict insertion order.
        return {name: self.params[name].sample(rng) for name in sorted(self.params)}

    def contains(self, values):
        return set(values) == set(self.params) and all(
            self.params[k].contains(v) for k, v in values.items())

    @classmethod
    def from_dict(cls, doc):
        params = {}
        for name, spec in doc.items():
            kind = spec.get("type", "continuous" if "low" in spec else "discrete")
            if kind == "continuous":
                params[name] = Continuous(float(spec["low"]), float(spec["high"]), bool(spec.get("log", False)))
            elif kind == "discrete":
                params[name] = Discrete(tuple(spec["values"]))
            else:
                raise InvalidParameter(f"unknown range type {kind!r} for {name}")
        return cls(params)

    def to_dict(self):
        return {k: v.to_dict() for k, v in self.params.items()}


@dataclass
class Trial:
    index: int
    params: dict
    seed: int
    objective: float | None = None
    error: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.error is None

    def to_dict(self):
        return {"index": self.index, "params": self.params, "seed": self.seed,
                "objective": self.objective, "error": self.error, **self.extra}


def trial_plan(space, budget, seed):
    """The full (params, seed) sequence for a run, fixed before any trial executes."""
    if budget < 1:
        raise InvalidParameter(f"budget must be >= 1, got {budget}")
    rng = np.random.default_rng(seed)
    plan = []
    for i in range(budget):
        params = space.sample(rng)
        plan.append(Trial(i, params, int(rng.integers(2**31 - 1))))
    return plan


def random_search(space, budget, objective, seed=0, log_path=None):
    """Run ``objective(params, seed)`` on ``budget`` random draws; higher is better.

    A trial whose objective raises is recorded with its error and skipped; it
    still uses up budget. Returns ``(best, trials)`` where ties go to the
    earliest trial, and ``best`` is None only if every trial failed.
    """
    trials = trial_plan(space, budget, seed)
    log = open(log_path, "a", encoding="utf-8") if log_path is not None else None
    try:
        for t in trials:
            try:
                value = objective(dict(t.params), t.seed)
                if isinstance(value, tuple):
                    value, t.extra = value
                value = float(value)
                if math.isnan(value):
                    raise ValueError("objective returned NaN")
                t.objective = value
            except Exception as exc:  # noqa: BLE001 - any objective failure skips the trial
                t.error = repr(ObjectiveFailure(t.index, exc))
            if log is not None:
                log.write(json.dumps(t.to_dict(), sort_keys=True) + "\n")
                log.flush()
    finally:
        if log is not None:
            log.close()
    best = None
    for t in trials:
        if t.ok and (best is None or t.objective > best.objective):
            best = t
    return best, trials

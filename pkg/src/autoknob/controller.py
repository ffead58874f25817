"""Control law, pole selection, and virtual-goal computation.

Every goal handled here is an upper bound on a nonnegative metric. The
controller models the metric as a linear response to the configuration
value (gain alpha) and applies an integral update each step: the bigger
the remaining headroom, the bigger the nudge, damped by the pole. Hard
goals are tracked through a lowered "virtual" goal so that noise around
the setpoint stays on the safe side of the real limit, and get an
aggressive pole of zero whenever the measurement is above the virtual
goal.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

from .errors import SynthesisError

MAX_CONF = sys.float_info.max


def clamp(value, lo, hi):
    return lo if value < lo else hi if value > hi else value


def compute_pole(delta: float) -> float:
    """Map a model-error bound to a stable pole.

    delta bounds the ratio between the true response and the fitted
    model. Bounds up to 2 tolerate the fastest response (pole 0); larger
    bounds need proportionally more damping to stay convergent.
    """
    if not math.isfinite(delta) or delta < 1.0:
        raise ValueError(f"model-error bound must be finite and >= 1, got {delta!r}")
    if delta > 2.0:
        return 1.0 - 2.0 / delta
    return 0.0


def compute_virtual_goal(goal: float, lam: float, hard: bool) -> float:
    """Lower a hard goal by the relative noise level lam.

    lam is the mean coefficient of variation observed while profiling.
    Soft goals are returned unchanged. For hard goals a lam of 1 or more
    would push the virtual goal to zero or below, which means the system
    is too noisy to leave any usable operating range.
    """
    if not math.isfinite(goal) or goal <= 0:
        raise ValueError(f"goal must be finite and > 0, got {goal!r}")
    if not math.isfinite(lam) or lam < 0:
        raise ValueError(f"noise level must be finite and >= 0, got {lam!r}")
    if not hard:
        return goal
    if lam >= 1.0:
        raise SynthesisError(
            f"system too unstable for a virtual goal (noise level {lam:.6g} >= 1)"
        )
    return (1.0 - lam) * goal


@dataclass
class ControllerParams:
    """Synthesized constants plus goal bookkeeping for one knob.

    interaction_n counts the knobs jointly correcting the same
    super-hard goal; each controller takes 1/interaction_n of the full
    correction so the combined step is what a single knob would apply.
    """

    alpha: float
    pole: float
    goal: float
    virtual_goal: float
    hard: bool
    interaction_n: int = 1
    conf_min: float = 0.0
    conf_max: float = MAX_CONF
    aggressive_pole: float = 0.0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not math.isfinite(self.alpha) or self.alpha == 0.0:
            raise ValueError(f"gain must be finite and nonzero, got {self.alpha!r}")
        if not 0.0 <= self.pole < 1.0:
            raise ValueError(f"pole must lie in [0, 1), got {self.pole!r}")
        if self.aggressive_pole != 0.0:
            raise ValueError("aggressive pole is fixed at 0")
        if self.hard:
            if self.virtual_goal > self.goal:
                raise ValueError("virtual goal must not exceed a hard goal")
        elif self.virtual_goal != self.goal:
            raise ValueError("soft goals are tracked directly; virtual goal must equal goal")
        if self.interaction_n < 1:
            raise ValueError("interaction count must be >= 1")
        if not self.conf_min <= self.conf_max:
            raise ValueError("empty configuration range")


@dataclass
class ControllerState:
    last_value: float
    step_index: int = 0


@dataclass
class SynthesisReport:
    """Everything synthesis derives from one profiling data set."""

    alpha: float
    delta: float
    lambda_: float
    pole: float
    virtual_goal: float

    def __post_init__(self):
        if self.delta < 1.0:
            raise ValueError(f"model-error bound must be >= 1, got {self.delta!r}")
        if self.lambda_ < 0.0:
            raise ValueError(f"noise level must be >= 0, got {self.lambda_!r}")
        expected = compute_pole(self.delta)
        if abs(self.pole - expected) > 1e-9 * max(1.0, abs(expected)):
            raise ValueError(
                f"pole {self.pole!r} inconsistent with model-error bound {self.delta!r}"
            )


def control_step(state: ControllerState, params: ControllerParams, measured: float):
    """Advance the controller one step against a fresh measurement.

    Returns (next_value, effective_pole). The state is updated in place:
    last_value becomes the clamped next value and the step index advances.
    """
    if not math.isfinite(measured):
        raise ValueError(f"measurement must be finite, got {measured!r}")
    error = params.virtual_goal - measured
    if params.hard and measured > params.virtual_goal:
        pole = params.aggressive_pole
    else:
        pole = params.pole
    step = (1.0 - pole) / (params.interaction_n * params.alpha) * error
    next_value = clamp(state.last_value + step, params.conf_min, params.conf_max)
    state.last_value = next_value
    state.step_index += 1
    return next_value, pole

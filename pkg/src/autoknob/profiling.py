"""Turn profiling samples into controller parameters.

A profiling run records (setting, performance) pairs at a handful of
fixed configuration values. Grouping them by setting gives the per-value
mean and spread; a least-squares line through the group means gives the
gain. Two summary statistics feed pole and virtual-goal selection:

* delta: 1 + mean of 3*stddev over the group mean measured relative to
  the worst (minimum) observed performance. Bounds how far the linear
  model can be off.
* lambda: mean coefficient of variation across groups. Sets how far a
  hard goal has to be lowered to keep noise on the safe side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .controller import SynthesisReport, compute_pole, compute_virtual_goal
from .errors import DegenerateGainError, InsufficientDataError


class ProfileSample(NamedTuple):
    setting: float
    perf: float


@dataclass
class GroupStats:
    setting: float
    count: int
    mean: float
    stddev: float
    mean_above_min: float


def _validate_samples(samples):
    if not samples:
        raise InsufficientDataError("no profiling samples")
    for i, (setting, perf) in enumerate(samples):
        if not (math.isfinite(setting) and math.isfinite(perf)):
            raise ValueError(f"sample {i} is not finite: ({setting!r}, {perf!r})")
        if perf < 0:
            raise ValueError(f"sample {i} has negative performance {perf!r}")


def group_stats(samples: Sequence[tuple]) -> list[GroupStats]:
    """Group samples by exact setting, sorted ascending by setting.

    Standard deviation uses the count-1 divisor and is zero for
    singleton groups. mean_above_min is the group mean relative to the
    single worst performance seen anywhere in the data set.
    """
    _validate_samples(samples)
    global_min = min(perf for _, perf in samples)
    by_setting: dict[float, list[float]] = {}
    for setting, perf in samples:
        by_setting.setdefault(setting, []).append(perf)
    groups = []
    for setting in sorted(by_setting):
        values = by_setting[setting]
        n = len(values)
        mean = sum(values) / n
        if n > 1:
            ss = sum((v - mean) ** 2 for v in values)
            stddev = math.sqrt(ss / (n - 1))
        else:
            stddev = 0.0
        groups.append(GroupStats(setting, n, mean, stddev, mean - global_min))
    return groups


def fit_alpha(groups: Sequence[GroupStats]) -> float:
    """Slope of the least-squares line of group means against settings.

    The intercept is fitted and discarded. A slope indistinguishable
    from zero relative to the metric scale means the knob does not move
    the metric and there is nothing to control.
    """
    if len(groups) < 2:
        raise InsufficientDataError(
            f"need at least 2 distinct settings to fit a gain, got {len(groups)}"
        )
    n = len(groups)
    mean_c = sum(g.setting for g in groups) / n
    mean_m = sum(g.mean for g in groups) / n
    sxx = sum((g.setting - mean_c) ** 2 for g in groups)
    sxy = sum((g.setting - mean_c) * (g.mean - mean_m) for g in groups)
    if sxx == 0.0:
        raise InsufficientDataError("all settings identical after grouping")
    slope = sxy / sxx
    scale = max(abs(g.mean) for g in groups) or 1.0
    if abs(slope) < 1e-9 * scale:
        raise DegenerateGainError(
            f"fitted gain {slope!r} is negligible at metric scale {scale!r}"
        )
    return slope


def compute_delta(groups: Sequence[GroupStats]) -> float:
    """Model-error bound from group spreads.

    Groups whose mean sits essentially at the observed minimum (below
    1e-9 of the largest mean-above-min) contribute an unbounded ratio
    and are excluded.
    """
    max_rel = max(g.mean_above_min for g in groups) if groups else 0.0
    eps = 1e-9 * max_rel
    usable = [g for g in groups if g.mean_above_min >= eps and g.mean_above_min > 0.0]
    if not usable:
        raise InsufficientDataError("every group sits at the minimum performance")
    total = sum(3.0 * g.stddev / g.mean_above_min for g in usable)
    return 1.0 + total / len(usable)


def compute_lambda(groups: Sequence[GroupStats]) -> float:
    """Mean coefficient of variation across groups; zero-mean groups are excluded."""
    usable = [g for g in groups if g.mean != 0.0]
    if not usable:
        raise InsufficientDataError("every group has zero mean performance")
    return sum(g.stddev / g.mean for g in usable) / len(usable)


def synthesize(samples: Sequence[tuple], goal: float, hard: bool) -> SynthesisReport:
    """Run the full pipeline: group, fit, and pick pole plus virtual goal."""
    groups = group_stats(samples)
    alpha = fit_alpha(groups)
    delta = compute_delta(groups)
    lam = compute_lambda(groups)
    pole = compute_pole(delta)
    virtual_goal = compute_virtual_goal(goal, lam, hard)
    return SynthesisReport(
        alpha=alpha, delta=delta, lambda_=lam, pole=pole, virtual_goal=virtual_goal
    )

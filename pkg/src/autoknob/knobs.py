"""Runtime knob objects: the API a tuned system calls while it runs.

A Knob wraps one controller. The host system reports measurements with
set_perf and reads the (possibly adjusted) configuration value with
get_conf; nothing changes outside get_conf. Indirect knobs control a
deputy variable (say, the actual queue length) instead of the
configuration value itself and translate the deputy target into a
configuration value through a transducer.

A GoalRegistry holds the per-metric goals. Registering several knobs
under one super-hard metric splits the correction evenly between them
by keeping every registered knob's interaction count in sync.
"""

from __future__ import annotations

import logging
import math
import threading

from .controller import (
    MAX_CONF,
    ControllerParams,
    ControllerState,
    SynthesisReport,
    compute_virtual_goal,
    control_step,
)
from .errors import ConfigurationError
from .sysfiles import GoalEntry, GoalFile, KnobSysFile, serialize_knob_sys, write_atomic

log = logging.getLogger(__name__)

PROFILE_FLUSH_EVERY = 64
UNREACHABLE_STEPS = 20


class GoalRegistry:
    def __init__(self):
        self._entries: dict[str, GoalEntry] = {}
        self._knobs: dict[str, list[Knob]] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_goal_file(cls, goal_file: GoalFile) -> "GoalRegistry":
        registry = cls()
        for metric, entry in goal_file.entries.items():
            registry.add_goal(metric, entry.goal, hard=entry.hard, super_hard=entry.super_hard)
        return registry

    def add_goal(self, metric: str, goal: float, hard: bool = False, super_hard: bool = False):
        with self._lock:
            self._entries[metric] = GoalEntry(goal=goal, hard=hard, super_hard=super_hard)
            self._knobs.setdefault(metric, [])

    def entry(self, metric: str) -> GoalEntry:
        with self._lock:
            if metric not in self._entries:
                raise ConfigurationError(f"no goal for metric {metric}")
            return self._entries[metric]

    def register(self, knob: "Knob"):
        with self._lock:
            if knob.metric not in self._entries:
                raise ConfigurationError(f"no goal for metric {knob.metric}")
            peers = self._knobs[knob.metric]
            peers.append(knob)
            if self._entries[knob.metric].super_hard:
                for peer in peers:
                    peer._set_interaction_n(len(peers))

    def knob_count(self, metric: str) -> int:
        with self._lock:
            return len(self._knobs.get(metric, []))


class Knob:
    """Direct knob: the controller output is the configuration value."""

    def __init__(
        self,
        name: str,
        metric: str,
        params: ControllerParams,
        initial_value: float,
        *,
        lam: float = 0.0,
        integer_valued: bool = False,
        profiling: bool = False,
        sys_file: KnobSysFile | None = None,
        sys_path=None,
        on_alert=None,
    ):
        self.name = name
        self.metric = metric
        self.params = params
        self.state = ControllerState(last_value=float(initial_value))
        self.integer_valued = integer_valued
        self.profiling = profiling
        self._lam = lam
        self._sys_file = sys_file
        self._sys_path = sys_path
        self._on_alert = on_alert
        self._lock = threading.RLock()
        self._measured = None
        self._profile_buffer = []
        self._conf_value = float(initial_value)
        self._clamp_bound = None
        self._clamp_sign = 0
        self._clamp_streak = 0
        self._alerted = False
        self.last_effective_pole = 0.0

    # -- measurement side ---------------------------------------------------

    def set_perf(self, measured: float):
        if not math.isfinite(measured):
            raise ValueError(f"measurement must be finite, got {measured!r}")
        with self._lock:
            self._measured = float(measured)
            if self.profiling:
                self._record_sample(self._profile_setting(), measured)

    def _profile_setting(self) -> float:
        return self._conf_value

    def _record_sample(self, setting: float, perf: float):
        self._profile_buffer.append((setting, perf))
        if len(self._profile_buffer) >= PROFILE_FLUSH_EVERY:
            self.flush_profile()

    def flush_profile(self):
        """Drain the profiling buffer, appending to the system file when one is attached."""
        with self._lock:
            drained = self._profile_buffer
            self._profile_buffer = []
            if drained and self._sys_file is not None:
                self._sys_file.samples.extend(drained)
                if self._sys_path is not None:
                    write_atomic(self._sys_path, serialize_knob_sys(self._sys_file))
            return drained

    # -- configuration side -------------------------------------------------

    @property
    def current_value(self):
        with self._lock:
            return self._round(self._conf_value) if self.integer_valued else self._conf_value

    def get_conf(self):
        """Apply one control step and return the new configuration value.

        Before the first measurement arrives this is a no-op returning
        the initial value. A stale measurement is reused: the integral
        action keeps stepping against the last known reading.
        """
        with self._lock:
            if self._measured is None:
                return self._round(self._conf_value) if self.integer_valued else self._conf_value
            error = self.params.virtual_goal - self._measured
            next_value, pole = control_step(self.state, self.params, self._measured)
            self.last_effective_pole = pole
            self._track_clamp(next_value, error)
            return self._finish_step(next_value)

    def _finish_step(self, next_value: float):
        if self.integer_valued:
            next_value = float(self._round(next_value))
            self.state.last_value = next_value
        self._conf_value = next_value
        return self._round(next_value) if self.integer_valued else next_value

    def _round(self, value: float) -> int:
        # Round toward the side that cannot push the metric over the goal:
        # down when more configuration means more metric, up otherwise.
        return math.floor(value) if self.params.alpha > 0 else math.ceil(value)

    def _track_clamp(self, next_value: float, error: float):
        bound = None
        if next_value == self.params.conf_min:
            bound = "min"
        elif next_value == self.params.conf_max:
            bound = "max"
        sign = 0 if error == 0 else (1 if error > 0 else -1)
        if bound is None or sign == 0:
            self._clamp_bound = None
            self._clamp_sign = 0
            self._clamp_streak = 0
            self._alerted = False
            return
        if bound != self._clamp_bound or sign != self._clamp_sign:
            self._clamp_bound = bound
            self._clamp_sign = sign
            self._clamp_streak = 1
            self._alerted = False
            return
        self._clamp_streak += 1
        if self._clamp_streak >= UNREACHABLE_STEPS and not self._alerted:
            self._alerted = True
            self._notify(
                f"goal unreachable for {self.name}: pinned at conf_{bound} "
                f"{next_value:g} for {self._clamp_streak} steps with the error "
                f"stuck {'below' if sign > 0 else 'above'} the goal"
            )

    def _notify(self, message: str):
        if self._on_alert is not None:
            self._on_alert(message)
        else:
            log.warning("%s", message)

    # -- goal changes ---------------------------------------------------------

    def set_goal(self, new_goal: float):
        """Retarget the knob; the virtual goal is recomputed from the stored noise level."""
        if not math.isfinite(new_goal) or new_goal <= 0:
            raise ValueError(f"goal must be finite and > 0, got {new_goal!r}")
        with self._lock:
            if new_goal == self.params.goal:
                return
            self.params.goal = new_goal
            self.params.virtual_goal = compute_virtual_goal(new_goal, self._lam, self.params.hard)
            self.params.validate()

    def _set_interaction_n(self, n: int):
        with self._lock:
            self.params.interaction_n = n


class IndirectKnob(Knob):
    """Knob whose controller drives a deputy variable, not the value itself.

    set_perf takes the measurement plus the deputy's current value; the
    controller always steps from where the deputy actually is, and the
    transducer maps the deputy target onto the configuration value. The
    configuration may sit below the deputy for a while (for example a
    queue that has yet to drain down to a lowered limit); that is fine,
    the next measurement restarts from reality.
    """

    def __init__(self, *args, deputy_name: str = "deputy", transducer=None, **kwargs):
        super().__init__(*args, **kwargs)
        self.deputy_name = deputy_name
        self.transducer = transducer if transducer is not None else lambda target: target

    def set_perf(self, measured: float, deputy_value: float = None):
        if deputy_value is None:
            raise TypeError("indirect knobs report set_perf(measured, deputy_value)")
        if not math.isfinite(deputy_value):
            raise ValueError(f"deputy value must be finite, got {deputy_value!r}")
        with self._lock:
            self.state.last_value = float(deputy_value)
            super().set_perf(measured)

    def _profile_setting(self) -> float:
        return self.state.last_value

    def _finish_step(self, deputy_target: float):
        conf = self.transducer(deputy_target)
        if self.integer_valued:
            conf = float(self._round(conf))
        self._conf_value = conf
        return self._round(conf) if self.integer_valued else conf


def knob_new(
    name: str,
    registry: GoalRegistry,
    source,
    *,
    metric: str = None,
    initial_value: float = None,
    integer_valued: bool = False,
    conf_min: float = 0.0,
    conf_max: float = MAX_CONF,
    transducer=None,
    profiling: bool = False,
    sys_path=None,
    on_alert=None,
) -> Knob:
    """Build a knob from a parsed system file or a bare synthesis report.

    A KnobSysFile supplies metric, initial value, synthesized
    parameters, and (via deputy_name) whether the knob is indirect. A
    bare SynthesisReport carries none of that, so the metric must be
    passed explicitly and the initial value defaults to 0. The goal is
    looked up in the registry either way.
    """
    sys_file = None
    if isinstance(source, KnobSysFile):
        sys_file = source
        if source.synthesized is None:
            raise ConfigurationError(f"system file for {name} has no synthesized parameters")
        report = source.synthesized
        metric = source.metric
        if initial_value is None:
            initial_value = source.initial_conf
        deputy_name = source.deputy_name
    elif isinstance(source, SynthesisReport):
        if metric is None:
            raise ConfigurationError(f"knob {name} built from a bare report needs a metric")
        report = source
        deputy_name = None
        if initial_value is None:
            initial_value = 0.0
    else:
        raise ConfigurationError(
            f"no system file or synthesis report for {name}"
        )
    entry = registry.entry(metric)
    params = ControllerParams(
        alpha=report.alpha,
        pole=report.pole,
        goal=entry.goal,
        virtual_goal=compute_virtual_goal(entry.goal, report.lambda_, entry.hard),
        hard=entry.hard,
        conf_min=conf_min,
        conf_max=conf_max,
    )
    kwargs = dict(
        lam=report.lambda_,
        integer_valued=integer_valued,
        profiling=profiling,
        sys_file=sys_file,
        sys_path=sys_path,
        on_alert=on_alert,
    )
    if deputy_name is not None or transducer is not None:
        knob = IndirectKnob(
            name,
            metric,
            params,
            initial_value,
            deputy_name=deputy_name or "deputy",
            transducer=transducer,
            **kwargs,
        )
    else:
        knob = Knob(name, metric, params, initial_value, **kwargs)
    registry.register(knob)
    return knob

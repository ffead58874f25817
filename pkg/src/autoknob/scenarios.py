"""Named experiment scenarios: a plant, a workload, goals, and knob wiring.

Two kinds of scenario exist. Pipeline scenarios ship a profiling plan
and synthesize their controller from scratch on every run (with a fixed
profiling seed, so synthesis is identical no matter which evaluation
seed is used). Pinned scenarios ship previously synthesized parameters,
which keeps controlled comparisons between modes honest: every mode
sees the same gain, pole, and virtual goal.

Scenario constants can be overridden from a key = value text file, e.g.

    ticks = 300
    drain_frac = 0.04
"""

from __future__ import annotations

from dataclasses import dataclass, fields as dataclass_fields, replace

from .controller import SynthesisReport, compute_pole, compute_virtual_goal
from .errors import ConfigurationError, FileFormatError
from .plants import (
    BoundedQueueConfig,
    BoundedQueuePlant,
    DualQueueConfig,
    DualQueuePlant,
    Phase,
    WorkloadSchedule,
    WriteBufferConfig,
    WriteBufferPlant,
)
from .sysfiles import _logical_lines, _parse_real, _split_kv


@dataclass
class KnobSetup:
    conf_name: str
    metric: str
    initial_conf: float
    integer_valued: bool = True
    conf_min: float = 0.0
    conf_max: float = 2000.0
    deputy_name: str = None
    pinned: SynthesisReport = None


@dataclass
class ProfilePlan:
    settings: tuple
    reps: int
    warmup: int
    seed: int


@dataclass
class Scenario:
    name: str
    kind: str
    plant_config: object
    schedule: WorkloadSchedule
    goals_text: str
    knobs: list
    ticks: int
    profile_plan: ProfilePlan = None
    goal_shifts: tuple = ()

    def build_plant(self, seed: int):
        if self.kind == "bounded-queue":
            return BoundedQueuePlant(self.plant_config, self.schedule, seed)
        if self.kind == "write-buffer":
            return WriteBufferPlant(self.plant_config, self.schedule, seed)
        if self.kind == "dual-queue":
            return DualQueuePlant(self.plant_config, self.schedule, seed)
        raise ConfigurationError(f"unknown plant kind {self.kind!r}")

    def build_profile_plant(self, seed: int):
        plant = self.build_plant(seed)
        plant.schedule = plant.profile_schedule()
        return plant


def _pinned_report(alpha: float, delta: float, lam: float, goal: float, hard: bool) -> SynthesisReport:
    return SynthesisReport(
        alpha=alpha,
        delta=delta,
        lambda_=lam,
        pole=compute_pole(delta),
        virtual_goal=compute_virtual_goal(goal, lam, hard),
    )


MEMORY_GOALS = "memory.used.goal = 495\nmemory.used.goal.hard = 1\n"

MEMORY_GOALS_SHARED = (
    "memory.used.goal = 495\n"
    "memory.used.goal.hard = 1\n"
    "memory.used.goal.super_hard = 1\n"
)

LATENCY_GOALS = "write.worst.latency.goal = 20\nwrite.worst.latency.goal.hard = 0\n"


def _hb3813_two_phase() -> Scenario:
    # Mid-run the requests get twice as fat but arrive rarely: a static
    # cap sized for phase one blows the memory limit in phase two, and
    # one safe for phase two wastes most of the queue in phase one.
    return Scenario(
        name="hb3813-two-phase",
        kind="bounded-queue",
        plant_config=BoundedQueueConfig(drain_frac=0.05, base_mem=60.0),
        schedule=WorkloadSchedule(
            [
                Phase(duration=200, arrival_rate=30.0, request_size=2.0),
                Phase(duration=200, arrival_rate=8.0, request_size=4.0),
            ]
        ),
        goals_text=MEMORY_GOALS,
        knobs=[
            KnobSetup(
                conf_name="max.queue.size",
                metric="memory.used",
                initial_conf=0.0,
                deputy_name="queue.length",
            )
        ],
        ticks=400,
        profile_plan=ProfilePlan(settings=(10, 40, 70, 100, 130), reps=20, warmup=15, seed=1337),
    )


def _hb3813_unstable() -> Scenario:
    # 70/30 write/read mix with periods of pure writes. The pinned pole
    # is deliberately slow so the two-pole switch is what saves the
    # memory limit during a write burst.
    mix = []
    for _ in range(3):
        mix.append(Phase(duration=60, arrival_rate=30.0, write_fraction=0.7))
        mix.append(Phase(duration=30, arrival_rate=30.0, write_fraction=1.0))
    mix.append(Phase(duration=30, arrival_rate=30.0, write_fraction=0.7))
    return Scenario(
        name="hb3813-unstable",
        kind="bounded-queue",
        plant_config=BoundedQueueConfig(drain_frac=0.08),
        schedule=WorkloadSchedule(mix),
        goals_text=MEMORY_GOALS,
        knobs=[
            KnobSetup(
                conf_name="max.queue.size",
                metric="memory.used",
                initial_conf=0.0,
                deputy_name="queue.length",
                pinned=_pinned_report(alpha=2.95, delta=20.0, lam=0.101, goal=495.0, hard=True),
            )
        ],
        ticks=300,
    )


def _dualqueue_readwrite() -> Scenario:
    # Reads join a write-only workload at tick 50. Both caps answer to
    # the same memory goal, so each controller takes half a correction.
    return Scenario(
        name="dualqueue-readwrite",
        kind="dual-queue",
        plant_config=DualQueueConfig(),
        schedule=WorkloadSchedule(
            [
                Phase(duration=50, write_arrival=25.0, read_arrival=0.0),
                Phase(duration=150, write_arrival=25.0, read_arrival=20.0),
            ]
        ),
        goals_text=MEMORY_GOALS_SHARED,
        knobs=[
            KnobSetup(
                conf_name="max.request.queue.size",
                metric="memory.used",
                initial_conf=0.0,
                deputy_name="request.queue.length",
                pinned=_pinned_report(alpha=3.0, delta=20.0, lam=0.101, goal=495.0, hard=True),
            ),
            KnobSetup(
                conf_name="max.response.queue.size",
                metric="memory.used",
                initial_conf=0.0,
                deputy_name="response.queue.length",
                pinned=_pinned_report(alpha=2.5, delta=20.0, lam=0.101, goal=495.0, hard=True),
            ),
        ],
        ticks=200,
    )


def _hb2149_goal_shift() -> Scenario:
    # The latency bound halves mid-run; the watermark has to climb so
    # flushes get shallower.
    return Scenario(
        name="hb2149-goal-shift",
        kind="write-buffer",
        plant_config=WriteBufferConfig(),
        schedule=WorkloadSchedule([Phase(duration=600, write_rate=2.0)]),
        goals_text=LATENCY_GOALS,
        knobs=[
            KnobSetup(
                conf_name="memstore.lower.limit",
                metric="write.worst.latency",
                initial_conf=0.25,
                integer_valued=False,
                conf_min=0.0,
                conf_max=0.78,
            )
        ],
        ticks=600,
        profile_plan=ProfilePlan(settings=(0.3, 0.4, 0.5, 0.6, 0.7), reps=8, warmup=1, seed=4242),
        goal_shifts=((300, "write.worst.latency", 10.0),),
    )


_PRESETS = {
    "hb3813-two-phase": _hb3813_two_phase,
    "hb3813-unstable": _hb3813_unstable,
    "dualqueue-readwrite": _dualqueue_readwrite,
    "hb2149-goal-shift": _hb2149_goal_shift,
}


def scenario_names() -> list:
    return sorted(_PRESETS)


def make_scenario(name: str, overrides_text: str = None) -> Scenario:
    if name not in _PRESETS:
        known = ", ".join(scenario_names())
        raise ConfigurationError(f"unknown scenario {name!r}; available: {known}")
    scenario = _PRESETS[name]()
    if overrides_text:
        scenario = apply_overrides(scenario, overrides_text)
    return scenario


def apply_overrides(scenario: Scenario, text: str) -> Scenario:
    """Override ticks or any numeric plant constant from key = value lines."""
    config_fields = {f.name: f for f in dataclass_fields(type(scenario.plant_config))}
    config_changes = {}
    ticks = scenario.ticks
    for line_no, line in _logical_lines(text):
        key, value = _split_kv(line, line_no)
        if key == "ticks":
            ticks = int(_parse_real(value, line_no))
        elif key in config_fields:
            config_changes[key] = _parse_real(value, line_no)
        else:
            raise FileFormatError(f"unknown override {key!r}", line_no)
    return replace(
        scenario,
        ticks=ticks,
        plant_config=replace(scenario.plant_config, **config_changes),
    )

"""Run scenarios under a controller or a baseline and collect traces.

Modes:

* smartconf: the full controller, built through the same system-file
  path production code would use.
* static:<value>: the knob never moves.
* single-pole: tracks the virtual goal but never switches to the
  aggressive pole above it.
* no-virtual-goal: keeps both poles but tracks the real limit directly.

Every run emits one trace per knob with a fixed column set and a
summary of violations, cumulative throughput, and mean absolute goal
error after a warmup of the first tenth of the run.
"""

from __future__ import annotations

from dataclasses import dataclass

from .controller import ControllerParams, compute_virtual_goal
from .errors import ConfigurationError
from .knobs import GoalRegistry, IndirectKnob, Knob, knob_new
from .plants import (
    BoundedQueueConfig,
    BoundedQueuePlant,
    DualQueueConfig,
    DualQueuePlant,
    Phase,
    WorkloadSchedule,
    WriteBufferConfig,
    WriteBufferPlant,
    run_buffer_profile,
    run_queue_profile,
)
from .profiling import synthesize
from .scenarios import Scenario
from .sysfiles import GoalFile, KnobSysFile, parse_goal_file

TRACE_COLUMNS = (
    "tick",
    "conf_value",
    "deputy_value",
    "metric",
    "goal",
    "virtual_goal",
    "effective_pole",
    "violation",
    "throughput_cum",
)

WARMUP_FRACTION = 0.1


@dataclass
class Mode:
    kind: str
    static_value: float = None

    def __str__(self):
        if self.kind == "static":
            return f"static:{self.static_value:g}"
        return self.kind


def parse_mode(text: str) -> Mode:
    if text == "smartconf" or text == "single-pole" or text == "no-virtual-goal":
        return Mode(kind=text)
    if text.startswith("static:"):
        raw = text.split(":", 1)[1]
        try:
            value = float(raw)
        except ValueError:
            raise ConfigurationError(f"bad static value {raw!r}") from None
        if value < 0:
            raise ConfigurationError(f"static value must be >= 0, got {value!r}")
        return Mode(kind="static", static_value=value)
    raise ConfigurationError(
        f"unknown mode {text!r}; expected smartconf, static:<value>, "
        f"single-pole, or no-virtual-goal"
    )


@dataclass
class Summary:
    violations: int
    throughput_cum: float
    mean_abs_error: float


@dataclass
class RunResult:
    scenario: str
    mode: str
    seed: int
    ticks: int
    traces: dict
    summary: Summary


def scenario_goals(scenario: Scenario) -> GoalFile:
    return parse_goal_file(scenario.goals_text)


def scenario_reports(scenario: Scenario) -> dict:
    """Synthesized parameters per knob: pinned ones, or a fresh profiling run."""
    goals = scenario_goals(scenario)
    reports = {}
    for setup in scenario.knobs:
        if setup.pinned is not None:
            reports[setup.conf_name] = setup.pinned
            continue
        if scenario.profile_plan is None:
            raise ConfigurationError(
                f"scenario {scenario.name} has neither pinned parameters nor a profiling plan"
            )
        plan = scenario.profile_plan
        plant = scenario.build_profile_plant(plan.seed)
        if scenario.kind == "bounded-queue":
            samples = run_queue_profile(plant, plan.settings, plan.reps, plan.warmup)
        elif scenario.kind == "write-buffer":
            samples = run_buffer_profile(plant, plan.settings, plan.reps, plan.warmup)
        else:
            raise ConfigurationError(f"no profiling runner for plant kind {scenario.kind!r}")
        entry = goals.entries[setup.metric]
        reports[setup.conf_name] = synthesize(samples, entry.goal, entry.hard)
    return reports


def _build_knobs(scenario: Scenario, mode: Mode, reports: dict):
    goals = scenario_goals(scenario)
    registry = GoalRegistry.from_goal_file(goals)
    knobs = []
    for setup in scenario.knobs:
        report = reports[setup.conf_name]
        entry = goals.entries[setup.metric]
        if mode.kind == "smartconf":
            sys_file = KnobSysFile(
                conf_name=setup.conf_name,
                metric=setup.metric,
                initial_conf=setup.initial_conf,
                deputy_name=setup.deputy_name,
                synthesized=report,
            )
            knob = knob_new(
                setup.conf_name,
                registry,
                sys_file,
                integer_valued=setup.integer_valued,
                conf_min=setup.conf_min,
                conf_max=setup.conf_max,
            )
        elif mode.kind == "single-pole":
            virtual = compute_virtual_goal(entry.goal, report.lambda_, entry.hard)
            params = ControllerParams(
                alpha=report.alpha,
                pole=report.pole,
                goal=virtual,
                virtual_goal=virtual,
                hard=False,
                conf_min=setup.conf_min,
                conf_max=setup.conf_max,
            )
            knob = _bare_knob(setup, params, report.lambda_)
            registry.register(knob)
        elif mode.kind == "no-virtual-goal":
            params = ControllerParams(
                alpha=report.alpha,
                pole=report.pole,
                goal=entry.goal,
                virtual_goal=entry.goal,
                hard=entry.hard,
                conf_min=setup.conf_min,
                conf_max=setup.conf_max,
            )
            knob = _bare_knob(setup, params, 0.0)
            registry.register(knob)
        else:
            raise ConfigurationError(f"mode {mode} does not build knobs")
        knobs.append(knob)
    return knobs


def _bare_knob(setup, params, lam):
    cls = IndirectKnob if setup.deputy_name else Knob
    kwargs = {"deputy_name": setup.deputy_name} if setup.deputy_name else {}
    return cls(
        setup.conf_name,
        setup.metric,
        params,
        setup.initial_conf,
        lam=lam,
        integer_valued=setup.integer_valued,
        **kwargs,
    )


def run_scenario(scenario: Scenario, mode: Mode, seed: int, ticks: int = None) -> RunResult:
    ticks = scenario.ticks if ticks is None else ticks
    if ticks <= 0:
        raise ConfigurationError(f"ticks must be positive, got {ticks!r}")
    plant = scenario.build_plant(seed)
    goals = scenario_goals(scenario)
    if mode.kind == "static":
        knobs = []
        reports = {}
    else:
        reports = scenario_reports(scenario)
        knobs = _build_knobs(scenario, mode, reports)

    goal_now = {metric: entry.goal for metric, entry in goals.entries.items()}
    is_dual = scenario.kind == "dual-queue"
    conditional = scenario.kind == "write-buffer"
    if mode.kind == "static":
        conf = [mode.static_value for _ in scenario.knobs]
    else:
        conf = [knob.current_value for knob in knobs]

    traces = {setup.conf_name: [] for setup in scenario.knobs}
    prev = None
    violations = 0
    err_sum = 0.0
    err_count = 0
    warmup = int(ticks * WARMUP_FRACTION)

    for tick in range(ticks):
        for shift_tick, metric, new_goal in scenario.goal_shifts:
            if tick == shift_tick:
                goal_now[metric] = new_goal
                for knob in knobs:
                    if knob.metric != metric:
                        continue
                    if mode.kind == "single-pole":
                        knob.set_goal(compute_virtual_goal(new_goal, knob._lam, True))
                    else:
                        knob.set_goal(new_goal)

        if knobs and prev is not None and (not conditional or plant.control_due()):
            for i, knob in enumerate(knobs):
                if conditional:
                    knob.set_perf(plant.control_measurement())
                elif isinstance(knob, IndirectKnob):
                    deputy = prev.deputy[i] if is_dual else prev.deputy
                    knob.set_perf(prev.metric, deputy)
                else:
                    knob.set_perf(prev.metric)
                conf[i] = knob.get_conf()

        reading = plant.step(tuple(conf) if is_dual else conf[0])
        violations += 1 if reading.violation else 0
        for i, setup in enumerate(scenario.knobs):
            goal = goal_now[setup.metric]
            if mode.kind == "static":
                virtual_goal, pole = goal, 0.0
            else:
                virtual_goal = knobs[i].params.virtual_goal
                pole = knobs[i].last_effective_pole
            deputy = reading.deputy[i] if is_dual else reading.deputy
            traces[setup.conf_name].append(
                (
                    tick,
                    conf[i],
                    deputy,
                    reading.metric,
                    goal,
                    virtual_goal,
                    pole,
                    1 if reading.violation else 0,
                    reading.throughput_cum,
                )
            )
        if tick >= warmup:
            metric_goal = goal_now[scenario.knobs[0].metric]
            err_sum += abs(metric_goal - reading.metric)
            err_count += 1
        prev = reading

    summary = Summary(
        violations=violations,
        throughput_cum=prev.throughput_cum if prev else 0.0,
        mean_abs_error=err_sum / err_count if err_count else 0.0,
    )
    return RunResult(
        scenario=scenario.name,
        mode=str(mode),
        seed=seed,
        ticks=ticks,
        traces=traces,
        summary=summary,
    )


@dataclass
class SweepResult:
    values: list
    violations: dict
    throughput: dict
    best_static: float


def sweep(scenario: Scenario, values, seed: int, ticks: int = None) -> SweepResult:
    """Run every static value and pick the best zero-violation one by throughput."""
    values = list(values)
    if not values:
        raise ConfigurationError("sweep needs at least one static value")
    violations = {}
    throughput = {}
    for value in values:
        result = run_scenario(scenario, Mode(kind="static", static_value=value), seed, ticks)
        violations[value] = result.summary.violations
        throughput[value] = result.summary.throughput_cum
    safe = [v for v in values if violations[v] == 0]
    best = max(safe, key=lambda v: (throughput[v], -v)) if safe else None
    return SweepResult(values=values, violations=violations, throughput=throughput, best_static=best)


def compare(scenario: Scenario, modes, seeds, ticks: int = None):
    """Cross every mode with every seed; rows come back sorted by (mode, seed)."""
    rows = []
    for mode in sorted(modes, key=str):
        for seed in sorted(seeds):
            result = run_scenario(scenario, mode, seed, ticks)
            rows.append(
                (
                    str(mode),
                    seed,
                    result.summary.violations,
                    result.summary.throughput_cum,
                    result.summary.mean_abs_error,
                )
            )
    return rows


# -- standalone plant profiling (the `profile` subcommand) -------------------

PLANT_PROFILES = {
    "bounded-queue": {
        "conf_name": "max.queue.size",
        "metric": "memory.used",
        "deputy_name": "queue.length",
        "initial_conf": 0.0,
        "settings": (10.0, 40.0, 70.0, 100.0, 130.0),
        "warmup": 15,
    },
    "write-buffer": {
        "conf_name": "memstore.lower.limit",
        "metric": "write.worst.latency",
        "deputy_name": None,
        "initial_conf": 0.25,
        "settings": (0.3, 0.4, 0.5, 0.6, 0.7),
        "warmup": 1,
    },
    "dual-queue-request": {
        "conf_name": "max.request.queue.size",
        "metric": "memory.used",
        "deputy_name": "request.queue.length",
        "initial_conf": 0.0,
        "settings": (10.0, 40.0, 70.0, 100.0, 130.0),
        "warmup": 15,
        "index": 0,
    },
    "dual-queue-response": {
        "conf_name": "max.response.queue.size",
        "metric": "memory.used",
        "deputy_name": "response.queue.length",
        "initial_conf": 0.0,
        "settings": (10.0, 40.0, 70.0, 100.0, 130.0),
        "warmup": 15,
        "index": 1,
    },
}

_DUAL_OTHER_CAP = 120.0


class _DualOneKnob:
    """One-knob view of the dual-queue plant, the other cap held fixed."""

    def __init__(self, plant: DualQueuePlant, index: int, other_cap: float):
        self.plant = plant
        self.index = index
        self.other_cap = other_cap

    def step(self, value):
        caps = [self.other_cap, self.other_cap]
        caps[self.index] = value
        reading = self.plant.step(tuple(caps))
        return reading._replace(deputy=reading.deputy[self.index])


def profile_plant(plant_name: str, settings=None, reps: int = 20, seed: int = 0) -> KnobSysFile:
    """Run the named plant's steady profiling workload and collect samples.

    Returns a knob system file without a synthesized section; pair it
    with a goal file and synthesize() to fill that in.
    """
    if plant_name not in PLANT_PROFILES:
        known = ", ".join(sorted(PLANT_PROFILES))
        raise ConfigurationError(f"unknown plant {plant_name!r}; available: {known}")
    if reps <= 0:
        raise ConfigurationError(f"reps must be positive, got {reps!r}")
    entry = PLANT_PROFILES[plant_name]
    settings = tuple(entry["settings"]) if settings is None else tuple(settings)
    if not settings:
        raise ConfigurationError("profile needs at least one setting")

    if plant_name == "bounded-queue":
        config = BoundedQueueConfig()
        plant = BoundedQueuePlant(config, WorkloadSchedule([Phase(duration=1)]), seed)
        plant.schedule = plant.profile_schedule()
        samples = run_queue_profile(plant, settings, reps, entry["warmup"])
    elif plant_name == "write-buffer":
        config = WriteBufferConfig()
        plant = WriteBufferPlant(config, WorkloadSchedule([Phase(duration=1)]), seed)
        plant.schedule = plant.profile_schedule()
        samples = run_buffer_profile(plant, settings, reps, entry["warmup"])
    else:
        schedule = WorkloadSchedule([Phase(duration=10**9, write_arrival=25.0, read_arrival=20.0)])
        inner = DualQueuePlant(DualQueueConfig(), schedule, seed)
        plant = _DualOneKnob(inner, entry["index"], _DUAL_OTHER_CAP)
        samples = run_queue_profile(plant, settings, reps, entry["warmup"])

    return KnobSysFile(
        conf_name=entry["conf_name"],
        metric=entry["metric"],
        initial_conf=entry["initial_conf"],
        deputy_name=entry["deputy_name"],
        synthesized=None,
        samples=[(float(s), float(p)) for s, p in samples],
    )

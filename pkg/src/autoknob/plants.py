"""Deterministic simulated server subsystems for exercising knobs.

Three discrete-time plants, one tick per simulated second, all driven
by a seeded generator so a (config, schedule, seed) triple always
replays the same trace:

* BoundedQueuePlant: an RPC server whose admission queue is capped by
  the knob. Memory is background pressure plus the bytes sitting in the
  queue; throughput scales with how many queued requests keep workers
  busy. Raising the cap buys throughput and spends memory.
* WriteBufferPlant: a write buffer that blocks writers while it flushes
  from an upper watermark down to the knob (the lower watermark). Deep
  flushes are rare but long; shallow flushes are frequent and each one
  stalls writers for the fixed startup overhead.
* DualQueuePlant: request and response queues capped by two knobs that
  share one memory budget. Requests admit into the first queue, are
  processed into responses (blocking when the response queue is full),
  and responses drain out as they are sent.

Background memory pressure is a slow sinusoid plus a mean-reverting
random walk with bounded increments, emulating GC and compaction noise
without unbounded single-tick jumps.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

TICKS_PER_SECOND = 1


class MetricReading(NamedTuple):
    metric: float
    deputy: object
    throughput_cum: float
    violation: bool


@dataclass
class Phase:
    """One stretch of workload. Fields not used by a plant stay None."""

    duration: int
    arrival_rate: float = None
    request_size: float = None
    write_fraction: float = None
    write_arrival: float = None
    read_arrival: float = None
    write_rate: float = None

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"phase duration must be positive, got {self.duration!r}")


@dataclass
class WorkloadSchedule:
    phases: list
    seed: int = 0

    def __post_init__(self):
        if not self.phases:
            raise ValueError("schedule needs at least one phase")

    def total_ticks(self) -> int:
        return sum(p.duration for p in self.phases)

    def phase_at(self, tick: int) -> Phase:
        """Phase covering the tick; runs longer than the schedule stay in the last phase."""
        if tick < 0:
            raise ValueError(f"tick must be >= 0, got {tick!r}")
        elapsed = 0
        for phase in self.phases:
            elapsed += phase.duration
            if tick < elapsed:
                return phase
        return self.phases[-1]


class BackgroundMemory:
    """Slow sinusoid plus clamped mean-reverting jitter, in MB."""

    def __init__(self, base, sin_amp, sin_period, ou_rho, ou_step, ou_clamp, floor, rng):
        self.base = base
        self.sin_amp = sin_amp
        self.sin_period = sin_period
        self.ou_rho = ou_rho
        self.ou_step = ou_step
        self.ou_clamp = ou_clamp
        self.floor = floor
        self._rng = rng
        self._ou = 0.0

    def step(self, tick: int) -> float:
        eps = self._rng.uniform(-self.ou_step, self.ou_step)
        ou = self.ou_rho * self._ou + eps
        self._ou = min(max(ou, -self.ou_clamp), self.ou_clamp)
        value = (
            self.base
            + self.sin_amp * math.sin(2.0 * math.pi * tick / self.sin_period)
            + self._ou
        )
        return max(value, self.floor)


@dataclass
class BoundedQueueConfig:
    mem_limit: float = 495.0
    base_mem: float = 100.0
    sin_amp: float = 8.0
    sin_period: float = 90.0
    ou_rho: float = 0.93
    ou_step: float = 15.0
    ou_clamp: float = 60.0
    base_floor: float = 5.0
    drain_frac: float = 0.05
    drain_cap: int = 40
    write_size: float = 4.0
    read_size: float = 0.5
    profile_arrival: float = 50.0
    profile_size: float = 2.5


class BoundedQueuePlant:
    """Admission-capped RPC queue against a shared memory limit.

    Each tick drains before it admits, so a lowered cap starts taking
    effect immediately even while the queue is still above it. Workers
    scale with occupancy: a fuller queue keeps more of them busy, up to
    drain_cap requests per tick.
    """

    def __init__(self, config: BoundedQueueConfig, schedule: WorkloadSchedule, seed: int):
        self.config = config
        self.schedule = schedule
        self.rng = np.random.default_rng(seed)
        self.background = BackgroundMemory(
            config.base_mem,
            config.sin_amp,
            config.sin_period,
            config.ou_rho,
            config.ou_step,
            config.ou_clamp,
            config.base_floor,
            self.rng,
        )
        self.tick = 0
        self.queue = deque()
        self.queue_bytes = 0.0
        self.throughput_cum = 0
        self.last_base = None

    @property
    def queue_len(self) -> int:
        return len(self.queue)

    def _drained_count(self) -> int:
        n = len(self.queue)
        if n == 0:
            return 0
        busy = max(int(self.config.drain_frac * n), 1)
        return min(n, self.config.drain_cap, busy)

    def step(self, knob_value) -> MetricReading:
        if not math.isfinite(knob_value) or knob_value < 0:
            raise ValueError(f"queue cap must be finite and >= 0, got {knob_value!r}")
        phase = self.schedule.phase_at(self.tick)
        base = self.background.step(self.tick)
        self.last_base = base

        for _ in range(self._drained_count()):
            self.queue_bytes -= self.queue.popleft()
            self.throughput_cum += 1

        arrivals = int(self.rng.poisson(phase.arrival_rate))
        if phase.write_fraction is not None:
            writes = self.rng.random(arrivals) < phase.write_fraction
            sizes = np.where(writes, self.config.write_size, self.config.read_size)
        else:
            sizes = np.full(arrivals, phase.request_size)
        for size in sizes:
            if len(self.queue) >= knob_value:
                break
            size = float(size)
            self.queue.append(size)
            self.queue_bytes += size

        memory = base + self.queue_bytes
        self.tick += 1
        return MetricReading(
            metric=memory,
            deputy=len(self.queue),
            throughput_cum=self.throughput_cum,
            violation=memory > self.config.mem_limit,
        )

    def profile_schedule(self) -> WorkloadSchedule:
        """Steady profiling workload, deliberately not the evaluation mix."""
        return WorkloadSchedule(
            [
                Phase(
                    duration=10**9,
                    arrival_rate=self.config.profile_arrival,
                    request_size=self.config.profile_size,
                )
            ]
        )


@dataclass
class WriteBufferConfig:
    heap: float = 400.0
    upper_limit: float = 0.8
    flush_rate: float = 8.0
    flush_jitter: float = 0.05
    flush_overhead: int = 3
    latency_window: int = 30
    profile_write_rate: float = 4.0
    mem_limit: float = None


class WriteBufferPlant:
    """Flush-blocking write buffer; the knob is the lower flush watermark.

    A flush begins when the buffer fill reaches upper_limit * heap and
    drains, after a fixed startup stall, down to lower_limit * heap.
    Writers are blocked for the whole flush, so the latency a flush
    inflicts is its blocked tick count. The metric is the longest
    blocked interval inside a sliding window; the controller instead
    reads the longest interval since the previous flush began, so one
    long-gone episode cannot be missed between events.
    """

    def __init__(self, config: WriteBufferConfig, schedule: WorkloadSchedule, seed: int):
        self.config = config
        self.schedule = schedule
        self.rng = np.random.default_rng(seed)
        self.tick = 0
        self.fill = 0.0
        self.flushing = False
        self.flush_low = 0.0
        self.flush_rate_now = config.flush_rate
        self.overhead_left = 0
        self.throughput_cum = 0.0
        self.blocked_history = deque(maxlen=config.latency_window)
        self.current_streak = 0
        self.worst_since_event = 0
        self.last_episode_ticks = 0
        self._episode_ticks = 0

    def control_due(self) -> bool:
        return not self.flushing and self.fill >= self.config.upper_limit * self.config.heap

    def control_measurement(self) -> float:
        return float(self.worst_since_event)

    def window_worst(self) -> int:
        worst = run = 0
        for blocked in self.blocked_history:
            run = run + 1 if blocked else 0
            worst = max(worst, run)
        return worst

    def step(self, lower_limit) -> MetricReading:
        cfg = self.config
        if not 0.0 <= lower_limit < cfg.upper_limit:
            raise ValueError(
                f"lower watermark must lie in [0, {cfg.upper_limit}), got {lower_limit!r}"
            )
        phase = self.schedule.phase_at(self.tick)
        if self.control_due():
            # A flush starts: this is the control event boundary.
            self.flushing = True
            self.flush_low = lower_limit * cfg.heap
            self.flush_rate_now = cfg.flush_rate * float(
                self.rng.uniform(1.0 - cfg.flush_jitter, 1.0 + cfg.flush_jitter)
            )
            self.overhead_left = cfg.flush_overhead
            self.worst_since_event = 0
            self._episode_ticks = 0

        if self.flushing:
            blocked = True
            self._episode_ticks += 1
            if self.overhead_left > 0:
                self.overhead_left -= 1
            else:
                self.fill -= self.flush_rate_now
                if self.fill <= self.flush_low:
                    self.fill = max(self.fill, 0.0)
                    self.flushing = False
                    self.last_episode_ticks = self._episode_ticks
        else:
            blocked = False
            self.fill += phase.write_rate
            self.throughput_cum += phase.write_rate

        self.current_streak = self.current_streak + 1 if blocked else 0
        self.worst_since_event = max(self.worst_since_event, self.current_streak)
        self.blocked_history.append(blocked)
        self.tick += 1
        return MetricReading(
            metric=float(self.window_worst()),
            deputy=self.fill,
            throughput_cum=self.throughput_cum,
            violation=False,
        )

    def profile_schedule(self) -> WorkloadSchedule:
        return WorkloadSchedule([Phase(duration=10**9, write_rate=self.config.profile_write_rate)])


@dataclass
class DualQueueConfig:
    mem_limit: float = 495.0
    base_mem: float = 100.0
    sin_amp: float = 8.0
    sin_period: float = 90.0
    ou_rho: float = 0.93
    ou_step: float = 15.0
    ou_clamp: float = 60.0
    base_floor: float = 5.0
    req_write_size: float = 3.0
    req_read_size: float = 0.25
    resp_write_size: float = 0.25
    resp_read_size: float = 2.5
    proc_frac: float = 0.08
    proc_cap: int = 40
    send_frac: float = 0.12
    send_cap: int = 40


class DualQueuePlant:
    """Request and response queues under one memory budget, two knobs.

    Writes are request-heavy (large payload in, small response out);
    reads are the reverse. Processing a request moves its response into
    the response queue and stalls when that queue is at its cap, so the
    response knob backpressures the whole pipeline.
    """

    def __init__(self, config: DualQueueConfig, schedule: WorkloadSchedule, seed: int):
        self.config = config
        self.schedule = schedule
        self.rng = np.random.default_rng(seed)
        self.background = BackgroundMemory(
            config.base_mem,
            config.sin_amp,
            config.sin_period,
            config.ou_rho,
            config.ou_step,
            config.ou_clamp,
            config.base_floor,
            self.rng,
        )
        self.tick = 0
        self.requests = deque()
        self.responses = deque()
        self.req_bytes = 0.0
        self.resp_bytes = 0.0
        self.throughput_cum = 0
        self.last_base = None

    @staticmethod
    def _service_count(n, frac, cap) -> int:
        if n == 0:
            return 0
        return min(n, cap, max(int(frac * n), 1))

    def step(self, knob_values) -> MetricReading:
        req_cap, resp_cap = knob_values
        for cap in (req_cap, resp_cap):
            if not math.isfinite(cap) or cap < 0:
                raise ValueError(f"queue cap must be finite and >= 0, got {cap!r}")
        cfg = self.config
        phase = self.schedule.phase_at(self.tick)
        base = self.background.step(self.tick)
        self.last_base = base

        sent = self._service_count(len(self.responses), cfg.send_frac, cfg.send_cap)
        for _ in range(sent):
            self.resp_bytes -= self.responses.popleft()
            self.throughput_cum += 1

        workers = self._service_count(len(self.requests), cfg.proc_frac, cfg.proc_cap)
        for _ in range(workers):
            if len(self.responses) >= resp_cap:
                break
            req_size, resp_size = self.requests.popleft()
            self.req_bytes -= req_size
            self.responses.append(resp_size)
            self.resp_bytes += resp_size

        writes = int(self.rng.poisson(phase.write_arrival)) if phase.write_arrival else 0
        reads = int(self.rng.poisson(phase.read_arrival)) if phase.read_arrival else 0
        kinds = np.concatenate([np.ones(writes, dtype=bool), np.zeros(reads, dtype=bool)])
        if len(kinds) > 1:
            kinds = kinds[self.rng.permutation(len(kinds))]
        for is_write in kinds:
            if len(self.requests) >= req_cap:
                break
            if is_write:
                entry = (cfg.req_write_size, cfg.resp_write_size)
            else:
                entry = (cfg.req_read_size, cfg.resp_read_size)
            self.requests.append(entry)
            self.req_bytes += entry[0]

        memory = base + self.req_bytes + self.resp_bytes
        self.tick += 1
        return MetricReading(
            metric=memory,
            deputy=(len(self.requests), len(self.responses)),
            throughput_cum=self.throughput_cum,
            violation=memory > cfg.mem_limit,
        )


def run_queue_profile(plant, settings, reps, warmup):
    """Hold each cap, discard the warmup ticks, then record one sample per tick.

    Settings run in ascending order so the queue only ever has to fill
    upward into the next cap during its warmup.
    """
    samples = []
    for cap in sorted(settings):
        for _ in range(warmup):
            plant.step(cap)
        for _ in range(reps):
            reading = plant.step(cap)
            samples.append((float(reading.deputy), reading.metric))
    return samples


def run_buffer_profile(plant, settings, reps, warmup):
    """Record whole flush episodes per watermark setting.

    Each sample is (setting, blocked ticks of one flush that ran fully
    at that setting); the first warmup episodes per setting are thrown
    away so a flush straddling a setting change never pollutes the data.
    """
    samples = []
    for setting in settings:
        for episode in range(warmup + reps):
            while not plant.control_due():
                plant.step(setting)
            while plant.control_due() or plant.flushing:
                plant.step(setting)
            if episode >= warmup:
                samples.append((float(setting), float(plant.last_episode_ticks)))
    return samples

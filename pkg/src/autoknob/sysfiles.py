"""Text formats for knob state, goals, and the global profiling switch.

Three line-oriented formats share one discipline: UTF-8, LF line
endings, full-line # comments, blank lines ignored, and reals rendered
with 17 significant digits so values survive a round trip exactly.

Knob system file (one per knob, conventionally <ConfName>.SmartConf.sys):

    smartconf-sys v1
    conf_name = max.queue.size
    metric = memory.used
    initial_conf = 0
    deputy_name = queue.length          # optional, marks an indirect knob
    alpha = 2.5                         # optional synthesized block,
    delta = 1.8                         # all five keys or none
    lambda = 0.101
    pole = 0
    virtual_goal = 445.005
    samples:                            # optional profiling samples
    sample,60,213.6
    sample,60,221.9

Goal file: one upper bound per metric.

    memory.used.goal = 495
    memory.used.goal.hard = 1
    memory.used.goal.super_hard = 0

Global file: profiling switch plus the knob-to-metric map.

    profiling = 0
    knob,max.queue.size,memory.used

Parsing is strict: unknown keys, malformed numbers, or missing required
keys raise FileFormatError with the offending line number. Serializing
emits a canonical ordering, so serialize(parse(text)) is byte-identical
for canonical text and parse(serialize(obj)) returns an equal object.
"""

from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass, field

from .controller import SynthesisReport
from .errors import FileFormatError

SYS_HEADER = "smartconf-sys v1"

_REAL_RE = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")
_NAME_RE = re.compile(r"^[A-Za-z0-9_.][A-Za-z0-9_.-]*$")

_SYNTH_KEYS = ("alpha", "delta", "lambda", "pole", "virtual_goal")


def fmt_real(x: float) -> str:
    return format(float(x), ".17g")


def _parse_real(token: str, line_no: int) -> float:
    token = token.strip()
    if not _REAL_RE.match(token):
        raise FileFormatError(f"malformed number {token!r}", line_no)
    return float(token)


def _parse_flag(token: str, line_no: int) -> bool:
    token = token.strip()
    if token not in ("0", "1"):
        raise FileFormatError(f"expected 0 or 1, got {token!r}", line_no)
    return token == "1"


def _parse_name(token: str, line_no: int) -> str:
    token = token.strip()
    if not _NAME_RE.match(token):
        raise FileFormatError(f"malformed name {token!r}", line_no)
    return token


def _logical_lines(text: str):
    """Yield (line_no, stripped_line), skipping blanks and # comments."""
    for i, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield i, line


def _split_kv(line: str, line_no: int):
    if "=" not in line:
        raise FileFormatError(f"expected 'key = value', got {line!r}", line_no)
    key, _, value = line.partition("=")
    return key.strip(), value.strip()


def write_atomic(path, text: str):
    """Replace path with text in one step: write a sibling temp file, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".sys")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class KnobSysFile:
    conf_name: str
    metric: str
    initial_conf: float
    deputy_name: str | None = None
    synthesized: SynthesisReport | None = None
    samples: list = field(default_factory=list)
    format_version: int = 1


def parse_knob_sys(text: str) -> KnobSysFile:
    lines = list(_logical_lines(text))
    if not lines or lines[0][1] != SYS_HEADER:
        raise FileFormatError(
            f"first line must be {SYS_HEADER!r}", lines[0][0] if lines else 1
        )
    fields: dict[str, object] = {}
    synth: dict[str, float] = {}
    samples = []
    in_samples = False
    for line_no, line in lines[1:]:
        if line == "samples:":
            if in_samples:
                raise FileFormatError("duplicate samples: sentinel", line_no)
            in_samples = True
            continue
        if in_samples:
            parts = line.split(",")
            if len(parts) != 3 or parts[0] != "sample":
                raise FileFormatError(
                    f"expected 'sample,<setting>,<perf>', got {line!r}", line_no
                )
            samples.append(
                (_parse_real(parts[1], line_no), _parse_real(parts[2], line_no))
            )
            continue
        key, value = _split_kv(line, line_no)
        if key in fields or key in synth:
            raise FileFormatError(f"duplicate key {key!r}", line_no)
        if key in ("conf_name", "metric", "deputy_name"):
            fields[key] = _parse_name(value, line_no)
        elif key == "initial_conf":
            fields[key] = _parse_real(value, line_no)
        elif key in _SYNTH_KEYS:
            synth[key] = _parse_real(value, line_no)
        else:
            raise FileFormatError(f"unknown key {key!r}", line_no)
    for required in ("conf_name", "metric", "initial_conf"):
        if required not in fields:
            raise FileFormatError(f"missing required key {required!r}")
    synthesized = None
    if synth:
        missing = [k for k in _SYNTH_KEYS if k not in synth]
        if missing:
            raise FileFormatError(
                f"incomplete synthesized block, missing {', '.join(missing)}"
            )
        try:
            synthesized = SynthesisReport(
                alpha=synth["alpha"],
                delta=synth["delta"],
                lambda_=synth["lambda"],
                pole=synth["pole"],
                virtual_goal=synth["virtual_goal"],
            )
        except ValueError as exc:
            raise FileFormatError(f"inconsistent synthesized block: {exc}") from exc
    return KnobSysFile(
        conf_name=fields["conf_name"],
        metric=fields["metric"],
        initial_conf=fields["initial_conf"],
        deputy_name=fields.get("deputy_name"),
        synthesized=synthesized,
        samples=samples,
    )


def serialize_knob_sys(sys_file: KnobSysFile) -> str:
    if sys_file.format_version != 1:
        raise ValueError(f"unsupported format version {sys_file.format_version!r}")
    out = [SYS_HEADER]
    out.append(f"conf_name = {sys_file.conf_name}")
    out.append(f"metric = {sys_file.metric}")
    out.append(f"initial_conf = {fmt_real(sys_file.initial_conf)}")
    if sys_file.deputy_name is not None:
        out.append(f"deputy_name = {sys_file.deputy_name}")
    if sys_file.synthesized is not None:
        rep = sys_file.synthesized
        out.append(f"alpha = {fmt_real(rep.alpha)}")
        out.append(f"delta = {fmt_real(rep.delta)}")
        out.append(f"lambda = {fmt_real(rep.lambda_)}")
        out.append(f"pole = {fmt_real(rep.pole)}")
        out.append(f"virtual_goal = {fmt_real(rep.virtual_goal)}")
    if sys_file.samples:
        out.append("samples:")
        for setting, perf in sys_file.samples:
            out.append(f"sample,{fmt_real(setting)},{fmt_real(perf)}")
    return "\n".join(out) + "\n"


@dataclass
class GoalEntry:
    goal: float
    hard: bool = False
    super_hard: bool = False

    def __post_init__(self):
        if self.goal <= 0:
            raise ValueError(f"goal must be > 0, got {self.goal!r}")
        if self.super_hard and not self.hard:
            raise ValueError("a super-hard goal must also be hard")


@dataclass
class GoalFile:
    entries: dict[str, GoalEntry] = field(default_factory=dict)


def parse_goal_file(text: str) -> GoalFile:
    goals: dict[str, float] = {}
    hard: dict[str, bool] = {}
    super_hard: dict[str, bool] = {}
    order: list[str] = []
    flag_lines: dict[str, int] = {}
    for line_no, line in _logical_lines(text):
        key, value = _split_kv(line, line_no)
        if key.endswith(".goal.super_hard"):
            metric = _parse_name(key[: -len(".goal.super_hard")], line_no)
            bucket, parsed = super_hard, _parse_flag(value, line_no)
        elif key.endswith(".goal.hard"):
            metric = _parse_name(key[: -len(".goal.hard")], line_no)
            bucket, parsed = hard, _parse_flag(value, line_no)
        elif key.endswith(".goal"):
            metric = _parse_name(key[: -len(".goal")], line_no)
            bucket, parsed = goals, _parse_real(value, line_no)
        else:
            raise FileFormatError(f"unknown key {key!r}", line_no)
        if metric in bucket:
            raise FileFormatError(f"duplicate entry for {key!r}", line_no)
        bucket[metric] = parsed
        flag_lines[key] = line_no
        if metric not in order:
            order.append(metric)
    entries = {}
    for metric in order:
        if metric not in goals:
            raise FileFormatError(f"metric {metric!r} has flags but no goal value")
        try:
            entries[metric] = GoalEntry(
                goal=goals[metric],
                hard=hard.get(metric, False),
                super_hard=super_hard.get(metric, False),
            )
        except ValueError as exc:
            raise FileFormatError(f"invalid goal for {metric!r}: {exc}") from exc
    return GoalFile(entries=entries)


def serialize_goal_file(goal_file: GoalFile) -> str:
    out = []
    for metric, entry in goal_file.entries.items():
        out.append(f"{metric}.goal = {fmt_real(entry.goal)}")
        out.append(f"{metric}.goal.hard = {1 if entry.hard else 0}")
        out.append(f"{metric}.goal.super_hard = {1 if entry.super_hard else 0}")
    return "\n".join(out) + "\n" if out else ""


@dataclass
class GlobalSysFile:
    profiling_enabled: bool = False
    knobs: list = field(default_factory=list)


def parse_global_sys(text: str) -> GlobalSysFile:
    profiling = None
    knobs = []
    seen = set()
    for line_no, line in _logical_lines(text):
        if line.startswith("knob,"):
            parts = line.split(",")
            if len(parts) != 3:
                raise FileFormatError(
                    f"expected 'knob,<conf_name>,<metric>', got {line!r}", line_no
                )
            conf_name = _parse_name(parts[1], line_no)
            metric = _parse_name(parts[2], line_no)
            if conf_name in seen:
                raise FileFormatError(f"duplicate knob {conf_name!r}", line_no)
            seen.add(conf_name)
            knobs.append((conf_name, metric))
            continue
        key, value = _split_kv(line, line_no)
        if key != "profiling":
            raise FileFormatError(f"unknown key {key!r}", line_no)
        if profiling is not None:
            raise FileFormatError("duplicate profiling switch", line_no)
        profiling = _parse_flag(value, line_no)
    if profiling is None:
        raise FileFormatError("missing profiling switch")
    return GlobalSysFile(profiling_enabled=profiling, knobs=knobs)


def serialize_global_sys(global_file: GlobalSysFile) -> str:
    out = [f"profiling = {1 if global_file.profiling_enabled else 0}"]
    for conf_name, metric in global_file.knobs:
        out.append(f"knob,{conf_name},{metric}")
    return "\n".join(out) + "\n"

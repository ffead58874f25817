"""Round-trip and strictness tests for the three text formats."""

import os

import numpy as np
import pytest

from autoknob.controller import SynthesisReport, compute_pole
from autoknob.errors import FileFormatError
from autoknob.sysfiles import (
    GlobalSysFile,
    GoalEntry,
    GoalFile,
    KnobSysFile,
    fmt_real,
    parse_global_sys,
    parse_goal_file,
    parse_knob_sys,
    serialize_global_sys,
    serialize_goal_file,
    serialize_knob_sys,
    write_atomic,
)

WORDS = ["max", "queue", "size", "memory", "used", "limit", "heap", "rpc", "store", "len"]


def random_name(rng):
    k = int(rng.integers(1, 4))
    return ".".join(WORDS[int(i)] for i in rng.integers(0, len(WORDS), k))


def random_real(rng):
    kind = int(rng.integers(0, 4))
    if kind == 0:
        return float(rng.integers(0, 1000))
    if kind == 1:
        return float(rng.uniform(-1e3, 1e3))
    if kind == 2:
        return float(rng.uniform(0, 1) * 10.0 ** int(rng.integers(-8, 9)))
    return float(np.float64(rng.standard_normal()) * 1e-5)


def random_report(rng):
    delta = float(1.0 + rng.exponential(3.0))
    return SynthesisReport(
        alpha=float(rng.uniform(-5, 5)) or 1.0,
        delta=delta,
        lambda_=float(rng.uniform(0, 0.9)),
        pole=compute_pole(delta),
        virtual_goal=float(rng.uniform(1, 1000)),
    )


def random_knob_file(rng):
    return KnobSysFile(
        conf_name=random_name(rng),
        metric=random_name(rng),
        initial_conf=random_real(rng),
        deputy_name=random_name(rng) if rng.random() < 0.5 else None,
        synthesized=random_report(rng) if rng.random() < 0.7 else None,
        samples=[
            (random_real(rng), abs(random_real(rng)))
            for _ in range(int(rng.integers(0, 8)))
        ],
    )


def random_goal_file(rng):
    entries = {}
    for _ in range(int(rng.integers(1, 5))):
        metric = random_name(rng)
        hard = bool(rng.random() < 0.6)
        entries[metric] = GoalEntry(
            goal=float(rng.uniform(0.1, 2000.0)),
            hard=hard,
            super_hard=bool(hard and rng.random() < 0.4),
        )
    return GoalFile(entries=entries)


def random_global_file(rng):
    names = {random_name(rng) for _ in range(int(rng.integers(0, 5)))}
    return GlobalSysFile(
        profiling_enabled=bool(rng.random() < 0.5),
        knobs=[(name, random_name(rng)) for name in sorted(names)],
    )


def test_fmt_real_is_lossless():
    rng = np.random.default_rng(200)
    for _ in range(500):
        x = random_real(rng)
        assert float(fmt_real(x)) == x


class TestKnobSysRoundTrip:
    def test_random_files(self):
        rng = np.random.default_rng(201)
        for _ in range(300):
            original = random_knob_file(rng)
            text = serialize_knob_sys(original)
            parsed = parse_knob_sys(text)
            assert parsed == original
            assert serialize_knob_sys(parsed) == text

    def test_comments_and_blanks_ignored(self):
        text = (
            "# a comment before the header is fine\n"
            "\n"
            "smartconf-sys v1\n"
            "conf_name = max.queue.size\n"
            "\n"
            "metric = memory.used   # not a comment, but spaces trim\n"
        )
        # trailing text after the value is not stripped as a comment;
        # the name parser rejects it
        with pytest.raises(FileFormatError):
            parse_knob_sys(text)

    def test_minimal_file(self):
        text = "smartconf-sys v1\nconf_name = a\nmetric = b\ninitial_conf = 0\n"
        parsed = parse_knob_sys(text)
        assert parsed.conf_name == "a"
        assert parsed.deputy_name is None
        assert parsed.synthesized is None
        assert parsed.samples == []


class TestKnobSysErrors:
    def test_bad_header(self):
        with pytest.raises(FileFormatError) as info:
            parse_knob_sys("nonsense v9\n")
        assert info.value.line == 1
        assert "first line" in str(info.value)

    def test_empty_file(self):
        with pytest.raises(FileFormatError):
            parse_knob_sys("")

    def test_unknown_key_carries_line_number(self):
        text = "smartconf-sys v1\n# pad\nwat = 3\n"
        with pytest.raises(FileFormatError) as info:
            parse_knob_sys(text)
        assert info.value.line == 3
        assert "unknown key" in str(info.value)

    def test_duplicate_key(self):
        text = "smartconf-sys v1\nconf_name = a\nconf_name = b\n"
        with pytest.raises(FileFormatError, match="duplicate key"):
            parse_knob_sys(text)

    def test_malformed_number(self):
        for bad in ("1_0", "inf", "nan", "0x10", "--3"):
            text = f"smartconf-sys v1\nconf_name = a\nmetric = b\ninitial_conf = {bad}\n"
            with pytest.raises(FileFormatError, match="malformed number"):
                parse_knob_sys(text)

    def test_missing_required_key(self):
        with pytest.raises(FileFormatError, match="missing required key"):
            parse_knob_sys("smartconf-sys v1\nconf_name = a\nmetric = b\n")

    def test_sample_line_outside_samples_section(self):
        text = (
            "smartconf-sys v1\nconf_name = a\nmetric = b\ninitial_conf = 0\n"
            "sample,10,20\n"
        )
        with pytest.raises(FileFormatError, match="key = value"):
            parse_knob_sys(text)

    def test_bad_sample_line(self):
        text = (
            "smartconf-sys v1\nconf_name = a\nmetric = b\ninitial_conf = 0\n"
            "samples:\nsample,10\n"
        )
        with pytest.raises(FileFormatError) as info:
            parse_knob_sys(text)
        assert info.value.line == 6

    def test_incomplete_synthesized_block(self):
        text = (
            "smartconf-sys v1\nconf_name = a\nmetric = b\ninitial_conf = 0\n"
            "alpha = 2.5\ndelta = 1.5\n"
        )
        with pytest.raises(FileFormatError, match="incomplete synthesized block"):
            parse_knob_sys(text)

    def test_inconsistent_pole_rejected(self):
        text = (
            "smartconf-sys v1\nconf_name = a\nmetric = b\ninitial_conf = 0\n"
            "alpha = 2.5\ndelta = 4\nlambda = 0.1\npole = 0.25\nvirtual_goal = 90\n"
        )
        with pytest.raises(FileFormatError, match="inconsistent synthesized block"):
            parse_knob_sys(text)


class TestGoalFile:
    def test_random_round_trip(self):
        rng = np.random.default_rng(202)
        for _ in range(300):
            original = random_goal_file(rng)
            text = serialize_goal_file(original)
            parsed = parse_goal_file(text)
            assert parsed == original
            assert serialize_goal_file(parsed) == text

    def test_defaults_are_soft(self):
        parsed = parse_goal_file("memory.used.goal = 495\n")
        entry = parsed.entries["memory.used"]
        assert entry.goal == 495.0
        assert not entry.hard
        assert not entry.super_hard

    def test_flags_without_goal_rejected(self):
        with pytest.raises(FileFormatError, match="flags but no goal"):
            parse_goal_file("memory.used.goal.hard = 1\n")

    def test_duplicate_goal_rejected(self):
        text = "m.goal = 1\nm.goal = 2\n"
        with pytest.raises(FileFormatError, match="duplicate entry"):
            parse_goal_file(text)

    def test_super_hard_requires_hard(self):
        text = "m.goal = 5\nm.goal.super_hard = 1\n"
        with pytest.raises(FileFormatError, match="must also be hard"):
            parse_goal_file(text)

    def test_nonpositive_goal_rejected(self):
        with pytest.raises(FileFormatError, match="invalid goal"):
            parse_goal_file("m.goal = 0\n")

    def test_flag_must_be_binary(self):
        text = "m.goal = 5\nm.goal.hard = yes\n"
        with pytest.raises(FileFormatError, match="expected 0 or 1"):
            parse_goal_file(text)

    def test_unknown_key(self):
        with pytest.raises(FileFormatError, match="unknown key"):
            parse_goal_file("m.target = 5\n")


class TestGlobalFile:
    def test_random_round_trip(self):
        rng = np.random.default_rng(203)
        for _ in range(300):
            original = random_global_file(rng)
            text = serialize_global_sys(original)
            parsed = parse_global_sys(text)
            assert parsed == original
            assert serialize_global_sys(parsed) == text

    def test_missing_switch_rejected(self):
        with pytest.raises(FileFormatError, match="missing profiling switch"):
            parse_global_sys("knob,a,b\n")

    def test_duplicate_switch_rejected(self):
        with pytest.raises(FileFormatError, match="duplicate profiling"):
            parse_global_sys("profiling = 0\nprofiling = 1\n")

    def test_duplicate_knob_rejected(self):
        text = "profiling = 0\nknob,a,m\nknob,a,m2\n"
        with pytest.raises(FileFormatError, match="duplicate knob"):
            parse_global_sys(text)

    def test_bad_knob_line(self):
        with pytest.raises(FileFormatError, match="knob,<conf_name>,<metric>"):
            parse_global_sys("profiling = 0\nknob,a\n")


class TestWriteAtomic:
    def test_creates_and_replaces(self, tmp_path):
        path = tmp_path / "out.sys"
        write_atomic(path, "first\n")
        assert path.read_text() == "first\n"
        write_atomic(path, "second\n")
        assert path.read_text() == "second\n"

    def test_leaves_no_temp_files(self, tmp_path):
        path = tmp_path / "out.sys"
        for i in range(5):
            write_atomic(path, f"gen {i}\n")
        assert os.listdir(tmp_path) == ["out.sys"]

"""Scenario configuration: the executable description of one experiment.

A scenario binds together the environment schedule, interaction policy,
update-law parameters, attention schedules, initial state, detectors and
run bookkeeping.  Scenarios load from flat INI-style files with sections
``schedule``, ``interaction``, ``model``, ``attention``, ``init``,
``detect`` and ``run``; every omitted key takes a documented default and
``dump_scenario`` echoes the fully resolved configuration.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path

from .dynamics import ModelConfig
from .graphs import GraphParseError, SignedDigraph, load_graph
from .sampling import AttentionSchedule, InteractionPolicy, PolicyError
from .schedule import GraphSchedule

_SECTIONS = ("schedule", "interaction", "model", "attention", "init", "detect", "run")


class ConfigError(Exception):
    """Base class for scenario configuration problems."""


class ParseError(ConfigError):
    """Unreadable configuration or graph text."""

    def __init__(self, source: str, line: int | None, message: str):
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")
        self.source = source
        self.line = line


class ValidationError(ConfigError):
    """A named field holds an unacceptable value."""

    def __init__(self, field_name: str, reason: str):
        super().__init__(f"{field_name}: {reason}")
        self.field = field_name
        self.reason = reason


@dataclass(frozen=True)
class InitSpec:
    """Initial-state specification.

    ``explicit`` takes a full state vector; ``uniform`` draws componentwise
    from [low, high] using the run's init substream; ``cluster_levels``
    assigns one value per positive cluster of the total graph.
    """

    kind: str
    values: tuple[float, ...] = ()
    low: float = -1.0
    high: float = 1.0

    def __post_init__(self):
        if self.kind not in ("explicit", "uniform", "cluster_levels"):
            raise ValidationError("init.kind", f"unknown kind {self.kind!r}")
        if self.kind == "uniform" and self.high < self.low:
            raise ValidationError("init.high", "must be >= init.low")
        if self.kind in ("explicit", "cluster_levels") and not self.values:
            raise ValidationError("init.values", f"required for kind {self.kind}")


@dataclass(frozen=True)
class DetectorSettings:
    """Detector tolerances and thresholds used during and after a run.

    ``window`` defaults to max(100, horizon // 100) recorded slots at run
    time.  Thresholds set to None disable the corresponding detector.
    """

    eps: float = 1e-6
    window: int | None = None
    max_abs_threshold: float | None = 1e8
    gap_threshold: float | None = 1e8
    gap_floor: float | None = None
    cluster_eps: float = 1e-4
    zero_eps: float = 1e-4

    def __post_init__(self):
        if self.eps <= 0:
            raise ValidationError("detect.eps", "must be > 0")
        if self.window is not None and self.window < 2:
            raise ValidationError("detect.window", "must be >= 2")
        for name, value in (
            ("detect.max_abs_threshold", self.max_abs_threshold),
            ("detect.gap_threshold", self.gap_threshold),
            ("detect.gap_floor", self.gap_floor),
        ):
            if value is not None and value <= 0:
                raise ValidationError(name, "must be > 0")


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully validated description of a batch of runs."""

    schedule: GraphSchedule
    policy: InteractionPolicy
    model: ModelConfig
    attention_positive: AttentionSchedule
    attention_negative: AttentionSchedule
    init: InitSpec
    horizon: int
    seed: int = 0
    num_runs: int = 1
    record_stride: int = 1
    record_attention: bool = False
    early_stop: bool = False
    detect: DetectorSettings = field(default_factory=DetectorSettings)
    graph_refs: tuple[str, ...] = ()  # source file names, for config echoes

    def __post_init__(self):
        if self.horizon < 0:
            raise ValidationError("run.horizon", "must be >= 0")
        if self.seed < 0:
            raise ValidationError("run.seed", "must be >= 0")
        if self.num_runs < 1:
            raise ValidationError("run.num_runs", "must be >= 1")
        if self.record_stride < 1:
            raise ValidationError("run.record_stride", "must be >= 1")
        if self.init.kind == "explicit" and len(self.init.values) != self.schedule.n:
            raise ValidationError(
                "init.values", f"expected {self.schedule.n} entries, got {len(self.init.values)}"
            )
        if self.attention_positive.role != "positive":
            object.__setattr__(self, "attention_positive", replace(self.attention_positive, role="positive"))
        if self.attention_negative.role != "negative":
            object.__setattr__(self, "attention_negative", replace(self.attention_negative, role="negative"))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(part.strip()) for part in text.split(",") if part.strip())


class _Reader:
    """Typed key access over parsed INI data, tracking unknown keys."""

    def __init__(self, parser: configparser.ConfigParser, source: str):
        self.parser = parser
        self.source = source
        self.seen: set[tuple[str, str]] = set()

    def get(self, section: str, key: str, default=None) -> str | None:
        self.seen.add((section, key))
        if self.parser.has_option(section, key):
            return self.parser.get(section, key)
        return default

    def get_float(self, section: str, key: str, default=None) -> float | None:
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError:
            raise ValidationError(f"{section}.{key}", f"not a number: {raw!r}") from None

    def get_int(self, section: str, key: str, default=None) -> int | None:
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ValidationError(f"{section}.{key}", f"not an integer: {raw!r}") from None

    def get_bool(self, section: str, key: str, default=False) -> bool:
        raw = self.get(section, key)
        if raw is None:
            return default
        lowered = raw.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValidationError(f"{section}.{key}", f"not a boolean: {raw!r}")

    def reject_unknown(self):
        for section in self.parser.sections():
            if section not in _SECTIONS:
                raise ValidationError(section, "unknown section")
            for key in self.parser.options(section):
                if (section, key) not in self.seen:
                    raise ValidationError(f"{section}.{key}", "unknown key")


def _load_graph_ref(name: str, base_dir: Path) -> SignedDigraph:
    path = (base_dir / name).resolve() if not Path(name).is_absolute() else Path(name)
    if not path.exists():
        raise ValidationError("schedule", f"graph file not found: {name}")
    try:
        return load_graph(path)
    except GraphParseError as exc:
        raise ParseError(str(path), exc.line_no, str(exc)) from exc


def _build_schedule(reader: _Reader, base_dir: Path) -> tuple[GraphSchedule, tuple[str, ...]]:
    kind = reader.get("schedule", "kind", "static")
    if kind == "static":
        name = reader.get("schedule", "graph")
        if name is None:
            raise ValidationError("schedule.graph", "required for a static schedule")
        return GraphSchedule.static(_load_graph_ref(name, base_dir)), (name,)
    if kind == "periodic":
        raw = reader.get("schedule", "graphs")
        if raw is None:
            raise ValidationError("schedule.graphs", "required for a periodic schedule")
        names = tuple(part.strip() for part in raw.split(",") if part.strip())
        if not names:
            raise ValidationError("schedule.graphs", "needs at least one graph file")
        return GraphSchedule.periodic([_load_graph_ref(n, base_dir) for n in names]), names
    if kind == "scripted":
        default_name = reader.get("schedule", "default")
        if default_name is None:
            raise ValidationError("schedule.default", "required for a scripted schedule")
        default = _load_graph_ref(default_name, base_dir)
        script: dict[int, SignedDigraph] = {}
        names = [default_name]
        raw = reader.get("schedule", "script", "")
        for entry in (p.strip() for p in raw.split(",") if p.strip()):
            if ":" not in entry:
                raise ValidationError("schedule.script", f"expected 't:file', got {entry!r}")
            slot_text, name = entry.split(":", 1)
            try:
                slot = int(slot_text)
            except ValueError:
                raise ValidationError("schedule.script", f"bad slot {slot_text!r}") from None
            script[slot] = _load_graph_ref(name.strip(), base_dir)
            names.append(name.strip())
        return GraphSchedule.scripted(script, default), tuple(names)
    raise ValidationError("schedule.kind", f"unknown kind {kind!r}")


def _build_attention(reader: _Reader, role: str) -> AttentionSchedule:
    prefix = role
    kind = reader.get("attention", f"{prefix}.kind", "constant")
    try:
        if kind == "constant":
            return AttentionSchedule("constant", q=reader.get_float("attention", f"{prefix}.q", 0.5), role=role)
        if kind == "power_decay":
            return AttentionSchedule(
                "power_decay",
                c=reader.get_float("attention", f"{prefix}.c", 1.0),
                gamma=reader.get_float("attention", f"{prefix}.gamma", 2.0),
                role=role,
            )
        if kind == "scripted":
            raw = reader.get("attention", f"{prefix}.values", "")
            return AttentionSchedule("scripted", values=_floats(raw), role=role)
    except PolicyError as exc:
        raise ValidationError(f"attention.{prefix}", str(exc)) from exc
    raise ValidationError(f"attention.{prefix}.kind", f"unknown kind {kind!r}")


def scenario_from_text(text: str, base_dir: Path | str = ".", source: str = "<string>") -> ScenarioConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError(source, exc.lineno, "missing section header") from exc
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ParseError(source, line, "malformed line") from exc
    except configparser.Error as exc:
        raise ParseError(source, None, str(exc)) from exc

    reader = _Reader(parser, source)
    base = Path(base_dir)

    schedule, graph_refs = _build_schedule(reader, base)

    kind = reader.get("interaction", "kind", "per_arc_independent")
    p = reader.get_float("interaction", "p", 0.5)
    p_lower = reader.get_float("interaction", "p_lower")
    p_upper = reader.get_float("interaction", "p_upper")
    try:
        policy = InteractionPolicy(kind, p=p, p_lower=p_lower, p_upper=p_upper)
    except PolicyError as exc:
        raise ValidationError("interaction", str(exc)) from exc

    alpha = reader.get_float("model", "alpha", 0.1)
    beta = reader.get_float("model", "beta", 0.1)
    if alpha < 0:
        raise ValidationError("model.alpha", "must be >= 0")
    if beta <= 0:
        raise ValidationError("model.beta", "must be > 0")
    negative_model = reader.get("model", "negative_model", "state_reversion")
    allow_zero = reader.get_bool("model", "allow_zero_alpha", False)
    cap = reader.get_float("model", "overflow_cap", 1e300)
    try:
        model = ModelConfig(negative_model, alpha, beta, allow_zero_alpha=allow_zero, overflow_cap=cap)
    except ValueError as exc:
        raise ValidationError("model", str(exc)) from exc

    att_pos = _build_attention(reader, "positive")
    att_neg = _build_attention(reader, "negative")

    init_kind = reader.get("init", "kind", "uniform")
    init_values = _floats(reader.get("init", "values", ""))
    init_low = reader.get_float("init", "low", -1.0)
    init_high = reader.get_float("init", "high", 1.0)
    init = InitSpec(init_kind, values=init_values, low=init_low, high=init_high)

    window = reader.get_int("detect", "window")
    detect = DetectorSettings(
        eps=reader.get_float("detect", "eps", 1e-6),
        window=window,
        max_abs_threshold=reader.get_float("detect", "max_abs_threshold", 1e8),
        gap_threshold=reader.get_float("detect", "gap_threshold", 1e8),
        gap_floor=reader.get_float("detect", "gap_floor"),
        cluster_eps=reader.get_float("detect", "cluster_eps", 1e-4),
        zero_eps=reader.get_float("detect", "zero_eps", 1e-4),
    )

    scenario = ScenarioConfig(
        schedule=schedule,
        policy=policy,
        model=model,
        attention_positive=att_pos,
        attention_negative=att_neg,
        init=init,
        horizon=reader.get_int("run", "horizon", 1000),
        seed=reader.get_int("run", "seed", 0),
        num_runs=reader.get_int("run", "num_runs", 1),
        record_stride=reader.get_int("run", "record_stride", 1),
        record_attention=reader.get_bool("run", "record_attention", False),
        early_stop=reader.get_bool("run", "early_stop", False),
        detect=detect,
        graph_refs=graph_refs,
    )
    reader.reject_unknown()
    return scenario


def load_scenario(path) -> ScenarioConfig:
    """Load and fully validate a scenario file."""
    path = Path(path)
    if not path.exists():
        raise ParseError(str(path), None, "file not found")
    return scenario_from_text(path.read_text(encoding="utf-8"), path.parent, source=str(path))


def _attention_lines(sched: AttentionSchedule, prefix: str) -> list[str]:
    if sched.kind == "constant":
        return [f"{prefix}.kind = constant", f"{prefix}.q = {sched.q!r}"]
    if sched.kind == "power_decay":
        return [
            f"{prefix}.kind = power_decay",
            f"{prefix}.c = {sched.c!r}",
            f"{prefix}.gamma = {sched.gamma!r}",
        ]
    return [
        f"{prefix}.kind = scripted",
        f"{prefix}.values = {', '.join(repr(v) for v in sched.values)}",
    ]


def dump_scenario(cfg: ScenarioConfig, graph_refs: tuple[str, ...] | None = None) -> str:
    """Canonical INI echo of a configuration with every default resolved.

    ``graph_refs`` names the graph files the schedule section should point
    at; it defaults to the refs recorded at load time or generated names.
    """
    refs = graph_refs or cfg.graph_refs
    if not refs:
        refs = tuple(f"graph{i}.sg" for i in range(len(cfg.schedule.graphs)))
    lines = ["[schedule]", f"kind = {cfg.schedule.kind}"]
    if cfg.schedule.kind == "static":
        lines.append(f"graph = {refs[0]}")
    elif cfg.schedule.kind == "periodic":
        lines.append(f"graphs = {', '.join(refs)}")
    else:
        lines.append(f"default = {refs[0]}")
        entries = ", ".join(f"{t}:{refs[idx]}" for t, idx in sorted(cfg.schedule.script.items()))
        lines.append(f"script = {entries}")
    lines += [
        "",
        "[interaction]",
        f"kind = {cfg.policy.kind}",
        f"p = {cfg.policy.p!r}",
    ]
    if cfg.policy.p_lower is not None:
        lines.append(f"p_lower = {cfg.policy.p_lower!r}")
    if cfg.policy.p_upper is not None:
        lines.append(f"p_upper = {cfg.policy.p_upper!r}")
    lines += [
        "",
        "[model]",
        f"negative_model = {cfg.model.negative_model}",
        f"alpha = {cfg.model.alpha!r}",
        f"beta = {cfg.model.beta!r}",
        f"allow_zero_alpha = {str(cfg.model.allow_zero_alpha).lower()}",
        f"overflow_cap = {cfg.model.overflow_cap!r}",
        "",
        "[attention]",
        *_attention_lines(cfg.attention_positive, "positive"),
        *_attention_lines(cfg.attention_negative, "negative"),
        "",
        "[init]",
        f"kind = {cfg.init.kind}",
    ]
    if cfg.init.kind == "uniform":
        lines += [f"low = {cfg.init.low!r}", f"high = {cfg.init.high!r}"]
    else:
        lines.append(f"values = {', '.join(repr(v) for v in cfg.init.values)}")
    detect = cfg.detect
    lines += [
        "",
        "[detect]",
        f"eps = {detect.eps!r}",
    ]
    if detect.window is not None:
        lines.append(f"window = {detect.window}")
    if detect.max_abs_threshold is not None:
        lines.append(f"max_abs_threshold = {detect.max_abs_threshold!r}")
    if detect.gap_threshold is not None:
        lines.append(f"gap_threshold = {detect.gap_threshold!r}")
    if detect.gap_floor is not None:
        lines.append(f"gap_floor = {detect.gap_floor!r}")
    lines += [
        f"cluster_eps = {detect.cluster_eps!r}",
        f"zero_eps = {detect.zero_eps!r}",
        "",
        "[run]",
        f"horizon = {cfg.horizon}",
        f"seed = {cfg.seed}",
        f"num_runs = {cfg.num_runs}",
        f"record_stride = {cfg.record_stride}",
        f"record_attention = {str(cfg.record_attention).lower()}",
        f"early_stop = {str(cfg.early_stop).lower()}",
    ]
    return "\n".join(lines) + "\n"

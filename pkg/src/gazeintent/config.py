"""Run configuration: one TOML or JSON file, strict about unknown keys.

Sections mirror the library dataclasses (attention, svm, synthetic,
controller, session); every default is the library default, so an empty
file is a valid configuration.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .attention import AttentionConfig
from .svm import SvmParams
from .synthetic import DEFAULT_MIXTURE, GazeProfileParams, Scenario


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class ControllerSettings:
    threshold: float = 0.55
    decision_cap: float = 1.3
    tip_speed: float = 300.0


@dataclass(frozen=True)
class SessionSettings:
    gripper_latency: float = 1.3
    trigger_radius: float | None = None  # None -> cell_size / 2
    px_per_mm: float = 1.2


@dataclass(frozen=True)
class RunConfig:
    attention: AttentionConfig = AttentionConfig()
    svm: SvmParams = SvmParams()
    synthetic: GazeProfileParams = GazeProfileParams()
    mixture: dict[Scenario, float] = field(
        default_factory=lambda: dict(DEFAULT_MIXTURE)
    )
    controller: ControllerSettings = ControllerSettings()
    session: SessionSettings = SessionSettings()


_TUPLE_FIELDS = {
    "fixation_duration",
    "alternation_count",
    "pick_duration",
    "place_duration",
}


def _build(cls, section: dict, where: str):
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(section) - known
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {sorted(unknown)}")
    coerced = {
        k: tuple(v) if k in _TUPLE_FIELDS and isinstance(v, list) else v
        for k, v in section.items()
    }
    try:
        return cls(**coerced)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad [{where}] section: {exc}")


def parse_mixture(section: dict) -> dict[Scenario, float]:
    out = {}
    for name, weight in section.items():
        try:
            scenario = Scenario(name)
        except ValueError:
            raise ConfigError(f"unknown scenario in mixture: {name!r}")
        weight = float(weight)
        if weight < 0:
            raise ConfigError("mixture weights must be non-negative")
        out[scenario] = weight
    if out and sum(out.values()) <= 0:
        raise ConfigError("mixture weights sum to zero")
    return out or dict(DEFAULT_MIXTURE)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}")
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON config: {exc}")
    else:
        try:
            import tomllib  # Python 3.11+
        except ModuleNotFoundError:
            import tomli as tomllib
        try:
            doc = tomllib.loads(raw.decode())
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"bad TOML config: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a table/object")

    known_sections = {
        "attention", "svm", "synthetic", "mixture", "controller", "session",
    }
    unknown = set(doc) - known_sections
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")

    synthetic_section = dict(doc.get("synthetic", {}))
    mixture_section = doc.get("mixture", synthetic_section.pop("mixture", {}))
    return RunConfig(
        attention=_build(AttentionConfig, doc.get("attention", {}), "attention"),
        svm=_build(SvmParams, doc.get("svm", {}), "svm"),
        synthetic=_build(GazeProfileParams, synthetic_section, "synthetic"),
        mixture=parse_mixture(mixture_section),
        controller=_build(
            ControllerSettings, doc.get("controller", {}), "controller"
        ),
        session=_build(SessionSettings, doc.get("session", {}), "session"),
    )


def parse_mixture_flag(text: str) -> dict[Scenario, float]:
    """--mix 'OneDominant=0.6,Alternating=0.4' -> weights dict."""
    section = {}
    for part in text.split(","):
        if not part.strip():
            continue
        if "=" not in part:
            raise ConfigError(f"bad --mix entry: {part!r} (want Name=weight)")
        name, _, weight = part.partition("=")
        try:
            section[name.strip()] = float(weight)
        except ValueError:
            raise ConfigError(f"bad --mix weight: {weight!r}")
    return parse_mixture(section)

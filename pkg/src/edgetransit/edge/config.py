"""Edge node configuration: INI-style key/value file plus environment overrides."""

from __future__ import annotations

import configparser
import dataclasses
import os
from collections.abc import Mapping
from dataclasses import dataclass
from datetime import time
from functools import cached_property
from pathlib import Path
from zoneinfo import ZoneInfo

from ..core import parse_time_of_day

ENV_PREFIX = "EDGETRANSIT_"


class ConfigError(ValueError):
    pass


def parse_endpoint(text: str) -> tuple[str, int]:
    host, sep, port = text.strip().rpartition(":")
    if not sep or not port.isdigit():
        raise ConfigError(f"endpoint must be host:port, got {text!r}")
    return host or "127.0.0.1", int(port)


@dataclass(frozen=True)
class EdgeConfig:
    stop_move_threshold_m: float = 15.0
    cadence_s: int = 5
    missing_slot_drop_threshold: int = 100
    trip_idle_timeout_s: float = 120.0
    reorder_window_s: float = 15.0
    day_rollover: time = time(0, 0)
    timezone: str = "UTC"
    hub_endpoint: str = "127.0.0.1:7070"
    uplink_buffer_capacity: int = 10_000
    uplink_backoff_base_s: float = 1.0
    uplink_backoff_cap_s: float = 60.0
    alias_file: str = ""

    def __post_init__(self) -> None:
        for name in (
            "stop_move_threshold_m",
            "cadence_s",
            "missing_slot_drop_threshold",
            "trip_idle_timeout_s",
            "reorder_window_s",
            "uplink_buffer_capacity",
            "uplink_backoff_base_s",
            "uplink_backoff_cap_s",
        ):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be strictly positive")
        if self.reorder_window_s >= self.trip_idle_timeout_s:
            raise ConfigError("reorder_window_s must be below trip_idle_timeout_s")
        try:
            ZoneInfo(self.timezone)
        except Exception as exc:
            raise ConfigError(f"unknown timezone {self.timezone!r}") from exc
        parse_endpoint(self.hub_endpoint)

    @cached_property
    def tz(self) -> ZoneInfo:
        return ZoneInfo(self.timezone)

    @property
    def hub_address(self) -> tuple[str, int]:
        return parse_endpoint(self.hub_endpoint)


def _convert(field: dataclasses.Field, text: str):
    text = text.strip()
    kind = field.type
    try:
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "time":
            return parse_time_of_day(text)
    except ValueError as exc:
        raise ConfigError(f"{field.name}: cannot parse {text!r}") from exc
    return text


def read_key_values(path: str | Path) -> dict[str, str]:
    """Read an INI-style file; a leading section header is optional."""
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=", ":"))
    parser.optionxform = str
    if not text.lstrip().startswith("["):
        text = "[DEFAULT]\n" + text
    parser.read_string(text, source=str(path))
    values = dict(parser.defaults())
    for section in parser.sections():
        values.update(parser.items(section, raw=True))
    return values


def load_config(
    path: str | Path | None = None,
    env: Mapping[str, str] | None = None,
    **overrides,
) -> EdgeConfig:
    """Build a config from file, then ``EDGETRANSIT_*`` variables, then kwargs."""
    env = os.environ if env is None else env
    fields = {f.name: f for f in dataclasses.fields(EdgeConfig)}
    raw: dict[str, str] = {}
    if path is not None:
        for key, value in read_key_values(path).items():
            if key not in fields:
                raise ConfigError(f"{path}: unknown key {key!r}")
            raw[key] = value
    for name in fields:
        env_value = env.get(ENV_PREFIX + name.upper())
        if env_value is not None:
            raw[name] = env_value
    values = {name: _convert(fields[name], text) for name, text in raw.items()}
    values.update(overrides)
    return EdgeConfig(**values)

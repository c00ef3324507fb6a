"""Serialization: waveform files, JSON result records, CSV tables and
run configuration.

Waveform files are plain text. Header lines start with ``#`` and hold
``key: <json value>`` pairs; the body has one row per sample,
``t omega0 omega1 phi``, where ``phi`` is the drive phase of the |1>-|e>
channel in force at that sample. Numbers are written with 17 significant
digits so that reading a file back reproduces every double exactly.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, units
from .platforms import PlatformMapping
from .schedule import PulseSchedule

__all__ = [
    "WaveformFormatError",
    "write_waveform",
    "read_waveform",
    "format_waveform",
    "parse_waveform",
    "to_jsonable",
    "dumps_record",
    "write_record",
    "read_record",
    "write_table",
    "sweep_table",
    "RunConfig",
    "ConfigError",
    "load_config",
    "merge_config",
]

WAVEFORM_MAGIC = "holosta-waveform 1"
_NUM = "%.17g"
_PHASE_KEYS = ("phi_segment1", "phi_segment2", "phase0_segment1", "phase0_segment2")


class WaveformFormatError(ValueError):
    pass


# -- waveforms --------------------------------------------------------------


def _sample_phases(schedule: PulseSchedule) -> np.ndarray:
    n = schedule.n_per_segment
    phi = np.full(len(schedule.t), schedule.phi_segment2)
    phi[: n + 1] = schedule.phi_segment1
    return phi


def format_waveform(schedule: PulseSchedule, platform: PlatformMapping | None = None) -> str:
    header: dict[str, Any] = {
        "scheme": schedule.scheme,
        "gate": {k: schedule.metadata[k] for k in ("theta", "phi") if k in schedule.metadata},
        "A": schedule.metadata.get("A"),
        "T": schedule.T,
        "dt": schedule.dt,
        "samples": len(schedule.t),
    }
    for key in _PHASE_KEYS:
        header[key] = getattr(schedule, key)
    for key in ("rabi_cap", "cap_norm"):
        if key in schedule.metadata:
            header[key] = schedule.metadata[key]
    header["platform"] = None if platform is None else platform.levels | {"name": platform.platform}
    header["code_version"] = __version__

    lines = [f"# {WAVEFORM_MAGIC}"]
    lines += [f"# {k}: {json.dumps(to_jsonable(v), sort_keys=True)}" for k, v in header.items()]
    lines.append("# columns: t omega0 omega1 phi")
    rows = np.column_stack([schedule.t, schedule.omega0, schedule.omega1, _sample_phases(schedule)])
    lines += [" ".join(_NUM % x for x in row) for row in rows]
    return "\n".join(lines) + "\n"


def write_waveform(path, schedule: PulseSchedule, platform: PlatformMapping | None = None) -> Path:
    path = Path(path)
    path.write_text(format_waveform(schedule, platform))
    return path


def parse_waveform(text: str) -> PulseSchedule:
    lines = text.splitlines()
    if not lines or lines[0] != f"# {WAVEFORM_MAGIC}":
        raise WaveformFormatError("missing waveform header line")
    header: dict[str, Any] = {}
    body = []
    for lineno, line in enumerate(lines[1:], start=2):
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition(":")
            if not sep:
                raise WaveformFormatError(f"line {lineno}: header line without ':'")
            if key != "columns":
                header[key.strip()] = json.loads(value)
        elif line.strip():
            body.append(line)
    try:
        rows = np.array([[float(x) for x in line.split()] for line in body])
    except ValueError as exc:
        raise WaveformFormatError(f"malformed sample row: {exc}") from None
    if rows.ndim != 2 or rows.shape[1] != 4:
        raise WaveformFormatError("sample rows must have four columns")
    if "samples" in header and header["samples"] != len(rows):
        raise WaveformFormatError(f"expected {header['samples']} samples, found {len(rows)}")
    missing = [k for k in _PHASE_KEYS if k not in header]
    if missing:
        raise WaveformFormatError(f"header lacks {missing}")

    metadata = dict(header.get("gate") or {})
    for key in ("A", "rabi_cap", "cap_norm", "platform"):
        if header.get(key) is not None:
            metadata[key] = header[key]
    return PulseSchedule(
        rows[:, 0],
        rows[:, 1],
        rows[:, 2],
        scheme=header.get("scheme", "noncyclic"),
        metadata=metadata,
        **{k: float(header[k]) for k in _PHASE_KEYS},
    )


def read_waveform(path) -> PulseSchedule:
    return parse_waveform(Path(path).read_text())


# -- result records ---------------------------------------------------------


def to_jsonable(obj):
    """Recursively convert numpy values; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps_record(record: dict) -> str:
    return json.dumps(to_jsonable(record), indent=2, sort_keys=True) + "\n"


def write_record(path, record: dict) -> Path:
    path = Path(path)
    path.write_text(dumps_record(record))
    return path


def read_record(path) -> dict:
    return json.loads(Path(path).read_text())


def write_table(path, columns: dict[str, np.ndarray]) -> Path:
    """Comma-separated table, one column per entry, 17 significant digits."""
    path = Path(path)
    names = list(columns)
    data = [np.asarray(columns[k], dtype=float).ravel() for k in names]
    if len({len(c) for c in data}) > 1:
        raise ValueError("table columns must have equal length")
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for row in zip(*data):
            w.writerow(["" if not math.isfinite(x) else _NUM % x for x in row])
    return path


def sweep_table(result) -> dict[str, np.ndarray]:
    """Long-format columns of a :class:`~holosta.sweeps.SweepResult`."""
    names = list(result.axes)
    mesh = np.meshgrid(*result.axes.values(), indexing="ij")
    cols = {name: m.ravel() for name, m in zip(names, mesh)}
    cols[result.metadata.get("quantity", "value")] = result.values.ravel()
    for k, v in result.extra.items():
        cols[k] = np.asarray(v).ravel()
    return cols


# -- configuration ----------------------------------------------------------


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration (a usage error)."""


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one CLI run.

    ``A`` is a number or ``"auto"`` (area minimization). Exactly one of
    ``T`` and ``rabi_cap`` is used: an explicit ``T`` compiles at that
    duration, otherwise the schedule is stretched to ``rabi_cap``.
    """

    theta: float = math.pi / 2
    phi: float = math.pi / 2
    A: float | str = "auto"
    T: float | None = None
    rabi_cap: float | None = None
    dt: float | None = None
    gamma1: float = units.DECAY_RATE
    gamma2: float = units.DEPHASING_RATE
    eps0: float = 0.0
    eps1: float = 0.0
    eps_grid: tuple[float, float, int] = (-0.2, 0.2, 41)
    A_grid: tuple[float, float, int] = (0.05, 1.5, 59)
    theta_points: int = 33
    scheme: str = "noncyclic"
    metric: str = "both"
    platform: str | None = None
    n_states: int = 1001
    workers: int | None = None
    deterministic: bool = True
    output: str | None = None

    def __post_init__(self):
        if isinstance(self.A, str):
            if self.A != "auto":
                try:
                    object.__setattr__(self, "A", float(self.A))
                except ValueError:
                    raise ConfigError(f"A must be a number or 'auto', got {self.A!r}") from None
        if self.T is not None and self.rabi_cap is not None:
            raise ConfigError("give either T or rabi_cap, not both")
        if self.T is not None and not self.T > 0:
            raise ConfigError("T must be positive")
        if self.rabi_cap is not None and not self.rabi_cap > 0:
            raise ConfigError("rabi_cap must be positive")
        for name in ("eps_grid", "A_grid"):
            lo, hi, n = getattr(self, name)
            if int(n) < 1:
                raise ConfigError(f"{name} is empty")
            if int(n) > 1 and not hi > lo:
                raise ConfigError(f"{name} needs max > min")
            object.__setattr__(self, name, (float(lo), float(hi), int(n)))
        if self.scheme not in ("noncyclic", "nhqc", "both"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.metric not in ("state", "gate", "both"):
            raise ConfigError(f"unknown metric {self.metric!r}")
        if self.theta_points < 1:
            raise ConfigError("theta grid is empty")

    @property
    def cap(self) -> float:
        return units.RABI_CAP if self.rabi_cap is None else self.rabi_cap

    def grid(self, name: str) -> np.ndarray:
        lo, hi, n = getattr(self, name)
        return np.linspace(lo, hi, n)

    def as_dict(self) -> dict:
        return asdict(self)


_FIELDS = {f.name for f in fields(RunConfig)}


def load_config(path) -> dict:
    """Read a JSON config file into a plain dict of RunConfig fields."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = set(data) - _FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return data


def merge_config(file_values: dict, overrides: dict) -> RunConfig:
    """File values, then flag overrides (``None`` means not given); flags win.

    Setting one of ``T``/``rabi_cap`` by flag clears the other from the file.
    """
    merged = dict(file_values)
    given = {k: v for k, v in overrides.items() if v is not None}
    if "T" in given:
        merged.pop("rabi_cap", None)
    if "rabi_cap" in given:
        merged.pop("T", None)
    merged.update(given)
    try:
        return RunConfig(**merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


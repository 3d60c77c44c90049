"""Experiment configuration: ``key = value`` lines grouped by ``[section]`` headers.

Recognised sections and keys (all optional; defaults are the desk-scale
settings)::

    [experiment]  name, dim, phase, seed, trials
    [grid]        n, half_width, pad, dt, nt, t_max
    [exponents]   p, q, p0, J, k1, k1_min, k1_max, k2, c0, M
    [scales]      R (comma list), eps, C, C_sep, thickness
    [output]      out

Exponents accept rationals (``4/3``) and ``inf``.  Unset grid and scale keys
fall back to per-experiment defaults (see :mod:`restriction_lab.experiments`).
"""
from __future__ import annotations

import configparser
import io
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .decomposition import as_exact

__all__ = ["ConfigError", "ExperimentConfig", "load_config"]


class ConfigError(ValueError):
    """Malformed or inconsistent configuration (CLI exit code 2)."""


_SECTIONS = {
    "experiment": ("name", "dim", "phase", "seed", "trials"),
    "grid": ("n", "half_width", "pad", "dt", "nt", "t_max"),
    "exponents": ("p", "q", "p0", "J", "k1", "k1_min", "k1_max", "k2", "c0", "M"),
    "scales": ("R", "eps", "C", "C_sep", "thickness"),
    "output": ("out",),
}


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    dim: int = 1
    phase: str | None = None
    seed: int = 0
    trials: int = 100
    n: int | None = None
    half_width: float | None = None
    pad: int | None = None
    dt: float | None = None
    nt: int | None = None
    t_max: float | None = None
    p: str = "2"
    q: str = "2"
    p0: str | None = None
    J: float = 4.0
    k1: int | None = None
    k1_min: int = 0
    k1_max: int = 4
    k2: int = 0
    c0: float = 0.125
    M: int = 4
    R: tuple[float, ...] | None = None
    eps: float = 0.09375
    C: float = 8.0
    C_sep: float = 2.0
    thickness: float | None = None
    out: str = "out"
    source: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ConfigError("dim must be 1 or 2")
        if self.n is not None and (self.n < 2 or self.n & (self.n - 1)):
            raise ConfigError("grid n must be a power of two")
        if self.pad is not None and (self.pad < 1 or self.pad & (self.pad - 1)):
            raise ConfigError("pad must be a power of two")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.J > 2:
            raise ConfigError("J must exceed 2")
        if self.k1_max < self.k1_min:
            raise ConfigError("k1_max < k1_min")
        if not 0 < self.c0 <= 0.25:
            raise ConfigError("c0 must lie in (0, 1/4]")
        if self.k1 is not None and self.k1 < self.k2:
            raise ConfigError("k1 must be >= k2")
        if not 0 < self.eps <= 0.25:
            raise ConfigError("eps must lie in (0, 1/4]")
        if self.R is not None and (not self.R or any(r <= 0 for r in self.R)):
            raise ConfigError("R must be a non-empty list of positive scales")
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for name in ("p", "q", "p0"):
            val = getattr(self, name)
            if val is None:
                continue
            try:
                x = as_exact(val)
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"{name} = {val!r} is not a number") from exc
            if not x >= (1 if name != "q" else 0) or (name == "q" and not x > 0):
                raise ConfigError(f"{name} = {val!r} out of range")
        if self.phase is not None and not Path(self.phase).is_file():
            raise ConfigError(f"phase file {self.phase!r} does not exist")

    @property
    def p_exact(self):
        return as_exact(self.p)

    @property
    def q_exact(self):
        return as_exact(self.q)

    @property
    def p_float(self) -> float:
        return float(self.p_exact)

    @property
    def q_float(self) -> float:
        return float(self.q_exact)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        try:
            return replace(self, **kw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_ini(self) -> str:
        """Canonical ``[section]`` text of every field (used in CSV headers)."""
        cp = configparser.ConfigParser()
        cp.optionxform = str
        data = asdict(self)
        for sec, keys in _SECTIONS.items():
            cp[sec] = {}
            for k in keys:
                v = data[k]
                if v is None:
                    continue
                cp[sec][k] = ", ".join(f"{r:g}" for r in v) if k == "R" else str(v)
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue().strip()


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _convert(key: str, raw: str):
    typ = _TYPES[key]
    raw = raw.strip()
    if key == "R":
        return tuple(float(x) for x in raw.replace(",", " ").split())
    if key in ("p", "q", "p0"):
        return raw
    if key in ("name", "phase", "out"):
        return raw
    if "int" in str(typ):
        return int(raw)
    if "float" in str(typ):
        return float(raw)
    return raw


def load_config(path: str | Path | None = None, text: str | None = None) -> ExperimentConfig:
    """Parse a config file (or ``text``); unknown sections/keys are errors."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        elif text is not None:
            cp.read_string(text)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    kw = {}
    for sec in cp.sections():
        if sec not in _SECTIONS:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in cp[sec].items():
            if key not in _SECTIONS[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            try:
                kw[key] = _convert(key, raw)
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {key} = {raw!r}: {exc}") from exc
    if path is not None and "phase" in kw and not Path(kw["phase"]).is_absolute():
        kw["phase"] = str(Path(path).parent / kw["phase"])
    return ExperimentConfig(source=None if path is None else str(path), **kw)

"""Flat ``key = value`` experiment configurations.

Blank lines and lines starting with ``#`` are ignored. Every other line must
be ``key = value`` with a known key; anything else is rejected with its line
number. Values keep their text form until ``resolve`` turns them into
parameters, domains, ladders and grids.

Domain syntax::

    whole | halfspace | halfball R | ball C1,..,Cn R | box L1,..,Ln H1,..,Hn

Ladder syntax: a comma list ``8,16,32`` or ``geom START RATIO COUNT``.
Grid syntax: a single resolution ``512`` or ``L1,..,Ln H1,..,Hn N1,..,Nn``.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .domains import Ball, Box, HalfBall, HalfSpace, WholeSpace
from .fields import Grid
from .params import make_params

EXPERIMENTS = ("constants", "scan-interior", "scan-boundary", "translate-limit", "collapse",
               "solve", "envelope-fit", "improved-sobolev", "straighten", "green-check",
               "verify-all")

# key -> default (None means required for the experiments that use it)
KEYS = {
    "experiment": None,
    "n": None,
    "sigma": None,
    "domain": "",
    "ladder": "",
    "grid": "",
    "output": "out",
    "seed": "0",
    "field": "",
    "center": "",
    "radius": "",
    "epsilon": "",
    "delta": "",
    "theta_grid": "",
    "checkpoint": "",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    values: dict = field(default_factory=dict)
    source: str = "<string>"

    def __getitem__(self, key):
        return self.values[key]

    @property
    def experiment(self):
        return self.values["experiment"]

    @property
    def seed(self):
        return _int(self.values["seed"], "seed")

    @property
    def output(self):
        return self.values["output"]

    def params(self):
        if not self.values.get("n") or not self.values.get("sigma"):
            raise ConfigError(f"{self.experiment} needs n and sigma")
        return make_params(_int(self.values["n"], "n"), _float(self.values["sigma"], "sigma"))

    def resolved_text(self):
        """Canonical text of every key, in fixed order."""
        return "".join(f"{k} = {self.values[k]}\n" for k in KEYS)

    def digest(self):
        return hashlib.sha256(self.resolved_text().encode()).hexdigest()


def _int(text, key):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}") from None


def _float(text, key):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _vector(text, key):
    return tuple(_float(t, key) for t in text.split(","))


def parse_text(text, source="<string>"):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (t.strip() for t in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        values[key] = value
    if "experiment" not in values:
        raise ConfigError(f"{source}: missing 'experiment'")
    if values["experiment"] not in EXPERIMENTS:
        raise ConfigError(f"{source}: unknown experiment id {values['experiment']!r}")
    full = {k: values.get(k, v if v is not None else "") for k, v in KEYS.items()}
    return ExperimentConfig(full, source)


def load(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_text(text, str(path))


def parse_domain(text, n):
    parts = text.split()
    if not parts:
        raise ConfigError("domain is required for this experiment")
    kind, args = parts[0].lower(), parts[1:]
    try:
        if kind == "whole" and not args:
            return WholeSpace(n)
        if kind == "halfspace" and not args:
            return HalfSpace(n)
        if kind == "halfball" and len(args) == 1:
            return HalfBall(n, _float(args[0], "domain"))
        if kind == "ball" and len(args) == 2:
            return Ball(_vector(args[0], "domain"), _float(args[1], "domain"))
        if kind == "box" and len(args) == 2:
            lo, hi = _vector(args[0], "domain"), _vector(args[1], "domain")
            if len(lo) != n or len(hi) != n:
                raise ConfigError(f"box corners must have {n} coordinates")
            return Box(lo, hi)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"domain: {exc}") from None
    raise ConfigError(f"cannot parse domain {text!r}")


def parse_ladder(text):
    parts = text.split()
    if not parts:
        raise ConfigError("ladder is required for this experiment")
    if parts[0] == "geom":
        if len(parts) != 4:
            raise ConfigError("ladder: expected 'geom START RATIO COUNT'")
        start, ratio = _float(parts[1], "ladder"), _float(parts[2], "ladder")
        count = _int(parts[3], "ladder")
        if start <= 0 or ratio <= 1 or count < 1:
            raise ConfigError("ladder: need START > 0, RATIO > 1, COUNT >= 1")
        return [start * ratio ** k for k in range(count)]
    vals = list(_vector(text.replace(" ", ""), "ladder"))
    if any(b <= a for a, b in zip(vals[:-1], vals[1:])):
        raise ConfigError("ladder values must increase")
    return vals


def parse_grid(text, n):
    """None (use defaults), an int resolution, or a Grid."""
    parts = text.split()
    if not parts:
        return None
    if len(parts) == 1:
        N = _int(parts[0], "grid")
        if N < 2:
            raise ConfigError("grid resolution must be at least 2")
        return N
    if len(parts) != 3:
        raise ConfigError("grid: expected 'N' or 'LO HI SHAPE'")
    lo, hi = _vector(parts[0], "grid"), _vector(parts[1], "grid")
    shape = tuple(_int(t, "grid") for t in parts[2].split(","))
    if not len(lo) == len(hi) == len(shape) == n:
        raise ConfigError(f"grid corners and shape must have {n} entries")
    try:
        return Grid(lo, hi, shape)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None


def optional_float(cfg, key, default):
    text = cfg.values.get(key, "")
    return default if not text else _float(text, key)


def optional_vector(cfg, key, default):
    text = cfg.values.get(key, "")
    return default if not text else np.asarray(_vector(text, key))

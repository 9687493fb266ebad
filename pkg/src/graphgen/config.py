"""Experiment configuration files.

The format is INI (``configparser``): an ``[experiment]`` section naming the
kind, seed and output directory, plus an optional section named after the
kind that overrides its defaults::

    [experiment]
    kind = robustness          # robustness | clustering_table | exponent_sweep | oracle_check
    seed = 7
    out = results

    [robustness]
    graphs = 10
    fractions = 0.1, 0.3, 0.5

Lists are comma separated; fractions may be written ``a/b``.  Clustering-table
rows use the model notation ``TGPA(n,p,k,m)`` and ``GPA(n,p,r,k)``; real
networks are given as ``name=path`` pairs.  Unknown keys are errors.
"""
from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

KINDS = ("robustness", "clustering_table", "exponent_sweep", "oracle_check")


class ConfigError(ValueError):
    """Malformed or invalid experiment configuration."""


def _floats(text):
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "/" in part:
            a, b = part.split("/")
            out.append(float(a) / float(b))
        else:
            out.append(float(part))
    return tuple(out)


def _strs(text):
    return tuple(p.strip() for p in str(text).split(",") if p.strip())


def _rows(text):
    # split on commas outside parentheses
    rows, depth, cur = [], 0, ""
    for ch in str(text):
        depth += ch == "("
        depth -= ch == ")"
        if ch == "," and depth == 0:
            rows.append(cur.strip())
            cur = ""
        else:
            cur += ch
    if cur.strip():
        rows.append(cur.strip())
    return tuple(r for r in rows if r)


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class RobustnessSettings:
    graphs: int = 10
    nodes: int = 2000
    betas: tuple = (2.0, 2.5, 3.0, 4.0, 5.0)
    methods: tuple = ("ff", "dfs", "edge")
    fractions: tuple = (0.1, 0.3, 0.5, 0.7, 0.9)
    reps: int = 10
    burn: float = 0.7
    n_boot: int = 250
    eigenvalues: int = 100
    rule: str = "y-split"
    max_regenerations: int = 5


@dataclass(frozen=True)
class ClusteringSettings:
    rows: tuple = ("TGPA(7000,0.987,10,100)", "GPA(7000,0.001,0.999,2)")
    networks: tuple = ()
    reps: int = 5


@dataclass(frozen=True)
class SweepSettings:
    targets: tuple = (1.4, 5.0 / 3.0, 2.0, 2.5, 3.5)
    gpa_p: tuple = ()
    nodes: int = 100000
    reps: int = 1
    rule: str = "y-split"
    eigenvalues: int = 0
    n_boot: int = 0


@dataclass(frozen=True)
class OracleSettings:
    schedule: str = "constant:1,0,0"
    tmax: int = 1000000
    kmax: int = 64
    ks: int = 10
    coefficients: str = "printed"


_SECTIONS = {"robustness": RobustnessSettings, "clustering_table": ClusteringSettings,
             "exponent_sweep": SweepSettings, "oracle_check": OracleSettings}

_PARSERS = {"betas": _floats, "fractions": _floats, "targets": _floats, "gpa_p": _floats,
            "methods": _strs, "networks": _strs, "rows": _rows}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    seed: int = 0
    out: str = "results"
    workers: int = 1
    settings: object = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.settings is None:
            object.__setattr__(self, "settings", _SECTIONS[self.kind]())
        validate(self)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "workers": self.workers,
                "settings": asdict(self.settings)}

    def digest(self) -> str:
        """Hash of everything that affects results (output path and worker count excluded)."""
        d = self.to_dict()
        d.pop("workers")
        blob = json.dumps(d, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def validate(cfg: ExperimentConfig) -> None:
    s = cfg.settings
    if cfg.seed < 0:
        raise ConfigError("seed must be nonnegative")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    for name in ("reps", "graphs", "nodes", "n_boot", "tmax", "kmax", "ks"):
        v = getattr(s, name, None)
        if v is not None and v < (0 if name == "n_boot" else 1):
            raise ConfigError(f"{name} must be positive")
    for f in getattr(s, "fractions", ()):
        if not 0 < f <= 1:
            raise ConfigError(f"fraction {f} outside (0, 1]")
    if isinstance(s, RobustnessSettings):
        if not s.fractions or not s.methods or not s.betas:
            raise ConfigError("betas, methods and fractions must be nonempty")
        for m in s.methods:
            if m not in ("ff", "dfs", "edge"):
                raise ConfigError(f"unknown sampling method {m!r}")
        if not 0 < s.burn < 1:
            raise ConfigError("burn must be in (0, 1)")
        if s.n_boot < 1:
            raise ConfigError("n_boot must be >= 1")
        if min(s.betas) <= 1:
            raise ConfigError("target exponents must exceed 1")
    if isinstance(s, SweepSettings) and any(t <= 1 for t in s.targets):
        raise ConfigError("target exponents must exceed 1")
    if hasattr(s, "rule") and s.rule not in ("y-split", "growth-rate"):
        raise ConfigError(f"unknown schedule rule {s.rule!r}")
    if isinstance(s, OracleSettings) and s.coefficients not in ("printed", "exact"):
        raise ConfigError("coefficients must be printed or exact")


def _coerce(cls, key, raw):
    names = {f.name: f for f in fields(cls)}
    if key not in names:
        raise ConfigError(f"unknown key {key!r} for [{_name_of(cls)}]")
    default = getattr(cls(), key)
    try:
        if key in _PARSERS:
            return _PARSERS[key](raw)
        if isinstance(default, bool):
            return _bool(raw)
        if isinstance(default, int):
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None


def _name_of(cls):
    return next(k for k, v in _SECTIONS.items() if v is cls)


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    if "experiment" not in cp:
        raise ConfigError("missing [experiment] section")
    top = dict(cp["experiment"])
    kind = top.pop("kind", None)
    if kind is None:
        raise ConfigError("[experiment] needs kind")
    try:
        seed = int(top.pop("seed", 0))
        workers = int(top.pop("workers", 1))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    out = top.pop("out", "results")
    if top:
        raise ConfigError(f"unknown keys in [experiment]: {sorted(top)}")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    for extra in cp.sections():
        if extra not in ("experiment", kind):
            raise ConfigError(f"unexpected section [{extra}] for kind {kind}")
    cls = _SECTIONS[kind]
    values = {}
    if kind in cp:
        for key, raw in cp[kind].items():
            values[key] = _coerce(cls, key, raw)
    return ExperimentConfig(kind, seed, out, workers, cls(**values))


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    return parse_config(text)


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    top = {k: v for k, v in kw.items() if k in ("seed", "out", "workers") and v is not None}
    inner = {k: v for k, v in kw.items() if k not in top and v is not None
             and k not in ("seed", "out", "workers")}
    settings = replace(cfg.settings, **inner) if inner else cfg.settings
    return replace(cfg, settings=settings, **top)

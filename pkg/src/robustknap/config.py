"""Flat ``section.key = value`` experiment configuration.

Blank lines and lines starting with ``#`` are ignored. Values are kept as
strings until a typed accessor reads them, so unknown keys can be reported
instead of silently ignored.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

DEFAULTS = {
    "seed": "0",
    "dataset.kind": "synthetic",
    "dataset.path": "",
    "dataset.ratings": "",
    "dataset.movies": "",
    "dataset.subsample.fraction": "",
    "dataset.subsample.cap": "",
    "dataset.synthetic.n": "200",
    "dataset.synthetic.universe": "400",
    "dataset.synthetic.max_items": "12",
    "objective.kind": "",
    "objective.min_ratings": "20",
    "constraint.d": "1",
    "constraint.K": "10",
    "constraint.costs": "",
    "algorithms": "",
    "algorithm.m": "5",
    "algorithm.M": "",
    "algorithm.eps": "0.1",
    "algorithm.gamma": "auto",
    "algorithm.prune": "false",
    "removal.max_rounds": "30",
    "removal.m": "",
    "evaluate.solver": "greedy",
    "evaluate.bound": "fixed",
    "cluster.T": "4",
    "cluster.L": "",
    "cluster.p": "",
    "cluster.check": "true",
}

KNOWN_ALGORITHMS = ("algmult", "algnum", "algsize", "marginal-ratio", "multidimensional", "greedy")


class ConfigError(ValueError):
    pass


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _bool(s: str) -> bool:
    s = s.lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {s!r}")


def _opt(s: str, cast):
    return cast(s) if s != "" else None


@dataclass
class ExperimentConfig:
    raw: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    @classmethod
    def from_text(cls, text: str, source: str = "<config>", base_dir: Path = Path(".")):
        cfg = cls(parse_config(text, source), Path(base_dir))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        path = Path(path)
        return cls.from_text(path.read_text(), str(path), path.parent)

    def get(self, key: str) -> str:
        return self.raw.get(key, DEFAULTS[key])

    def with_overrides(self, **kv) -> "ExperimentConfig":
        raw = dict(self.raw)
        for k, v in kv.items():
            raw[k.replace("__", ".")] = str(v)
        cfg = ExperimentConfig(raw, self.base_dir)
        cfg.validate()
        return cfg

    def path(self, key: str) -> Optional[Path]:
        s = self.get(key)
        if not s:
            return None
        p = Path(s)
        return p if p.is_absolute() else self.base_dir / p

    # typed views
    @property
    def seed(self) -> int:
        return int(self.get("seed"))

    @property
    def kind(self) -> str:
        return self.get("dataset.kind")

    @property
    def objective(self) -> str:
        o = self.get("objective.kind")
        if o:
            return o
        return {"graph": "dominating-set", "movielens": "movie-coverage"}.get(self.kind, "coverage")

    @property
    def d(self) -> int:
        return int(self.get("constraint.d"))

    @property
    def K(self) -> float:
        return float(self.get("constraint.K"))

    @property
    def costs(self) -> str:
        c = self.get("constraint.costs")
        return c or ("genre" if self.kind == "movielens" else "uniform")

    @property
    def algorithms(self) -> list[str]:
        s = self.get("algorithms")
        if not s:
            base = ["algmult", "marginal-ratio", "multidimensional"]
            return base + (["greedy"] if self.d == 1 else [])
        return [a.strip() for a in s.split(",") if a.strip()]

    @property
    def m(self) -> int:
        return int(self.get("algorithm.m"))

    @property
    def M(self) -> float:
        s = self.get("algorithm.M")
        return float(s) if s else float(self.m)

    @property
    def eps(self) -> float:
        return float(self.get("algorithm.eps"))

    @property
    def gamma(self):
        s = self.get("algorithm.gamma")
        return "auto" if s == "auto" else float(s)

    @property
    def prune(self) -> bool:
        return _bool(self.get("algorithm.prune"))

    @property
    def max_rounds(self) -> int:
        return int(self.get("removal.max_rounds"))

    @property
    def removal_cap(self) -> Optional[int]:
        return _opt(self.get("removal.m"), int)

    def validate(self):
        try:
            if self.kind not in ("graph", "movielens", "synthetic"):
                raise ConfigError(f"unknown dataset.kind {self.kind!r}")
            if self.objective not in ("dominating-set", "movie-coverage", "coverage"):
                raise ConfigError(f"unknown objective.kind {self.objective!r}")
            if not self.K > 0:
                raise ConfigError("constraint.K must be positive")
            if self.d < 1:
                raise ConfigError("constraint.d must be at least 1")
            if not 0 < self.eps < 1:
                raise ConfigError("algorithm.eps must lie in (0, 1)")
            if self.costs not in ("uniform", "genre"):
                raise ConfigError(f"unknown constraint.costs {self.costs!r}")
            if self.costs == "genre" and self.d > 2:
                raise ConfigError("genre costs are defined for at most two knapsacks")
            for a in self.algorithms:
                if a not in KNOWN_ALGORITHMS:
                    raise ConfigError(f"unknown algorithm {a!r}")
            if "greedy" in self.algorithms and self.d != 1:
                raise ConfigError("the greedy baseline needs d = 1")
            g = self.gamma
            if g != "auto" and g < 1:
                raise ConfigError("algorithm.gamma must be at least 1")
            self.prune, _bool(self.get("cluster.check"))
            if self.max_rounds < 0:
                raise ConfigError("removal.max_rounds must be nonnegative")
            int(self.get("cluster.T"))
            for key in ("dataset.subsample.fraction", "cluster.p"):
                _opt(self.get(key), float)
            for key in ("dataset.subsample.cap", "cluster.L"):
                _opt(self.get(key), int)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

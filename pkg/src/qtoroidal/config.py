"""Run configuration: loading, validation and a stable hash."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .params import AlgebraParams, sample_params

SUITES = ("bosons", "contractions", "relations", "affine", "cancellation",
          "coproduct", "highest-weight", "iom-duality")


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


@dataclass
class SuiteConfig:
    m: int = 2
    n: int = 2
    seed: int = 0
    params: dict | None = None          # explicit values override the seeded draw
    suites: list[str] = field(default_factory=lambda: list(SUITES))
    D_max: int = 3
    L_max: int = 1
    window: int = 3
    r_max: int = 3
    ladder: list[int] = field(default_factory=lambda: [1, 2, 3, 4])
    iom_D_max: int = 2
    iom_L_max: int = 1
    delta: float = 0.5
    tol: float = 1e-7
    cache: str | None = None
    report: str | None = None

    def resolve_params(self) -> AlgebraParams:
        if self.params is not None:
            try:
                return AlgebraParams.from_dict({"m": self.m, "n": self.n, **self.params})
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"params: {exc}") from exc
        return sample_params(self.m, self.n, seed=self.seed)

    def digest(self) -> str:
        """Hash of everything that affects results (not output locations)."""
        data = asdict(self)
        data.pop("cache")
        data.pop("report")
        blob = json.dumps(data, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def validate(self) -> "SuiteConfig":
        def need(cond, path, msg):
            if not cond:
                raise ConfigError(f"{path}: {msg}")

        for name in ("m", "n", "D_max", "L_max", "window", "r_max", "iom_D_max", "iom_L_max"):
            v = getattr(self, name)
            need(isinstance(v, int) and not isinstance(v, bool), name, "must be an integer")
        need(self.m >= 1 and self.n >= 1, "m", "ranks must be positive")
        need(isinstance(self.seed, int) and 0 <= self.seed < 2**64, "seed", "must be a u64")
        need(isinstance(self.suites, list) and self.suites, "suites", "must be a non-empty list")
        for i, s in enumerate(self.suites):
            need(s in SUITES, f"suites[{i}]", f"unknown suite {s!r}; known: {', '.join(SUITES)}")
        need(isinstance(self.ladder, list) and self.ladder, "ladder", "must be a non-empty list")
        for i, k in enumerate(self.ladder):
            need(isinstance(k, int) and k >= 0, f"ladder[{i}]", "must be a non-negative integer")
        need(self.ladder == sorted(set(self.ladder)), "ladder", "must be strictly increasing")
        need(self.delta > 0, "delta", "must be positive")
        need(self.tol > 0, "tol", "must be positive")
        need(self.params is None or isinstance(self.params, dict), "params", "must be a mapping")
        return self


def from_mapping(data: dict) -> SuiteConfig:
    if not isinstance(data, dict):
        raise ConfigError("<root>: expected a mapping")
    known = set(SuiteConfig.__dataclass_fields__)
    for key in data:
        if key not in known:
            raise ConfigError(f"{key}: unknown field")
    return SuiteConfig(**data).validate()


def load_config(path: str | Path) -> SuiteConfig:
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        data = json.loads(text)
    else:
        import yaml
        data = yaml.safe_load(text) or {}
    return from_mapping(data)

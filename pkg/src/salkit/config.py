"""Run configuration shared by the pipeline and the command-line driver.

Defaults follow the reference operating point: 200 superpixels, RBF scale
0.1, trade-offs gamma_a = 1e-6 and gamma_i = 1, fusion weight beta = 0.2,
and eta^2 = 0.3 for the F-measure. A config file is plain ``key = value``
text; command-line flags override file values.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass
class Config:
    n_superpixels: int = 200
    rho: float = 0.1
    gamma_a: float = 1e-6
    gamma_i: float = 1.0
    beta: float = 0.2
    slic_compactness: float = 10.0
    seed: int = 42
    eta2: float = 0.3

    def __post_init__(self):
        if self.n_superpixels < 1:
            raise ValueError("n_superpixels must be at least 1")
        for name in ("rho", "gamma_a", "slic_compactness"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.gamma_i < 0:
            raise ValueError("gamma_i must be non-negative")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.eta2 <= 0:
            raise ValueError("eta2 must be positive")

    def asdict(self):
        return dataclasses.asdict(self)


def load_config(path):
    """Parse a ``key = value`` config file into a Config."""
    casters = {"int": int, "float": float}
    fields = {f.name: casters[f.type] for f in dataclasses.fields(Config)}
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in fields:
                raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                values[key] = fields[key](value.strip())
            except ValueError:
                raise ValueError(f"{path}:{lineno}: bad value for {key!r}: {value.strip()!r}") from None
    return Config(**values)


def apply_overrides(config, **overrides):
    """Copy of ``config`` with non-None overrides applied."""
    updates = {k: v for k, v in overrides.items() if v is not None}
    return dataclasses.replace(config, **updates)

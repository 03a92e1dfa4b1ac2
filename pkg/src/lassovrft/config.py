"""Experiment configuration: a flat JSON document, validated on load."""
from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .lti import TransferFunction, dc_gain
from .nonlin import Dictionary
from .plant import TD_DEN, TD_NUM

NOISE_SEED_OFFSET = 1000


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class DesignSpec:
    dictionary: dict
    solver: str = "lasso"
    alpha: float | list = 0.001

    @property
    def alphas(self) -> list[float]:
        if self.solver == "ols":
            return [0.0]
        return [float(a) for a in self.alpha] if isinstance(self.alpha, list) else [float(self.alpha)]

    def label(self, alpha: float | None = None) -> str:
        d = self.dictionary
        name = {"polynomial-odd": "poly", "deadzone": "dz"}.get(d["kind"], d["kind"])
        tag = f"{name}{d['m']}_{self.solver}"
        if self.solver == "lasso" and alpha is not None:
            tag += f"_a{alpha:g}"
        return tag


@dataclass
class ExperimentConfig:
    plant: int = 1
    input_kind: str = "random"
    amplitude: float = 24.0
    seed: int = 0
    seeds: list | None = None
    dwell: int = 100
    N: int = 1000
    sigma: float = 0.05
    td_num: list = field(default_factory=lambda: list(TD_NUM))
    td_den: list = field(default_factory=lambda: list(TD_DEN))
    dictionary: dict = field(default_factory=lambda: {"kind": "deadzone", "m": 20, "scale": 200.0, "spacing": 10.0})
    solver: str = "lasso"
    alpha: float = 0.001
    tol: float = 1e-6
    max_iter: int = 100_000
    stopping: str = "coef"
    objective_scaling: str = "per-sample"
    standardize: bool = False
    reference_amplitudes: list = field(default_factory=lambda: [2.0, 6.0, -2.0, -6.0])
    reference_dwell: int = 150
    eval_sigma: float = 0.0
    oscillation_tol: float | None = 0.05
    output_dir: str = "out"
    designs: list = field(default_factory=list)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**copy.deepcopy(d))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **kw) -> "ExperimentConfig":
        d = self.to_dict()
        d.update(kw)
        return ExperimentConfig.from_dict(d)

    @property
    def td(self) -> TransferFunction:
        return TransferFunction(self.td_num, self.td_den)

    @property
    def seed_list(self) -> list[int]:
        return [int(s) for s in self.seeds] if self.seeds else [int(self.seed)]

    @property
    def noise_seed(self) -> int:
        return int(self.seed) + NOISE_SEED_OFFSET

    def dictionary_obj(self, spec: dict | None = None) -> Dictionary:
        spec = self.dictionary if spec is None else spec
        try:
            return Dictionary.from_dict(spec)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid dictionary {spec!r}: {exc}") from None

    def design_specs(self) -> list[DesignSpec]:
        out = []
        for i, d in enumerate(self.designs):
            if not isinstance(d, dict) or "dictionary" not in d:
                raise ConfigError(f"designs[{i}] must be an object with a 'dictionary' entry")
            extra = set(d) - {"dictionary", "solver", "alpha"}
            if extra:
                raise ConfigError(f"designs[{i}]: unknown keys {sorted(extra)}")
            out.append(DesignSpec(d["dictionary"], d.get("solver", self.solver), d.get("alpha", self.alpha)))
        return out

    def validate(self) -> None:
        if self.plant not in (1, 2):
            raise ConfigError(f"plant must be 1 or 2, got {self.plant!r}")
        if self.input_kind not in ("random", "steps"):
            raise ConfigError(f"input_kind must be 'random' or 'steps', got {self.input_kind!r}")
        if not isinstance(self.N, int) or self.N < 10:
            raise ConfigError("N must be an integer >= 10")
        if not self.sigma >= 0 or not self.eval_sigma >= 0:
            raise ConfigError("noise levels must be nonnegative")
        if not self.amplitude >= 0:
            raise ConfigError("amplitude must be nonnegative")
        if self.dwell < 1 or self.reference_dwell < 1:
            raise ConfigError("dwell values must be positive")
        if self.oscillation_tol is not None and not self.oscillation_tol > 0:
            raise ConfigError("oscillation_tol must be positive or null")
        try:
            td = self.td
        except ValueError as exc:
            raise ConfigError(f"invalid reference model: {exc}") from None
        if not td.is_stable() or not np.isclose(dc_gain(td), 1.0, rtol=0, atol=1e-9):
            raise ConfigError("reference model must be stable with unit DC gain")
        self.dictionary_obj()
        self._check_solver(self.solver, self.alpha)
        if self.tol <= 0 or self.max_iter < 1:
            raise ConfigError("tol must be positive and max_iter >= 1")
        if self.stopping not in ("coef", "gap"):
            raise ConfigError("stopping must be 'coef' or 'gap'")
        if self.objective_scaling not in ("per-sample", "raw"):
            raise ConfigError("objective_scaling must be 'per-sample' or 'raw'")
        for spec in self.design_specs():
            self.dictionary_obj(spec.dictionary)
            alphas = spec.alpha if isinstance(spec.alpha, list) else [spec.alpha]
            if not alphas:
                raise ConfigError("alpha sweep list is empty")
            for a in alphas:
                self._check_solver(spec.solver, a)

    @staticmethod
    def _check_solver(solver, alpha) -> None:
        if solver not in ("ols", "lasso"):
            raise ConfigError(f"solver must be 'ols' or 'lasso', got {solver!r}")
        if not isinstance(alpha, (int, float)) or not alpha >= 0:
            raise ConfigError(f"alpha must be a nonnegative number, got {alpha!r}")

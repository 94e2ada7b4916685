"""YAML experiment configuration: schema validation and typed access.

Configs are nested key-value tables. Unknown keys are rejected so typos
fail loudly before any compute starts. The canonical JSON dump of the
parsed config is hashed into every output file, which makes reruns
byte-comparable.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .analysis import ProblemSetup
from .errors import ConfigurationError
from .kernels import KernelSpec, SamplingPlan
from .lattice import Ball, Box
from .solve import SolveConfig

__all__ = ["Budgets", "ExperimentConfig", "load_config"]

_SCHEMA = {
    "kernel": {"family", "alpha", "dim", "aperture", "axis", "ratio", "ball_fraction",
               "coefficient", "coefficient_bound", "corner_exponent", "smoke_test"},
    "domain": {"shape", "radius", "center", "lo", "hi", "h"},
    "source": {"y0", "rho"},
    "solver": {"tol", "max_iter", "preconditioner"},
    "sweep": {"alphas", "mode"},
    "conditions": {"n_x", "n_r", "r_min", "r_max", "n_pairs", "n_directions",
                   "n_ball", "seed", "box_half"},
    "budgets": {"moment", "pointwise", "ujs", "levy", "slope_tol", "spread_max",
                "quasinorm_spread_max", "symmetry_factor", "harnack_factor"},
    "outputs": {"directory", "formats"},
}

_COEFFICIENTS = {
    "constant": lambda value=1.0, **_: (lambda x, y: np.full(np.asarray(x).shape[:-1], float(value))),
    "cosine": lambda amplitude=0.5, frequency=1.0, **_: (
        lambda x, y: 1.0 + float(amplitude) * np.cos(
            float(frequency) * np.sum(np.asarray(x) + np.asarray(y), axis=-1))),
}


@dataclass
class Budgets:
    """Pass/fail budgets; condition budgets default to None (report-only)."""

    moment: Optional[float] = None
    pointwise: Optional[float] = None
    ujs: Optional[float] = None
    levy: Optional[float] = None
    slope_tol: float = 0.15
    spread_max: float = 5.0
    quasinorm_spread_max: float = 3.0
    symmetry_factor: float = 10.0
    harnack_factor: float = 10.0


@dataclass
class ExperimentConfig:
    kernel: KernelSpec
    shape: object
    h: float
    y0: tuple
    rho: float
    solver: SolveConfig
    sweep_alphas: list
    sweep_mode: str
    plan: SamplingPlan
    budgets: Budgets
    out_dir: Optional[str]
    formats: tuple
    config_hash: str
    raw: dict = field(repr=False, default_factory=dict)

    def problem(self) -> ProblemSetup:
        return ProblemSetup(kernel=self.kernel, shape=self.shape, h=self.h,
                            y0=self.y0, rho=self.rho)


def _reject_unknown(raw: dict):
    for section, content in raw.items():
        if section not in _SCHEMA:
            raise ConfigurationError(f"unknown config section {section!r}")
        if not isinstance(content, dict):
            raise ConfigurationError(f"config section {section!r} must be a table")
        for key in content:
            if key not in _SCHEMA[section]:
                raise ConfigurationError(f"unknown key {section}.{key}")


def _build_kernel(raw: dict) -> KernelSpec:
    sec = dict(raw.get("kernel") or {})
    if "family" not in sec or "alpha" not in sec:
        raise ConfigurationError("kernel.family and kernel.alpha are required")
    coeff = sec.pop("coefficient", None)
    coeff_fn = None
    if coeff is not None:
        if not isinstance(coeff, dict) or "type" not in coeff:
            raise ConfigurationError("kernel.coefficient must be a table with a 'type'")
        builder = _COEFFICIENTS.get(coeff["type"])
        if builder is None:
            raise ConfigurationError(f"unknown coefficient type {coeff['type']!r}")
        coeff_fn = builder(**{k: v for k, v in coeff.items() if k != "type"})
    axis = sec.pop("axis", None)
    try:
        return KernelSpec(coefficient=coeff_fn,
                          axis=tuple(axis) if axis is not None else None, **sec)
    except TypeError as exc:
        raise ConfigurationError(f"bad kernel block: {exc}") from exc


def _build_shape(raw: dict):
    sec = dict(raw.get("domain") or {})
    kind = sec.get("shape")
    h = sec.get("h")
    if kind is None or h is None:
        raise ConfigurationError("domain.shape and domain.h are required")
    if not isinstance(h, (int, float)) or h <= 0:
        raise ConfigurationError("domain.h must be a positive number")
    if kind == "ball":
        center = tuple(sec.get("center", (0.0, 0.0, 0.0)))
        radius = float(sec.get("radius", 1.0))
        if radius <= 0:
            raise ConfigurationError("domain.radius must be positive")
        return Ball(radius=radius, center=center), float(h)
    if kind == "box":
        if "lo" not in sec or "hi" not in sec:
            raise ConfigurationError("box domains need lo and hi")
        lo, hi = tuple(sec["lo"]), tuple(sec["hi"])
        if len(lo) != len(hi) or any(a >= b for a, b in zip(lo, hi)):
            raise ConfigurationError("box needs lo < hi componentwise")
        return Box(lo=lo, hi=hi), float(h)
    raise ConfigurationError(f"unknown domain shape {kind!r}")


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate an experiment config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigurationError(f"config parse error{where}: {exc}") from exc
    except OSError as exc:
        raise ConfigurationError(f"cannot read config: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a mapping of sections")
    _reject_unknown(raw)

    kernel = _build_kernel(raw)
    shape, h = _build_shape(raw)

    src = dict(raw.get("source") or {})
    y0 = tuple(src.get("y0", tuple([0.0] * kernel.dim)))
    rho = float(src.get("rho", 2.0 * h))
    if len(y0) != kernel.dim:
        raise ConfigurationError("source.y0 dimension does not match kernel.dim")

    try:
        solver = SolveConfig(**(raw.get("solver") or {}))
    except TypeError as exc:
        raise ConfigurationError(f"bad solver block: {exc}") from exc

    sweep = dict(raw.get("sweep") or {})
    alphas = [float(a) for a in sweep.get("alphas", [kernel.alpha])]
    mode = sweep.get("mode", "solve")
    if mode not in ("solve", "oracle"):
        raise ConfigurationError("sweep.mode must be 'solve' or 'oracle'")

    cond = dict(raw.get("conditions") or {})
    diam = shape.diameter()
    plan = SamplingPlan(
        n_x=int(cond.get("n_x", 64)),
        n_r=int(cond.get("n_r", 32)),
        r_min=float(cond.get("r_min", h)),
        r_max=float(cond.get("r_max", diam)),
        n_pairs=int(cond.get("n_pairs", 200)),
        n_directions=int(cond.get("n_directions", 256)),
        n_ball=int(cond.get("n_ball", 512)),
        box_half=float(cond.get("box_half", diam / 2.0)),
        seed=int(cond.get("seed", 0)),
    )

    try:
        budgets = Budgets(**(raw.get("budgets") or {}))
    except TypeError as exc:
        raise ConfigurationError(f"bad budgets block: {exc}") from exc

    outputs = dict(raw.get("outputs") or {})
    out_dir = outputs.get("directory")
    formats = tuple(outputs.get("formats", ("csv", "json")))
    for fmt in formats:
        if fmt not in ("csv", "json"):
            raise ConfigurationError(f"unknown output format {fmt!r}")

    canon = json.dumps(raw, sort_keys=True, default=str)
    digest = hashlib.sha256(canon.encode()).hexdigest()[:16]

    return ExperimentConfig(kernel=kernel, shape=shape, h=h, y0=y0, rho=rho,
                            solver=solver, sweep_alphas=alphas, sweep_mode=mode,
                            plan=plan, budgets=budgets, out_dir=out_dir,
                            formats=formats, config_hash=digest, raw=raw)

"""Experiment configuration: flat INI sections [run], [kernel], [potential], [initial].

Parsing is strict: unknown sections or keys, missing required keys, and
invariant violations are all reported with their key path (for example
``run.dt``).  serialize_config(parse_config(text)) round-trips to an
identical configuration, which is what makes sweep overrides and the
by-name presets reproducible.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, replace
from typing import Optional

from .kernels import ConstantKernel, FloorClippedKernel, Kernel, PowerLawKernel
from .potentials import (
    PerturbedQuadraticPotential,
    Potential,
    QuadraticPotential,
    ZeroPotential,
)

__all__ = [
    "ConfigError",
    "InitialSpec",
    "ExperimentConfig",
    "parse_config",
    "load_config",
    "serialize_config",
    "with_override",
    "preset_names",
    "preset_text",
    "preset_config",
    "resolve_config",
]

MODES = ("particles", "hydro1d", "hydro2d")
POSITION_KINDS = ("uniform", "bump")
VELOCITY_KINDS = ("linear", "sinusoidal", "random")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class InitialSpec:
    positions: str = "uniform"
    velocities: str = "random"
    amplitude: float = 1.0
    rotation: float = 0.0
    half_width: float = 1.0
    bump_height: float = 1.0
    recenter: bool = False
    x_shift: tuple = ()
    u_shift: tuple = ()


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    t_final: float
    kernel: Kernel
    potential: Potential
    initial: InitialSpec = InitialSpec()
    scenario: Optional[str] = None
    mode: str = "particles"
    dim: int = 1
    dt: float = 1.0e-3
    output_stride: int = 100
    seed: int = 0
    m0: float = 1.0

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_final / self.dt)))


_RUN_KEYS = {"scenario", "mode", "dim", "n", "dt", "t", "output_stride", "seed", "m0"}
_KERNEL_KEYS = {"family", "c0", "beta", "k", "alpha", "inner_family", "inner_c0", "inner_beta", "inner_k"}
_POTENTIAL_KEYS = {"family", "a", "eps", "kappa"}
_INITIAL_KEYS = {
    "positions",
    "velocities",
    "amplitude",
    "rotation",
    "length",
    "z",
    "recenter",
    "x_shift",
    "u_shift",
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate configuration text."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    sections = {s: dict(parser.items(s)) for s in parser.sections()}
    return _build(sections)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def _build(sections: dict) -> ExperimentConfig:
    known = {"run", "kernel", "potential", "initial"}
    for name in sections:
        if name not in known:
            raise ConfigError(f"unknown section [{name}]")
    for required in ("run", "kernel", "potential"):
        if required not in sections:
            raise ConfigError(f"missing section [{required}]")

    run = _Section("run", sections["run"], _RUN_KEYS)
    kernel_sec = _Section("kernel", sections["kernel"], _KERNEL_KEYS)
    pot_sec = _Section("potential", sections["potential"], _POTENTIAL_KEYS)
    init_sec = _Section("initial", sections.get("initial", {}), _INITIAL_KEYS)

    mode = run.choice("mode", MODES, default="particles")
    dim = run.integer("dim", default=1, lo=1, hi=2)
    n = run.integer("n", required=True, lo=1)
    dt = run.number("dt", default=1.0e-3, positive=True)
    t_final = run.number("t", required=True, positive=True)
    stride = run.integer("output_stride", default=100, lo=1)
    seed = run.integer("seed", default=0, lo=0, hi=2**64 - 1)
    m0 = run.number("m0", default=1.0, positive=True)
    scenario = run.raw.get("scenario")

    kernel = _parse_kernel(kernel_sec)
    potential = _parse_potential(pot_sec)
    initial = _parse_initial(init_sec, dim)

    run.reject_unknown()
    kernel_sec.reject_unknown()
    pot_sec.reject_unknown()
    init_sec.reject_unknown()

    cfg = ExperimentConfig(
        scenario=scenario,
        mode=mode,
        dim=dim,
        n=n,
        dt=dt,
        t_final=t_final,
        output_stride=stride,
        seed=seed,
        m0=m0,
        kernel=kernel,
        potential=potential,
        initial=initial,
    )
    _validate_mode(cfg)
    return cfg


class _Section:
    def __init__(self, name: str, raw: dict, known: set):
        self.name = name
        self.raw = raw
        self.known = known

    def _get(self, key, required, default):
        if key not in self.raw:
            if required:
                raise ConfigError(f"missing required key {self.name}.{key}")
            return None, default
        return self.raw[key], default

    def number(self, key, default=None, required=False, positive=False, nonnegative=False):
        raw, default = self._get(key, required, default)
        if raw is None:
            return default
        try:
            value = float(raw)
        except ValueError:
            raise ConfigError(f"{self.name}.{key}: expected a number, got {raw!r}") from None
        if positive and not value > 0.0:
            raise ConfigError(f"{self.name}.{key}: must be positive, got {value}")
        if nonnegative and value < 0.0:
            raise ConfigError(f"{self.name}.{key}: must be nonnegative, got {value}")
        if not math.isfinite(value):
            raise ConfigError(f"{self.name}.{key}: must be finite")
        return value

    def integer(self, key, default=None, required=False, lo=None, hi=None):
        raw, default = self._get(key, required, default)
        if raw is None:
            return default
        try:
            value = int(raw)
        except ValueError:
            raise ConfigError(f"{self.name}.{key}: expected an integer, got {raw!r}") from None
        if lo is not None and value < lo:
            raise ConfigError(f"{self.name}.{key}: must be >= {lo}, got {value}")
        if hi is not None and value > hi:
            raise ConfigError(f"{self.name}.{key}: must be <= {hi}, got {value}")
        return value

    def choice(self, key, allowed, default=None, required=False):
        raw, default = self._get(key, required, default)
        if raw is None:
            return default
        if raw not in allowed:
            raise ConfigError(f"{self.name}.{key}: expected one of {allowed}, got {raw!r}")
        return raw

    def boolean(self, key, default=False):
        raw, default = self._get(key, False, default)
        if raw is None:
            return default
        low = raw.strip().lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ConfigError(f"{self.name}.{key}: expected a boolean, got {raw!r}")

    def vector(self, key, dim):
        raw, _ = self._get(key, False, None)
        if raw is None or raw.strip() == "":
            return ()
        try:
            parts = tuple(float(p) for p in raw.split(","))
        except ValueError:
            raise ConfigError(f"{self.name}.{key}: expected comma-separated numbers") from None
        if len(parts) != dim:
            raise ConfigError(f"{self.name}.{key}: expected {dim} components, got {len(parts)}")
        return parts

    def reject_unknown(self):
        for key in self.raw:
            if key not in self.known:
                raise ConfigError(f"unknown key {self.name}.{key}")


def _parse_kernel(sec: _Section) -> Kernel:
    family = sec.choice("family", ("power_law", "constant", "floor_clipped"), required=True)
    try:
        if family == "power_law":
            return PowerLawKernel(
                c0=sec.number("c0", required=True, positive=True),
                beta=sec.number("beta", required=True, nonnegative=True),
            )
        if family == "constant":
            return ConstantKernel(value=sec.number("k", required=True, positive=True))
        inner_family = sec.choice("inner_family", ("power_law", "constant"), required=True)
        if inner_family == "power_law":
            inner: Kernel = PowerLawKernel(
                c0=sec.number("inner_c0", required=True, positive=True),
                beta=sec.number("inner_beta", required=True, nonnegative=True),
            )
        else:
            inner = ConstantKernel(value=sec.number("inner_k", required=True, positive=True))
        return FloorClippedKernel(inner=inner, alpha=sec.number("alpha", required=True, positive=True))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"kernel: {exc}") from exc


def _parse_potential(sec: _Section) -> Potential:
    family = sec.choice("family", ("quadratic", "perturbed_quadratic", "zero"), required=True)
    try:
        if family == "quadratic":
            return QuadraticPotential(a=sec.number("a", required=True, positive=True))
        if family == "perturbed_quadratic":
            return PerturbedQuadraticPotential(
                a=sec.number("a", required=True, positive=True),
                eps=sec.number("eps", required=True, nonnegative=True),
                kappa=sec.number("kappa", default=1.0, positive=True),
            )
        return ZeroPotential()
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"potential: {exc}") from exc


def _parse_initial(sec: _Section, dim: int) -> InitialSpec:
    return InitialSpec(
        positions=sec.choice("positions", POSITION_KINDS, default="uniform"),
        velocities=sec.choice("velocities", VELOCITY_KINDS, default="random"),
        amplitude=sec.number("amplitude", default=1.0),
        rotation=sec.number("rotation", default=0.0),
        half_width=sec.number("length", default=1.0, positive=True),
        bump_height=sec.number("z", default=1.0, positive=True),
        recenter=sec.boolean("recenter", default=False),
        x_shift=sec.vector("x_shift", dim),
        u_shift=sec.vector("u_shift", dim),
    )


def _validate_mode(cfg: ExperimentConfig):
    init = cfg.initial
    if cfg.mode == "hydro1d" and cfg.dim != 1:
        raise ConfigError("run.dim: hydro1d runs are one-dimensional")
    if cfg.mode == "hydro2d" and cfg.dim != 2:
        raise ConfigError("run.dim: hydro2d runs are two-dimensional")
    if cfg.mode == "hydro2d":
        side = math.isqrt(cfg.n)
        if side * side != cfg.n:
            raise ConfigError(f"run.n: hydro2d uses a tensor grid, n must be a perfect square, got {cfg.n}")
    if cfg.mode in ("hydro1d", "hydro2d"):
        if init.positions != "bump":
            raise ConfigError("initial.positions: characteristic modes quadrature the bump profile; set positions = bump")
        if init.velocities == "random":
            raise ConfigError("initial.velocities: characteristic modes need an analytic profile (linear or sinusoidal)")
        if init.recenter:
            raise ConfigError("initial.recenter: not supported for characteristic modes")
        if init.x_shift or init.u_shift:
            raise ConfigError("initial.x_shift: shifts are not supported for characteristic modes")
    if cfg.dim == 1 and init.rotation != 0.0:
        raise ConfigError("initial.rotation: only meaningful in dimension 2")


def serialize_config(cfg: ExperimentConfig) -> str:
    """Emit configuration text that parses back to an identical configuration."""
    parser = configparser.ConfigParser(interpolation=None)
    run = {
        "mode": cfg.mode,
        "dim": str(cfg.dim),
        "n": str(cfg.n),
        "dt": repr(cfg.dt),
        "t": repr(cfg.t_final),
        "output_stride": str(cfg.output_stride),
        "seed": str(cfg.seed),
        "m0": repr(cfg.m0),
    }
    if cfg.scenario is not None:
        run = {"scenario": cfg.scenario, **run}
    parser["run"] = run

    k = cfg.kernel
    if isinstance(k, PowerLawKernel):
        parser["kernel"] = {"family": "power_law", "c0": repr(k.c0), "beta": repr(k.beta)}
    elif isinstance(k, ConstantKernel):
        parser["kernel"] = {"family": "constant", "k": repr(k.value)}
    else:
        assert isinstance(k, FloorClippedKernel)
        inner = k.inner
        entry = {"family": "floor_clipped", "alpha": repr(k.alpha)}
        if isinstance(inner, PowerLawKernel):
            entry.update({"inner_family": "power_law", "inner_c0": repr(inner.c0), "inner_beta": repr(inner.beta)})
        else:
            entry.update({"inner_family": "constant", "inner_k": repr(inner.value)})
        parser["kernel"] = entry

    p = cfg.potential
    if isinstance(p, QuadraticPotential):
        parser["potential"] = {"family": "quadratic", "a": repr(p.a)}
    elif isinstance(p, PerturbedQuadraticPotential):
        parser["potential"] = {
            "family": "perturbed_quadratic",
            "a": repr(p.a),
            "eps": repr(p.eps),
            "kappa": repr(p.kappa),
        }
    else:
        parser["potential"] = {"family": "zero"}

    init = cfg.initial
    entry = {
        "positions": init.positions,
        "velocities": init.velocities,
        "amplitude": repr(init.amplitude),
        "length": repr(init.half_width),
        "z": repr(init.bump_height),
        "recenter": "true" if init.recenter else "false",
    }
    if init.rotation != 0.0:
        entry["rotation"] = repr(init.rotation)
    if init.x_shift:
        entry["x_shift"] = ", ".join(repr(v) for v in init.x_shift)
    if init.u_shift:
        entry["u_shift"] = ", ".join(repr(v) for v in init.u_shift)
    parser["initial"] = entry

    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()


_OVERRIDABLE = {
    "run.n": ("n", int),
    "run.dt": ("dt", float),
    "run.t": ("t_final", float),
    "run.seed": ("seed", int),
    "run.output_stride": ("output_stride", int),
    "run.m0": ("m0", float),
}


def with_override(cfg: ExperimentConfig, key_path: str, value) -> ExperimentConfig:
    """Return a copy of the configuration with one dotted key replaced.

    Supports the run scalars plus kernel.*, potential.* and initial.*
    fields; validation is re-run on the result.
    """
    if key_path in _OVERRIDABLE:
        attr, conv = _OVERRIDABLE[key_path]
        out = replace(cfg, **{attr: conv(value)})
        _validate_mode(out)
        return out
    section, _, key = key_path.partition(".")
    if section == "kernel":
        return replace(cfg, kernel=_replace_component(cfg.kernel, key, value, "kernel"))
    if section == "potential":
        return replace(cfg, potential=_replace_component(cfg.potential, key, value, "potential"))
    if section == "initial":
        mapping = {
            "amplitude": "amplitude",
            "rotation": "rotation",
            "length": "half_width",
            "z": "bump_height",
        }
        if key not in mapping:
            raise ConfigError(f"cannot override {key_path}")
        out = replace(cfg, initial=replace(cfg.initial, **{mapping[key]: float(value)}))
        _validate_mode(out)
        return out
    raise ConfigError(f"cannot override {key_path}")


def _replace_component(obj, key: str, value, section: str):
    mapping = {
        "kernel": {"c0": "c0", "beta": "beta", "k": "value", "alpha": "alpha"},
        "potential": {"a": "a", "eps": "eps", "kappa": "kappa"},
    }[section]
    if key not in mapping or not hasattr(obj, mapping[key]):
        raise ConfigError(f"cannot override {section}.{key} on {type(obj).__name__}")
    try:
        return replace(obj, **{mapping[key]: float(value)})
    except ValueError as exc:
        raise ConfigError(f"{section}.{key}: {exc}") from exc


_PRESETS = {
    # thin-tail kernel under quadratic confinement: exponential two-sided flocking
    "quadratic-flocking-1d": """
[run]
scenario = quadratic-flocking-1d
mode = particles
dim = 1
n = 256
dt = 1e-3
t = 40
output_stride = 100
seed = 20240601
m0 = 1.0
[kernel]
family = power_law
c0 = 1.0
beta = 1.0
[potential]
family = quadratic
a = 1.0
[initial]
positions = uniform
velocities = random
amplitude = 1.0
length = 1.0
recenter = true
""",
    "quadratic-flocking-2d": """
[run]
scenario = quadratic-flocking-2d
mode = particles
dim = 2
n = 128
dt = 1e-3
t = 30
output_stride = 100
seed = 20240602
m0 = 1.0
[kernel]
family = power_law
c0 = 1.0
beta = 1.0
[potential]
family = quadratic
a = 1.0
[initial]
positions = uniform
velocities = random
amplitude = 1.0
length = 1.0
recenter = true
""",
    # uncentered cloud: the means trace the closed-form oscillation exactly
    "oscillator-means": """
[run]
scenario = oscillator-means
mode = particles
dim = 2
n = 64
dt = 1e-3
t = 10
output_stride = 100
seed = 20240603
m0 = 1.0
[kernel]
family = power_law
c0 = 1.0
beta = 1.0
[potential]
family = quadratic
a = 4.0
[initial]
positions = uniform
velocities = random
amplitude = 1.0
length = 1.0
x_shift = 1.0, -0.5
u_shift = 0.25, 0.5
""",
    # steep confinement forces gradient blow-up for any data
    "blowup-1d-unconditional": """
[run]
scenario = blowup-1d-unconditional
mode = hydro1d
dim = 1
n = 128
dt = 1e-3
t = 10
output_stride = 100
seed = 1
m0 = 1.0
[kernel]
family = constant
k = 2.0
[potential]
family = quadratic
a = 5.0
[initial]
positions = bump
velocities = sinusoidal
amplitude = 0.4
length = 1.0
""",
    # e starts above the lower fixed point and is trapped there forever
    "smooth-1d-guaranteed": """
[run]
scenario = smooth-1d-guaranteed
mode = hydro1d
dim = 1
n = 128
dt = 1e-3
t = 100
output_stride = 100
seed = 1
m0 = 1.0
[kernel]
family = constant
k = 1.0
[potential]
family = quadratic
a = 0.2
[initial]
positions = bump
velocities = sinusoidal
amplitude = -0.7
length = 1.5
""",
    # single characteristic: e follows the scalar constant-coefficient Riccati flow
    "riccati-oracle": """
[run]
scenario = riccati-oracle
mode = hydro1d
dim = 1
n = 1
dt = 1e-4
t = 5
output_stride = 100
seed = 1
m0 = 1.0
[kernel]
family = constant
k = 1.0
[potential]
family = quadratic
a = 0.2
[initial]
positions = bump
velocities = linear
amplitude = -0.7
length = 1.0
""",
    # constant coupling above the stability bound: exponential pair-functional decay
    "convex-flocking-constant": """
[run]
scenario = convex-flocking-constant
mode = particles
dim = 1
n = 256
dt = 1e-3
t = 60
output_stride = 100
seed = 20240604
m0 = 1.0
[kernel]
family = constant
k = 2.0
[potential]
family = perturbed_quadratic
a = 1.25
eps = 0.25
kappa = 1.0
[initial]
positions = uniform
velocities = random
amplitude = 1.0
length = 1.0
""",
    # decaying kernel above the stability bound: at least algebraic decay
    "convex-flocking-powerlaw": """
[run]
scenario = convex-flocking-powerlaw
mode = particles
dim = 1
n = 128
dt = 2e-3
t = 100
output_stride = 100
seed = 20240605
m0 = 1.0
[kernel]
family = power_law
c0 = 2.0
beta = 0.5
[potential]
family = perturbed_quadratic
a = 1.25
eps = 0.25
kappa = 1.0
[initial]
positions = uniform
velocities = random
amplitude = 1.0
length = 1.0
""",
    # subcritical 2D data with constant coupling: e stays nonnegative, gap decays
    "subcritical-2d-constant": """
[run]
scenario = subcritical-2d-constant
mode = hydro2d
dim = 2
n = 256
dt = 1e-3
t = 50
output_stride = 100
seed = 1
m0 = 1.0
[kernel]
family = constant
k = 3.0
[potential]
family = quadratic
a = 1.0
[initial]
positions = bump
velocities = sinusoidal
amplitude = 0.5
rotation = 0.25
length = 1.2
""",
}


def preset_names() -> list[str]:
    return sorted(_PRESETS)


def preset_text(name: str) -> str:
    if name not in _PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return _PRESETS[name]


def preset_config(name: str) -> ExperimentConfig:
    return parse_config(preset_text(name))


def resolve_config(spec: str) -> ExperimentConfig:
    """Interpret a CLI argument as a config file path or a preset name."""
    import os

    if os.path.exists(spec):
        return load_config(spec)
    if spec in _PRESETS:
        return preset_config(spec)
    raise ConfigError(f"{spec!r} is neither a config file nor a preset; presets: {', '.join(preset_names())}")

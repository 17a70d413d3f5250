"""Run configuration: defaults, the flat key-value grammar, and hashing.

A configuration document is plain text, one ``section.key = value`` per
line; blank lines and ``#`` comments are ignored.  Every key has a default
matching the shipped reference scenario (parabolic density column, weakly
relativistic electron beam), so an empty document is a valid full-scale
run.  Unknown keys are rejected by name.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, fields, replace

from .errors import ConfigurationError


@dataclass(frozen=True)
class RunConfig:
    # Domain bounds (m_e = c = reference frequency = cylinder radius = 1).
    p_par_min: float = 10.0
    p_par_max: float = 25.0
    p_perp_max: float = 15.0
    r_max: float = 1.0
    k_r_max: float = 1.0
    q_phi_max: float = 0.5
    k_z_max: float = 1.0
    # Grid cell counts.
    n_p_par: int = 75
    n_p_perp: int = 75
    n_r: int = 20
    n_q_phi: int = 20
    n_k_z: int = 40
    n_tri_kr: int = 20
    n_tri_r: int = 20
    n_strata: int = 10
    # Physics.
    omega_pe0: float = 1.0
    omega_ce0: float = 5.0
    kernel_eps: float = 0.1
    kernel_harmonic: int = 1
    # Initial data.
    f_amplitude: float = 1e-5
    f_center_p_par: float = 20.0
    n_amplitude: float = 1e-5
    # Time stepping.
    scheme: str = "fully_explicit"
    delta: float = 0.1
    safety: float = 0.9
    t_max: float = 3.86e6
    max_steps: int = 0
    # Output.
    cadence: int = 100


_KEY_MAP = {
    "domain.p_par_min": "p_par_min",
    "domain.p_par_max": "p_par_max",
    "domain.p_perp_max": "p_perp_max",
    "domain.r_max": "r_max",
    "domain.k_r_max": "k_r_max",
    "domain.q_phi_max": "q_phi_max",
    "domain.k_z_max": "k_z_max",
    "grid.n_p_par": "n_p_par",
    "grid.n_p_perp": "n_p_perp",
    "grid.n_r": "n_r",
    "grid.n_q_phi": "n_q_phi",
    "grid.n_k_z": "n_k_z",
    "grid.n_tri_kr": "n_tri_kr",
    "grid.n_tri_r": "n_tri_r",
    "grid.n_strata": "n_strata",
    "physics.omega_pe0": "omega_pe0",
    "physics.omega_ce0": "omega_ce0",
    "kernel.eps": "kernel_eps",
    "kernel.harmonic": "kernel_harmonic",
    "init.f_amplitude": "f_amplitude",
    "init.f_center_p_par": "f_center_p_par",
    "init.n_amplitude": "n_amplitude",
    "solver.scheme": "scheme",
    "solver.delta": "delta",
    "solver.safety": "safety",
    "solver.t_max": "t_max",
    "solver.max_steps": "max_steps",
    "output.cadence": "cadence",
}

_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, attr: str, raw: str):
    kind = _FIELD_TYPES[attr]
    raw = raw.strip()
    try:
        if kind == "int":
            as_float = float(raw)
            if as_float != int(as_float):
                raise ValueError
            return int(as_float)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigurationError(
            f"config key {key}: cannot parse {raw!r} as {kind}"
        ) from None


_COUNT_ATTRS = (
    "n_p_par", "n_p_perp", "n_r", "n_q_phi", "n_k_z",
    "n_tri_kr", "n_tri_r", "n_strata",
)
_POSITIVE_ATTRS = ("p_perp_max", "r_max", "k_r_max", "q_phi_max", "k_z_max")


def validate_config(config: RunConfig) -> RunConfig:
    """Check structural invariants, naming the offending config key."""
    attr_to_key = {attr: key for key, attr in _KEY_MAP.items()}
    for attr in _COUNT_ATTRS:
        if getattr(config, attr) < 1:
            raise ConfigurationError(
                f"config key {attr_to_key[attr]}: count must be at least 1, "
                f"got {getattr(config, attr)}"
            )
    if not config.p_par_min < config.p_par_max:
        raise ConfigurationError(
            "config key domain.p_par_min: lower bound must be below "
            f"domain.p_par_max ({config.p_par_min} vs {config.p_par_max})"
        )
    for attr in _POSITIVE_ATTRS:
        if not getattr(config, attr) > 0.0:
            raise ConfigurationError(
                f"config key {attr_to_key[attr]}: upper bound must be positive, "
                f"got {getattr(config, attr)}"
            )
    if config.t_max < 0.0:
        raise ConfigurationError(
            f"config key solver.t_max: must be non-negative, got {config.t_max}"
        )
    if config.max_steps < 0:
        raise ConfigurationError(
            f"config key solver.max_steps: must be non-negative, got {config.max_steps}"
        )
    if config.cadence < 1:
        raise ConfigurationError(
            f"config key output.cadence: must be at least 1, got {config.cadence}"
        )
    return config


def parse_config(text: str) -> RunConfig:
    """Parse a configuration document, applying defaults for absent keys."""
    overrides = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key not in _KEY_MAP:
            raise ConfigurationError(f"line {lineno}: unknown config key {key!r}")
        attr = _KEY_MAP[key]
        if attr in overrides:
            raise ConfigurationError(f"line {lineno}: duplicate config key {key!r}")
        overrides[attr] = _coerce(key, attr, raw)
    return validate_config(replace(RunConfig(), **overrides))


def config_text(config: RunConfig) -> str:
    """Serialize a configuration in the same grammar parse_config reads."""
    attr_to_key = {attr: key for key, attr in _KEY_MAP.items()}
    lines = ["# wavekin run configuration"]
    section = None
    for f in fields(RunConfig):
        key = attr_to_key[f.name]
        sec = key.split(".", 1)[0]
        if sec != section:
            lines.append("")
            section = sec
        value = getattr(config, f.name)
        lines.append(f"{key} = {value}")
    lines.append("")
    return "\n".join(lines)


def config_hash(config: RunConfig) -> str:
    return hashlib.sha256(config_text(config).encode()).hexdigest()


def desk_scale(config: RunConfig | None = None) -> RunConfig:
    """The reference scenario shrunk to interactive grid sizes; domain
    bounds and physics are untouched."""
    base = config or RunConfig()
    return replace(
        base,
        n_p_par=24, n_p_perp=24, n_r=8,
        n_q_phi=8, n_k_z=10,
        n_tri_kr=10, n_tri_r=10,
        n_strata=6,
    )

"""Unit conventions, physical constants, material data, and run configuration.

Fixed internal unit system: energy in meV, time in ps, length in nm,
temperature in K.  Angular frequencies are rad/ps and wave numbers nm^-1,
so hbar*c*k is an energy in meV once the sound speed has been converted
from m/s to nm/ps.  Laboratory-unit inputs (eV, kg/m^3, m/s) are converted
at the boundary and never stored mixed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

HBAR_MEV_PS = 0.6582120      # hbar in meV*ps
KB_MEV_PER_K = 0.08617333    # Boltzmann constant in meV/K
EV_TO_MEV = 1.0e3
M_PER_S_TO_NM_PER_PS = 1.0e-3

# exp argument beyond which the occupation underflows to zero anyway
_EXP_CUTOFF = 700.0


class ConfigError(ValueError):
    """Raised for unreadable, unknown, or out-of-range configuration input."""


@dataclass(frozen=True)
class MaterialParams:
    """Sample parameters of the deformation-coupled structure.

    Defaults describe a GaAs quantum dot with an anisotropic Gaussian
    confinement, quoted in laboratory units and converted on access.
    """

    sigma_diff_ev: float = 9.0     # electron-hole deformation potential difference, eV
    rho_kg_m3: float = 5360.0      # crystal density, kg/m^3
    c_m_s: float = 5100.0          # longitudinal sound speed, m/s
    l_perp_nm: float = 4.0         # in-plane confinement width, nm
    l_z_nm: float = 1.0            # growth-direction confinement width, nm
    delta_eps_ev: float = 1.0      # pointer-state energy splitting, eV

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not (isinstance(value, (int, float)) and math.isfinite(value)):
                raise ConfigError(f"{f.name} must be a finite number, got {value!r}")
            if value <= 0:
                raise ConfigError(f"{f.name} must be > 0, got {value!r}")

    @property
    def sigma_diff_mev(self) -> float:
        return self.sigma_diff_ev * EV_TO_MEV

    @property
    def delta_eps_mev(self) -> float:
        return self.delta_eps_ev * EV_TO_MEV

    @property
    def c_nm_ps(self) -> float:
        return self.c_m_s * M_PER_S_TO_NM_PER_PS


@dataclass(frozen=True)
class SchemeConfig:
    """Resolved run configuration: material, bath choice, and backend."""

    material: MaterialParams = MaterialParams()
    temperature_k: float = 34.0
    backend: str = "weyl"
    bath: str = "quadrature"
    envelope_points: int = 4096

    def __post_init__(self):
        if not (math.isfinite(self.temperature_k) and self.temperature_k >= 0):
            raise ConfigError(f"temperature_k must be >= 0, got {self.temperature_k!r}")
        if self.backend not in ("weyl", "oracle"):
            raise ConfigError(f"backend must be 'weyl' or 'oracle', got {self.backend!r}")
        if not isinstance(self.envelope_points, int) or self.envelope_points < 16:
            raise ConfigError(
                f"envelope_points must be an integer >= 16, got {self.envelope_points!r}")


_MATERIAL_KEYS = ("sigma_diff_ev", "rho_kg_m3", "c_m_s",
                  "l_perp_nm", "l_z_nm", "delta_eps_ev")
_SCHEME_KEYS = ("temperature_k", "backend", "bath", "envelope_points")


def load_config(path: str | Path | None) -> SchemeConfig:
    """Read a flat ``key = value`` configuration file.

    Blank lines and ``#`` comments are ignored.  Unknown keys and malformed
    values raise :class:`ConfigError` naming the offending key; keys that are
    absent take the documented defaults.  ``path=None`` yields all defaults.
    """
    if path is None:
        return SchemeConfig()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {p}: {exc}") from exc

    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{p}:{lineno}: expected 'key = value', got {line!r}")
        key, _, value = stripped.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _MATERIAL_KEYS + _SCHEME_KEYS:
            raise ConfigError(f"{p}:{lineno}: unknown config key {key!r}")
        if key in raw:
            raise ConfigError(f"{p}:{lineno}: duplicate config key {key!r}")
        if not value:
            raise ConfigError(f"{p}:{lineno}: empty value for key {key!r}")
        raw[key] = value

    def as_float(key: str, value: str) -> float:
        try:
            return float(value)
        except ValueError as exc:
            raise ConfigError(f"config key {key!r}: not a number: {value!r}") from exc

    mat_kwargs = {k: as_float(k, v) for k, v in raw.items() if k in _MATERIAL_KEYS}
    scheme_kwargs: dict[str, object] = {}
    for key, value in raw.items():
        if key == "temperature_k":
            scheme_kwargs[key] = as_float(key, value)
        elif key == "envelope_points":
            try:
                scheme_kwargs[key] = int(value)
            except ValueError as exc:
                raise ConfigError(
                    f"config key 'envelope_points': not an integer: {value!r}") from exc
        elif key in ("backend", "bath"):
            scheme_kwargs[key] = value
    return SchemeConfig(material=MaterialParams(**mat_kwargs), **scheme_kwargs)


def bose_occupation(energy_mev: float, temperature_k: float) -> float:
    """Mean thermal occupation 1/(exp(E/kT) - 1) of a mode of energy E.

    Returns 0 at zero temperature and underflows smoothly to 0 for
    E >> kT.  The energy must be strictly positive.
    """
    if not (energy_mev > 0):
        raise ValueError(f"mode energy must be > 0 meV, got {energy_mev!r}")
    if temperature_k < 0:
        raise ValueError(f"temperature must be >= 0 K, got {temperature_k!r}")
    if temperature_k == 0:
        return 0.0
    x = energy_mev / (KB_MEV_PER_K * temperature_k)
    if x > _EXP_CUTOFF:
        return 0.0
    return 1.0 / math.expm1(x)

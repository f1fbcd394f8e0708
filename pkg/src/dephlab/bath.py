"""Deformation-potential coupling density and bosonic bath construction.

The per-wave-number coupling weight

    G(k) = P * k * int_0^pi sin(T) exp[-k^2 (l_z^2 cos^2 T + l_perp^2 sin^2 T)/2] dT

collects every phonon of magnitude k into one effective weight; its integral
over k is the total dimensionless coupling weight H = sum_k (f_k/hbar/omega_k)^2
carried by the bath.  The prefactor P converts the squared deformation
potential difference over 8 pi^2 rho c^3 hbar into nm^2, so G is in nm and
H is dimensionless.  Discrete baths are built on the equally spaced 19-point
grid tied to the maximum of G, on a dense Gauss-Legendre grid for continuum
work, or as subsets rescaled to preserve the total weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .params import HBAR_MEV_PS, MaterialParams
from .weyl import BathRef

# meV^2 / ((kg/m^3) * (m/s)^3 * meV*ps) expressed in nm^2
_PREFACTOR_UNIT = 1.602176634e8

_ARGMAX_BRACKET = (1e-4, 2.0)   # nm^-1
_ARGMAX_TOL = 1e-6
_N_THETA_NODES = 64
_N_WEIGHT_NODES = 2000          # reference grid for the total-weight integral
_TAIL_FACTOR = 12.0             # total weight integrated up to this multiple of argmax


@lru_cache(maxsize=8)
def _leggauss(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


@dataclass(frozen=True)
class Mode:
    """One discrete bath mode: wave number k (nm^-1), frequency omega
    (rad/ps), coupling weight H_i = (f/hbar/omega)^2, and r = sqrt(H_i)."""

    k: float
    omega: float
    weight: float
    r: float


@dataclass(frozen=True)
class BathSpec:
    """A concrete bath: modes, temperature, and the continuum weight target.

    h_total records the continuum coupling weight the construction refers
    to, which subset rescaling preserves.
    """

    modes: tuple[Mode, ...]
    temperature: float
    provenance: str
    h_total: float

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    @property
    def total_weight(self) -> float:
        return float(sum(m.weight for m in self.modes))

    def as_ref(self) -> BathRef:
        return BathRef(
            omega=np.array([m.omega for m in self.modes]),
            r=np.array([m.r for m in self.modes]),
            temperature=self.temperature)


def coupling_prefactor(material: MaterialParams) -> float:
    """P = (sigma_e - sigma_h)^2 / (8 pi^2 rho c^3 hbar) in nm^2."""
    sigma2 = material.sigma_diff_mev ** 2
    denom = 8.0 * math.pi ** 2 * material.rho_kg_m3 * material.c_m_s ** 3 * HBAR_MEV_PS
    return sigma2 * _PREFACTOR_UNIT / denom


def _theta_integral(k2, material: MaterialParams):
    # substitute u = cos(theta); the sin(theta) Jacobian absorbs exactly
    u, w = _leggauss(_N_THETA_NODES)
    u2 = u ** 2
    widths = material.l_z_nm ** 2 * u2 + material.l_perp_nm ** 2 * (1.0 - u2)
    return np.exp(-0.5 * np.multiply.outer(k2, widths)) @ w


def spectral_G(k, material: MaterialParams):
    """Coupling weight density G(k) in nm; G(0) = 0 and k must be >= 0."""
    arr = np.asarray(k, dtype=float)
    if np.any(arr < 0):
        raise ValueError("wave number k must be >= 0")
    values = coupling_prefactor(material) * arr * _theta_integral(arr ** 2, material)
    return float(values) if np.isscalar(k) or arr.ndim == 0 else values


def spectral_argmax(material: MaterialParams,
                    lo: float = _ARGMAX_BRACKET[0],
                    hi: float = _ARGMAX_BRACKET[1],
                    tol: float = _ARGMAX_TOL) -> float:
    """Location of the maximum of G on [lo, hi] by golden-section search."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = spectral_G(c, material), spectral_G(d, material)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = spectral_G(c, material)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = spectral_G(d, material)
    return 0.5 * (a + b)


def total_coupling_weight(material: MaterialParams, k_max: float | None = None) -> float:
    """H = integral of G from 0 to k_max (default: far past the peak)."""
    if k_max is None:
        k_max = _TAIL_FACTOR * spectral_argmax(material)
    if not k_max > 0:
        raise ValueError(f"k_max must be > 0, got {k_max!r}")
    x, w = _leggauss(_N_WEIGHT_NODES)
    half = 0.5 * k_max
    nodes = half * (x + 1.0)
    return float(half * np.sum(w * spectral_G(nodes, material)))


def grid_bath(material: MaterialParams, temperature: float,
              n_modes: int = 19) -> BathSpec:
    """A uniformly spaced mode grid k_i = i*dk for i = 0..n_modes-1 with
    spacing dk = (2/3) * argmax G, so the k = 0 mode is included with zero
    weight and the grid straddles the peak of G."""
    if n_modes < 1:
        raise ValueError(f"n_modes must be >= 1, got {n_modes!r}")
    k_star = spectral_argmax(material)
    dk = (2.0 / 3.0) * k_star
    c = material.c_nm_ps
    modes = []
    for i in range(n_modes):
        k_i = i * dk
        weight = spectral_G(k_i, material) * dk
        modes.append(Mode(k=k_i, omega=c * k_i, weight=weight, r=math.sqrt(weight)))
    provenance = "grid19" if n_modes == 19 else f"grid{n_modes}"
    return BathSpec(modes=tuple(modes), temperature=temperature,
                    provenance=provenance, h_total=total_coupling_weight(material))


def discretize_19(material: MaterialParams, temperature: float) -> BathSpec:
    """The standard 19-mode bath (see grid_bath)."""
    return grid_bath(material, temperature, 19)


def quadrature_bath(material: MaterialParams, temperature: float,
                    n: int = 1500, k_max: float | None = None) -> BathSpec:
    """Dense Gauss-Legendre bath approximating the continuum on [0, k_max].

    The default k_max is 8 times the argmax of G, far into the Gaussian
    tail.  The summed weights reproduce the integral of G over the same
    interval to quadrature accuracy.
    """
    if n < 2:
        raise ValueError(f"quadrature bath needs n >= 2 nodes, got {n!r}")
    if k_max is None:
        k_max = 8.0 * spectral_argmax(material)
    if not k_max > 0:
        raise ValueError(f"k_max must be > 0, got {k_max!r}")
    x, w = _leggauss(n)
    half = 0.5 * k_max
    nodes = half * (x + 1.0)
    weights = half * w * spectral_G(nodes, material)
    c = material.c_nm_ps
    modes = tuple(Mode(k=float(k), omega=c * float(k), weight=float(h),
                       r=math.sqrt(float(h)))
                  for k, h in zip(nodes, weights))
    return BathSpec(modes=modes, temperature=temperature,
                    provenance=f"quadrature(n={n},k_max={k_max:.8g})",
                    h_total=total_coupling_weight(material))


def subset_rescaled(spec: BathSpec, indices) -> BathSpec:
    """Keep only the listed modes, rescaling their weights by a common
    factor so the summed weight equals the continuum target h_total.

    Frequencies are untouched.  A subset carrying zero total weight cannot
    be rescaled and raises.
    """
    idx = list(indices)
    if not idx:
        raise ValueError("subset must contain at least one mode index")
    if len(set(idx)) != len(idx):
        raise ValueError(f"duplicate mode indices in subset: {sorted(idx)}")
    for i in idx:
        if not (isinstance(i, (int, np.integer)) and 0 <= i < spec.n_modes):
            raise ValueError(
                f"mode index {i!r} out of range for a {spec.n_modes}-mode bath")
    subset_weight = sum(spec.modes[i].weight for i in idx)
    if subset_weight <= 0:
        raise ValueError("subset carries zero total coupling weight; cannot rescale")
    scale = spec.h_total / subset_weight
    modes = tuple(
        Mode(k=spec.modes[i].k, omega=spec.modes[i].omega,
             weight=spec.modes[i].weight * scale,
             r=math.sqrt(spec.modes[i].weight * scale))
        for i in sorted(idx))
    return BathSpec(modes=modes, temperature=spec.temperature,
                    provenance=f"subset{tuple(sorted(idx))}<-{spec.provenance}",
                    h_total=spec.h_total)


def bath_from_string(spec_string: str, material: MaterialParams,
                     temperature: float) -> BathSpec:
    """Build a bath from its configuration string.

    Accepted forms: ``quadrature``, ``quadrature:n=N,k_max=X``, ``grid19``,
    and ``subset:i,j,...`` (indices into the 19-mode grid).
    """
    s = spec_string.strip()
    if s == "grid19":
        return discretize_19(material, temperature)
    if s == "quadrature":
        return quadrature_bath(material, temperature)
    if s.startswith("quadrature:"):
        n, k_max = 1500, None
        for part in s.split(":", 1)[1].split(","):
            key, _, value = part.partition("=")
            key = key.strip()
            try:
                if key == "n":
                    n = int(value)
                elif key == "k_max":
                    k_max = float(value)
                else:
                    raise ValueError
            except ValueError:
                raise ValueError(f"bad quadrature bath option {part!r}") from None
        return quadrature_bath(material, temperature, n=n, k_max=k_max)
    if s.startswith("subset:"):
        try:
            idx = [int(tok) for tok in s.split(":", 1)[1].split(",") if tok.strip()]
        except ValueError:
            raise ValueError(f"bad subset index list in bath spec {spec_string!r}") from None
        return subset_rescaled(discretize_19(material, temperature), idx)
    raise ValueError(f"unknown bath spec {spec_string!r}")

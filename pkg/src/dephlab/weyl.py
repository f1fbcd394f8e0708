"""Exact operator algebra for conditional bosonic evolutions.

Every operator appearing in the control scheme is a product of the two
conditional propagators and their adjoints, and any such product reduces to
the normal form

    W = exp(i*phase) * prod_k D_k(alpha_k) * exp(-i*H_E*s/hbar),

with one complex displacement alpha_k per mode and a single residual free
rotation time s, where H_E = sum_k hbar*omega_k b_k^dag b_k.  The closure
rules, applied mode by mode, are

    D(a) D(b)       = exp(i*Im(a*conj(b))) * D(a + b)
    R(s) D(a)       = D(a*exp(-i*omega*s)) * R(s)
    <D(a)>_T        = exp(-|a|^2 * (nbar + 1/2))

with R(s) the free rotation by time s and <.>_T the thermal expectation.
This evaluates every scheme trace in closed form for any number of modes at
any temperature; the dense-matrix backend in :mod:`dephlab.oracle` provides
the independent cross-check.

The scalar phase is accumulated as an unwrapped real number and never
reduced modulo 2*pi.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .params import HBAR_MEV_PS, KB_MEV_PER_K, bose_occupation

# residual rotation larger than this in a trace word signals a malformed
# expression rather than roundoff
ROTATION_TOL_PS = 1e-12


@dataclass(frozen=True, eq=False)
class BathRef:
    """Mode frequencies and coupling ratios a Weyl element refers to.

    omega is in rad/ps and r_k = f_k / (hbar*omega_k) is the dimensionless
    ratio of the coupling energy to the mode energy; both are stored real
    and nonnegative (an overall coupling phase per mode is unobservable in
    every trace computed here).  A mode with omega = 0 carries zero coupling
    energy and is inert.
    """

    omega: np.ndarray
    r: np.ndarray
    temperature: float

    def __post_init__(self):
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=float))
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float))
        if self.omega.ndim != 1 or self.r.ndim != 1:
            raise ValueError("omega and r must be one-dimensional arrays")
        if self.omega.shape != self.r.shape:
            raise ValueError(
                f"mode-count mismatch: {self.omega.size} frequencies, {self.r.size} couplings")
        if not (np.all(np.isfinite(self.omega)) and np.all(np.isfinite(self.r))):
            raise ValueError("omega and r must be finite")
        if np.any(self.omega < 0) or np.any(self.r < 0):
            raise ValueError("omega and r must be nonnegative")
        if not (self.temperature >= 0):
            raise ValueError(f"temperature must be >= 0 K, got {self.temperature!r}")

    @property
    def n_modes(self) -> int:
        return self.omega.size


@dataclass(frozen=True, eq=False)
class WeylElement:
    """Normal form exp(i*phase) * prod_k D_k(alpha_k) * R(rotation)."""

    phase: float
    alpha: np.ndarray   # complex displacement per mode
    rotation: float     # residual free-rotation time, ps

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=complex))
        if self.alpha.ndim != 1:
            raise ValueError("alpha must be a one-dimensional array")

    @property
    def n_modes(self) -> int:
        return self.alpha.size


def identity(n_modes: int) -> WeylElement:
    return WeylElement(0.0, np.zeros(n_modes, dtype=complex), 0.0)


def conditional_evolution(branch: int, t: float, bath: BathRef) -> WeylElement:
    """Normal form of exp(-i*(H_E + V_branch)*t/hbar).

    Branch 0 couples to nothing and is a bare free rotation.  Branch 1
    displaces each mode by alpha_k = r_k*(exp(-i*omega_k*t) - 1) and carries
    the scalar phase sum_k r_k^2*(omega_k*t - sin(omega_k*t)); the part of
    that phase linear in t is the polaron shift of the coupled pointer
    state.  The full phase is kept so that the element equals the dense
    matrix exponential of the same Hamiltonian, which pins the sign
    convention unambiguously (checked against a truncated-number-basis
    exponential in the test suite).
    """
    if branch not in (0, 1):
        raise ValueError(f"branch must be 0 or 1, got {branch!r}")
    n = bath.n_modes
    if branch == 0:
        return WeylElement(0.0, np.zeros(n, dtype=complex), float(t))
    wt = bath.omega * t
    alpha = bath.r * (np.exp(-1j * wt) - 1.0)
    phase = float(np.sum(bath.r ** 2 * (wt - np.sin(wt))))
    return WeylElement(phase, alpha, float(t))


def compose(a: WeylElement, b: WeylElement, bath: BathRef) -> WeylElement:
    """Product a*b reduced back to normal form."""
    if a.n_modes != b.n_modes or a.n_modes != bath.n_modes:
        raise ValueError(
            f"mode-count mismatch: {a.n_modes}, {b.n_modes} and bath {bath.n_modes}")
    shifted = b.alpha * np.exp(-1j * bath.omega * a.rotation)
    phase = a.phase + b.phase + float(np.sum(np.imag(a.alpha * np.conj(shifted))))
    return WeylElement(phase, a.alpha + shifted, a.rotation + b.rotation)


def adjoint(a: WeylElement, bath: BathRef) -> WeylElement:
    """Hermitian adjoint, again in normal form."""
    if a.n_modes != bath.n_modes:
        raise ValueError(f"mode-count mismatch: {a.n_modes} and bath {bath.n_modes}")
    alpha = -a.alpha * np.exp(1j * bath.omega * a.rotation)
    return WeylElement(-a.phase, alpha, -a.rotation)


def thermal_occupations(bath: BathRef) -> np.ndarray:
    """Mean occupation nbar per mode at the bath temperature."""
    nbar = np.zeros(bath.n_modes)
    if bath.temperature > 0:
        pos = bath.omega > 0
        x = HBAR_MEV_PS * bath.omega[pos] / (KB_MEV_PER_K * bath.temperature)
        nbar[pos] = 1.0 / np.expm1(np.minimum(x, 700.0))
    return nbar


def thermal_expectation(a: WeylElement, bath: BathRef) -> complex:
    """Trace of a normal-form element against the thermal bath state.

    Requires the residual rotation to have cancelled (every well-formed
    trace word has equal forward and backward free evolution); a leftover
    rotation above ROTATION_TOL_PS raises.  The result always has modulus
    at most 1.
    """
    if a.n_modes != bath.n_modes:
        raise ValueError(f"mode-count mismatch: {a.n_modes} and bath {bath.n_modes}")
    if abs(a.rotation) >= ROTATION_TOL_PS:
        raise ValueError(
            f"residual free rotation {a.rotation:.3e} ps in a trace word; "
            "the expectation is only defined for fully cancelled rotations")
    nbar = thermal_occupations(bath)
    magnitude = float(np.exp(-np.sum(np.abs(a.alpha) ** 2 * (nbar + 0.5))))
    return cmath.exp(1j * a.phase) * magnitude


class WeylBackend:
    """Scheme-trace backend evaluating every cross trace in closed form.

    cross_trace(i, j, tau, t) returns
    Tr[w_0(t) w_i(tau) R(0) w_j(tau)^dag w_1(t)^dag] for the thermal initial
    bath state R(0); the free rotations cancel by construction, so the word
    always satisfies the trace precondition.
    """

    def __init__(self, bath: BathRef):
        self.bath = bath

    def cross_trace(self, i: int, j: int, tau: float, t: float) -> complex:
        if i not in (0, 1) or j not in (0, 1):
            raise ValueError(f"branch indices must be 0 or 1, got ({i!r}, {j!r})")
        b = self.bath
        word = compose(
            adjoint(conditional_evolution(j, tau, b), b),
            compose(
                adjoint(conditional_evolution(1, t, b), b),
                compose(conditional_evolution(0, t, b),
                        conditional_evolution(i, tau, b), b),
                b),
            b)
        return thermal_expectation(word, b)

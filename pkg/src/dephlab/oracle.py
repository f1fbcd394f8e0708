"""Dense-matrix reference backend for finite-dimensional environments.

Everything here treats the environment as a generic finite-dimensional
quantum system described by explicit matrices: a bare Hamiltonian, one
coupling operator per qubit branch, and an initial state.  The cross
traces of the measurement scheme are evaluated by exact diagonalization,
with no reference to the bosonic structure, which makes this backend an
independent check on the analytic Weyl-operator backend wherever the two
overlap (truncated number bases for bosonic baths) and the only backend
for arbitrary environments (random commuting or non-commuting models used
in the theorem checks).

The bridge from a bosonic bath to a dense environment is build_fock,
which truncates each mode's number basis so the neglected thermal weight
is below a target and adds headroom for the displacement the coupling
generates.
"""

from __future__ import annotations

import cmath
import math
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .params import HBAR_MEV_PS, bose_occupation

_HERM_TOL = 1e-10
_TRACE_TOL = 1e-12
_PSD_TOL = 1e-12
_OFFDIAG_TOL = 1e-14
_BRANCH_P_TOL = 1e-14


def _require_hermitian(m: np.ndarray, name: str) -> None:
    scale = max(1.0, float(np.abs(m).max()) if m.size else 0.0)
    dev = float(np.abs(m - m.conj().T).max())
    if dev > _HERM_TOL * scale:
        raise ValueError(f"{name} is not Hermitian (max deviation {dev:.3e})")


@dataclass(frozen=True)
class GenericEnvironment:
    """A finite-dimensional environment: bare Hamiltonian h_env (meV),
    branch couplings v0 and v1 (meV), and initial state rho0.

    The branch Hamiltonians are h_env + v0 and h_env + v1.  Validation
    enforces hermiticity, unit trace, and positive semidefiniteness of
    rho0 at construction so every downstream computation can assume a
    physical input.
    """

    h_env: np.ndarray
    v0: np.ndarray
    v1: np.ndarray
    rho0: np.ndarray

    def __post_init__(self):
        mats = {"h_env": self.h_env, "v0": self.v0, "v1": self.v1,
                "rho0": self.rho0}
        dim = None
        for name, m in mats.items():
            arr = np.asarray(m)
            if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
                raise ValueError(f"{name} must be a square matrix, got shape {arr.shape}")
            if not (np.all(np.isfinite(arr.real)) and np.all(np.isfinite(arr.imag))):
                raise ValueError(f"{name} contains non-finite entries")
            if dim is None:
                dim = arr.shape[0]
            elif arr.shape[0] != dim:
                raise ValueError(
                    f"{name} has dimension {arr.shape[0]}, expected {dim}")
            _require_hermitian(arr, name)
        tr = complex(np.trace(self.rho0))
        if abs(tr - 1.0) > _TRACE_TOL:
            raise ValueError(f"rho0 trace is {tr}, expected 1")
        diag = np.diag(self.rho0)
        offdiag_max = float(np.abs(self.rho0 - np.diag(diag)).max())
        if offdiag_max < _OFFDIAG_TOL:
            min_eig = float(np.min(diag.real))
        else:
            min_eig = float(np.min(np.linalg.eigvalsh(self.rho0)))
        if min_eig < -_PSD_TOL:
            raise ValueError(
                f"rho0 is not positive semidefinite (min eigenvalue {min_eig:.3e})")

    @property
    def dim(self) -> int:
        return self.h_env.shape[0]


class OracleBackend:
    """Exact-diagonalization evaluator of the scheme's cross traces.

    Both branch Hamiltonians are diagonalized once.  For each readout
    time t the four transfer matrices that carry the t dependence are
    assembled from the eigenbasis overlap (three matrix products) and
    cached, after which every cross trace at any delay tau is a
    quadratic-cost contraction against phase vectors.  The time cache is
    a small LRU so memory stays bounded for large environments.
    """

    def __init__(self, env: GenericEnvironment, t_cache_size: int = 4):
        self.env = env
        e0, u0 = np.linalg.eigh(env.h_env + env.v0)
        e1, u1 = np.linalg.eigh(env.h_env + env.v1)
        self._e = (e0, e1)
        self._u = (u0, u1)
        self._s01 = u0.conj().T @ u1          # branch-0 to branch-1 overlap
        rho_u0 = env.rho0 @ u0
        rho_u1 = env.rho0 @ u1
        p01 = u0.conj().T @ rho_u1
        self._p = {(0, 0): u0.conj().T @ rho_u0,
                   (0, 1): p01,
                   (1, 0): p01.conj().T,
                   (1, 1): u1.conj().T @ rho_u1}
        self._t_cache: OrderedDict[float, dict] = OrderedDict()
        self._t_cache_size = int(t_cache_size)
        self._prop_cache: OrderedDict[tuple, np.ndarray] = OrderedDict()
        self._lock = threading.Lock()

    @property
    def dim(self) -> int:
        return self.env.dim

    def propagator(self, branch: int, time: float) -> np.ndarray:
        """exp(-i (h_env + v_branch) time / hbar) via the eigenbasis."""
        if branch not in (0, 1):
            raise ValueError(f"branch must be 0 or 1, got {branch!r}")
        key = (branch, float(time))
        with self._lock:
            if key in self._prop_cache:
                self._prop_cache.move_to_end(key)
                return self._prop_cache[key]
        e, u = self._e[branch], self._u[branch]
        phases = np.exp(-1j * e * time / HBAR_MEV_PS)
        w = (u * phases) @ u.conj().T
        with self._lock:
            self._prop_cache[key] = w
            while len(self._prop_cache) > 8:
                self._prop_cache.popitem(last=False)
        return w

    def _transfer(self, t: float) -> dict:
        key = float(t)
        with self._lock:
            if key in self._t_cache:
                self._t_cache.move_to_end(key)
                return self._t_cache[key]
        e0, e1 = self._e
        # q = exp(+i e1 t) (.) S10 (.) exp(-i e0 t), elementwise in the
        # two eigenbases; S10 is the adjoint of the stored overlap
        ph1 = np.exp(1j * e1 * t / HBAR_MEV_PS)
        ph0 = np.exp(-1j * e0 * t / HBAR_MEV_PS)
        q = (ph1[:, None] * self._s01.conj().T) * ph0[None, :]
        q_s = q @ self._s01
        mats = {(0, 1): q,
                (0, 0): self._s01 @ q,
                (1, 1): q_s,
                (1, 0): self._s01 @ q_s}
        with self._lock:
            self._t_cache[key] = mats
            while len(self._t_cache) > self._t_cache_size:
                self._t_cache.popitem(last=False)
        return mats

    def cross_trace(self, i: int, j: int, tau: float, t: float) -> complex:
        """X_ij(tau, t) = Tr[w_j(tau)^dag w_1(t)^dag w_0(t) w_i(tau) rho0]."""
        if i not in (0, 1) or j not in (0, 1):
            raise ValueError(f"branch indices must be 0 or 1, got ({i!r}, {j!r})")
        if not (math.isfinite(tau) and math.isfinite(t)):
            raise ValueError(f"tau and t must be finite, got ({tau!r}, {t!r})")
        r = self._transfer(t)[(i, j)]
        p = self._p[(i, j)]
        ph_j = np.exp(1j * self._e[j] * tau / HBAR_MEV_PS)
        ph_i = np.exp(-1j * self._e[i] * tau / HBAR_MEV_PS)
        return complex(np.einsum("a,ad,d,da->", ph_j, r, ph_i, p, optimize=True))


def thermal_tail(n_bar: float, n_levels: int) -> float:
    """Probability weight of a thermal oscillator state above the first
    n_levels number states."""
    if n_levels < 0:
        raise ValueError(f"n_levels must be >= 0, got {n_levels!r}")
    if n_bar < 0:
        raise ValueError(f"n_bar must be >= 0, got {n_bar!r}")
    if n_bar == 0.0:
        return 0.0 if n_levels >= 1 else 1.0
    return (n_bar / (n_bar + 1.0)) ** n_levels


@dataclass(frozen=True)
class ModePlan:
    """Truncation bookkeeping for one bath mode."""

    omega: float
    r: float
    n_bar: float
    thermal_levels: int
    headroom: int
    n_levels: int
    skipped: bool


@dataclass(frozen=True)
class TruncationPlan:
    modes: tuple[ModePlan, ...]
    dim: int
    tail_target: float
    dim_cap: int

    @property
    def within_cap(self) -> bool:
        return self.dim <= self.dim_cap


def plan_truncation(bath, tail: float = 1e-10, dim_cap: int = 4096,
                    n_levels=None) -> TruncationPlan:
    """Decide per-mode number-basis sizes for a bosonic bath.

    Thermal levels are the fewest keeping the neglected thermal weight
    below the tail target; the headroom term covers the displacement
    amplitude (at most 2r per mode) the branch coupling can generate.
    Modes with zero frequency or zero coupling act as the identity in
    every cross trace and are dropped exactly.  n_levels (an int for all
    active modes, or a sequence with one entry per mode) overrides the
    automatic sizes.
    """
    ref = bath.as_ref() if hasattr(bath, "as_ref") else bath
    if not 0.0 < tail < 1.0:
        raise ValueError(
            f"truncation target unreachable: tail must be in (0, 1), got {tail!r}")
    plans = []
    dim = 1
    for omega, r in zip(ref.omega, ref.r):
        omega = float(omega)
        r = float(r)
        if omega <= 0.0 or r == 0.0:
            plans.append(ModePlan(omega=omega, r=r, n_bar=0.0, thermal_levels=0,
                                  headroom=0, n_levels=0, skipped=True))
            continue
        n_bar = bose_occupation(HBAR_MEV_PS * omega, ref.temperature)
        if n_bar == 0.0:
            thermal = 1
        else:
            thermal = max(1, math.ceil(math.log(tail) / math.log(n_bar / (n_bar + 1.0))))
        headroom = 12 + math.ceil(16.0 * r * r + 12.0 * r)
        size = thermal + headroom
        plans.append(ModePlan(omega=omega, r=r, n_bar=n_bar, thermal_levels=thermal,
                              headroom=headroom, n_levels=size, skipped=False))
        dim *= size
    plan = TruncationPlan(modes=tuple(plans), dim=dim, tail_target=tail,
                          dim_cap=dim_cap)
    if n_levels is not None:
        plan = _override_levels(plan, n_levels)
    return plan


def _override_levels(plan: TruncationPlan, n_levels) -> TruncationPlan:
    if np.isscalar(n_levels):
        sizes = [int(n_levels)] * len(plan.modes)
    else:
        sizes = [int(v) for v in n_levels]
        if len(sizes) != len(plan.modes):
            raise ValueError(
                f"n_levels needs one entry per mode: got {len(sizes)} "
                f"for {len(plan.modes)} modes")
    modes = []
    dim = 1
    for m, size in zip(plan.modes, sizes):
        if m.skipped:
            modes.append(m)
            continue
        if size < 1:
            raise ValueError(f"n_levels entries must be >= 1, got {size!r}")
        modes.append(ModePlan(omega=m.omega, r=m.r, n_bar=m.n_bar,
                              thermal_levels=m.thermal_levels,
                              headroom=m.headroom, n_levels=size,
                              skipped=False))
        dim *= size
    return TruncationPlan(modes=tuple(modes), dim=dim,
                          tail_target=plan.tail_target, dim_cap=plan.dim_cap)


def build_fock(bath, tail: float = 1e-10, dim_cap: int = 4096,
               n_levels=None) -> GenericEnvironment:
    """Assemble the dense environment for a bosonic bath in a truncated
    number basis: h_env = sum_k hbar omega_k n_k, v1 = sum_k f_k (b_k +
    b_k^dag) with f_k = r_k hbar omega_k, v0 = 0, and a renormalized
    thermal product state.

    n_levels overrides the automatic truncation plan: an int applies to
    every active mode, a sequence gives one size per bath mode (entries
    for zero-frequency or zero-coupling modes are ignored).
    """
    plan = plan_truncation(bath, tail=tail, dim_cap=dim_cap, n_levels=n_levels)
    if not plan.within_cap:
        raise ValueError(
            f"dimension cap exceeded: truncation needs dimension {plan.dim}, "
            f"cap is {plan.dim_cap}")
    active = [m for m in plan.modes if not m.skipped]
    dim = plan.dim
    h_diag = np.zeros(dim)
    rho_diag = np.ones(dim)
    v1 = np.zeros((dim, dim))
    left = 1
    dims = [m.n_levels for m in active]
    for pos, m in enumerate(active):
        n = np.arange(m.n_levels, dtype=float)
        h_mode = HBAR_MEV_PS * m.omega * n
        x_mode = np.zeros((m.n_levels, m.n_levels))
        root = np.sqrt(n[1:])
        x_mode[np.arange(m.n_levels - 1), np.arange(1, m.n_levels)] = root
        x_mode[np.arange(1, m.n_levels), np.arange(m.n_levels - 1)] = root
        if m.n_bar == 0.0:
            pop = np.zeros(m.n_levels)
            pop[0] = 1.0
        else:
            q = m.n_bar / (m.n_bar + 1.0)
            pop = q ** n
            pop /= pop.sum()
        right = int(np.prod(dims[pos + 1:], dtype=np.int64)) if pos + 1 < len(dims) else 1
        eye_l = np.ones(left)
        eye_r = np.ones(right)
        h_diag += np.kron(np.kron(eye_l, h_mode), eye_r)
        rho_diag *= np.kron(np.kron(eye_l, pop), eye_r)
        f = m.r * HBAR_MEV_PS * m.omega
        v1 += np.kron(np.kron(np.eye(left), f * x_mode), np.eye(right))
        left *= m.n_levels
    rho_diag /= rho_diag.sum()
    return GenericEnvironment(h_env=np.diag(h_diag).astype(complex),
                              v0=np.zeros((dim, dim), dtype=complex),
                              v1=v1.astype(complex),
                              rho0=np.diag(rho_diag).astype(complex))


def propagators(env: GenericEnvironment, t: float):
    """The pair of conditional environment propagators (w_0(t), w_1(t))."""
    backend = OracleBackend(env)
    return backend.propagator(0, t), backend.propagator(1, t)


def _comm_norm(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a @ b - b @ a).max())


class CommutationNorms(NamedTuple):
    evol: float
    state0: float
    state1: float


def commutation_norms(env: GenericEnvironment, t: float, t_prime: float,
                      backend: OracleBackend | None = None) -> CommutationNorms:
    """Max-abs norms of the commutators that decide which gain theorem
    applies: [w_0(t), w_1(t')] for the commuting-evolution case and
    [w_i, rho0] for the state-commuting case."""
    if backend is None:
        backend = OracleBackend(env)
    w0 = backend.propagator(0, t)
    w1 = backend.propagator(1, t_prime)
    return CommutationNorms(evol=_comm_norm(w0, w1),
                            state0=_comm_norm(w0, env.rho0),
                            state1=_comm_norm(w1, env.rho0))


def separability_norm(env: GenericEnvironment, tau: float,
                      backend: OracleBackend | None = None) -> float:
    """Max-abs norm of [rho0, w_0(tau)^dag w_1(tau)].

    When this vanishes the post-measurement environment state on each
    branch stays diagonal in the same basis as rho0, which is the
    separability mechanism behind the state-commuting gain theorem.
    """
    if backend is None:
        backend = OracleBackend(env)
    w0 = backend.propagator(0, tau)
    w1 = backend.propagator(1, tau)
    return _comm_norm(env.rho0, w0.conj().T @ w1)


def _haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = (rng.standard_normal((dim, dim))
         + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = r.diagonal()
    return q * (d / np.abs(d))


def _random_full_rank_state(rng: np.random.Generator, dim: int) -> np.ndarray:
    m = (rng.standard_normal((dim, dim))
         + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2.0)
    rho = m @ m.conj().T + 1e-6 * np.eye(dim)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def _random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return 0.5 * (z + z.conj().T)


def random_commuting_env(rng: np.random.Generator, dim: int) -> GenericEnvironment:
    """Environment whose bare Hamiltonian and both couplings share one
    eigenbasis (so the branch Hamiltonians commute) but whose initial
    state is a generic full-rank density matrix."""
    u = _haar_unitary(rng, dim)

    def _diag(values):
        m = (u * values) @ u.conj().T
        return 0.5 * (m + m.conj().T)

    return GenericEnvironment(
        h_env=_diag(rng.standard_normal(dim)),
        v0=_diag(rng.standard_normal(dim)),
        v1=_diag(rng.standard_normal(dim)),
        rho0=_random_full_rank_state(rng, dim))


def random_state_commuting_env(rng: np.random.Generator, dim: int) -> GenericEnvironment:
    """Fully non-commuting branch Hamiltonians with the maximally mixed
    initial state, which commutes with everything."""
    return GenericEnvironment(
        h_env=_random_hermitian(rng, dim),
        v0=_random_hermitian(rng, dim),
        v1=_random_hermitian(rng, dim),
        rho0=np.eye(dim, dtype=complex) / dim)


def random_generic_env(rng: np.random.Generator, dim: int) -> GenericEnvironment:
    """No commutation structure at all: the regime where the averaged
    gain can go negative."""
    return GenericEnvironment(
        h_env=_random_hermitian(rng, dim),
        v0=_random_hermitian(rng, dim),
        v1=_random_hermitian(rng, dim),
        rho0=_random_full_rank_state(rng, dim))


@dataclass(frozen=True)
class JointState:
    """Results of the explicit qubit-plus-environment simulation of one
    scheme run, next to the trace-formula values it must reproduce."""

    p_plus: float
    p_minus: float
    d_plus: float
    d_minus: float
    rho01_plus: complex
    rho01_minus: complex
    p_deviation: float
    d_deviation: float
    plus_flag: bool
    minus_flag: bool


def joint_evolution_validate(env: GenericEnvironment, delta_eps_mev: float,
                             tau: float, t: float,
                             alpha: complex, beta: complex,
                             backend: OracleBackend | None = None) -> JointState:
    """Simulate the scheme end to end on the joint qubit-environment
    system and compare against the cross-trace formulas.

    The probe qubit starts in the equal superposition, accumulates the
    splitting phase during the delay, and is measured in the fixed
    symmetric basis; the conditioned environment then dephases a fresh
    qubit prepared with amplitudes (alpha, beta).  The reported
    deviations are the largest mismatches in branch probabilities and
    conditioned envelopes against scheme_point on the same backend.
    """
    norm = math.hypot(abs(alpha), abs(beta))
    if norm == 0.0:
        raise ValueError("qubit amplitudes must not both vanish")
    alpha = complex(alpha) / norm
    beta = complex(beta) / norm
    if abs(alpha * beta) < 1e-12:
        raise ValueError("readout coherence needs both amplitudes nonzero")
    if backend is None:
        backend = OracleBackend(env)

    w0_tau = backend.propagator(0, tau)
    w1_tau = backend.propagator(1, tau)
    rho = env.rho0
    r00 = w0_tau @ rho @ w0_tau.conj().T
    r01 = w0_tau @ rho @ w1_tau.conj().T
    r11 = w1_tau @ rho @ w1_tau.conj().T
    phase = cmath.exp(-1j * delta_eps_mev * tau / HBAR_MEV_PS)
    cross = phase * r01 + (phase * r01).conj().T
    num_plus = 0.25 * (r00 + r11 + cross)
    num_minus = 0.25 * (r00 + r11 - cross)
    p_plus = float(np.trace(num_plus).real)
    p_minus = float(np.trace(num_minus).real)

    w0_t = backend.propagator(0, t)
    w1_t = backend.propagator(1, t)
    readout_phase = alpha * beta.conjugate() * cmath.exp(
        -1j * delta_eps_mev * t / HBAR_MEV_PS)

    def _branch(num, p):
        if p < _BRANCH_P_TOL:
            return 0.0j, 0.0, True
        sigma = num / p
        rho01 = readout_phase * complex(np.trace(w0_t @ sigma @ w1_t.conj().T))
        return rho01, abs(rho01) / abs(alpha * beta.conjugate()), False

    rho01_plus, d_plus, plus_flag = _branch(num_plus, p_plus)
    rho01_minus, d_minus, minus_flag = _branch(num_minus, p_minus)

    from .scheme import scheme_point
    sp = scheme_point(backend, delta_eps_mev, tau, t)
    p_dev = max(abs(p_plus - sp.p_plus), abs(p_minus - sp.p_minus))
    d_devs = []
    if not plus_flag and not sp.plus_flag:
        d_devs.append(abs(d_plus - sp.d_plus))
    if not minus_flag and not sp.minus_flag:
        d_devs.append(abs(d_minus - sp.d_minus))
    d_dev = max(d_devs) if d_devs else 0.0

    return JointState(p_plus=p_plus, p_minus=p_minus,
                      d_plus=d_plus, d_minus=d_minus,
                      rho01_plus=rho01_plus, rho01_minus=rho01_minus,
                      p_deviation=p_dev, d_deviation=d_dev,
                      plus_flag=plus_flag, minus_flag=minus_flag)

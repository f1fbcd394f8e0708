"""Exact numerics for measurement-based control of qubit pure dephasing.

A qubit coupled to a bosonic environment through a pure-dephasing
interaction is probed once: after a delay the qubit is measured in the
symmetric basis, which conditions the environment, and a freshly prepared
qubit then dephases against that conditioned environment.  This package
computes the resulting branch probabilities, conditioned coherence
envelopes, and coherence gains exactly with a Weyl-operator algebra,
validates them against a dense exact-diagonalization backend for generic
finite-dimensional environments, and ships a CSV pipeline for the
standard figures.
"""

from .bath import (BathSpec, Mode, bath_from_string, coupling_prefactor,
                   discretize_19, grid_bath, quadrature_bath, spectral_G,
                   spectral_argmax, subset_rescaled, total_coupling_weight)
from .oracle import (CommutationNorms, GenericEnvironment, JointState,
                     OracleBackend, build_fock, commutation_norms,
                     joint_evolution_validate, plan_truncation, propagators,
                     random_commuting_env, random_generic_env,
                     random_state_commuting_env, separability_norm,
                     thermal_tail)
from .params import (HBAR_MEV_PS, KB_MEV_PER_K, ConfigError, MaterialParams,
                     SchemeConfig, bose_occupation, load_config)
from .scheme import (ConditionsReport, EnvelopeResult, SchemePoint,
                     SchemeTraces, coherence_vs_t, envelope_conditions_check,
                     envelopes, free_coherence, gather_traces, scheme_point,
                     special_tau, standard_coherence)
from .weyl import (BathRef, WeylBackend, WeylElement, adjoint, compose,
                   conditional_evolution, identity, thermal_expectation,
                   thermal_occupations)

__version__ = "0.1.0"

__all__ = [
    "BathRef", "BathSpec", "CommutationNorms", "ConditionsReport",
    "ConfigError", "EnvelopeResult", "GenericEnvironment", "HBAR_MEV_PS",
    "JointState", "KB_MEV_PER_K", "MaterialParams", "Mode", "OracleBackend",
    "SchemeConfig", "SchemePoint", "SchemeTraces", "WeylBackend",
    "WeylElement", "adjoint", "bath_from_string", "bose_occupation",
    "build_fock", "coherence_vs_t", "commutation_norms", "compose",
    "conditional_evolution", "coupling_prefactor", "discretize_19",
    "envelope_conditions_check", "envelopes", "free_coherence",
    "gather_traces", "grid_bath", "identity", "joint_evolution_validate",
    "load_config", "plan_truncation", "propagators", "quadrature_bath",
    "random_commuting_env", "random_generic_env",
    "random_state_commuting_env", "scheme_point", "separability_norm",
    "special_tau", "spectral_G", "spectral_argmax", "standard_coherence",
    "subset_rescaled", "thermal_expectation", "thermal_occupations",
    "thermal_tail", "total_coupling_weight",
]

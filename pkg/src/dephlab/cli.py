"""Command line interface: CSV tables and JSON run manifests.

Five subcommands cover the standard figures and checks:

* ``gk`` tabulates the coupling density G(k) and the 19-mode grid.
* ``gain-tau`` sweeps the measurement delay at a fixed readout time,
  either as phase envelopes or as the physical phase oscillation.
* ``coherence-t`` sweeps the readout time at delays picked to maximize,
  minimize, or balance the branch probabilities.
* ``oracle-compare`` cross-checks the analytic backend against the dense
  exact-diagonalization backend on a small bath.
* ``theorem-check`` probes the sign of the averaged gain envelope on
  random finite-dimensional environments.

Every command writes CSV files with a header row and 17-significant-digit
scientific notation, so repeated runs are byte-identical, plus a manifest
JSON recording the argument vector, the resolved configuration, output
hashes, and a small numeric report.  Exit status is 0 on success, 1 for
usage or I/O errors, and 2 for validation or tolerance failures.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bath import (bath_from_string, coupling_prefactor, discretize_19,
                   grid_bath, spectral_G, spectral_argmax, subset_rescaled,
                   total_coupling_weight)
from .oracle import OracleBackend, build_fock, plan_truncation
from .params import ConfigError, SchemeConfig, load_config
from .scheme import coherence_vs_t, envelopes, scheme_point, special_tau
from .weyl import WeylBackend

ORACLE_AGREEMENT_TOL = 1e-8
THEOREM_NONNEG_TOL = -1e-10
GENERIC_NEGATIVITY_TARGET = -1e-4
# Oscillation sweeps must resolve the phase 2*pi*tau/(splitting period);
# at least 40 samples per period keeps the printed curves honest.
OSCILLATION_PHASE_STEP = math.pi / 20.0


class UsageError(Exception):
    """Bad command line or sweep request; maps to exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _workers() -> int:
    raw = os.environ.get("DEPHLAB_WORKERS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"DEPHLAB_WORKERS must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"DEPHLAB_WORKERS must be >= 1, got {n}")
    return n


def _map(fn, items):
    """Order-preserving map, threaded when DEPHLAB_WORKERS asks for it."""
    items = list(items)
    n = _workers()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".16e")


def _write_csv(path: Path, header, rows) -> int:
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")
            count += 1
    return count


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _config_dict(cfg: SchemeConfig | None):
    if cfg is None:
        return None
    m = cfg.material
    return {"sigma_diff_ev": m.sigma_diff_ev, "rho_kg_m3": m.rho_kg_m3,
            "c_m_s": m.c_m_s, "l_perp_nm": m.l_perp_nm, "l_z_nm": m.l_z_nm,
            "delta_eps_ev": m.delta_eps_ev, "temperature_k": cfg.temperature_k,
            "backend": cfg.backend, "bath": cfg.bath,
            "envelope_points": cfg.envelope_points}


def _write_manifest(out_dir: Path, command: str, argv, cfg, outputs, report) -> Path:
    manifest = {
        "command": command,
        "argv": list(argv),
        "version": __version__,
        "generated_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": _config_dict(cfg),
        "outputs": [{"path": p.name, "bytes": p.stat().st_size,
                     "sha256": _sha256(p)} for p in outputs],
        "report": report,
    }
    path = out_dir / f"{command.replace('-', '_')}_manifest.json"
    with open(path, "w", encoding="utf-8", newline="") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load(args) -> SchemeConfig:
    return load_config(getattr(args, "config", None))


def _make_backend(cfg: SchemeConfig):
    spec = bath_from_string(cfg.bath, cfg.material, cfg.temperature_k)
    if cfg.backend == "weyl":
        return WeylBackend(spec.as_ref()), spec
    backend = OracleBackend(build_fock(spec))
    return backend, spec


def _cmd_gk(args, argv) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    material = cfg.material
    k_star = spectral_argmax(material)
    k_max = args.k_max if args.k_max is not None else 4.0 * k_star
    if not k_max > 0:
        raise UsageError(f"--k-max must be > 0, got {k_max}")
    if args.n_points < 2:
        raise UsageError(f"--n-points must be >= 2, got {args.n_points}")

    if args.discretize < 1:
        raise UsageError(f"--discretize must be >= 1, got {args.discretize}")

    ks = np.linspace(0.0, k_max, args.n_points)
    gs = spectral_G(ks, material)
    gk_path = out / "gk.csv"
    _write_csv(gk_path, ["k_nm_inv", "G_nm"], zip(ks, gs))

    spec = grid_bath(material, cfg.temperature_k, args.discretize)
    modes_path = out / "modes.csv"
    _write_csv(modes_path, ["i", "k_nm_inv", "omega_rad_ps", "H_i"],
               ((i, m.k, m.omega, m.weight) for i, m in enumerate(spec.modes)))

    h_sum = spec.total_weight
    report = {
        "prefactor_nm2": coupling_prefactor(material),
        "argmax_nm_inv": k_star,
        "dk_nm_inv": (2.0 / 3.0) * k_star,
        "g_at_argmax_nm": spectral_G(k_star, material),
        "n_modes": spec.n_modes,
        "h_integral": spec.h_total,
        "h_sum_grid": h_sum,
        "ratio_integral_over_sum": spec.h_total / h_sum,
    }
    _write_manifest(out, "gk", argv, cfg, [gk_path, modes_path], report)
    print(f"wrote {gk_path} ({args.n_points} rows) and {modes_path} "
          f"({spec.n_modes} rows)")
    print(f"argmax {k_star:.6f} 1/nm, grid spacing {report['dk_nm_inv']:.6f} 1/nm, "
          f"integral/sum ratio {report['ratio_integral_over_sum']:.6f}")
    return 0


_ENVELOPE_COLUMNS = ["tau_ps", "d_av_min", "d_av_max", "g_av_min", "g_av_max",
                     "g_norm_min", "g_norm_max", "d_plus_min", "d_plus_max",
                     "d_minus_min", "d_minus_max", "theta_at_min", "theta_at_max"]
_OSCILLATION_COLUMNS = ["tau_ps", "p_plus", "p_minus", "coherence", "d_plus",
                        "d_minus", "g_plus", "g_minus", "g_av", "g_norm",
                        "plus_flag", "minus_flag", "norm_flag"]


def _cmd_gain_tau(args, argv) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    if args.n_tau < 2:
        raise UsageError(f"--n-tau must be >= 2, got {args.n_tau}")
    if not args.tau_max > args.tau_min >= 0:
        raise UsageError("need 0 <= --tau-min < --tau-max")
    if args.t < 0:
        raise UsageError(f"--t must be >= 0, got {args.t}")
    taus = np.linspace(args.tau_min, args.tau_max, args.n_tau)

    backend, spec = _make_backend(cfg)
    delta = cfg.material.delta_eps_mev
    report: dict = {"mode": args.mode, "t_ps": args.t, "n_tau": args.n_tau,
                    "tau_min_ps": args.tau_min, "tau_max_ps": args.tau_max,
                    "bath_modes": spec.n_modes, "backend": cfg.backend}

    if args.mode == "oscillation":
        step = (args.tau_max - args.tau_min) / (args.n_tau - 1)
        from .params import HBAR_MEV_PS
        max_step = OSCILLATION_PHASE_STEP * HBAR_MEV_PS / delta
        if step > max_step * (1.0 + 1e-12):
            need = math.ceil((args.tau_max - args.tau_min) / max_step) + 1
            raise UsageError(
                f"oscillation mode needs a delay step <= {max_step:.6e} ps to "
                f"resolve the splitting phase; use --n-tau >= {need}")
        points = _map(lambda tau: scheme_point(backend, delta, float(tau), args.t), taus)
        rows = [(p.tau, p.p_plus, p.p_minus, p.coherence, p.d_plus, p.d_minus,
                 p.g_plus, p.g_minus, p.g_av, p.g_norm,
                 p.plus_flag, p.minus_flag, p.norm_flag) for p in points]
        columns = _OSCILLATION_COLUMNS
        g_min = min(p.g_av for p in points)
        report.update({
            "g_av_min": g_min,
            "tau_at_g_av_min": points[int(np.argmin([p.g_av for p in points]))].tau,
            "n_flagged": int(sum(p.plus_flag or p.minus_flag for p in points)),
        })
    else:
        n_theta = cfg.envelope_points
        results = _map(lambda tau: envelopes(backend, float(tau), args.t,
                                             n_theta=n_theta), taus)
        rows = [(r.tau, r.d_av_min, r.d_av_max, r.g_av_min, r.g_av_max,
                 r.g_norm_min, r.g_norm_max, r.d_plus_min, r.d_plus_max,
                 r.d_minus_min, r.d_minus_max, r.theta_at_min, r.theta_at_max)
                for r in results]
        columns = _ENVELOPE_COLUMNS
        g_mins = [r.g_av_min for r in results]
        report.update({
            "n_theta": n_theta,
            "g_av_envelope_min": float(min(g_mins)),
            "tau_at_envelope_min": float(taus[int(np.argmin(g_mins))]),
            "sandwich_violation_max": float(max(r.sandwich_violation for r in results)),
            "n_flagged_angles": int(sum(r.n_flagged_plus + r.n_flagged_minus
                                        for r in results)),
        })

    path = out / "gain_tau.csv"
    n = _write_csv(path, columns, rows)
    _write_manifest(out, "gain-tau", argv, cfg, [path], report)
    print(f"wrote {path} ({n} rows, {args.mode} mode, t = {args.t} ps)")
    return 0


def _cmd_coherence_t(args, argv) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    if not kinds:
        raise UsageError("--kinds must name at least one of max, min, equal")
    for kind in kinds:
        if kind not in ("max", "min", "equal"):
            raise UsageError(f"unknown kind {kind!r}; expected max, min, or equal")
    if args.n_t < 2:
        raise UsageError(f"--n-t must be >= 2, got {args.n_t}")
    if not args.t_max > args.t_min >= 0:
        raise UsageError("need 0 <= --t-min < --t-max")
    if args.tau_target < 0:
        raise UsageError(f"--tau-target must be >= 0, got {args.tau_target}")

    backend, spec = _make_backend(cfg)
    delta = cfg.material.delta_eps_mev
    times = np.linspace(args.t_min, args.t_max, args.n_t)

    outputs = []
    resolved = {}
    for kind in kinds:
        tau = special_tau(delta, args.tau_target, kind)
        resolved[kind] = tau
        points = coherence_vs_t(backend, delta, tau, times)
        path = out / f"coherence_{kind}.csv"
        _write_csv(path, ["t_ps", "coherence", "d_plus", "d_minus"],
                   ((p.t, p.coherence, p.d_plus, p.d_minus) for p in points))
        outputs.append(path)

    report = {"tau_target_ps": args.tau_target,
              "resolved_tau_ps": resolved,
              "t_min_ps": args.t_min, "t_max_ps": args.t_max, "n_t": args.n_t,
              "bath_modes": spec.n_modes, "backend": cfg.backend}
    _write_manifest(out, "coherence-t", argv, cfg, outputs, report)
    for kind in kinds:
        print(f"kind {kind}: tau = {resolved[kind]:.9f} ps "
              f"-> coherence_{kind}.csv ({args.n_t} rows)")
    return 0


def _cmd_oracle_compare(args, argv) -> int:
    cfg = _load(args)
    out = _out_dir(args)
    try:
        indices = [int(tok) for tok in args.indices.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"--indices must be a comma list of integers, "
                         f"got {args.indices!r}") from None
    if not indices:
        raise UsageError("--indices must name at least one mode")
    if len(indices) > 2:
        raise UsageError("the dense backend comparison supports at most 2 modes")
    if args.n_tau < 2:
        raise UsageError(f"--n-tau must be >= 2, got {args.n_tau}")
    if not args.tau_max > 0:
        raise UsageError(f"--tau-max must be > 0, got {args.tau_max}")

    grid = discretize_19(cfg.material, cfg.temperature_k)
    spec = subset_rescaled(grid, indices)
    plan = plan_truncation(spec, tail=args.tail, dim_cap=args.dim_cap,
                           n_levels=args.n_levels)
    for m in plan.modes:
        if m.skipped:
            print(f"mode omega={m.omega:.6f} rad/ps: decoupled, dropped exactly")
        else:
            print(f"mode omega={m.omega:.6f} rad/ps: n_bar={m.n_bar:.4f}, "
                  f"{m.thermal_levels} thermal levels + {m.headroom} headroom "
                  f"-> {m.n_levels} kept")
    print(f"dense dimension {plan.dim} (cap {plan.dim_cap})")

    env = build_fock(spec, tail=args.tail, dim_cap=args.dim_cap,
                     n_levels=args.n_levels)
    dense = OracleBackend(env)
    analytic = WeylBackend(spec.as_ref())

    taus = np.linspace(0.0, args.tau_max, args.n_tau)
    rows = []
    worst = 0.0
    for tau in taus:
        devs = [abs(analytic.cross_trace(i, j, float(tau), args.t)
                    - dense.cross_trace(i, j, float(tau), args.t))
                for i, j in ((0, 0), (0, 1), (1, 0), (1, 1))]
        dev_free = abs(analytic.cross_trace(0, 1, float(tau), 0.0)
                       - dense.cross_trace(0, 1, float(tau), 0.0))
        dev_max = max(max(devs), dev_free)
        worst = max(worst, dev_max)
        rows.append((tau, args.t, *devs, dev_free, dev_max))

    path = out / "oracle_compare.csv"
    _write_csv(path, ["tau_ps", "t_ps", "dev_x00", "dev_x01", "dev_x10",
                      "dev_x11", "dev_free", "dev_max"], rows)
    passed = worst <= ORACLE_AGREEMENT_TOL
    report = {"indices": indices, "dim": plan.dim, "tail_target": args.tail,
              "n_levels_override": args.n_levels,
              "t_ps": args.t, "tau_max_ps": args.tau_max, "n_tau": args.n_tau,
              "max_deviation": worst, "tolerance": ORACLE_AGREEMENT_TOL,
              "passed": passed,
              "modes": [{"omega_rad_ps": m.omega, "r": m.r, "n_bar": m.n_bar,
                         "n_levels": m.n_levels} for m in plan.modes]}
    _write_manifest(out, "oracle-compare", argv, cfg, [path], report)
    print(f"max |analytic - dense| deviation: {worst:.3e} "
          f"(tolerance {ORACLE_AGREEMENT_TOL:.1e})")
    if not passed:
        print("backend comparison FAILED", file=sys.stderr)
        return 2
    print("backend comparison passed")
    return 0


def _cmd_theorem_check(args, argv) -> int:
    from .oracle import (commutation_norms, random_commuting_env,
                         random_generic_env, random_state_commuting_env,
                         separability_norm)

    out = _out_dir(args)
    if args.n_envs < 1:
        raise UsageError(f"--n-envs must be >= 1, got {args.n_envs}")
    if args.dim < 2:
        raise UsageError(f"--dim must be >= 2, got {args.dim}")
    if args.grid < 2:
        raise UsageError(f"--grid must be >= 2, got {args.grid}")
    makers = {"commuting": random_commuting_env,
              "state-commuting": random_state_commuting_env,
              "generic": random_generic_env}
    maker = makers[args.env_class]
    rng = np.random.default_rng(args.seed)
    taus = np.linspace(0.0, args.tau_max, args.grid)
    times = np.linspace(0.0, args.t_max, args.grid)

    def _check_one(env):
        backend = OracleBackend(env)
        worst = math.inf
        worst_at = (0.0, 0.0, 0.0)
        for tau in taus:
            for t in times:
                r = envelopes(backend, float(tau), float(t), n_theta=args.n_theta)
                if r.g_av_min < worst:
                    worst = r.g_av_min
                    worst_at = (float(tau), float(t), r.theta_at_min)
        return backend, worst, worst_at

    rows = []
    global_min = math.inf
    for index in range(args.n_envs):
        env = maker(rng, args.dim)
        backend, worst, worst_at = _check_one(env)
        norms = commutation_norms(env, args.t_max, args.tau_max, backend=backend)
        sep = separability_norm(env, args.tau_max, backend=backend)
        global_min = min(global_min, worst)
        rows.append((index, worst, worst_at[0], worst_at[1], worst_at[2],
                     norms.evol, norms.state0, norms.state1, sep))
        print(f"env {index}: min envelope gain {worst:+.6e} "
              f"at tau={worst_at[0]:.3f}, t={worst_at[1]:.3f}, "
              f"theta={worst_at[2]:.3f}")

    path = out / "theorem_check.csv"
    _write_csv(path, ["env", "g_av_envelope_min", "tau_at_min", "t_at_min",
                      "theta_at_min", "comm_evol", "comm_state0",
                      "comm_state1", "separability"], rows)
    if args.env_class == "generic":
        passed = global_min < GENERIC_NEGATIVITY_TARGET
        verdict = (f"found negative averaged gain {global_min:+.3e}" if passed
                   else f"no gain below {GENERIC_NEGATIVITY_TARGET:.1e} found "
                        f"(min {global_min:+.3e})")
    else:
        passed = global_min >= THEOREM_NONNEG_TOL
        verdict = (f"averaged gain envelope nonnegative (min {global_min:+.3e})"
                   if passed else
                   f"averaged gain envelope went negative: {global_min:+.3e}")

    report = {"env_class": args.env_class, "n_envs": args.n_envs,
              "dim": args.dim, "seed": args.seed, "grid": args.grid,
              "n_theta": args.n_theta, "tau_max_ps": args.tau_max,
              "t_max_ps": args.t_max, "g_av_envelope_min": global_min,
              "passed": passed}
    _write_manifest(out, "theorem-check", argv, None, [path], report)
    print(verdict)
    return 0 if passed else 2


def _add_common(p: argparse.ArgumentParser, config: bool = True) -> None:
    if config:
        p.add_argument("--config", default=None,
                       help="path to a key = value configuration file")
    p.add_argument("--out", default=".", help="output directory (default: .)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dephlab",
                     description="Exact numerics for measurement-based "
                                 "control of qubit pure dephasing.")
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gk", help="tabulate the coupling density and mode grid")
    _add_common(p)
    p.add_argument("--k-max", type=float, default=None,
                   help="upper wave number for the density table (1/nm; "
                        "default: 4x the density maximum)")
    p.add_argument("--n-points", type=int, default=400)
    p.add_argument("--discretize", type=int, default=19,
                   help="number of uniformly spaced modes for modes.csv")
    p.set_defaults(func=_cmd_gk)

    p = sub.add_parser("gain-tau", help="sweep the measurement delay")
    _add_common(p)
    p.add_argument("--mode", choices=("envelope", "oscillation"),
                   default="envelope")
    p.add_argument("--t", type=float, default=20.0,
                   help="readout time after the measurement (ps)")
    p.add_argument("--tau-min", type=float, default=0.0)
    p.add_argument("--tau-max", type=float, default=1.0)
    p.add_argument("--n-tau", type=int, default=201)
    p.set_defaults(func=_cmd_gain_tau)

    p = sub.add_parser("coherence-t", help="sweep the readout time at "
                                           "special measurement delays")
    _add_common(p)
    p.add_argument("--tau-target", type=float, default=0.1,
                   help="pick delays nearest this value (ps)")
    p.add_argument("--kinds", default="max,min,equal",
                   help="comma list out of max, min, equal")
    p.add_argument("--t-min", type=float, default=0.0)
    p.add_argument("--t-max", type=float, default=20.0)
    p.add_argument("--n-t", type=int, default=201)
    p.set_defaults(func=_cmd_coherence_t)

    p = sub.add_parser("oracle-compare", help="check the analytic backend "
                                              "against dense diagonalization")
    _add_common(p)
    p.add_argument("--indices", default="3,6",
                   help="comma list of 19-mode grid indices (at most 2)")
    p.add_argument("--tau-max", type=float, default=2.0)
    p.add_argument("--n-tau", type=int, default=8)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--tail", type=float, default=1e-10,
                   help="neglected thermal weight per mode")
    p.add_argument("--dim-cap", type=int, default=4096)
    p.add_argument("--n-levels", type=int, default=None,
                   help="override the truncation plan with this many "
                        "number-basis levels per mode")
    p.set_defaults(func=_cmd_oracle_compare)

    p = sub.add_parser("theorem-check", help="probe the averaged-gain sign "
                                             "on random environments")
    _add_common(p, config=False)
    p.add_argument("--env-class", choices=("commuting", "state-commuting",
                                           "generic"), default="commuting")
    p.add_argument("--n-envs", type=int, default=10)
    p.add_argument("--dim", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=6)
    p.add_argument("--n-theta", type=int, default=512)
    p.add_argument("--tau-max", type=float, default=2.0)
    p.add_argument("--t-max", type=float, default=2.0)
    p.set_defaults(func=_cmd_theorem_check)

    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

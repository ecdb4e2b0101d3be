"""Command-line front end: ``nclsim <command> [options]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure
(stiffness, or truncation under ``--strict``), 4 selftest failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .designer import (
    OBJECTIVES,
    design_provenance,
    evaluate,
    input_phase,
    optimize_amplitude,
    profile_for_target,
    sweep_amplitude,
    target_coherence,
    target_n_max,
)
from .elimination import NAMED_OPS, kerr_expansion, verify_reduction
from .evolution import EvolutionSettings, evolve_bands, evolve_matrix
from .fock import TruncationWarning, coherent_density_matrix, default_n_max, parse_target
from .formats import (
    FormatError,
    density_matrix_csv,
    density_matrix_rows,
    diagnostics_csv,
    elimination_csv,
    load_expansion,
    load_profile,
    metric_sweep_csv,
    profile_to_dict,
    provenance,
    sweep_csv,
    trajectory_csv,
)
from .rk import StiffnessError
from .stationary import stationary_matrix

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_SELFTEST = 4

# options that only choose where output goes; they do not enter the config hash
_OUTPUT_KEYS = {"out", "diagnostics", "func"}


class ConfigError(Exception):
    pass


class NumericalFailure(Exception):
    pass


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _OUTPUT_KEYS}


def _emit(text: str, path) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _plain(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _json(payload: dict, args) -> str:
    body = {"provenance": provenance(_config(args))}
    body.update(payload)
    return json.dumps(body, indent=2, default=_plain) + "\n"


def _alpha(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError:
        raise ConfigError(f"cannot parse amplitude {text!r}") from None


def _target(args):
    if args.target is None:
        return None
    try:
        return parse_target(args.target)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _profile_and_n_max(args, r: float):
    """Resolve ``--profile``/``--target`` and ``--n-max``; check the cutoff covers the target."""
    target = _target(args)
    if (target is None) == (getattr(args, "profile", None) is None):
        raise ConfigError("give exactly one of --target or --profile")
    n_max = args.n_max
    if target is not None:
        if n_max is None:
            n_max = target_n_max(target, r)
        if n_max < target.reach:
            raise ConfigError(f"--n-max {n_max} below the reach {target.reach} of {args.target}")
        try:
            return target, profile_for_target(target, n_max), n_max
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    path = Path(args.profile)
    if not path.exists():
        raise ConfigError(f"profile file {path} does not exist")
    profile = load_profile(path)
    return None, profile, n_max if n_max is not None else default_n_max(r)


def _lower(rho) -> list:
    return [[n, m, float(v.real), float(v.imag)] for n, m, v in density_matrix_rows(rho)]


# -- commands ----------------------------------------------------------------


def cmd_simulate(args) -> int:
    alpha = _alpha(args.alpha)
    target, profile, n_max = _profile_and_n_max(args, abs(alpha))
    if target is not None and args.alpha_phase_from_target:
        alpha = abs(alpha) * np.exp(1j * input_phase(target))
    rho0 = coherent_density_matrix(alpha, n_max)
    settings = EvolutionSettings(
        gamma=args.gamma,
        t_end=args.t,
        rel_tol=args.rel_tol,
        abs_tol=args.abs_tol,
        snapshot_times=tuple(args.snapshots or ()),
    )
    phase = float(np.angle(alpha))
    if args.mode == "band":
        trajs = evolve_bands(profile, rho0, settings, alpha_phase=phase)
        main = trajs
    else:
        main = [evolve_matrix(profile, rho0, settings, alpha_phase=phase)]
    if args.diagnostics:
        _emit(diagnostics_csv(main[0], _config(args)), args.diagnostics)
    if args.format == "csv":
        chunks = [trajectory_csv(main[0], _config(args))]
        chunks += [trajectory_csv(tr).split("\n", 1)[1] for tr in main[1:]]
        _emit("".join(chunks), args.out)
        return EXIT_OK
    if args.mode == "band":
        final = {str(tr.offset): [float(x) for x in np.real(tr.final)] for tr in main}
        diag = {"min_xi": float(min(np.min(tr.min_xi) for tr in main))}
    else:
        tr = main[0]
        final = _lower(tr.final)
        diag = {
            "trace_error": float(np.max(tr.trace_error)),
            "min_xi": float(np.min(tr.min_xi)),
            "herm_error": float(np.max(tr.herm_error)),
        }
    payload = {
        "times": [float(t) for t in main[0].times],
        "final": final,
        "diagnostics": diag,
        "stats": main[0].stats,
    }
    _emit(_json(payload, args), args.out)
    return EXIT_OK


def cmd_stationary(args) -> int:
    alpha = _alpha(args.alpha)
    target, profile, n_max = _profile_and_n_max(args, abs(alpha))
    if target is not None:
        alpha = abs(alpha) * np.exp(1j * input_phase(target))
        report = evaluate(target, abs(alpha), n_max, profile)
    else:
        report = stationary_matrix(profile, coherent_density_matrix(alpha, n_max))
    if args.format == "csv":
        _emit(density_matrix_csv(report.rho, _config(args)), args.out)
        return EXIT_OK
    payload = report.to_dict()
    if target is not None:
        payload["target"] = args.target
        payload["coherence"] = target_coherence(report, target)
    _emit(_json(payload, args), args.out)
    return EXIT_OK


def cmd_design(args) -> int:
    target = _target(args)
    if target is None:
        raise ConfigError("design needs --target")
    n_max = args.n_max if args.n_max is not None else target_n_max(target, 0.0)
    if n_max < target.reach:
        raise ConfigError(f"--n-max {n_max} below the reach {target.reach} of {args.target}")
    try:
        profile = profile_for_target(target, n_max)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    payload = profile_to_dict(profile)
    payload["design"] = design_provenance(target)
    payload["design"]["off_zero_value"] = 1.0
    _emit(_json(payload, args), args.out)
    return EXIT_OK


def _range(text: str, name: str):
    try:
        parts = [float(x) for x in text.split(":")]
    except ValueError:
        raise ConfigError(f"cannot parse {name} {text!r}") from None
    return parts


def cmd_optimize(args) -> int:
    target = _target(args)
    if target is None:
        raise ConfigError("optimize needs --target")
    lo_hi = _range(args.bracket, "--bracket")
    if len(lo_hi) != 2:
        raise ConfigError("--bracket takes lo:hi")
    try:
        res = optimize_amplitude(target, tuple(lo_hi), args.objective, args.tol)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    payload = {
        "target": args.target,
        "r_opt": res.r_opt,
        "objective": res.objective,
        "method": res.method_meta,
        "warnings": res.warnings,
        "trace": [[x, v] for x, v in res.trace],
    }
    _emit(_json(payload, args), args.out)
    return EXIT_OK


def alpha_grid(text: str) -> list[float]:
    """``start:stop:step`` with ``stop`` included when it lies on the grid."""
    parts = _range(text, "--alpha-grid")
    if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
        raise ConfigError("--alpha-grid takes start:stop:step with step > 0 and stop >= start")
    start, stop, step = parts
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def cmd_sweep(args) -> int:
    target = _target(args)
    if target is None:
        raise ConfigError("sweep needs --target")
    grid = alpha_grid(args.alpha_grid)
    n_max = args.n_max
    if n_max is not None and n_max < target.reach:
        raise ConfigError(f"--n-max {n_max} below the reach {target.reach} of {args.target}")
    try:
        rows = sweep_amplitude(target, grid, n_max=n_max)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if args.format == "csv":
        if args.metric:
            _emit(metric_sweep_csv(rows, args.metric, _config(args)), args.out)
        else:
            _emit(sweep_csv(rows, _config(args)), args.out)
        return EXIT_OK
    payload = {
        "target": args.target,
        "rows": [
            {
                "r": row["r"],
                "coherence": row["coherence"],
                "fidelity": row["fidelity"],
                "purity": row["purity"],
                "rho_elements": {k: [v.real, v.imag] for k, v in row["rho_elements"].items()},
            }
            for row in rows
        ],
    }
    _emit(_json(payload, args), args.out)
    return EXIT_OK


def cmd_verify_elimination(args) -> int:
    if args.expansion:
        path = Path(args.expansion)
        if not path.exists():
            raise ConfigError(f"expansion file {path} does not exist")
        expansion = load_expansion(path)
    else:
        expansion = kerr_expansion(args.kappa, args.ratio * args.kappa, args.kept_dim, args.lossy_dim, args.op)
    alpha = _alpha(args.alpha)
    rho0 = coherent_density_matrix(alpha, expansion.kept_dim - 1)
    t_end = args.t if args.t is not None else 3.0 * expansion.gamma / args.kappa**2
    times = tuple(np.linspace(0.0, t_end, args.points)[1:-1])
    settings = EvolutionSettings(t_end=t_end, rel_tol=args.rel_tol, abs_tol=args.abs_tol, snapshot_times=times)
    report = verify_reduction(expansion, rho0, settings, convention=args.convention)
    if args.format == "csv":
        _emit(elimination_csv(report, _config(args)), args.out)
        return EXIT_OK
    payload = {
        "convention": report.convention,
        "max_trace_distance": report.max_distance,
        "times": [float(t) for t in report.times],
        "trace_distance": [float(d) for d in report.trace_distance],
        "lossy_top_population": report.lossy_top_population,
        "warnings": report.warnings,
    }
    _emit(_json(payload, args), args.out)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .acceptance import run_all

    results = run_all(skip=tuple(args.skip or ()))
    for res in results:
        print(res.line(), flush=True)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_SELFTEST if failed else EXIT_OK


# -- parser ------------------------------------------------------------------


def _add_common(p, target=True, profile=False, alpha=True, fmt=("json", "csv")):
    if target:
        p.add_argument("--target", help="fock:N | pair:n,m[,phi] | comb:N,n0[,alpha']")
    if profile:
        p.add_argument("--profile", help="loss-profile JSON file")
    if alpha:
        p.add_argument("--alpha", default="1.0", help="coherent amplitude (real or complex, e.g. 1.2+0.3j)")
    p.add_argument("--n-max", type=int, default=None, help="Fock cutoff")
    p.add_argument("--format", choices=fmt, default=fmt[0])
    p.add_argument("--out", default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nclsim", description="Nonlinear coherent loss simulator")
    parser.add_argument("--version", action="version", version=f"nclsim {__version__}")
    parser.add_argument("--strict", action="store_true", help="treat truncation warnings as failures")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="integrate the master equation from a coherent state")
    _add_common(p, profile=True)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--t", type=float, default=1.0, help="final time")
    p.add_argument("--snapshots", type=float, nargs="*", help="extra output times")
    p.add_argument("--mode", choices=("matrix", "band"), default="matrix")
    p.add_argument("--rel-tol", type=float, default=1e-9)
    p.add_argument("--abs-tol", type=float, default=1e-13)
    p.add_argument("--alpha-phase-from-target", action="store_true",
                   help="rotate the input so the target relative phase is produced")
    p.add_argument("--diagnostics", default=None, help="diagnostics CSV file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("stationary", help="exact long-time state")
    _add_common(p, profile=True)
    p.set_defaults(func=cmd_stationary)

    p = sub.add_parser("design", help="loss profile for a target state")
    _add_common(p, alpha=False, fmt=("json",))
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("optimize", help="best input amplitude for a target")
    _add_common(p, alpha=False, fmt=("json",))
    p.add_argument("--bracket", default="0.1:4", help="lo:hi")
    p.add_argument("--objective", choices=OBJECTIVES, default="coherence")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="stationary metrics over an amplitude grid")
    _add_common(p, alpha=False, fmt=("csv", "json"))
    p.add_argument("--alpha-grid", required=True, help="start:stop:step")
    p.add_argument("--metric", choices=("coherence", "fidelity", "purity"), default=None,
                   help="write only r,metric_value")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify-elimination", help="compare full and reduced dynamics")
    _add_common(p, target=False, fmt=("csv", "json"))
    p.add_argument("--expansion", default=None, help="mode-expansion JSON file")
    p.add_argument("--op", choices=sorted(NAMED_OPS), default="a_nhat")
    p.add_argument("--kappa", type=float, default=1.0)
    p.add_argument("--ratio", type=float, default=50.0, help="gamma / kappa")
    p.add_argument("--kept-dim", type=int, default=12)
    p.add_argument("--lossy-dim", type=int, default=4)
    p.add_argument("--t", type=float, default=None, help="final time (default 3 gamma / kappa^2)")
    p.add_argument("--points", type=int, default=61, help="snapshot count")
    p.add_argument("--convention", choices=("second_order", "literature"), default="second_order")
    p.add_argument("--rel-tol", type=float, default=1e-9)
    p.add_argument("--abs-tol", type=float, default=1e-13)
    p.set_defaults(func=cmd_verify_elimination)

    p = sub.add_parser("selftest", help="run the acceptance suite")
    p.add_argument("--skip", type=int, nargs="*", help="criterion numbers to skip")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", TruncationWarning)
            code = args.func(args)
        truncations = [w for w in caught if issubclass(w.category, TruncationWarning)]
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
        if truncations and args.strict:
            raise NumericalFailure(f"{len(truncations)} truncation warning(s) under --strict")
        return code
    except (ConfigError, FormatError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StiffnessError, NumericalFailure, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command line front end.

Subcommands: `certify` prints a system's contraction certificate, `bounds`
prints its closed-form noise bound, `simulate` runs a pair ensemble and checks
it against the bound, and `cpg` runs the oscillator-ring locking comparison.
stdout carries data only (JSON, or CSV written to --out); diagnostics go to
stderr.  All outputs are byte-deterministic given the same arguments and seed.

Exit codes: 0 success; 2 usage or configuration error; 3 a certificate or
bound precondition failed (rate or gain out of range, singular metric);
4 a simulation left the finite floats entirely.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .bounds import BetaOutOfRange, ParameterRange
from .cpg import (CPGParams, build_cpg_system, phase_aligned_components,
                  run_locking_comparison)
from .geometry import SingularFactor
from .simulate import (EnsembleConfig, NonFiniteState, check_bound_respect,
                       derive_stream, run_hybrid, run_pair_ensemble)
from .statespace import NotPositiveDefinite
from .systems import (SystemNotFound, UnknownParameter, dwell_step_default,
                      get_recipe, resolve_params)

_CPG_DEFAULTS = {"gamma_weak": 0.01, "gamma_strong": 0.2, "sigma_d": 0.05,
                 "sigma_c": 0.1, "tau": 0.1, "omega": 1.0}


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True, indent=2))


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as handle:
        loaded = json.load(handle)
    if not isinstance(loaded, dict):
        raise ValueError(f"config file {path} must hold a JSON object")
    return loaded


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="concert",
        description="contraction certificates and noise bounds for discrete, "
                    "continuous, and hybrid resetting systems")
    sub = parser.add_subparsers(dest="command", required=True)

    certify = sub.add_parser("certify", help="print a system's contraction certificate")
    certify.add_argument("system", help="registry name, e.g. linear-map or hopf-cpg")
    certify.add_argument("--config", help="JSON file with parameter overrides")
    certify.add_argument("--print-config", action="store_true",
                         help="print the resolved configuration and exit")

    bounds = sub.add_parser("bounds", help="print a system's closed-form noise bound")
    bounds.add_argument("system")
    bounds.add_argument("--config", help="JSON file with parameter overrides")
    bounds.add_argument("--noise-free", action="store_true",
                        help="compare one noisy copy against a noise-free one")
    bounds.add_argument("--both", action="store_true",
                        help="print the standard and noise-free variants together")
    bounds.add_argument("--print-config", action="store_true")

    simulate = sub.add_parser("simulate", help="run a pair ensemble against the bound")
    simulate.add_argument("system")
    simulate.add_argument("--config", help="JSON file with parameter overrides")
    simulate.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    simulate.add_argument("--ensemble", type=int, default=None,
                          help="number of trajectory pairs")
    simulate.add_argument("--dt", type=float, default=None,
                          help="integrator step (continuous and hybrid systems)")
    simulate.add_argument("--horizon", type=float, default=None,
                          help="steps (discrete) or time span (otherwise)")
    simulate.add_argument("--out", help="write the per-time CSV here")
    simulate.add_argument("--noise-free", action="store_true",
                          help="pair each noisy trajectory with a noise-free one")
    simulate.add_argument("--print-config", action="store_true")

    cpg = sub.add_parser("cpg", help="oscillator-ring locking comparison")
    cpg.add_argument("--config", help="JSON overrides: gamma_weak, gamma_strong, "
                                      "sigma_d, sigma_c, tau, omega")
    cpg.add_argument("--seed", type=int, default=0)
    cpg.add_argument("--ensemble", type=int, default=200, help="runs per configuration")
    cpg.add_argument("--horizon", type=float, default=50.0)
    cpg.add_argument("--dt", type=float, default=None, help="integrator step (default tau/100)")
    cpg.add_argument("--out", default="cpg-out", help="output directory (default cpg-out)")
    cpg.add_argument("--print-config", action="store_true")
    return parser


def _cmd_certify(args) -> int:
    recipe = get_recipe(args.system)
    params = resolve_params(recipe, _load_config(args.config))
    if args.print_config:
        _emit({"command": "certify", "system": recipe.name, "params": params})
        return 0
    _emit({"system": recipe.name, "kind": recipe.kind,
           "certificate": recipe.certificate_json(params)})
    return 0


def _cmd_bounds(args) -> int:
    recipe = get_recipe(args.system)
    params = resolve_params(recipe, _load_config(args.config))
    if args.print_config:
        _emit({"command": "bounds", "system": recipe.name, "params": params,
               "noise_free": bool(args.noise_free), "both": bool(args.both)})
        return 0
    if args.both:
        body = {"standard": recipe.bound_json(params, False),
                "noise_free": recipe.bound_json(params, True)}
    else:
        body = recipe.bound_json(params, args.noise_free)
    _emit({"system": recipe.name, "kind": recipe.kind, "bound": body})
    return 0


def _cmd_simulate(args) -> int:
    recipe = get_recipe(args.system)
    params = resolve_params(recipe, _load_config(args.config))
    if recipe.kind == "discrete" and args.dt is not None:
        raise ValueError("--dt does not apply to discrete systems")
    step = args.dt if args.dt is not None else dwell_step_default(recipe, params)
    horizon = args.horizon if args.horizon is not None else recipe.sim_defaults["horizon"]
    pair_count = args.ensemble if args.ensemble is not None \
        else recipe.sim_defaults["pair_count"]
    pairing = "noisy-vs-noisefree" if args.noise_free else "two-noisy"
    resolved = {"command": "simulate", "system": recipe.name, "params": params,
                "seed": args.seed, "pair_count": pair_count, "horizon": horizon,
                "step_size": step, "pairing": pairing,
                "record_every": recipe.sim_defaults["record_every"],
                "out": args.out}
    if args.print_config:
        _emit(resolved)
        return 0
    system = recipe.build(params)
    config = EnsembleConfig(pair_count=pair_count, horizon=horizon,
                            master_seed=args.seed, initial=recipe.initial(params),
                            step_size=step, pairing_mode=pairing,
                            record_every=recipe.sim_defaults["record_every"])
    stats = run_pair_ensemble(system, config)
    bound_obj = recipe.bound_report(params, args.noise_free)
    check = None if bound_obj is None else check_bound_respect(stats, bound_obj)
    if args.out:
        extras = None
        if check is not None:
            extras = {"bound": [repr(float(b)) for b in check.bounds],
                      "within_bound": [str(bool(p)) for p in check.passed]}
        stats.to_csv(args.out, extra_columns=extras)
    steady_mean, steady_stderr = stats.steady_state()
    summary = dict(resolved)
    del summary["command"]
    summary.update({
        "kind": recipe.kind,
        "initial_ms": recipe.initial_ms(params),
        "failures": stats.failures,
        "final_time": float(stats.times[-1]),
        "final_mean": float(stats.mean_sq[-1]),
        "final_stderr": float(stats.stderr[-1]),
        "steady_mean": steady_mean,
        "steady_stderr": steady_stderr,
        "bound": None if bound_obj is None else recipe.bound_json(params, args.noise_free),
        "bound_check": None if check is None else {
            "ok": bool(check.ok), "n_checked": check.n_checked,
            "n_violations": check.n_violations, "worst_slack": check.worst_slack},
    })
    _emit(summary)
    if stats.failures >= stats.n_pairs:
        print("every trajectory pair left the finite floats", file=sys.stderr)
        return 4
    return 0


def _write_rows(path: str, header: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(row) + "\n")


def _cmd_cpg(args) -> int:
    overrides = _load_config(args.config)
    settings = dict(_CPG_DEFAULTS)
    for key, value in overrides.items():
        if key not in settings:
            known = ", ".join(sorted(settings))
            raise UnknownParameter(f"cpg has no parameter {key!r}; available: {known}")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise UnknownParameter(f"parameter {key!r} must be a number, got {value!r}")
        settings[key] = float(value)
    step = args.dt if args.dt is not None else settings["tau"] / 100.0
    resolved = {"command": "cpg", "params": settings, "seed": args.seed,
                "run_count": args.ensemble, "horizon": args.horizon,
                "step_size": step, "out": args.out}
    if args.print_config:
        _emit(resolved)
        return 0
    shared = {"sigma_d": settings["sigma_d"], "sigma_c": settings["sigma_c"],
              "tau": settings["tau"], "omega": settings["omega"]}
    weak = CPGParams(gamma=settings["gamma_weak"], **shared)
    strong = CPGParams(gamma=settings["gamma_strong"], **shared)
    comparison = run_locking_comparison(weak, strong, run_count=args.ensemble,
                                        horizon=args.horizon, master_seed=args.seed,
                                        step_size=step)

    os.makedirs(args.out, exist_ok=True)
    comparison.weak.to_csv(os.path.join(args.out, "delta_weak.csv"))
    comparison.strong.to_csv(os.path.join(args.out, "delta_strong.csv"))

    # short sample path of the strong ring: run 0 of the ensemble, replayed
    trace_horizon = min(args.horizon, 20.0 * settings["tau"])
    rng = derive_stream(args.seed, 0, 0)
    x0 = rng.uniform(-1.0, 1.0, 6)
    path = run_hybrid(build_cpg_system(strong), x0, trace_horizon, step, rng)
    state_header = ["time", "side", "x1x", "x1y", "x2x", "x2y", "x3x", "x3y"]
    _write_rows(os.path.join(args.out, "trace_strong.csv"), state_header,
                ([repr(float(t)), side, *(repr(float(v)) for v in state)]
                 for t, side, state in zip(path.times, path.sides, path.states)))
    aligned = phase_aligned_components(path.states)
    aligned_header = ["time", "side", "a1x", "a1y", "a2x", "a2y", "a3x", "a3y"]
    _write_rows(os.path.join(args.out, "aligned_strong.csv"), aligned_header,
                ([repr(float(t)), side, *(repr(float(v)) for v in row)]
                 for t, side, row in zip(path.times, path.sides, aligned)))

    summary = dict(resolved)
    del summary["command"]
    summary.update(comparison.to_json_dict())
    summary["files"] = {"delta_weak": "delta_weak.csv", "delta_strong": "delta_strong.csv",
                        "trace_strong": "trace_strong.csv",
                        "aligned_strong": "aligned_strong.csv",
                        "summary": "summary.json"}
    text = json.dumps(summary, sort_keys=True, indent=2)
    with open(os.path.join(args.out, "summary.json"), "w", encoding="utf-8") as handle:
        handle.write(text + "\n")
    print(text)
    if comparison.weak.failures >= comparison.weak.run_count \
            or comparison.strong.failures >= comparison.strong.run_count:
        print("every run of one configuration left the finite floats", file=sys.stderr)
        return 4
    return 0


_DISPATCH = {"certify": _cmd_certify, "bounds": _cmd_bounds,
             "simulate": _cmd_simulate, "cpg": _cmd_cpg}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _DISPATCH[args.command](args)
    except (BetaOutOfRange, ParameterRange, NotPositiveDefinite, SingularFactor) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except NonFiniteState as err:
        print(f"error: {err}", file=sys.stderr)
        return 4
    except (SystemNotFound, UnknownParameter) as err:
        # KeyError reprs its message; print the bare text
        print(f"error: {err.args[0] if err.args else err}", file=sys.stderr)
        return 2
    except (json.JSONDecodeError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

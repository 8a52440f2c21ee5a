"""Command-line entry point.

Exit codes: 0 when everything passes, 1 when a statistical or property check
fails, 2 for configuration and domain errors.  Diagnostics go to standard
error as one JSON object per line.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .decoherence import PLANCK_SIGMA_SQUARED, clock_report
from .errors import ConfigInvalid, PathError, ReductionError
from .harness.checks import ensemble_checks
from .harness.config import PRESET_DESCRIPTIONS, PRESETS, ScenarioConfig, parse_quantity, preset
from .harness.ensemble import path_rng, run_ensemble
from .harness.output import write_csv, write_ensemble, write_json
from .information import sample_information_path, sample_outcome
from .reduction import reduce_path

OUTPUT_ENV = "LEVYREDUCTION_OUTPUT_DIR"

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _diagnose(kind: str, message: str, **extra):
    print(json.dumps({"level": "error", "kind": kind, "message": message, **extra}, sort_keys=True),
          file=sys.stderr)


def _note(message: str, **extra):
    print(json.dumps({"level": "info", "message": message, **extra}, sort_keys=True), file=sys.stderr)


def _load_config(args) -> ScenarioConfig:
    if args.config and args.scenario:
        raise ConfigInvalid("give either --config or --scenario, not both")
    if args.config:
        cfg = ScenarioConfig.load(args.config)
    else:
        cfg = preset(args.scenario or "appendix-a")
    overrides = {}
    for key in ("paths", "seed", "steps", "checkpoints"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "horizon", None) is not None:
        overrides["horizon"] = parse_quantity(args.horizon, "time")
    if getattr(args, "delta", None) is not None:
        overrides["delta"] = args.delta
    if overrides:
        cfg = ScenarioConfig.from_dict({**cfg.to_dict(), **overrides})
    return cfg.validate()


def _output_dir(args, cfg: ScenarioConfig = None) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    if os.environ.get(OUTPUT_ENV):
        return Path(os.environ[OUTPUT_ENV])
    return Path(cfg.output_dir if cfg is not None else "output")


def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    rng = path_rng(cfg.seed, args.path_index)
    signal = cfg.signal()
    model = cfg.model()
    outcome = sample_outcome(signal, rng) if args.outcome is None else args.outcome - 1
    path = sample_information_path(model, signal, int(outcome), cfg.grid(), rng)
    red = reduce_path(model, signal, cfg.initial_state(), cfg.spectrum(), path, cfg.delta, with_states=True)
    out = _output_dir(args, cfg)
    target = write_csv(out / "path.csv", red.to_records(signal.energies))
    summary = {
        "scenario": cfg.name, "seed": cfg.seed, "path_index": args.path_index,
        "outcome": int(outcome) + 1,
        "collapse": None if red.collapse_outcome is None else red.collapse_outcome + 1,
        "final_posteriors": red.posteriors[-1].tolist(), "horizon": float(path.grid[-1]),
        "file": str(target),
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_ensemble(args) -> int:
    cfg = _load_config(args)
    result = run_ensemble(cfg, workers=args.workers)
    reports = ensemble_checks(result)
    out = _output_dir(args, cfg)
    files = write_ensemble(result, reports, out)
    for r in reports:
        print(r.line())
    print(f"born frequencies: {np.array2string(result.born_frequencies(), precision=4)} "
          f"collapsed: {result.collapsed_fraction:.4f}")
    for name, path in files.items():
        print(f"{name}: {path}")
    return EXIT_OK if all(r.passed for r in reports) and result.invariants["ok"] else EXIT_FAIL


def cmd_decoherence(args) -> int:
    cfg = _load_config(args)
    table = cfg.decoherence_table()
    rows = table.to_records()
    out = _output_dir(args, cfg)
    target = write_csv(out / "decoherence.csv", rows)
    print("m,n,E_m,E_n,gamma_mn,q_eff_mn")
    for r in rows:
        print(f"{r['m']},{r['n']},{r['E_m']!r},{r['E_n']!r},{r['gamma_mn']!r},{r['q_eff_mn']!r}")
    _note("decoherence table written", file=str(target),
          min_rate=table.min_rate, max_rate=table.max_rate)
    return EXIT_OK


def _sci(x: float) -> str:
    mant, exp = f"{x:.3e}".split("e")
    return f"{mant}e{int(exp)}"


def cmd_clock_bound(args) -> int:
    dE = parse_quantity(args.delta_e, "energy")
    T = parse_quantity(args.ramsey, "time")
    rep = clock_report(dE, T, args.candidate)
    if args.json:
        print(json.dumps(rep, indent=2, sort_keys=True))
    else:
        verdict = "within bound" if rep["candidate_within_bound"] else "exceeds bound"
        print(f"sigma^2 < {_sci(rep['sigma2_bound_mev2_per_s'])} MeV^-2 s^-1")
        print(f"candidate {rep['candidate_sigma2_mev2_per_s']:g} MeV^-2 s^-1: {verdict} "
              f"({rep['orders_of_magnitude_margin']:.1f} orders of magnitude)")
    return EXIT_OK


def cmd_validate(args) -> int:
    from .validation import run_validation

    def progress(check, report, seconds):
        print(f"[{check.module}] {report.line()}", flush=True)

    run = run_validation(only=args.only or None, seed=args.seed, progress=progress)
    print(run.audit.line())
    print(f"total: {run.total_seconds:.1f} s; {'PASS' if run.passed else 'FAIL'}")
    out = _output_dir(args)
    write_json(out / "validation.json", {
        "passed": run.passed, "version": __version__, "seed": args.seed,
        "reports": {k: [r.to_dict() for r in v] for k, v in run.reports.items()},
        "state_invariants": run.audit.to_dict(),
    })
    return EXIT_OK if run.passed else EXIT_FAIL


def cmd_scenario(args) -> int:
    if args.action == "list":
        for name in PRESETS:
            print(f"{name:14s} {PRESET_DESCRIPTIONS[name]}")
        return EXIT_OK
    if not args.name:
        raise ConfigInvalid("scenario show needs a name")
    print(preset(args.name).to_json())
    return EXIT_OK


def _add_scenario_args(p, ensemble=False):
    p.add_argument("--scenario", help=f"named preset ({', '.join(PRESETS)})")
    p.add_argument("--config", help="JSON scenario file")
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--horizon", help="time horizon, e.g. 50 or 2ms (default: from the scenario)")
    p.add_argument("--delta", type=float, help="collapse threshold")
    p.add_argument("--out", help=f"output directory (overrides ${OUTPUT_ENV})")
    if ensemble:
        p.add_argument("--paths", type=int)
        p.add_argument("--checkpoints", type=int)
        p.add_argument("--workers", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="levyreduction",
                                     description="Energy-driven state reduction with Lévy noise.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="one path with its full time series")
    _add_scenario_args(p)
    p.add_argument("--path-index", type=int, default=0, help="which per-path random stream to use")
    p.add_argument("--outcome", type=int, help="force the true level (1-based) instead of sampling it")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("ensemble", help="run an ensemble and its statistical checks")
    _add_scenario_args(p, ensemble=True)
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("decoherence", help="decoherence-rate table of a scenario")
    _add_scenario_args(p)
    p.set_defaults(func=cmd_decoherence)

    p = sub.add_parser("clock-bound", help="bound on sigma^2 from a Ramsey coherence time")
    p.add_argument("--delta-e", default="3.801e-5eV", help="energy gap, e.g. 3.801e-5eV")
    p.add_argument("--ramsey", default="1s", help="Ramsey time, e.g. 1s")
    p.add_argument("--candidate", type=float, default=PLANCK_SIGMA_SQUARED,
                   help="sigma^2 value to compare, MeV^-2 s^-1")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_clock_bound)

    p = sub.add_parser("validate", help="run the full property suite")
    p.add_argument("--only", nargs="*", help="names of checks to run")
    p.add_argument("--seed", type=int, default=12345)
    p.add_argument("--out", help=f"output directory (overrides ${OUTPUT_ENV})")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("scenario", help="named scenarios")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_scenario)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        _diagnose("ConfigInvalid", str(exc))
        return EXIT_CONFIG
    except PathError as exc:
        _diagnose(type(exc.cause).__name__, str(exc.cause), path_index=exc.index)
        return EXIT_CONFIG
    except (ReductionError, OSError) as exc:
        _diagnose(type(exc).__name__, str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

"""Command-line front end.

Subcommands: simulate, regularity, converge, compare, illposed, preset,
export-potential.  Exit codes: 0 success, 2 spec/validation error, 3 numerical
blow-up in a single-run command.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis, integrators, potentials
from .experiments import (
    ExperimentKind,
    SpecError,
    _validate_initial,
    _validate_potential,
    build_initial,
    build_potential,
    load_spec,
    run_experiment,
    validate_spec,
    write_results,
)
from .integrators import BlowUpError, SchemeId, StepperConfig
from .presets import get_preset, preset_names

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - version shim
    import tomli as tomllib


def _common_flags(parser: argparse.ArgumentParser, with_tau: bool = False) -> None:
    parser.add_argument("--spec", type=Path, help="TOML experiment spec")
    parser.add_argument("--grid", type=int, help="override grid size")
    parser.add_argument("--t-final", type=float, dest="t_final", help="override final time")
    parser.add_argument("--lambda", type=float, dest="lam", help="override nonlinearity coefficient")
    parser.add_argument("--seed", type=int, help="override master seed")
    parser.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    if with_tau:
        parser.add_argument("--tau", type=float, help="override time step")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roughnls",
        description="Spectral solvers for the periodic cubic NLS with rough potentials",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="single trajectory with snapshot output")
    _common_flags(sim, with_tau=True)
    sim.add_argument("--scheme", choices=[s.value for s in SchemeId], default="lri")

    reg = sub.add_parser("regularity", help="Fourier-decay probe of the solution")
    _common_flags(reg, with_tau=True)

    conv = sub.add_parser("converge", help="temporal convergence sweep of one scheme")
    _common_flags(conv)
    conv.add_argument("--scheme", choices=[s.value for s in SchemeId], help="override scheme")

    comp = sub.add_parser("compare", help="race all schemes on shared data")
    _common_flags(comp)

    ill = sub.add_parser("illposed", help="norm-inflation sweep")
    ill.add_argument("--spec", type=Path, required=True, help="TOML experiment spec")
    ill.add_argument("--out", type=Path, default=Path("results"))

    pre = sub.add_parser("preset", help="run a named built-in experiment")
    pre.add_argument("name", nargs="?", help="preset name (omit with --list)")
    pre.add_argument("--list", action="store_true", help="list available presets")
    pre.add_argument("--out", type=Path, default=Path("results"))

    exp = sub.add_parser("export-potential", help="write a potential coefficient table")
    exp.add_argument("--spec", type=Path, help="TOML file with a [potential] section")
    exp.add_argument("--preset", help="export the potential of a named preset")
    exp.add_argument("--grid", type=int, default=1024)
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--out", type=Path, default=Path("potential.csv"))

    return parser


def _apply_overrides(raw: dict, args: argparse.Namespace, kind: str) -> dict:
    if getattr(args, "grid", None) is not None:
        raw["grid_size"] = args.grid
    if getattr(args, "lam", None) is not None:
        raw["lambda"] = args.lam
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
    if getattr(args, "t_final", None) is not None:
        raw["t_final"] = args.t_final
    if getattr(args, "tau", None) is not None and kind == "regularity":
        raw.setdefault("regularity", {})["tau"] = args.tau
    if getattr(args, "scheme", None) is not None and kind == "convergence":
        raw.setdefault("convergence", {})["scheme"] = args.scheme
    return raw


def _load_raw(path: Path) -> dict:
    with open(path, "rb") as fh:
        try:
            return tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise SpecError(f"cannot parse {path}: {exc}")


def _run_kind(args: argparse.Namespace, kind: ExperimentKind) -> int:
    if args.spec is None:
        raise SpecError(f"{kind.value} requires --spec FILE")
    raw = _load_raw(args.spec)
    if raw.get("kind", kind.value) != kind.value:
        raise SpecError(f"spec kind '{raw.get('kind')}' does not match subcommand {kind.value}")
    raw["kind"] = kind.value
    raw = _apply_overrides(raw, args, kind.value)
    spec = validate_spec(raw)
    record = run_experiment(spec)
    args.out.mkdir(parents=True, exist_ok=True)
    csv_path = args.out / f"{spec.name}.csv"
    write_results(record, csv_path)
    print(f"{spec.name}: wrote {csv_path}")
    for key, value in record.fits.items():
        if isinstance(value, float):
            print(f"  {key} = {value:.6g}")
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.spec is not None:
        raw = _load_raw(args.spec)
    else:
        raw = {}
    grid_size = args.grid or int(raw.get("grid_size", 1024))
    lam = args.lam if args.lam is not None else float(raw.get("lambda", 1.0))
    seed = args.seed if args.seed is not None else int(raw.get("seed", 0))
    t_final = args.t_final if args.t_final is not None else float(raw.get("t_final", 1.0))
    tau = args.tau if args.tau is not None else float(raw.get("tau", 1e-3))
    name = str(raw.get("name", "simulate"))

    pot_table = raw.get("potential", {"type": "zero"})
    ini_table = raw.get("initial", {"type": "smooth"})
    pot_resolved = _validate_potential(pot_table, seed)
    ini_resolved = _validate_initial(ini_table, seed)

    # reuse the experiment builders through a minimal carrier spec
    from .experiments import ExperimentSpec

    carrier = ExperimentSpec(
        kind=ExperimentKind.REGULARITY,
        name=name,
        grid_size=grid_size,
        lam=lam,
        seed=seed,
        t_final=t_final,
        potential=pot_resolved,
        initial=ini_resolved,
        section={"tau": tau, "k_min": 8, "k_max": max(9, grid_size // 8)},
    )
    xi = build_potential(carrier)
    u0 = build_initial(carrier)
    cfg = StepperConfig(tau=tau, lam=lam)
    scheme = SchemeId(args.scheme)
    nsteps = integrators.n_steps_for(t_final, tau)
    stride = max(1, nsteps // 100)
    observers = [
        integrators.mass_observer(stride),
        integrators.energy_observer(xi, lam, stride),
    ]
    result = integrators.evolve(u0, xi, scheme, cfg, t_final, observers)

    args.out.mkdir(parents=True, exist_ok=True)
    final_path = args.out / f"{name}-final.csv"
    ks, coeffs = result.final.ordered()
    with open(final_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "re", "im"])
        for k, c in zip(ks, coeffs):
            writer.writerow([int(k), format(c.real, ".17g"), format(c.imag, ".17g")])
    obs_path = args.out / f"{name}-observables.csv"
    with open(obs_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "t", "mass", "energy"])
        for (step, t, m), (_, _, e) in zip(result.records["mass"], result.records["energy"]):
            writer.writerow([step, format(t, ".17g"), format(m, ".17g"), format(e, ".17g")])
    meta = {
        "name": name,
        "scheme": scheme.value,
        "grid_size": grid_size,
        "tau": tau,
        "t_final": t_final,
        "lambda": lam,
        "seed": seed,
        "potential": pot_resolved,
        "initial": ini_resolved,
        "final_mass": analysis.mass(result.final),
    }
    with open(args.out / f"{name}-final.meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{name}: wrote {final_path} and {obs_path}")
    return 0


def _cmd_preset(args: argparse.Namespace) -> int:
    if args.list or not args.name:
        for name in preset_names():
            print(name)
        return 0
    try:
        spec = get_preset(args.name)
    except KeyError as exc:
        raise SpecError(str(exc))
    record = run_experiment(spec)
    args.out.mkdir(parents=True, exist_ok=True)
    csv_path = args.out / f"{spec.name}.csv"
    write_results(record, csv_path)
    print(f"{spec.name}: wrote {csv_path}")
    for key, value in record.fits.items():
        if isinstance(value, (int, float)):
            print(f"  {key} = {value:.6g}")
    return 0


def _cmd_export_potential(args: argparse.Namespace) -> int:
    if args.preset:
        spec = get_preset(args.preset)
        if spec.potential is None:
            raise SpecError(f"preset {args.preset} has no potential section")
        carrier = spec
    elif args.spec:
        raw = _load_raw(args.spec)
        if "potential" not in raw:
            raise SpecError("spec file has no [potential] section")
        from .experiments import ExperimentSpec

        carrier = ExperimentSpec(
            kind=ExperimentKind.REGULARITY,
            name="export",
            grid_size=args.grid,
            lam=1.0,
            seed=args.seed,
            t_final=1.0,
            potential=_validate_potential(raw["potential"], args.seed),
            initial={"type": "smooth"},
            section={},
        )
    else:
        raise SpecError("export-potential requires --preset or --spec")
    pot = build_potential(carrier)
    potentials.export_potential_csv(pot, args.out)
    print(f"wrote {args.out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "regularity":
            return _run_kind(args, ExperimentKind.REGULARITY)
        if args.command == "converge":
            return _run_kind(args, ExperimentKind.CONVERGENCE)
        if args.command == "compare":
            return _run_kind(args, ExperimentKind.COMPARISON)
        if args.command == "illposed":
            raw = _load_raw(args.spec)
            raw["kind"] = "illposed"
            spec = validate_spec(raw)
            record = run_experiment(spec)
            args.out.mkdir(parents=True, exist_ok=True)
            csv_path = args.out / f"{spec.name}.csv"
            write_results(record, csv_path)
            print(f"{spec.name}: wrote {csv_path}")
            return 0
        if args.command == "preset":
            return _cmd_preset(args)
        if args.command == "export-potential":
            return _cmd_export_potential(args)
        parser.error(f"unknown command {args.command}")
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

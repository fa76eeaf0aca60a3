"""Command-line front end.

Exit codes: 0 on success / verdict true, 1 on validation or verdict
failure, 2 on usage errors.  DHLAB_THREADS overrides the worker count.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .catalog import CatalogError, catalog_entry, catalog_get, catalog_names
from .frames import identity_report
from .lattice import IntegralAffineData
from .models import (EmptyRegionError, ModelValidationError, load_model_config,
                     validate_model)
from .polyfit import (detect_breakpoints_empirical, detect_walls,
                      fit_chamber_polynomials, polynomiality_verdict)
from .pushforward import GridSpec, dh_exact_linear, dh_monte_carlo, total_mass_check
from .reduction import vol_functions_on_grid
from .reports import write_csv, write_json, write_plot_script
from .verify import verify_free_case, verify_product_identity

DEFAULT_SAMPLES = 1_000_000
DEFAULT_SEED = 7


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 2 on usage problems, like argparse default
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(2)


def build_parser() -> _Parser:
    p = _Parser(prog="dhlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid=True):
        sp.add_argument("--model", required=True,
                        help="catalog name or path to a model config JSON")
        sp.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
        sp.add_argument("--bins", type=int, default=None)
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        if grid:
            sp.add_argument("--grid", action="append", default=None,
                            metavar="lo:hi:n",
                            help="per-axis grid spec, repeat for rank >= 2")
        sp.add_argument("--out", default=".", help="artifact output directory")
        sp.add_argument("--format", choices=["csv", "json"], default="csv")
        sp.add_argument("--tolerance", type=float, default=None)
        sp.add_argument("--threads", type=int, default=None)

    for name in ["validate", "compute-dh", "exact-dh", "volumes", "identity",
                 "fit", "verify", "free-case"]:
        sp = sub.add_parser(name)
        common(sp, grid=name not in ("validate", "exact-dh"))
    sub.add_parser("catalog")
    return p


def resolve_threads(cli_value) -> int:
    env = os.environ.get("DHLAB_THREADS", "").strip()
    if env:
        return max(1, int(env))
    if cli_value:
        return max(1, int(cli_value))
    return max(1, os.cpu_count() or 1)


def _load_model(spec: str, validate: bool = True):
    if os.path.exists(spec) and not spec.isidentifier():
        model = load_model_config(spec)
        if validate:
            report = validate_model(model)
            if not report.passed:
                raise ModelValidationError(report)
        return model
    try:
        return catalog_get(spec, validate=validate)
    except CatalogError:
        if os.path.exists(spec):
            model = load_model_config(spec)
            if validate:
                report = validate_model(model)
                if not report.passed:
                    raise ModelValidationError(report)
            return model
        raise


def _grid_spec(args, model) -> GridSpec:
    entry = None
    try:
        entry = catalog_entry(args.model)
    except CatalogError:
        pass
    if args.grid:
        box = []
        bins = []
        for axis_spec in args.grid:
            lo, hi, n = axis_spec.split(":")
            box.append((float(lo), float(hi)))
            bins.append(int(n))
        return GridSpec.build(box, bins)
    if entry is not None:
        return GridSpec.build(entry.default_grid,
                              args.bins or entry.default_bins)
    win = np.asarray(model.window, dtype=float)
    shrink = 0.05 * (win[:, 1] - win[:, 0])
    box = np.stack([win[:, 0] + shrink, win[:, 1] - shrink], axis=1)
    return GridSpec.build(box, args.bins or 64)


def _artifact(args, model, command, ext) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, f"{model.name}_{command}_{args.seed}.{ext}")


def _meta(args, model, workers):
    return {"version": __version__, "model": model.name,
            "seed": args.seed, "workers": workers}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "catalog":
        print(f"{'name':24}{'description'}")
        for name in catalog_names():
            print(f"{name:24}{catalog_entry(name).description}")
        return 0

    workers = resolve_threads(args.threads)
    try:
        model = _load_model(args.model, validate=args.command != "validate")
    except ModelValidationError as exc:
        print("validation FAILED:")
        for f in exc.report.failures:
            print("  -", f)
        return 1
    except (CatalogError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        report = validate_model(model, tol=args.tolerance)
        payload = report.to_json_dict()
        out = _artifact(args, model, "validate", "json")
        write_json(out, payload)
        for key in ["skew_residual", "min_pfaffian", "moment_condition_residual",
                    "kernel_orthogonality_residual", "effective", "locally_free",
                    "proper_over_window"]:
            print(f"{key}: {payload[key]}")
        if not report.passed:
            print("validation FAILED:")
            for f in report.failures:
                print("  -", f)
            return 1
        print(f"validation OK -> {out}")
        return 0

    if args.command == "exact-dh":
        try:
            poly = dh_exact_linear(model)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        out = _artifact(args, model, "exact-dh", "json")
        write_json(out, {"meta": _meta(args, model, workers),
                         "density": poly.to_json_dict()})
        print(f"exact density pieces={len(poly.pieces)} -> {out}")
        return 0

    grid = _grid_spec(args, model)

    if args.command == "compute-dh":
        density = dh_monte_carlo(model, grid, args.samples, args.seed, workers=workers)
        z, flagged = total_mass_check(density, model)
        out = _artifact(args, model, "compute-dh", "csv")
        write_csv(out, density.csv_header(), density.csv_rows(),
                  _meta(args, model, workers))
        write_plot_script(out, ycol=grid.rank + 2)
        if args.format == "json":
            write_json(_artifact(args, model, "compute-dh", "json"),
                       {"meta": _meta(args, model, workers),
                        "total_mass": density.total_mass,
                        "total_mass_z": z, "empty": flagged})
        print(f"total mass {density.total_mass:.6g} (z={z:+.2f}) -> {out}")
        return 0

    if args.command == "volumes":
        table = vol_functions_on_grid(model, grid.center_points(),
                                      samples=max(args.samples // 10, 10_000),
                                      seed=args.seed, workers=workers)
        out = _artifact(args, model, "volumes", "csv")
        write_csv(out, table.csv_header(), table.csv_rows(), _meta(args, model, workers))
        write_plot_script(out, ycol=grid.rank + 2)
        print(f"{len(table.rows)} volume rows -> {out}")
        return 0

    if args.command == "identity":
        tol = args.tolerance if args.tolerance else 1e-7
        points = model.probe_points(1000, seed=args.seed)
        payload = identity_report(model, points)
        out = _artifact(args, model, "identity", "json")
        write_json(out, payload)
        worst = payload["max_factorization_residual"]
        print(f"max factorization residual {worst:.3e} "
              f"(orthogonality {payload['orthogonality_max']}) -> {out}")
        return 0 if worst < tol else 1

    if args.command == "fit":
        density = dh_monte_carlo(model, grid, args.samples, args.seed, workers=workers)
        if grid.rank == 1:
            walls = detect_breakpoints_empirical(density)
        else:
            walls = detect_walls(model)
        cap = getattr(model, "n", model.dim // 2)  # degree cap: complex dimension
        fits = fit_chamber_polynomials(density, walls, cap=cap)
        verdict, report = polynomiality_verdict(fits)
        report["walls"] = walls.to_json_dict()
        report["meta"] = _meta(args, model, workers)
        out = _artifact(args, model, "fit", "json")
        write_json(out, report)
        print(f"polynomiality verdict {verdict} "
              f"({len(fits)} chambers) -> {out}")
        return 0 if verdict else 1

    if args.command in ("verify", "free-case"):
        runner = verify_product_identity if args.command == "verify" else verify_free_case
        try:
            report = runner(model, grid, samples=args.samples, seed=args.seed,
                            workers=workers)
        except (ValueError, EmptyRegionError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        stem = args.command.replace("-", "_")
        out_csv = _artifact(args, model, stem, "csv")
        write_csv(out_csv, report.csv_header(), report.csv_rows(),
                  _meta(args, model, workers))
        write_plot_script(out_csv, ycol=grid.rank + 1)
        write_json(_artifact(args, model, stem, "json"), report.summary_dict())
        print(f"verdict={report.verdict} pass_fraction={report.pass_fraction:.3f} "
              f"max|z|={report.max_abs_z:.2f} -> {out_csv}")
        return 0 if report.verdict else 1

    return 2


if __name__ == "__main__":
    sys.exit(main())

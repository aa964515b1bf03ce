"""Command-line entry point: ``risimp <subcommand> [options]``.

Exit codes: 0 success, 1 validation error (bad input or configuration),
2 numerical failure (singular or ill-conditioned system).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import fitting
from .beamforming import (default_precoder, fixed_ris_beam, load_precoder_csv, load_ris_csv,
                          save_precoder_csv, save_ris_csv)
from .channel import Variant, channel, received_power_db
from .config import dump_scene, load_fitted_scene, load_scene
from .errors import NumericalError, ValidationError
from .impedance import assemble_cached
from .optimize import maximize_power
from .scene import build_default_scene

log = logging.getLogger("risimp")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2
FAST_SWEEPS = 3
REPORT_FAST_DRAWS = 20


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ValidationError(message)


def _scene(args):
    if args.scene is None:
        return build_default_scene()
    if args.scene == "fitted":
        return load_fitted_scene()
    return load_scene(args.scene)


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _draws(args) -> int:
    if args.draws is not None:
        if args.draws < 1:
            raise ValidationError("--draws must be at least 1")
        return args.draws
    return fitting.FAST_DRAWS if args.fast else fitting.DEFAULT_DRAWS


def _budget(args, n: int) -> int | None:
    if args.budget is not None:
        if args.budget < 1:
            raise ValidationError("--budget must be at least 1")
        return args.budget
    return FAST_SWEEPS * n if args.fast else None


def _ris_config(args, scene, imp):
    if getattr(args, "ris", None):
        return load_ris_csv(args.ris, scene.ris_resistance, scene.n)
    # the fixed beam only sees the scatterer-free RIS blocks
    return fixed_ris_beam(scene, imp, *scene.ris_steer, seed=args.seed)


def cmd_simulate(args) -> int:
    scene = _scene(args)
    out = _out(args)
    imp = assemble_cached(scene, args.cache)
    w = load_precoder_csv(args.precoder, scene.m) if args.precoder else default_precoder(scene)
    cfg = _ris_config(args, scene, imp)
    rows = []
    for v in Variant:
        p = received_power_db(channel(imp, cfg, v), w)
        rows.append({"variant": v.value, "power_db": p})
        print(f"{v.value:<14}{fitting.format_db(p):>10}")
    fitting.write_csv(out / "powers.csv", ["variant", "power_db"], rows)
    save_precoder_csv(w, out / "precoder.csv")
    save_ris_csv(cfg, out / "ris_config.csv")
    return EXIT_OK


def _grid(args) -> fitting.FitGrid:
    return fitting.FitGrid(tuple(args.nx), tuple(args.spacing), tuple(args.y0))


def cmd_fit_cluster(args) -> int:
    scene = _scene(args)
    out = _out(args)
    target = fitting.MEASURED["cluster"]
    results = fitting.fit_cluster(scene, target, _grid(args), _draws(args), args.seed, args.workers)
    rows = [{"n_x": r.spec.n_x, "n_y": r.spec.n_y, "spacing_wl": r.spec.spacing / scene.wavelength,
             "y0": r.spec.load_real, "power_db": r.power_db, "error_pct": r.error_pct,
             "draws": r.draws_used, "best_draw": r.best_draw, "reactance_seed": r.reactance_seed,
             "failure": r.failure or ""} for r in results]
    fitting.write_csv(out / "fit_results.csv", list(rows[0]), rows)
    for r in results:
        msg = (f"n_x={r.spec.n_x:<3} d={r.spec.spacing / scene.wavelength:<6g} y0={r.spec.load_real:<6g}"
               f"{fitting.format_db(r.power_db):>10}")
        print(msg + (f"  error {r.error_pct:.2f}%" if r.ok else f"  FAILED {r.failure}"))
    best = results[0]
    if best.ok:
        fitted = scene.with_cluster(best.spec)
        dump_scene(fitted, out / "fitted_scene.toml", [best.reactance_seed],
                   comment=f"cluster fit: seed {args.seed}, {best.draws_used} draws, "
                           f"{best.power_db:.2f} dB against {target.power_db} dB")
    failed = [r for r in results if not r.ok]
    if len(failed) < len(results):
        return EXIT_OK
    invalid = all(r.failure.startswith(ValidationError.__name__) for r in failed)
    return EXIT_VALIDATION if invalid else EXIT_NUMERICAL


def cmd_fig3(args) -> int:
    scene = _scene(args)
    out = _out(args)
    rows = fitting.emit_fig3_data(scene, args.spacing[0], tuple(args.y0), tuple(args.nx), _draws(args),
                                  args.seed, out / "fig3.csv", args.workers)
    for r in rows:
        print(f"{r['n_dipoles']:>6} {r['y0']:>6g} {fitting.format_db(r['best_power_db']):>10}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    scene = _scene(args)
    out = _out(args)
    imp = assemble_cached(scene, args.cache)
    w = default_precoder(scene)
    init = _ris_config(args, scene, imp)
    p0 = received_power_db(channel(imp, init, Variant.FULL), w)
    res = maximize_power(imp, w, scene.ris_resistance, Variant.FULL, budget=_budget(args, scene.n),
                         seed=args.seed, init=init)
    save_ris_csv(res.config, out / "ris_config.csv")
    save_ris_csv(init, out / "ris_initial.csv")
    fitting.write_csv(out / "optimizer_trace.csv", ["iteration", "element", "power_db"],
                      [{"iteration": i, "element": e, "power_db": p} for i, e, p in res.trace])
    print(f"initial   {fitting.format_db(p0):>10}")
    print(f"optimized {fitting.format_db(res.power_db):>10}  ({res.iterations} steps)")
    return EXIT_OK


def cmd_report(args) -> int:
    scene = _scene(args) if args.scene is not None else load_fitted_scene()
    out = _out(args)
    draws = args.draws if args.draws is not None else (REPORT_FAST_DRAWS if args.fast else fitting.FAST_DRAWS)
    if draws < 1:
        raise ValidationError("--draws must be at least 1")
    report = fitting.run_table_suite(scene, draws, args.seed, optimizer_budget=_budget(args, scene.n))
    text = report.to_text()
    print(text)
    (out / "report.txt").write_text(text + "\n")
    (out / "report.json").write_text(json.dumps(report.as_dict(), indent=2) + "\n")
    failed = any(s.status.startswith("failed") for s in report.sections)
    return EXIT_NUMERICAL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scene", help="scene TOML file, or 'fitted' for the shipped fitted scene")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--draws", type=int, default=None, help="reactance draws per combination")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--fast", action="store_true", help="desk-scale draws and budgets")
    common.add_argument("--cache", default=None, help="directory for impedance caches")
    common.add_argument("-v", "--verbose", action="store_true")

    def sweep(nx, y0):
        # a fresh parent per subcommand: argparse shares action objects with parents
        parent = argparse.ArgumentParser(add_help=False)
        parent.add_argument("--nx", type=int, nargs="+", default=list(nx))
        parent.add_argument("--spacing", type=float, nargs="+", default=[0.25], help="wavelengths")
        parent.add_argument("--y0", type=float, nargs="+", default=list(y0), help="Ohm")
        parent.add_argument("--workers", type=int, default=1)
        return parent

    p = _Parser(prog="risimp", description="Mutual-impedance RIS channel simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    s = sub.add_parser("simulate", parents=[common], help="powers of every path variant")
    s.add_argument("--precoder", help="precoder CSV (index,real,imag)")
    s.add_argument("--ris", help="RIS CSV (index,reactance); default: fixed beam")
    s.set_defaults(func=cmd_simulate)
    s = sub.add_parser("fit-cluster", parents=[common, sweep([35], [100.0])], help="fit the scatterer cluster")
    s.set_defaults(func=cmd_fit_cluster)
    s = sub.add_parser("fig3", parents=[common, sweep(fitting.FIG3_NX, fitting.FIG3_Y0)],
                       help="power versus dipole count")
    s.set_defaults(func=cmd_fig3)
    s = sub.add_parser("optimize-ris", parents=[common], help="optimize the RIS reactances")
    s.add_argument("--ris", help="initial RIS CSV; default: fixed beam")
    s.add_argument("--budget", type=int, default=None, help="coordinate steps")
    s.set_defaults(func=cmd_optimize)
    s = sub.add_parser("report", parents=[common], help="table suite against the reference values")
    s.add_argument("--budget", type=int, default=None, help="optimizer coordinate steps")
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        cond = "" if exc.condition is None or not math.isfinite(exc.condition) else \
            f" (condition {exc.condition:.3e})"
        print(f"numerical failure: {exc}{cond}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())

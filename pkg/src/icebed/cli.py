"""Command-line front end: synth -> train -> infer -> eval, plus raster export.

Exit codes: 0 success, 1 infeasible, 2 bad input, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .baselines import solve_independent
from .core import NO_EVIDENCE, DEFAULT_TAU, DEFAULT_TEMPLATE_LENGTH
from .dataio import (
    atomic_write_text,
    read_extra,
    read_params,
    read_sequence,
    read_surface,
    read_synth_config,
    write_params,
    write_sequence,
    write_surface,
)
from .energy import build_unary, surface_energy
from .errors import IcebedError, Infeasible
from .metrics import evaluate, format_table
from .raster import export_plots
from .synth import generate
from .training import LIKELIHOOD_SCALE, train_params
from .trw import TrwConfig, trw_solve

EXIT_OK, EXIT_INFEASIBLE, EXIT_BAD_INPUT, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("icebed")


def cmd_synth(args):
    cfg = read_synth_config(args.config, seed=args.seed)
    seq, gt = generate(cfg)
    out = Path(args.out)
    write_sequence(seq, out)
    write_surface(gt, out / "gt.csv")
    write_params(cfg.energy_params(), out / "gen_params.toml")
    print(f"wrote {out} (l={seq.l}, phi={seq.phi}, rho={seq.rho}, seed={cfg.seed})")


def cmd_train(args):
    if len(args.data) != len(args.labels):
        raise ValueError(f"{len(args.data)} --data directories but {len(args.labels)} --labels files")
    labeled = [(read_sequence(d), read_surface(s)) for d, s in zip(args.data, args.labels)]
    params = train_params(
        labeled, t=args.t, tau=args.tau, per_column=not args.no_per_column_beta, smoothness_scale=args.smoothness_scale
    )
    write_params(params, args.out)
    print(f"wrote {args.out} (alpha={params.alpha}, sigma_hat={params.sigma_hat:.4f})")


def cmd_infer(args):
    seq = read_sequence(args.data)
    params = read_params(args.params)
    params.beta_vector(seq.phi)  # fail early on a column-count mismatch
    extra = read_extra(args.extra) if args.extra else NO_EVIDENCE
    unary = build_unary(seq, params, extra)
    if args.solver == "trw":
        cfg = TrwConfig(max_iterations=args.iters, tol=args.tol, naive_messages=args.naive_messages)
        res = trw_solve(unary, params, cfg)
        surface, energy = res.surface, res.energy
        detail = f" iterations={res.iterations} bound={res.bounds[-1]!r}"
    else:
        surface = solve_independent(seq, params, extra, "dynamic" if args.solver == "dv" else "fixed", unary=unary)
        energy = surface_energy(surface.labels, unary, params)
        detail = ""
    write_surface(surface, args.out)
    print(f"solver={args.solver} energy={energy!r}{detail}")


def cmd_eval(args):
    ks = sorted({int(k) for k in args.k.split(",") if k.strip()})
    if not ks or min(ks) < 0:
        raise ValueError(f"--k must list non-negative integers, got {args.k!r}")
    rep = evaluate(read_surface(args.pred), read_surface(args.gt), ks)
    table = format_table({Path(args.pred).stem: rep})
    out = Path(args.out)
    atomic_write_text(out.with_name(out.name + ".txt"), table)
    atomic_write_text(out.with_name(out.name + ".json"), json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n")
    sys.stdout.write(table)


def cmd_export_plot(args):
    seq = read_sequence(args.data)
    paths = export_plots(seq, read_surface(args.surface), args.out)
    print(f"wrote {len(paths)} rasters with prefix {args.out}")


def build_parser():
    p = argparse.ArgumentParser(prog="icebed", description="Ice-bottom surface reconstruction on radar slice sequences.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic sequence with ground truth")
    s.add_argument("--config", required=True, help="TOML synth config, or a suite name (easy, noisy, rough)")
    s.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (overrides the config)")
    s.add_argument("--out", required=True, help="output container directory")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", help="learn energy parameters from labeled sequences")
    s.add_argument("--data", nargs="+", required=True)
    s.add_argument("--labels", nargs="+", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--tau", type=float, default=DEFAULT_TAU)
    s.add_argument("--t", type=int, default=DEFAULT_TEMPLATE_LENGTH, help="template length (odd)")
    s.add_argument("--no-per-column-beta", action="store_true")
    s.add_argument("--smoothness-scale", type=float, default=LIKELIHOOD_SCALE)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("infer", help="reconstruct a surface")
    s.add_argument("--data", required=True)
    s.add_argument("--params", required=True)
    s.add_argument("--solver", choices=("trw", "viterbi", "dv"), default="trw")
    s.add_argument("--extra", default=None, help="CSV i,j,s_min,s_max of extra constraints")
    s.add_argument("--iters", type=int, default=None, help="TRW iterations (default: number of columns)")
    s.add_argument("--tol", type=float, default=TrwConfig.tol, help="TRW stopping tolerance (negative: never stop early)")
    s.add_argument("--naive-messages", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_infer)

    s = sub.add_parser("eval", help="compare a surface to ground truth")
    s.add_argument("--pred", required=True)
    s.add_argument("--gt", required=True)
    s.add_argument("--k", default="1,5")
    s.add_argument("--out", required=True, help="report prefix; writes <prefix>.txt and <prefix>.json")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("export-plot", help="write PPM overlays and a depth map")
    s.add_argument("--data", required=True)
    s.add_argument("--surface", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_export_plot)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        args.func(args)
    except Infeasible as exc:
        where = f" at pixel (i, j) = {exc.pixel}" if exc.pixel is not None else ""
        print(f"icebed: infeasible{where}: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (IcebedError, ValueError) as exc:
        print(f"icebed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"icebed: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

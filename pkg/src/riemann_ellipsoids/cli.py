"""Command line entry point ``riemann-scan``.

Exit codes: 0 success, 1 usage error, 2 oracle failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import scan
from .scan import ConfigError

EXIT_OK, EXIT_USAGE, EXIT_ORACLE, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common_options():
    p = _Parser(add_help=False)
    p.add_argument("--config", help="key=value file; flags override its entries")
    p.add_argument("--type", choices=["S2", "S3", "I", "II", "III"])
    p.add_argument("--branch", choices=["PlusMinus", "MinusPlus"])
    g = p.add_argument_group("grid")
    g.add_argument("--dx", type=float, help="spacing of the vertical lines x = const")
    g.add_argument("--points-per-line", type=int, dest="points_per_line")
    for name in ("xmin", "xmax", "ymin", "ymax"):
        g.add_argument(f"--{name}", type=float)
    g.add_argument("--points", help="file with one 'x,y' pair per line (replaces the grid)")
    g.add_argument("--margin", type=float, help="minimum distance of points from the triangle edges")
    t = p.add_argument_group("tolerances")
    t.add_argument("--tol-ell", type=float, dest="tol_ell")
    t.add_argument("--res-tol", type=float, dest="res_tol", help="relative resonance threshold")
    t.add_argument("--classify-tol", type=float, dest="classify_tol")
    t.add_argument("--n-theta", type=int, dest="n_theta")
    t.add_argument("--spectral-tol", type=float, dest="spectral_tol")
    p.add_argument("--g", type=float, help="gravitational constant")
    p.add_argument("--jobs", type=int, help="worker processes (output is identical for any value)")
    p.add_argument("-o", "--output", help="CSV destination ('-' for stdout)")
    p.add_argument("--svg", help="also write a shaded SVG raster")
    return p


def build_parser():
    common = _common_options()
    parser = _Parser(prog="riemann-scan", description="Grid scans of Riemann ellipsoid equilibria.")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("regions", parents=[common], help="existence-region membership")
    r.add_argument("--generic-set", dest="generic_set",
                   help="test a generic planar set instead, e.g. '12-' for B^-_12")
    sub.add_parser("ellipticity", parents=[common], help="linear stability scan")
    sub.add_parser("classify", parents=[common], help="normal form and convexity class per point")
    res = sub.add_parser("resonances", parents=[common], help="resonance curves up to a given order")
    res.add_argument("--max-order", type=int, dest="max_order")
    res.add_argument("--spectra-stride", type=int, dest="spectra_stride",
                     help="normal-form spectra on every k-th elliptic point (0: automatic)")
    res.add_argument("--spectra-samples", type=int, dest="spectra_samples",
                     help="target number of spectrum samples when the stride is automatic")
    res.add_argument("--bisect", type=int, help="bisection steps refining each curve point")
    res.add_argument("--curves", help="CSV destination for the curve points")
    v = sub.add_parser("verify", help="run the oracle suite")
    v.add_argument("--seed", type=int, default=0)
    return parser


_NON_CONFIG = {"command", "config", "seed"}


def _config_from_args(args) -> scan.ScanConfig:
    file_values = scan.read_config_file(args.config) if args.config else {}
    flags = {k: v for k, v in vars(args).items() if k not in _NON_CONFIG}
    if flags.get("points"):
        with open(flags["points"], encoding="utf-8") as fh:
            flags["points"] = fh.read()
    return scan.build_config(file_values, flags)


def _emit(path, text):
    if not path or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _run(args) -> int:
    if args.command == "verify":
        from . import verify
        results = verify.run_oracles(args.seed)
        sys.stdout.write(verify.format_table(results))
        return EXIT_OK if all(r.passed for r in results) else EXIT_ORACLE

    cfg = _config_from_args(args)
    if args.command == "resonances":
        result = scan.resonance_scan(cfg)
        _emit(cfg.output, scan.resonance_csv(result))
        if cfg.curves:
            _emit(cfg.curves, scan.curves_csv(result))
        print(json.dumps({"distinct_resonances": len(result.resonances), "points": result.n_points,
                          "elliptic": result.n_elliptic, "spectrum_size": len(result.spectra)}),
              file=sys.stderr)
        return EXIT_OK

    records = scan.run_scan(cfg, args.command)
    _emit(cfg.output, scan.records_csv(records, args.command))
    if cfg.svg:
        _emit(cfg.svg, scan.svg_raster(records, cfg, args.command))
    if args.command != "regions":
        print(json.dumps(scan.summary(records), sort_keys=True), file=sys.stderr)
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _run(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

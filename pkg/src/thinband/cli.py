"""Command line entry point: ``thinband <subcommand> [flags]``.

Flags may also come from ``--config file.json``; keys are flag names
(``n_list`` or ``n-list``) and override values given on the command line.
Errors print one JSON record on stderr and exit 2 (bad input), 3 (resource
cap) or 4 (numerical failure).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis, paircount
from .errors import InputError, NumericError, ResourceError, ThinbandError
from .geometry import NormBody
from .pointsets import DEFAULT_MARGIN, FAMILIES, generate, read_csv, to_csv

DEFAULT_SEED = analysis.DEFAULT_SEED
SCAN_KINDS = ("sharpness", "band", "integer", "energy", "decay")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON file whose keys override flags")
    p.add_argument("--threads", type=int, help="worker thread cap (default: $THINBAND_THREADS or 1)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"RNG seed (default {DEFAULT_SEED})")
    p.add_argument("--output", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def _add_family(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--family", choices=FAMILIES, required=required)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--m", type=int, help="cells per side (lattice-cube, jittered)")
    p.add_argument("--R", type=float, help="radius (lattice-ball)")
    p.add_argument("--n", type=int, help="target point count")
    p.add_argument("--margin", type=float, default=DEFAULT_MARGIN, help="jitter margin")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="thinband", description="Thin-annulus pair counting experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", parents=[common], help="write a point set as CSV")
    _add_family(p, required=True)

    p = sub.add_parser("count", parents=[common], help="count ordered pairs in a distance band")
    _add_family(p, required=False)
    p.add_argument("--input", help="point CSV file instead of a generator")
    p.add_argument("--body", default="euclidean", help="euclidean | ellipsoid:a1,a2,... | pnorm:p")
    p.add_argument("--k", type=float, nargs="+", required=True)
    width = p.add_mutually_exclusive_group(required=True)
    width.add_argument("--delta", type=float)
    width.add_argument("--theorem-width", action="store_true", help="use n^(-(d-1)/(d(d+1)))")
    p.add_argument("--method", choices=("grid", "brute", "both"), default="grid")
    p.add_argument("--timing", action="store_true", help="include elapsed seconds")

    p = sub.add_parser("lattice", parents=[common], help="lattice points in balls")
    p.add_argument("--d", type=int, default=2)
    radii = p.add_mutually_exclusive_group(required=True)
    radii.add_argument("--R", type=float, nargs="+")
    radii.add_argument("--R-range", help="start:stop:step, stop inclusive")

    p = sub.add_parser("fourier", parents=[common], help="annulus transform decay grid")
    p.add_argument("--d", type=int, nargs="+", default=[2, 3])

    p = sub.add_parser("energy", parents=[common], help="discrete energy of jittered sets")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--q", type=int, nargs="+", default=[8, 16, 32, 64, 128])
    p.add_argument("--s", type=float)
    p.add_argument("--placement", choices=("centered", "corner"), default="centered")

    p = sub.add_parser("scan", parents=[common], help="run a scan from a JSON config")
    p.add_argument("--kind", choices=SCAN_KINDS, default="band")
    p.add_argument("--family", choices=FAMILIES, default="jittered")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--body", default="euclidean")
    p.add_argument("--n-list", type=int, nargs="+")
    p.add_argument("--q-list", type=int, nargs="+")
    p.add_argument("--k-rule", default="dyadic")
    p.add_argument("--delta-rule", default="theorem")
    p.add_argument("--s", type=float)
    p.add_argument("--placement", choices=("centered", "corner"), default="centered")
    p.add_argument("--plot", action="store_true", help="also write a log-log SVG")
    p.add_argument("--windows", type=json.loads, default=None, help="JSON object of acceptance windows")
    return parser


def _apply_config(args: argparse.Namespace) -> None:
    if not args.config:
        return
    try:
        data = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise InputError(f"cannot read config {args.config}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object")
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest in ("command", "config"):
            continue
        if not hasattr(args, dest):
            raise InputError(f"unknown config key {key!r} for {args.command}")
        setattr(args, dest, value)


def _point_set(args):
    if getattr(args, "input", None):
        try:
            return read_csv(Path(args.input).read_text())
        except OSError as exc:
            raise InputError(f"cannot read {args.input}: {exc.strerror}") from None
    if not args.family:
        raise InputError("give --input or --family")
    return generate(args.family, args.d, m=args.m, R=args.R, n=args.n, seed=args.seed, margin=args.margin)


def _emit(text: str, args) -> None:
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _emit_report(report: analysis.Report, args, columns=None) -> None:
    cols = list(columns or report.columns)
    if args.format == "json":
        rows = [{c: r[c] for c in cols} for r in report.rows]
        _emit(analysis.dump_json({"rows": rows, "summary": report.summary}) + "\n", args)
        return
    _emit(analysis.format_csv(cols, report.rows), args)
    if args.output:
        Path(args.output).with_suffix(".json").write_text(analysis.dump_json(report.summary) + "\n")


def _radii(args) -> list[float]:
    if args.R is not None:
        return [float(r) for r in (args.R if isinstance(args.R, list) else [args.R])]
    try:
        start, stop, step = (float(v) for v in str(args.R_range).split(":"))
    except ValueError:
        raise InputError("--R-range must be start:stop:step") from None
    if step <= 0 or stop < start:
        raise InputError("--R-range needs step > 0 and stop >= start")
    count = int((stop - start) / step + 1e-9) + 1
    return [start + i * step for i in range(count)]


def cmd_generate(args) -> None:
    P = _point_set(args)
    if args.format == "json":
        _emit(analysis.dump_json({"d": P.d, "n": P.n, "provenance": P.provenance,
                                  "points": P.points.tolist()}) + "\n", args)
    else:
        _emit(to_csv(P), args)


def cmd_count(args) -> None:
    if args.input:
        P = _point_set(args)
        body = NormBody.parse(args.body, d=P.d)
    else:
        body = NormBody.parse(args.body, d=args.d)
        if args.delta is not None:
            paircount.BandQuery(body, float(args.k[0]), float(args.delta))
        P = _point_set(args)
    delta = paircount.theorem_band_width(P.n, P.d) if args.theorem_width else args.delta
    queries = [paircount.BandQuery(body, float(k), float(delta)) for k in args.k]
    lines = []
    for q in queries:
        if args.method == "both":
            g = paircount.count_band_grid(P, q)
            b = paircount.count_band_bruteforce(P, q)
            if g.count != b.count:
                raise NumericError(f"grid count {g.count} != brute-force count {b.count} at k={q.k}")
            rec = g.to_dict()
            rec["method"] = "both"
            rec["agree"] = True
            rec["elapsed"] = g.elapsed + b.elapsed
        elif args.method == "brute":
            rec = paircount.count_band_bruteforce(P, q).to_dict()
        else:
            rec = paircount.count_band_grid(P, q).to_dict()
        if not args.timing:
            rec.pop("elapsed")
        lines.append(json.dumps(analysis._jsonable(rec), sort_keys=True))
    _emit("\n".join(lines) + "\n", args)


def cmd_lattice(args) -> None:
    _emit_report(analysis.lattice_report(args.d, _radii(args)), args)


def cmd_fourier(args) -> None:
    report = analysis.decay_report(ds=tuple(args.d), seed=args.seed)
    _emit_report(report, args, ["d", "t", "width", "xi_mag", "ft", "bound", "ratio"])


def cmd_energy(args) -> None:
    report = analysis.energy_scan(args.d, args.q, s=args.s, seed=args.seed, placement=args.placement)
    _emit_report(report, args, ["d", "s", "q", "energy"])


def cmd_scan(args) -> None:
    if not args.output:
        raise InputError("scan needs --output (CSV path; the summary goes beside it as .json)")
    windows = args.windows
    if windows is not None and not isinstance(windows, dict):
        raise InputError("windows must be a JSON object")
    if args.kind in ("sharpness", "energy"):
        if not args.q_list:
            raise InputError(f"{args.kind} scan needs q_list")
    elif args.kind != "decay" and not args.n_list:
        raise InputError(f"{args.kind} scan needs n_list")
    if args.kind == "sharpness":
        report = analysis.sharpness_scan(args.d, args.q_list, windows=windows)
    elif args.kind == "band":
        body = NormBody.parse(args.body, d=args.d)
        report = analysis.band_scan(args.family, args.d, args.n_list, args.k_rule, body, args.seed,
                                    delta_rule=args.delta_rule, windows=windows)
    elif args.kind == "integer":
        report = analysis.integer_distance_scan(args.family, args.d, args.n_list, args.seed,
                                                delta_rule=args.delta_rule, windows=windows)
    elif args.kind == "energy":
        report = analysis.energy_scan(args.d, args.q_list, s=args.s, seed=args.seed,
                                      placement=args.placement, windows=windows)
    else:
        report = analysis.decay_report(seed=args.seed, windows=windows)
    report.write(args.output, plot=bool(args.plot))


COMMANDS = {
    "generate": cmd_generate,
    "count": cmd_count,
    "lattice": cmd_lattice,
    "fourier": cmd_fourier,
    "energy": cmd_energy,
    "scan": cmd_scan,
}


def _error_record(exc: BaseException, code: int, kind: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "exit_code": code, "message": str(exc)}) + "\n")


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _apply_config(args)
        paircount.set_threads(args.threads)
        COMMANDS[args.command](args)
    except ThinbandError as exc:
        _error_record(exc, exc.exit_code, exc.kind)
        return exc.exit_code
    except MemoryError as exc:
        _error_record(exc or "out of memory", ResourceError.exit_code, ResourceError.kind)
        return ResourceError.exit_code
    except (FloatingPointError, OverflowError, ZeroDivisionError) as exc:
        _error_record(exc, NumericError.exit_code, NumericError.kind)
        return NumericError.exit_code
    except (TypeError, ValueError) as exc:
        # config values of the wrong type end up here
        _error_record(exc, InputError.exit_code, InputError.kind)
        return InputError.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())

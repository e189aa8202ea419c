"""Command-line front end.

Subcommands: ``simulate`` (draw a field and emit CSV), ``test`` (run one
test on a CSV dataset), ``study`` (run a Monte Carlo size/power study),
``diagnose`` (directional semivariogram / correlation contours).

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .core import SpatialDataset, default_contrast, default_lag_set
from .distributions import RngStream
from .estimators import EmptyNeighborhoodError, KernelSpec, NoPairsError
from .grf import (
    AnisotropyParams,
    ExponentialCovariance,
    FactorizationError,
    GrfSampler,
    uniform_locations,
)
from .io import DataFormatError, read_dataset_csv, write_dataset_csv
from .resampling import Rect, ResamplingError, WindowSpec
from .spatial_tests import (
    SingularityError,
    gsc_gridded_test,
    gsc_nongridded_test,
    ms_test,
)
from .spectral_tests import lz_complete_test, periodogram
from .study import PRESETS, StudyConfig, StudyError, get_preset, run_power_study
from . import diagnostics

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3

# Sample sizes below which a method's asymptotics are unreliable.
MIN_N = {"gsc-g": 150, "lz": 150, "gsc-u": 300, "ms": 300}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _parse_design(text: str):
    # grid:18x12[:spacing]  |  uniform:300:16x10
    try:
        parts = text.split(":")
        if parts[0] == "grid":
            n1, n2 = parts[1].lower().split("x")
            spacing = float(parts[2]) if len(parts) > 2 else 1.0
            return {"kind": "grid", "n_cols": int(n1), "n_rows": int(n2),
                    "spacing": spacing}
        if parts[0] == "uniform":
            n = int(parts[1])
            w, h = parts[2].lower().split("x")
            return {"kind": "uniform", "n": n, "width": float(w), "height": float(h)}
    except (IndexError, ValueError):
        pass
    raise CliError(
        f"cannot parse design {text!r}; use grid:COLSxROWS[:SPACING] or "
        "uniform:N:WIDTHxHEIGHT", EXIT_USAGE)


def _covariance(args) -> ExponentialCovariance:
    if args.phi is not None:
        return ExponentialCovariance(args.sigma2, args.tau2, args.phi)
    return ExponentialCovariance.from_effective_range(args.xi, args.sigma2, args.tau2)


def _window(args) -> WindowSpec | None:
    if args.window is None:
        return None
    try:
        w, h = args.window.lower().split("x")
        return WindowSpec(float(w), float(h), args.step)
    except ValueError:
        raise CliError(f"cannot parse window {args.window!r}; use WIDTHxHEIGHT",
                       EXIT_USAGE) from None


def _cmd_simulate(args) -> int:
    design = _parse_design(args.design)
    cov = _covariance(args)
    aniso = None if args.ratio == 1.0 else AnisotropyParams(args.ratio, args.angle)
    rng = RngStream(args.seed)
    if design["kind"] == "grid":
        from .core import GridSpec

        grid = GridSpec(design["n_cols"], design["n_rows"], design["spacing"])
        locations = grid.locations()
    else:
        grid = None
        locations = uniform_locations(design["n"], design["width"], design["height"],
                                      rng.substream(1))
    ds = GrfSampler(locations, cov, aniso).draw(rng.substream(2), grid=grid)
    if args.out:
        write_dataset_csv(ds, args.out)
        print(f"wrote {ds.n} observations to {args.out}")
    else:
        sys.stdout.write("x,y,value\n")
        for (x, y), v in zip(ds.locations, ds.values):
            sys.stdout.write(f"{x:.17g},{y:.17g},{v:.17g}\n")
    return EXIT_OK


def _require_grid(ds: SpatialDataset, method: str):
    if ds.grid is None:
        raise CliError(
            f"method {method} requires gridded sampling locations; this dataset "
            "is not on a grid.  The distribution of sampling locations is the "
            "first consideration when choosing a test: use gsc-u or ms for "
            "non-gridded data.", EXIT_DATA)


def _parse_domain(text: str) -> Rect:
    # X0:Y0:WIDTHxHEIGHT
    try:
        x0, y0, wh = text.split(":")
        w, h = wh.lower().split("x")
        return Rect(float(x0), float(y0), float(w), float(h))
    except ValueError:
        raise CliError(f"cannot parse domain {text!r}; use X0:Y0:WIDTHxHEIGHT",
                       EXIT_USAGE) from None


def _cmd_test(args) -> int:
    ds = read_dataset_csv(args.data)
    if ds.n < MIN_N.get(args.method, 0):
        print(f"warning: n={ds.n} is below the recommended minimum "
              f"{MIN_N[args.method]} for {args.method}; interpret with care",
              file=sys.stderr)
    lag_set = default_lag_set(args.lag_scale, args.extra_lags)
    contrast = default_contrast(lag_set)
    window = _window(args)
    domain = _parse_domain(args.domain) if args.domain else Rect.from_dataset(ds)
    out: dict
    if args.method == "gsc-g":
        _require_grid(ds, "gsc-g")
        res = gsc_gridded_test(ds, lag_set, contrast, window,
                               pvalue_mode=args.pvalue_mode or "finite_sample",
                               domain=domain)
    elif args.method == "gsc-u":
        if ds.grid is not None:
            print("note: dataset is gridded; gsc-g is usually preferable",
                  file=sys.stderr)
        res = gsc_nongridded_test(ds, lag_set, contrast,
                                  KernelSpec(args.kernel, args.truncation),
                                  args.bandwidth, window,
                                  pvalue_mode=args.pvalue_mode, domain=domain)
    elif args.method == "ms":
        res = ms_test(ds, lag_set, contrast, window, args.n_boot, args.tuning,
                      RngStream(args.seed), domain=domain)
    elif args.method == "lz":
        _require_grid(ds, "lz")
        sym = lz_complete_test(periodogram(ds), args.alpha)
        print(f"method: lz (two-stage complete-symmetry test, alpha={args.alpha})")
        print(f"stage 1 (reflection): statistic={sym.stage1_statistic:.6f} "
              f"p={sym.stage1_pvalue:.6f}")
        if sym.stage2_reached:
            print(f"stage 2 (diagonal):   statistic={sym.stage2_statistic:.6f} "
                  f"p={sym.stage2_pvalue:.6f}")
        else:
            print("stage 2 (diagonal):   not reached")
        print(f"decision: {'reject' if sym.reject else 'do not reject'} "
              "complete symmetry")
        print(f"diagnostics: {sym.diagnostics}")
        out = {
            "method": "lz", "alpha": args.alpha,
            "stage1_statistic": sym.stage1_statistic,
            "stage1_pvalue": sym.stage1_pvalue,
            "stage2_statistic": sym.stage2_statistic,
            "stage2_pvalue": sym.stage2_pvalue,
            "reject": sym.reject, "diagnostics": sym.diagnostics,
        }
        if args.out:
            Path(args.out).write_text(json.dumps(out, indent=2) + "\n")
        return EXIT_OK
    else:  # pragma: no cover - argparse restricts choices
        raise CliError(f"unknown method {args.method}", EXIT_USAGE)
    print(f"method: {res.method}  (p-value mode: {res.pvalue_mode})")
    print(f"statistic: {res.statistic:.6f}")
    print(f"df: {res.df}")
    print(f"p-value: {res.p_value:.6f}")
    print(f"decision at alpha={args.alpha}: "
          f"{'reject' if res.p_value <= args.alpha else 'do not reject'} the null")
    print(f"diagnostics: {res.diagnostics}")
    if args.out:
        payload = {
            "method": res.method, "statistic": res.statistic, "df": res.df,
            "p_value": res.p_value, "pvalue_mode": res.pvalue_mode,
            "alpha": args.alpha, "diagnostics": res.diagnostics,
        }
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def _cmd_study(args) -> int:
    if args.preset:
        kwargs = {}
        if args.replicates:
            kwargs["replicates"] = args.replicates
        if args.seed is not None:
            kwargs["master_seed"] = args.seed
        config = get_preset(args.preset, **kwargs)
    elif args.config:
        config = StudyConfig.from_json(Path(args.config).read_text())
        if args.replicates:
            raise CliError("--replicates only applies to --preset", EXIT_USAGE)
    else:
        raise CliError("study needs --preset or --config", EXIT_USAGE)

    def progress(done, total):
        if args.verbose:
            print(f"\r{done}/{total} blocks", end="", file=sys.stderr, flush=True)

    report = run_power_study(config, threads=args.threads, progress=progress)
    if args.verbose:
        print(file=sys.stderr)
    print(report.table())
    if args.out:
        out = Path(args.out)
        out.write_text(report.to_csv())
        echo = out.with_suffix(".config.json")
        echo.write_text(config.to_json() + "\n")
        print(f"report written to {out} (config echo in {echo})")
    return EXIT_OK


def _cmd_diagnose(args) -> int:
    if args.what == "directional":
        ds = read_dataset_csv(args.data)
        rows = diagnostics.directional_semivariogram(
            ds, args.directions, args.bins, args.max_dist)
        lines = ["direction_deg,distance,gamma,n_pairs"]
        lines += [f"{d:.6g},{c:.9g},{g:.9g},{n}" for d, c, g, n in rows]
    else:
        cov = _covariance(args)
        aniso = None if args.ratio == 1.0 else AnisotropyParams(args.ratio, args.angle)
        levels = tuple(float(v) for v in args.levels.split(","))
        rows = diagnostics.equicorrelation_contours(cov, aniso, levels)
        lines = ["level,x,y"]
        lines += [f"{lv:.6g},{x:.9g},{y:.9g}" for lv, x, y in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {len(lines) - 1} rows to {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _add_cov_args(p):
    p.add_argument("--sigma2", type=float, default=1.0, help="partial sill")
    p.add_argument("--tau2", type=float, default=0.0, help="nugget")
    p.add_argument("--xi", type=float, default=6.0,
                   help="effective range (correlation 0.05 distance)")
    p.add_argument("--phi", type=float, default=None,
                   help="decay rate (overrides --xi)")
    p.add_argument("--ratio", type=float, default=1.0, help="anisotropy ratio R >= 1")
    p.add_argument("--angle", type=float, default=0.0,
                   help="anisotropy rotation in radians")


def build_parser() -> _Parser:
    p = _Parser(prog="isotropy",
                description="Nonparametric tests of isotropy and symmetry "
                            "for spatial random fields.")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("simulate", help="simulate a Gaussian random field to CSV")
    ps.add_argument("--design", required=True,
                    help="grid:COLSxROWS[:SPACING] or uniform:N:WIDTHxHEIGHT")
    _add_cov_args(ps)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--out", default=None, help="output CSV (default stdout)")
    ps.set_defaults(func=_cmd_simulate)

    pt = sub.add_parser("test", help="run one isotropy/symmetry test on a CSV")
    pt.add_argument("data", help="input CSV with header x,y,value")
    pt.add_argument("--method", required=True, choices=["gsc-g", "gsc-u", "ms", "lz"])
    pt.add_argument("--alpha", type=float, default=0.05)
    pt.add_argument("--lag-scale", type=float, default=1.0)
    pt.add_argument("--extra-lags", action="store_true",
                    help="append the 22.5/112.5-degree lag pair")
    pt.add_argument("--window", default=None, help="WIDTHxHEIGHT window/block")
    pt.add_argument("--step", type=float, default=None, help="window offset step")
    pt.add_argument("--bandwidth", type=float, default=0.75)
    pt.add_argument("--kernel", choices=["epanechnikov", "truncated_gaussian"],
                    default="truncated_gaussian")
    pt.add_argument("--truncation", type=float, default=1.5)
    pt.add_argument("--pvalue-mode", choices=["asymptotic", "finite_sample"],
                    default=None)
    pt.add_argument("--n-boot", type=int, default=100)
    pt.add_argument("--tuning", type=float, default=1.0)
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--domain", default=None,
                    help="sampling domain X0:Y0:WIDTHxHEIGHT "
                         "(default: inferred from the data)")
    pt.add_argument("--out", default=None, help="write result JSON here")
    pt.set_defaults(func=_cmd_test)

    pu = sub.add_parser("study", help="run a Monte Carlo size/power study")
    pu.add_argument("--preset", choices=sorted(PRESETS), default=None)
    pu.add_argument("--config", default=None, help="study config JSON file")
    pu.add_argument("--replicates", type=int, default=None,
                    help="override preset replicate count")
    pu.add_argument("--seed", type=int, default=None, help="override master seed")
    pu.add_argument("--threads", type=int, default=1)
    pu.add_argument("--out", default=None, help="write report CSV here")
    pu.add_argument("--verbose", action="store_true")
    pu.set_defaults(func=_cmd_study)

    pd = sub.add_parser("diagnose", help="emit plot-ready diagnostics as CSV")
    pd.add_argument("what", choices=["directional", "contours"])
    pd.add_argument("--data", default=None, help="input CSV (directional)")
    pd.add_argument("--directions", type=int, default=4)
    pd.add_argument("--bins", type=int, default=10)
    pd.add_argument("--max-dist", type=float, default=None)
    _add_cov_args(pd)
    pd.add_argument("--levels", default="0.1,0.3,0.5,0.7,0.9")
    pd.add_argument("--out", default=None)
    pd.set_defaults(func=_cmd_diagnose)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "diagnose" and args.what == "directional" and not args.data:
            raise CliError("diagnose directional requires --data", EXIT_USAGE)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (DataFormatError,) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (FactorizationError, SingularityError, ResamplingError,
            NoPairsError, EmptyNeighborhoodError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (StudyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

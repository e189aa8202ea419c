"""Monte Carlo size/power studies over a grid of anisotropy scenarios.

A study simulates fields for every (anisotropy, effective range) cell,
runs every configured method on the same realizations, and reports the
empirical rejection rate at the chosen level with its binomial standard
error.  Replicates use independent, index-derived random streams, so a
report is byte-identical no matter how many worker processes run it.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import GridSpec, SpatialDataset, default_contrast, default_lag_set
from .distributions import RngStream, mix64
from .estimators import KernelSpec
from .grf import AnisotropyParams, ExponentialCovariance, GrfSampler, uniform_locations
from .resampling import Rect, WindowSpec
from .spatial_tests import gsc_gridded_test, gsc_nongridded_test, ms_test
from .spectral_tests import lz_complete_test, periodogram

__all__ = [
    "MethodSpec",
    "StudyConfig",
    "CellResult",
    "StudyReport",
    "run_power_study",
    "PRESETS",
    "get_preset",
]

METHODS = ("gsc-g", "gsc-u", "ms", "lz")

# Stream-id salts separating the independent random purposes of a cell.
_SALT_LOCATIONS = 101
_SALT_FIELD = 202
_SALT_METHOD = 303


class StudyError(RuntimeError):
    """Invalid configuration or too many replicate failures."""


@dataclass(frozen=True)
class MethodSpec:
    """One test method with its tuning parameters.

    ``window`` is (width, height) in domain units for the moving window
    (gsc-g, gsc-u) or bootstrap block (ms); None picks the built-in
    default for the design.
    """

    method: str
    label: str = ""
    lag_scale: float = 1.0
    extra_lag_pair: bool = False
    window: tuple[float, float] | None = None
    offset_step: float | None = None
    kernel: str = "truncated_gaussian"
    truncation: float = 1.5
    bandwidth: float = 0.75
    pvalue_mode: str | None = None
    n_boot: int = 100
    tuning: float = 1.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise StudyError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.label:
            object.__setattr__(self, "label", self.method)

    def window_spec(self) -> WindowSpec | None:
        if self.window is None:
            return None
        return WindowSpec(self.window[0], self.window[1], self.offset_step)


@dataclass(frozen=True)
class StudyConfig:
    """Full specification of a size/power study."""

    design: dict
    methods: tuple[MethodSpec, ...]
    effective_ranges: tuple[float, ...] = (3.0, 6.0, 12.0)
    anisotropies: tuple[tuple[float, float], ...] = (
        (1.0, 0.0),
        (1.4142135623730951, 0.0),
        (2.0, 0.0),
        (1.4142135623730951, 1.1780972450961724),
        (2.0, 1.1780972450961724),
    )
    sigma2: float = 1.0
    tau2: float = 0.0
    replicates: int = 200
    alpha: float = 0.05
    master_seed: int = 20260810

    def __post_init__(self):
        if self.replicates < 1:
            raise StudyError("replicates must be positive")
        if not (0 < self.alpha < 1):
            raise StudyError("alpha must be in (0, 1)")
        if not self.methods:
            raise StudyError("at least one method is required")
        kind = self.design.get("kind")
        if kind == "grid":
            if int(self.design["n_cols"]) < 2 or int(self.design["n_rows"]) < 2:
                raise StudyError("grid design needs at least 2x2 points")
        elif kind == "uniform":
            if int(self.design["n"]) < 2:
                raise StudyError("uniform design needs n >= 2")
            if not (float(self.design["width"]) > 0 and float(self.design["height"]) > 0):
                raise StudyError("uniform design needs positive domain dimensions")
        else:
            raise StudyError(f"unknown design kind {kind!r}")
        for m in self.methods:
            if m.method in ("gsc-g", "lz") and kind != "grid":
                raise StudyError(f"method {m.label} requires a grid design")

    def cells(self) -> list[tuple[int, tuple[float, float], float]]:
        out = []
        idx = 0
        for aniso in self.anisotropies:
            for xi in self.effective_ranges:
                out.append((idx, aniso, xi))
                idx += 1
        return out

    def to_json(self) -> str:
        d = {
            "design": self.design,
            "methods": [vars(m) | {"window": list(m.window) if m.window else None}
                        for m in self.methods],
            "effective_ranges": list(self.effective_ranges),
            "anisotropies": [list(a) for a in self.anisotropies],
            "sigma2": self.sigma2,
            "tau2": self.tau2,
            "replicates": self.replicates,
            "alpha": self.alpha,
            "master_seed": self.master_seed,
        }
        return json.dumps(d, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "StudyConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise StudyError(f"config is not valid JSON: {exc}") from exc
        try:
            methods = []
            for m in d["methods"]:
                m = dict(m)
                if m.get("window") is not None:
                    m["window"] = tuple(m["window"])
                methods.append(MethodSpec(**m))
            return cls(
                design=d["design"],
                methods=tuple(methods),
                effective_ranges=tuple(float(x) for x in d.get("effective_ranges", (3, 6, 12))),
                anisotropies=tuple((float(a), float(b)) for a, b in d.get(
                    "anisotropies", StudyConfig.__dataclass_fields__["anisotropies"].default)),
                sigma2=float(d.get("sigma2", 1.0)),
                tau2=float(d.get("tau2", 0.0)),
                replicates=int(d["replicates"]),
                alpha=float(d.get("alpha", 0.05)),
                master_seed=int(d.get("master_seed", 20260810)),
            )
        except KeyError as exc:
            raise StudyError(f"config missing required key {exc}") from exc
        except (TypeError, ValueError) as exc:
            raise StudyError(f"invalid config value: {exc}") from exc


@dataclass(frozen=True)
class CellResult:
    method: str
    ratio: float
    angle: float
    effective_range: float
    replicates: int
    n_reject: int
    n_failed: int
    mean_seconds: float
    field_hash: str

    @property
    def rate(self) -> float:
        return self.n_reject / self.replicates

    @property
    def se(self) -> float:
        p = self.rate
        return float(np.sqrt(p * (1 - p) / self.replicates))


@dataclass(frozen=True)
class StudyReport:
    config: StudyConfig
    results: tuple[CellResult, ...]

    def rate(self, method: str, ratio: float, angle: float, xi: float) -> float:
        for r in self.results:
            if (r.method == method and abs(r.ratio - ratio) < 1e-9
                    and abs(r.angle - angle) < 1e-9
                    and abs(r.effective_range - xi) < 1e-9):
                return r.rate
        raise KeyError(f"no cell ({method}, {ratio}, {angle}, {xi})")

    def to_csv(self) -> str:
        """Deterministic machine-readable report (no timing columns)."""
        lines = ["method,ratio,angle,effective_range,replicates,n_reject,n_failed,rate,se,field_hash"]
        for r in self.results:
            lines.append(
                f"{r.method},{r.ratio:.9g},{r.angle:.9g},{r.effective_range:.9g},"
                f"{r.replicates},{r.n_reject},{r.n_failed},{r.rate:.6f},{r.se:.6f},{r.field_hash}"
            )
        return "\n".join(lines) + "\n"

    def table(self) -> str:
        """Aligned human-readable summary, one block per method."""
        xis = list(self.config.effective_ranges)
        lines = []
        lines.append(f"replicates={self.config.replicates}  alpha={self.config.alpha}  "
                     f"seed={self.config.master_seed}")
        for m in self.config.methods:
            lines.append("")
            lines.append(f"[{m.label}] rejection rates")
            header = f"  {'R':>8} {'theta':>8} | " + " ".join(f"xi={xi:<6g}" for xi in xis)
            lines.append(header)
            lines.append("  " + "-" * (len(header) - 2))
            for (ratio, angle) in self.config.anisotropies:
                cells = []
                for xi in xis:
                    try:
                        cells.append(f"{self.rate(m.label, ratio, angle, xi):9.3f}")
                    except KeyError:
                        cells.append(f"{'--':>9}")
                lines.append(f"  {ratio:8.4f} {angle:8.4f} | " + " ".join(cells))
        lines.append("")
        lines.append("mean seconds per test:")
        for m in self.config.methods:
            secs = [r.mean_seconds for r in self.results if r.method == m.label]
            if secs:
                lines.append(f"  {m.label}: {np.mean(secs):.3f}")
        return "\n".join(lines) + "\n"


def _cell_locations(config: StudyConfig, cell_idx: int):
    """Sampling locations of a cell: the full grid for grid designs, one
    uniform draw per cell otherwise (fields then vary over replicates)."""
    kind = config.design["kind"]
    if kind == "grid":
        grid = GridSpec(int(config.design["n_cols"]), int(config.design["n_rows"]),
                        float(config.design.get("spacing", 1.0)))
        domain = Rect(0.0, 0.0, grid.n_cols * grid.spacing, grid.n_rows * grid.spacing)
        return grid.locations(), grid, domain
    w = float(config.design["width"])
    h = float(config.design["height"])
    rng = RngStream(config.master_seed, mix64(_SALT_LOCATIONS, cell_idx))
    return uniform_locations(int(config.design["n"]), w, h, rng), None, Rect(0, 0, w, h)


def _run_one(method: MethodSpec, ds: SpatialDataset, domain: Rect,
             alpha: float, rng: RngStream) -> bool:
    lag_set = default_lag_set(method.lag_scale, method.extra_lag_pair)
    contrast = default_contrast(lag_set)
    window = method.window_spec()
    if method.method == "gsc-g":
        res = gsc_gridded_test(
            ds, lag_set, contrast, window,
            pvalue_mode=method.pvalue_mode or "finite_sample", domain=domain)
        return res.p_value <= alpha
    if method.method == "gsc-u":
        res = gsc_nongridded_test(
            ds, lag_set, contrast, KernelSpec(method.kernel, method.truncation),
            method.bandwidth, window, pvalue_mode=method.pvalue_mode, domain=domain)
        return res.p_value <= alpha
    if method.method == "ms":
        res = ms_test(ds, lag_set, contrast, window, method.n_boot,
                      method.tuning, rng, domain=domain)
        return res.p_value <= alpha
    if method.method == "lz":
        return lz_complete_test(periodogram(ds), alpha).reject
    raise StudyError(f"unknown method {method.method!r}")


def _run_block(config_json: str, cell_idx: int, ratio: float, angle: float,
               xi: float, rep_lo: int, rep_hi: int):
    """Worker: run all methods on replicates [rep_lo, rep_hi) of one cell."""
    config = StudyConfig.from_json(config_json)
    locations, grid, domain = _cell_locations(config, cell_idx)
    cov = ExponentialCovariance.from_effective_range(xi, config.sigma2, config.tau2)
    aniso = None if ratio == 1.0 else AnisotropyParams(ratio, angle)
    sampler = GrfSampler(locations, cov, aniso)
    out = []
    for rep in range(rep_lo, rep_hi):
        field_rng = RngStream(config.master_seed, mix64(_SALT_FIELD, cell_idx, rep))
        ds = sampler.draw(field_rng, grid=grid)
        fhash = hashlib.sha256(ds.values.tobytes()).digest()
        rep_out = {}
        for i, m in enumerate(config.methods):
            mrng = RngStream(config.master_seed, mix64(_SALT_METHOD, cell_idx, rep, i))
            t0 = time.perf_counter()
            try:
                reject = _run_one(m, ds, domain, config.alpha, mrng)
                rep_out[m.label] = (bool(reject), False, time.perf_counter() - t0)
            except Exception:
                rep_out[m.label] = (False, True, time.perf_counter() - t0)
        out.append((rep, fhash, rep_out))
    return cell_idx, rep_lo, out


_BLOCK = 20


def run_power_study(config: StudyConfig, threads: int = 1, progress=None) -> StudyReport:
    """Run the full study; deterministic given (config, master_seed),
    independent of ``threads``."""
    cells = config.cells()
    config_json = config.to_json()
    tasks = []
    for cell_idx, (ratio, angle), xi in cells:
        for lo in range(0, config.replicates, _BLOCK):
            hi = min(lo + _BLOCK, config.replicates)
            tasks.append((config_json, cell_idx, ratio, angle, xi, lo, hi))
    blocks: dict[tuple[int, int], list] = {}
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_block, *t) for t in tasks]
            for done, fut in enumerate(futures):
                cell_idx, lo, out = fut.result()
                blocks[(cell_idx, lo)] = out
                if progress:
                    progress(done + 1, len(tasks))
    else:
        for done, t in enumerate(tasks):
            cell_idx, lo, out = _run_block(*t)
            blocks[(cell_idx, lo)] = out
            if progress:
                progress(done + 1, len(tasks))

    results = []
    for cell_idx, (ratio, angle), xi in cells:
        reps = []
        for lo in range(0, config.replicates, _BLOCK):
            reps.extend(blocks[(cell_idx, lo)])
        reps.sort(key=lambda r: r[0])
        hasher = hashlib.sha256()
        for _, fhash, _ in reps:
            hasher.update(fhash)
        cell_hash = hasher.hexdigest()[:16]
        for m in config.methods:
            stats = [r[2][m.label] for r in reps]
            n_failed = sum(1 for s in stats if s[1])
            if n_failed > 0.05 * config.replicates:
                raise StudyError(
                    f"cell ({m.label}, R={ratio}, theta={angle}, xi={xi}): "
                    f"{n_failed}/{config.replicates} replicates failed"
                )
            results.append(CellResult(
                method=m.label,
                ratio=ratio,
                angle=angle,
                effective_range=xi,
                replicates=config.replicates,
                n_reject=sum(1 for s in stats if s[0]),
                n_failed=n_failed,
                mean_seconds=float(np.mean([s[2] for s in stats])),
                field_hash=cell_hash,
            ))
    return StudyReport(config, tuple(results))


# ---------------------------------------------------------------------------
# Shipped study presets.  Each mirrors one block of the reference
# empirical comparison; the *_fast variants trade replicates for time.

_THETA = 1.1780972450961724  # 3*pi/8
_SQRT2 = 1.4142135623730951


def _grid_design(n_cols, n_rows):
    return {"kind": "grid", "n_cols": n_cols, "n_rows": n_rows, "spacing": 1.0}


def _uniform_design(n, width, height):
    return {"kind": "uniform", "n": n, "width": width, "height": height}


def gvl_a(replicates: int = 500, master_seed: int = 20260810) -> StudyConfig:
    """Gridded comparison, 18x12 grid: quadratic-form test vs spectral test."""
    return StudyConfig(
        design=_grid_design(18, 12),
        methods=(
            MethodSpec("gsc-g", window=(4.0, 3.0), pvalue_mode="finite_sample"),
            MethodSpec("lz"),
        ),
        replicates=replicates,
        master_seed=master_seed,
    )


def gvl_b(replicates: int = 500, master_seed: int = 20260810) -> StudyConfig:
    """Gridded comparison on the larger 25x15 grid."""
    return StudyConfig(
        design=_grid_design(25, 15),
        methods=(
            MethodSpec("gsc-g", window=(5.0, 3.0), pvalue_mode="finite_sample"),
            MethodSpec("lz"),
        ),
        replicates=replicates,
        master_seed=master_seed,
    )


def gvm_a(replicates: int = 200, master_seed: int = 20260810) -> StudyConfig:
    """Uniform-design comparison, n=300 on 16x10: kernel semivariogram test
    (finite-sample p-values, the recommended default below n=500) vs the
    covariogram/bootstrap test."""
    return StudyConfig(
        design=_uniform_design(300, 16.0, 10.0),
        methods=(
            MethodSpec("gsc-u", window=(4.0, 2.0), bandwidth=0.75,
                       pvalue_mode="finite_sample"),
            MethodSpec("ms", window=(4.0, 2.0), n_boot=100, tuning=1.0),
        ),
        replicates=replicates,
        master_seed=master_seed,
    )


def gvm_a_fast(replicates: int = 100, master_seed: int = 20260810) -> StudyConfig:
    """Reduced-replicate variant of gvm-a (wider Monte Carlo tolerance)."""
    return gvm_a(replicates, master_seed)


def gvm_b(replicates: int = 200, master_seed: int = 20260810) -> StudyConfig:
    """Uniform-design comparison, n=450 on 20x10."""
    return StudyConfig(
        design=_uniform_design(450, 20.0, 10.0),
        methods=(
            MethodSpec("gsc-u", window=(4.0, 2.0), bandwidth=0.75,
                       pvalue_mode="finite_sample"),
            MethodSpec("ms", window=(4.0, 2.0), n_boot=100, tuning=1.0),
        ),
        replicates=replicates,
        master_seed=master_seed,
    )


def lagset_study(replicates: int = 100, master_seed: int = 20260810) -> StudyConfig:
    """Effect of the lag set (unit lags, 2.5x lags, six lags), medium range."""
    methods = []
    for label, scale, extra in (("normal", 1.0, False), ("long", 2.5, False),
                                ("more", 1.0, True)):
        methods.append(MethodSpec("gsc-u", label=f"gsc-u-{label}", lag_scale=scale,
                                  extra_lag_pair=extra, window=(4.0, 2.0),
                                  bandwidth=0.75, pvalue_mode="asymptotic"))
        methods.append(MethodSpec("ms", label=f"ms-{label}", lag_scale=scale,
                                  extra_lag_pair=extra, window=(4.0, 2.0), n_boot=75))
    return StudyConfig(
        design=_uniform_design(400, 16.0, 10.0),
        methods=tuple(methods),
        effective_ranges=(6.0,),
        anisotropies=((1.0, 0.0), (_SQRT2, _THETA), (2.0, _THETA)),
        replicates=replicates,
        master_seed=master_seed,
    )


def blocksize_study(replicates: int = 200, master_seed: int = 20260810) -> StudyConfig:
    """Effect of the window/block size (3x2, 4x2, 5x3), medium range."""
    methods = []
    for label, win in (("small", (3.0, 2.0)), ("normal", (4.0, 2.0)),
                       ("large", (5.0, 3.0))):
        methods.append(MethodSpec("gsc-u", label=f"gsc-u-{label}", window=win,
                                  bandwidth=0.75, pvalue_mode="asymptotic"))
        methods.append(MethodSpec("ms", label=f"ms-{label}", window=win, n_boot=100))
    return StudyConfig(
        design=_uniform_design(300, 16.0, 10.0),
        methods=tuple(methods),
        effective_ranges=(6.0,),
        anisotropies=((1.0, 0.0), (_SQRT2, 0.0), (2.0, 0.0)),
        replicates=replicates,
        master_seed=master_seed,
    )


def bandwidth_study(replicates: int = 100, master_seed: int = 20260810,
                    pvalue_mode: str = "asymptotic") -> StudyConfig:
    """Bandwidth sensitivity of the kernel semivariogram test (isotropic)."""
    methods = tuple(
        MethodSpec("gsc-u", label=f"gsc-u-w{w}", window=(4.0, 2.0), bandwidth=w,
                   pvalue_mode=pvalue_mode)
        for w in (0.65, 0.75, 0.85)
    )
    return StudyConfig(
        design=_uniform_design(400, 16.0, 10.0),
        methods=methods,
        anisotropies=((1.0, 0.0),),
        replicates=replicates,
        master_seed=master_seed,
    )


PRESETS = {
    "gvl-a": gvl_a,
    "gvl-b": gvl_b,
    "gvm-a": gvm_a,
    "gvm-a-fast": gvm_a_fast,
    "gvm-b": gvm_b,
    "lagset": lagset_study,
    "blocksize": blocksize_study,
    "bandwidth": bandwidth_study,
}


def get_preset(name: str, **kwargs) -> StudyConfig:
    try:
        return PRESETS[name](**kwargs)
    except KeyError:
        raise StudyError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None

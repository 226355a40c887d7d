"""Experiment runners behind the ``darek`` command line.

Each ``run_*`` function takes an :class:`ExperimentConfig`, writes CSV
(and JSON) files into ``cfg.out`` and returns a small summary dict.  All
randomness flows from ``cfg.seed`` and floats are written with ``repr`` so
the files are byte-identical across runs on one platform.  Timing columns
of the benchmark are the exception.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import statistics
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .baselines import ensemble_predict, ensemble_train, gp_fit, gp_predict
from .bound import DarekBounder, LipschitzBudget
from .errors import DarekValidationError
from .kan import TrainConfig, forward, init_network, select_knot_indices, train
from .poly import locate_segment
from .scan import LaserScan, Pose, load_scan, sdf_samples, synth_scan

log = logging.getLogger(__name__)

ENCLOSURE_TOL = 1e-12
EXPERIMENTS = ("cos1", "cos2", "compare", "scan", "bench")

# per-experiment defaults that differ from the dataclass defaults
_DEFAULTS = {
    "cos1": {},
    "cos2": {"widths": (1, 2, 1)},
    "compare": {"widths": (1, 2, 1)},
    "scan": {"widths": (2, 20, 1), "n_knots": 20, "epochs": 500, "lr": 0.05},
    "bench": {},
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "cos1"
    seed: int = 0
    order: int = 3
    l1: float = 1.0
    lk1: float = 1.0
    n_samples: int = 20
    n_knots: int = 9
    epochs: int = 200
    lr: float = 1.0
    init_scale: float = 0.1
    widths: tuple = (1, 1)
    grid: int = 400
    out: str = "results"
    knot_errors: str = "piece"
    plot: bool = False
    # compare
    ensemble_q: int = 10
    gp_lengthscale: float = 1.0
    gp_variance: float = 1.0
    # scan
    scan_file: str | None = None
    shape: str = "circle"
    radius: float = 1.0
    dist: float = 3.0
    rays: int = 40
    test_angles: int = 180
    # bench
    bench_sizes: tuple = (16, 64, 256, 1024)
    bench_queries: int = 1000

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise DarekValidationError(f"unknown experiment {self.experiment!r}")
        if self.order < 1:
            raise DarekValidationError("order must be >= 1")
        if self.l1 < 0 or self.lk1 < 0:
            raise DarekValidationError("Lipschitz constants must be non-negative")
        if self.n_knots < self.order + 1:
            raise DarekValidationError(f"need at least {self.order + 1} knots for order {self.order}")
        if self.n_samples < self.n_knots:
            raise DarekValidationError("n_samples must be >= n_knots")
        if self.epochs < 0 or not self.lr > 0:
            raise DarekValidationError("epochs must be >= 0 and lr > 0")
        if self.grid < 2 or self.test_angles < 1:
            raise DarekValidationError("grid needs >= 2 points and test_angles >= 1")
        if self.ensemble_q < 2:
            raise DarekValidationError("ensemble_q must be >= 2")
        if self.knot_errors not in ("piece", "table"):
            raise DarekValidationError("knot_errors must be 'piece' or 'table'")
        object.__setattr__(self, "widths", tuple(int(w) for w in self.widths))
        object.__setattr__(self, "bench_sizes", tuple(int(m) for m in self.bench_sizes))

    @classmethod
    def for_experiment(cls, experiment: str, **overrides) -> "ExperimentConfig":
        """Config with the experiment's own defaults, then ``overrides``."""
        if experiment not in EXPERIMENTS:
            raise DarekValidationError(f"unknown experiment {experiment!r}")
        known = {f.name for f in fields(cls)}
        bad = set(overrides) - known
        if bad:
            raise DarekValidationError(f"unknown config keys: {sorted(bad)}")
        return cls(**{**_DEFAULTS[experiment], **overrides, "experiment": experiment})

    @classmethod
    def from_json_file(cls, path, experiment: str, **overrides) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise DarekValidationError("config file must hold a JSON object")
        data.pop("experiment", None)
        return cls.for_experiment(experiment, **{**data, **overrides})

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def budget(self) -> LipschitzBudget:
        return LipschitzBudget(self.l1, self.lk1, self.order)

    @property
    def train_config(self) -> TrainConfig:
        return TrainConfig(self.epochs, self.lr, self.seed, self.init_scale)


def _outdir(cfg) -> Path:
    p = Path(cfg.out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _write_csv(path, header, columns) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([v if isinstance(v, (int, str)) else repr(float(v)) for v in row])


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def enclosure_rate(truth, lo, hi, tol: float = ENCLOSURE_TOL) -> float:
    """Fraction of points with ``lo - tol <= truth <= hi + tol``."""
    truth, lo, hi = (np.asarray(a, dtype=float) for a in (truth, lo, hi))
    inside = (truth >= lo - tol) & (truth <= hi + tol)
    return float(np.count_nonzero(inside)) / inside.size


def _plot(path, x, series, band=None, xlabel="x"):
    # imported lazily: matplotlib is an optional extra
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 3.5))
    if band is not None:
        ax.fill_between(x, band[0], band[1], alpha=0.25, label="bound")
    for label, y in series.items():
        ax.plot(x, y, label=label, lw=1)
    ax.set_xlabel(xlabel)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


# --------------------------------------------------------------------- cos


def cos_data(cfg: ExperimentConfig):
    x = np.linspace(-2 * np.pi, 2 * np.pi, cfg.n_samples)
    return x, np.cos(x)


def _train_cos(cfg: ExperimentConfig, seed: int | None = None):
    seed = cfg.seed if seed is None else seed
    x, y = cos_data(cfg)
    idx = select_knot_indices(x, cfg.n_knots, cfg.seed)
    net = init_network(cfg.widths, [x[idx]], x, cfg.n_knots, cfg.order, seed=seed,
                       init_scale=cfg.init_scale)
    net, history = train(net, x, y, replace(cfg.train_config, seed=seed))
    return net, history, x, y, idx


def _run_cos(cfg: ExperimentConfig, name: str) -> dict:
    out = _outdir(cfg)
    net, history, x, y, idx = _train_cos(cfg)
    bounder = DarekBounder(net, x[idx], y[idx], cfg.budget, cfg.knot_errors)
    g = np.linspace(-2 * np.pi, 2 * np.pi, cfg.grid)
    f_hat, u = bounder.query_batch(g)
    f_true = np.cos(g)
    lo, hi = f_hat - u, f_hat + u
    _write_csv(out / f"{name}.csv", ["x", "f_true", "f_hat", "u", "lo", "hi"],
               [g, f_true, f_hat, u, lo, hi])
    _write_csv(out / f"{name}_knots.csv", ["x", "y", "knot_error"],
               [x[idx], y[idx], bounder.knot_errors])
    summary = {
        "experiment": name,
        "config": cfg.to_dict(),
        "enclosure_rate": enclosure_rate(f_true, lo, hi),
        "enclosure_tol": ENCLOSURE_TOL,
        "train_rmse": math.sqrt(history[-1]),
        "max_knot_error": float(np.max(np.abs(bounder.knot_errors))),
        "max_bound": float(np.max(u)),
        "fallback_units": bounder.fallback_units,
    }
    _write_json(out / f"{name}_summary.json", summary)
    if cfg.plot:
        _plot(out / f"{name}.svg", g, {"cos": f_true, "KAN": f_hat}, (lo, hi))
    return summary


def run_cos1(cfg: ExperimentConfig) -> dict:
    """One-layer fit of cos on ``[-2 pi, 2 pi]`` with its error band."""
    return _run_cos(cfg, "cos1")


def run_cos2(cfg: ExperimentConfig) -> dict:
    """Same data as :func:`run_cos1` through a two-layer network."""
    return _run_cos(cfg, "cos2")


def _median_latency(fn, args, n: int) -> float:
    times = []
    for a in args[:n]:
        t0 = time.perf_counter()
        fn(a)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def run_compare(cfg: ExperimentConfig) -> dict:
    """DAREK band next to a deep ensemble and a GP on the cos data."""
    out = _outdir(cfg)
    net, _, x, y, idx = _train_cos(cfg)
    bounder = DarekBounder(net, x[idx], y[idx], cfg.budget, cfg.knot_errors)

    def build(seed):
        return init_network(cfg.widths, [x[idx]], x, cfg.n_knots, cfg.order, seed=seed,
                            init_scale=cfg.init_scale)

    ens = ensemble_train(build, x, y, cfg.ensemble_q, base_seed=cfg.seed + 1, cfg=cfg.train_config)
    gp = gp_fit(x, y, cfg.gp_lengthscale, cfg.gp_variance)

    g = np.linspace(-2 * np.pi, 2 * np.pi, cfg.grid)
    f_true = np.cos(g)
    d_pred, d_u = bounder.query_batch(g)
    e_mean, e_std = ensemble_predict(ens, g)
    gp_mean, gp_var = gp_predict(gp, g)
    gp_std = np.sqrt(gp_var)
    _write_csv(
        out / "compare.csv",
        ["x", "f_true", "darek_pred", "darek_lo", "darek_hi", "ens_mean", "ens_lo", "ens_hi",
         "gp_mean", "gp_lo", "gp_hi"],
        [g, f_true, d_pred, d_pred - d_u, d_pred + d_u, e_mean, e_mean - 3 * e_std,
         e_mean + 3 * e_std, gp_mean, gp_mean - 3 * gp_std, gp_mean + 3 * gp_std],
    )
    pts = [np.array([v]) for v in g]
    summary = {
        "experiment": "compare",
        "config": cfg.to_dict(),
        "ensemble_members": len(ens.members),
        "enclosure_rate": {
            "darek": enclosure_rate(f_true, d_pred - d_u, d_pred + d_u),
            "ensemble": enclosure_rate(f_true, e_mean - 3 * e_std, e_mean + 3 * e_std),
            "gp": enclosure_rate(f_true, gp_mean - 3 * gp_std, gp_mean + 3 * gp_std),
        },
        # latencies vary run to run, so they live only in the summary
        "median_query_seconds": {
            "darek": _median_latency(bounder.query, pts, len(pts)),
            "ensemble": _median_latency(lambda p: ensemble_predict(ens, p), pts, len(pts)),
            "gp": _median_latency(lambda p: gp_predict(gp, p), pts, len(pts)),
        },
    }
    _write_json(out / "compare_summary.json", summary)
    if cfg.plot:
        _plot(out / "compare.svg", g, {"cos": f_true, "darek lo": d_pred - d_u, "darek hi": d_pred + d_u,
                                       "ens lo": e_mean - 3 * e_std, "ens hi": e_mean + 3 * e_std,
                                       "gp lo": gp_mean - 3 * gp_std, "gp hi": gp_mean + 3 * gp_std})
    return summary


# -------------------------------------------------------------------- scan


def quantile_knots(x: np.ndarray, n_knots: int) -> list:
    """Per-coordinate knot sequences at evenly spaced quantiles of ``x``."""
    q = np.linspace(0.0, 1.0, n_knots)
    knots = []
    for d in range(x.shape[1]):
        t = np.quantile(x[:, d], q)
        if np.any(np.diff(t) <= 0):
            # repeated coordinates (e.g. one ray): fall back to an even split of the range
            lo, hi = float(x[:, d].min()), float(x[:, d].max())
            if hi - lo < 1e-9:
                lo, hi = lo - 0.5, hi + 0.5
            t = np.linspace(lo, hi, n_knots)
        knots.append(t)
    return knots


def _zero_crossing(net, origin, direction, r_lo, r_hi, n=400):
    """First ``+`` to ``-`` sign change of the SDF along a ray, or ``None``."""
    rr = np.linspace(r_lo, r_hi, n)
    f = net(origin + rr[:, None] * direction)[:, 0]
    hits = np.nonzero((f[:-1] > 0) & (f[1:] <= 0))[0]
    if hits.size == 0:
        return None
    i = int(hits[0])
    if f[i + 1] == 0:
        return float(rr[i + 1])
    return float(brentq(lambda r: net(origin + r * direction)[0, 0], rr[i], rr[i + 1], xtol=1e-12))


def run_scan(cfg: ExperimentConfig, scan: LaserScan | None = None, obstacle=None) -> dict:
    """Learn a truncated SDF from one scan and bound the recovered boundary.

    Without ``scan`` the config's file or synthetic generator is used.  The
    true boundary is known only for synthetic scans (or a given
    ``obstacle``); for file scans the measured ranges interpolated in angle
    stand in for it.
    """
    out = _outdir(cfg)
    if scan is None:
        if cfg.scan_file:
            scan = load_scan(cfg.scan_file)
        else:
            scan, obstacle = synth_scan(cfg.shape, Pose(), cfg.rays, cfg.seed, cfg.radius, cfg.dist)
    x, y, _ = sdf_samples(scan)
    n_knots = min(cfg.n_knots, x.shape[0])
    idx = select_knot_indices(x, n_knots, cfg.seed)
    net = init_network(cfg.widths, quantile_knots(x, n_knots), x, n_knots, cfg.order,
                       seed=cfg.seed, init_scale=cfg.init_scale)
    net, history = train(net, x, y, cfg.train_config)
    bounder = DarekBounder(net, x[idx], y[idx], cfg.budget, cfg.knot_errors, strict_inputs=False)

    pred, u = bounder.query_batch(x)
    _write_csv(out / "scan_sdf.csv", ["x", "y", "sdf_true", "prediction", "bound", "lo", "hi"],
               [x[:, 0], x[:, 1], y, pred, u, pred - u, pred + u])

    theta = (np.array([scan.theta[0]]) if cfg.test_angles == 1 or len(scan) == 1
             else np.linspace(scan.theta[0], scan.theta[-1], cfg.test_angles))
    dirs = scan.directions(theta)
    if obstacle is not None:
        r_true = obstacle.ray_cast(scan.origin, dirs)
    else:
        r_true = np.interp(theta, scan.theta, scan.range)
    r_lo, r_hi = max(1e-6, float(scan.range.min()) - 0.5), float(scan.range.max()) + 0.5
    cols = {k: [] for k in ("theta", "r_true", "r_hat", "bound", "x_hat", "y_hat", "enclosed")}
    for th, d, rt in zip(theta, dirs, r_true):
        rh = _zero_crossing(net, scan.origin, d, r_lo, r_hi)
        if rh is None:
            rh_v, ub, xh, yh, ok = math.nan, math.nan, math.nan, math.nan, 0
        else:
            p = scan.origin + rh * d
            _, ub_arr = bounder.query_batch(p[None])
            ub = float(ub_arr[0])
            rh_v, xh, yh = rh, float(p[0]), float(p[1])
            ok = int(abs(rt - rh) <= ub + ENCLOSURE_TOL)
        for key, v in zip(cols, (th, rt, rh_v, ub, xh, yh, ok)):
            cols[key].append(v)
    _write_csv(out / "scan_boundary.csv", list(cols), list(cols.values()))
    enclosed = np.array(cols["enclosed"])
    summary = {
        "experiment": "scan",
        "config": cfg.to_dict(),
        "n_rays": len(scan),
        "n_train": int(x.shape[0]),
        "train_rmse": math.sqrt(history[-1]),
        "enclosure_rate": float(np.count_nonzero(enclosed)) / enclosed.size,
        "missing_crossings": int(np.count_nonzero(np.isnan(cols["r_hat"]))),
        "median_bound": float(np.nanmedian(cols["bound"])) if not np.all(np.isnan(cols["bound"])) else None,
        "fallback_units": bounder.fallback_units,
    }
    _write_json(out / "scan_summary.json", summary)
    if cfg.plot:
        rh = np.array(cols["r_hat"])
        ub = np.array(cols["bound"])
        _plot(out / "scan_boundary.svg", theta, {"R true": r_true, "R hat": rh}, (rh - ub, rh + ub),
              xlabel="theta [rad]")
    return summary


# ------------------------------------------------------------------- bench


def _bench_network(cfg: ExperimentConfig, m: int, seed: int):
    """Untrained cos-style network with ``m`` knots per input."""
    x = np.linspace(-2 * np.pi, 2 * np.pi, m)
    net = init_network(cfg.widths, [x], x, m, cfg.order, seed=seed, init_scale=cfg.init_scale)
    return net, x


def run_bench(cfg: ExperimentConfig) -> dict:
    """Bound-query latency against knot count and against an ensemble."""
    out = _outdir(cfg)
    rng = np.random.default_rng(cfg.seed)
    n = cfg.bench_queries
    rows = {k: [] for k in ("m", "darek_median_s", "ensemble_median_s", "gp_fit_s",
                            "max_comparisons", "comparison_limit")}
    for m in cfg.bench_sizes:
        net, x = _bench_network(cfg, m, cfg.seed)
        y = np.cos(x)
        bounder = DarekBounder(net, x, y, cfg.budget, cfg.knot_errors)
        members = [_bench_network(cfg, m, cfg.seed + i + 1)[0] for i in range(cfg.ensemble_q)]
        queries = [np.array([v]) for v in rng.uniform(x[0], x[-1], n)]
        bounder.query(queries[0])  # warm-up
        t_darek = _median_latency(bounder.query, queries, n)
        t_ens = _median_latency(lambda p: [forward(net_i, p) for net_i in members], queries, n)
        t0 = time.perf_counter()
        gp_fit(x, y, cfg.gp_lengthscale, cfg.gp_variance)
        t_gp = time.perf_counter() - t0
        knots = x.tolist()
        comps = []
        for q in queries:
            counter = []
            locate_segment(knots, float(q[0]), cfg.order, counter)
            comps.append(counter[0])
        for key, v in zip(rows, (m, t_darek, t_ens, t_gp, max(comps), math.ceil(math.log2(m)) + 1)):
            rows[key].append(v)
    _write_csv(out / "bench.csv", list(rows), list(rows.values()))
    summary = {
        "experiment": "bench",
        "config": cfg.to_dict(),
        "rows": [dict(zip(rows, r)) for r in zip(*rows.values())],
    }
    if len(cfg.bench_sizes) > 1:
        summary["latency_ratio_last_first"] = rows["darek_median_s"][-1] / rows["darek_median_s"][0]
    _write_json(out / "bench_summary.json", summary)
    return summary


RUNNERS = {"cos1": run_cos1, "cos2": run_cos2, "compare": run_compare, "scan": run_scan,
           "bench": run_bench}


def run(cfg: ExperimentConfig) -> dict:
    log.info("running %s (seed %d) into %s", cfg.experiment, cfg.seed, cfg.out)
    return RUNNERS[cfg.experiment](cfg)

"""Command-line interface: ``wmtest {fit,classify,tune,gen-gmm,detect,bench}``.

Exit codes: 0 success, 2 input error, 3 numerical or solver failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .batch import binomial_risk_bound, vote
from .changepoint import DetectorConfig, calibrate_threshold, edd_csv, edd_table, run_detector, run_hotelling
from .core import Dataset, DimensionError, get_metric
from .data import gmm_pair
from .io import InputError, format_row, read_samples, write_samples
from .lfd import Radii
from .lp import NumericalError
from .radius import cv_select_radius, default_grid
from .robust import ExtendedTest, KernelSpec, ModelFormatError, fit, silverman_bandwidth

log = logging.getLogger("wmtest")

EXIT_OK, EXIT_INPUT, EXIT_SOLVER = 0, 2, 3


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def load_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{p}: no such config file")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"{p}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise InputError(f"{p}: config must be a JSON object")
    return doc


def _pick(flag, cfg: dict, section: str, key: str, default=None):
    """Flag value if given, else the config file's ``section.key``, else ``default``."""
    if flag is not None:
        return flag
    sec = cfg.get(section, {})
    if isinstance(sec, dict) and key in sec:
        return sec[key]
    return default


def _parse_grid(text) -> list[float] | None:
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise InputError(f"cannot parse radius grid {text!r}") from None


def _radii(args, cfg) -> Radii | None:
    both = _pick(args.theta, cfg, "radii", "theta")
    t1 = _pick(args.theta1, cfg, "radii", "theta1", both)
    t2 = _pick(args.theta2, cfg, "radii", "theta2", both)
    if t1 is None and t2 is None:
        return None
    if t1 is None or t2 is None:
        raise InputError("give both --theta1 and --theta2, or --theta")
    return Radii(float(t1), float(t2))


def _metric(args, cfg):
    name = cfg.get("metric") if isinstance(cfg.get("metric"), str) else "euclid"
    return get_metric(_pick(args.metric, cfg, "metric", "name", name))


def _seed(args, cfg, section: str) -> int:
    return int(_pick(args.seed, cfg, section, "seed", cfg.get("seed", 0)))


def _kernel(args, cfg, points) -> KernelSpec:
    family = _pick(args.kernel, cfg, "kernel", "family", "gaussian")
    h = _pick(args.bandwidth, cfg, "kernel", "bandwidth")
    if h is None:
        h = silverman_bandwidth(points)
        log.info("bandwidth (rule of thumb): %.6g", h)
    return KernelSpec(family, float(h))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _fit_from_arrays(x1, x2, args, cfg):
    if x1.shape[1] != x2.shape[1]:
        raise InputError(f"dimension mismatch: {args.train1} has {x1.shape[1]} columns, {args.train2} has {x2.shape[1]}")
    d1, d2 = Dataset.h0(x1), Dataset.h1(x2)
    metric = _metric(args, cfg)
    kernel = _kernel(args, cfg, np.vstack([x1, x2]))
    radii = _radii(args, cfg)
    seed = _seed(args, cfg, "cv")
    if radii is None:
        folds = int(_pick(args.cv_folds, cfg, "cv", "folds", 5))
        grid = _parse_grid(_pick(args.cv_grid, cfg, "cv", "grid")) or default_grid(d1, d2, metric)
        report = cv_select_radius(d1, d2, grid, folds=folds, seed=seed, kernel=kernel, metric=metric)
        radii = Radii.equal(report.suggested_theta)
        log.info("cross-validated theta: %r", report.suggested_theta)
        print(f"theta (cross-validated, {folds} folds): {report.suggested_theta!r}")
    model = fit(d1, d2, radii, kernel=kernel, metric=metric)
    return model


def cmd_fit(args, cfg) -> int:
    x1 = read_samples(args.train1, args.header)
    x2 = read_samples(args.train2, args.header)
    model = _fit_from_arrays(x1, x2, args, cfg)
    model.save(args.output)
    t = model.support_test
    print(f"psi*: {model.lfds.psi_star!r}")
    print(f"eps*: {t.eps_star!r}")
    print(f"lambda1: {t.lambda1!r}")
    print(f"lambda2: {t.lambda2!r}")
    print(f"duality gap: {abs(t.eps_star - model.lfds.psi_star):.3e}")
    print(f"theta: ({model.radii.theta1!r}, {model.radii.theta2!r})  bandwidth: {model.kernel.h!r}")
    for m, (pt, pi) in enumerate(zip(model.pooled.points, t.pi_hat)):
        log.info("pi_hat[%d] at %s = %r", m, format_row(pt), float(pi))
    if args.print_support:
        print("support test values:")
        for pt, pi in zip(model.pooled.points, t.pi_hat):
            print(f"  {format_row(pt)} -> {float(pi)!r}")
    print(f"model written to {args.output}")
    return EXIT_OK


def classify_lines(model: ExtendedTest, x: np.ndarray, batch: int | None) -> list[str]:
    values = model.evaluate_many(x)
    if not batch:
        lines = ["row,pi,decision"]
        for i, v in enumerate(values, start=1):
            lines.append(f"{i},{float(v)!r},{'H0' if v >= 0.5 else 'H1'}")
        return lines
    bound = binomial_risk_bound(min(max(model.eps_star, 0.0), 1.0), batch)
    lines = [f"# eps*={model.eps_star!r} m={batch} binomial_risk_bound={bound!r}",
             "batch,first_row,last_row,vote_fraction,decision"]
    for k, start in enumerate(range(0, values.size, batch), start=1):
        chunk = values[start:start + batch]
        dec = vote(chunk)
        lines.append(f"{k},{start + 1},{start + chunk.size},{dec.vote_fraction!r},{dec.decision.value}")
    return lines


def cmd_classify(args, cfg) -> int:
    try:
        model = ExtendedTest.load(args.model)
    except FileNotFoundError:
        raise InputError(f"{args.model}: no such model file") from None
    x = read_samples(args.test, args.header)
    if x.shape[1] != model.dim:
        raise InputError(f"{args.test} has {x.shape[1]} columns, model expects {model.dim}")
    batch = _pick(args.batch, cfg, "batch", "m")
    if batch is not None and int(batch) < 1:
        raise InputError("--batch must be a positive integer")
    text = "\n".join(classify_lines(model, x, int(batch) if batch else None)) + "\n"
    _emit(text, args.output)
    return EXIT_OK


def cmd_tune(args, cfg) -> int:
    x1 = read_samples(args.train1, args.header)
    x2 = read_samples(args.train2, args.header)
    if x1.shape[1] != x2.shape[1]:
        raise InputError(f"dimension mismatch: {x1.shape[1]} vs {x2.shape[1]} columns")
    d1, d2 = Dataset.h0(x1), Dataset.h1(x2)
    metric = _metric(args, cfg)
    kernel = _kernel(args, cfg, np.vstack([x1, x2]))
    folds = int(_pick(args.cv_folds, cfg, "cv", "folds", 5))
    grid = _parse_grid(_pick(args.cv_grid, cfg, "cv", "grid")) or default_grid(d1, d2, metric)
    seed = _seed(args, cfg, "cv")
    report = cv_select_radius(d1, d2, grid, folds=folds, seed=seed, kernel=kernel, metric=metric)
    lines = ["theta,heldout_risk"] + [f"{t!r},{r!r}" for t, r in report.cv_table]
    _emit("\n".join(lines) + "\n", args.output)
    print(f"selected theta: {report.suggested_theta!r}  (n2/n1 = {report.ratio:.3g}"
          f"{', outside the recommended range' if report.ratio_flagged else ''})", file=sys.stderr)
    return EXIT_OK


def cmd_gen_gmm(args, cfg) -> int:
    x1, x2 = gmm_pair(args.dim, args.n, args.seed)
    write_samples(args.out1, x1)
    write_samples(args.out2, x2)
    print(f"wrote {x1.shape[0]} rows to {args.out1} and {x2.shape[0]} rows to {args.out2}")
    return EXIT_OK


def _detector_config(args, cfg) -> DetectorConfig:
    window = int(_pick(args.window, cfg, "detector", "window", 10))
    theta = _radii(args, cfg) or Radii.equal(0.3)
    h = _pick(args.bandwidth, cfg, "kernel", "bandwidth", 0.5)
    family = _pick(args.kernel, cfg, "kernel", "family", "gaussian")
    b = float(_pick(args.threshold, cfg, "detector", "threshold", 1.0))
    metric = _metric(args, cfg)
    return DetectorConfig(window=window, radii=theta, kernel=KernelSpec(family, float(h)), threshold=b,
                          metric=metric, incremental=not args.full_recompute)


def cmd_detect(args, cfg) -> int:
    x = read_samples(args.stream, args.header)
    dcfg = _detector_config(args, cfg)
    if x.shape[0] < 2 * dcfg.window + 1:
        raise InputError(f"{args.stream}: {x.shape[0]} samples, window {dcfg.window} needs at least {2 * dcfg.window + 1}")
    baseline = _pick(args.baseline, cfg, "detector", "baseline")
    hb = float(_pick(args.hotelling_threshold, cfg, "detector", "hotelling_threshold", dcfg.threshold))
    tr = run_detector(x, dcfg)
    Path(args.trace).write_text(tr.to_csv(), encoding="utf-8")
    print(f"LFD detector: alarm at t={tr.alarm}" if tr.alarm else "LFD detector: no alarm")
    if baseline == "hotelling":
        ht = run_hotelling(x, hb, burn_in=dcfg.window)
        hpath = Path(args.trace).with_name(Path(args.trace).stem + "_hotelling.csv")
        hpath.write_text(ht.to_csv(), encoding="utf-8")
        print(f"Hotelling baseline: alarm at t={ht.alarm}" if ht.alarm else "Hotelling baseline: no alarm")
        print(f"baseline trace written to {hpath}")
    elif baseline is not None:
        raise InputError(f"unknown baseline {baseline!r}; available: hotelling")
    if args.edd:
        if not args.null or args.change_at is None:
            raise InputError("--edd needs --null streams and --change-at")
        nulls = [read_samples(p, args.header) for p in args.null]
        changes = [(read_samples(p, args.header), args.change_at) for p in ([args.stream] + (args.change or []))]
        null_tr = [run_detector(s, dcfg) for s in nulls]
        change_tr = [(run_detector(s, dcfg), tau) for s, tau in changes]
        if args.thresholds:
            thresholds = _parse_grid(args.thresholds)
        else:
            thresholds = sorted({calibrate_threshold(null_tr, a) for a in (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35)})
        Path(args.edd).write_text(edd_csv(edd_table(null_tr, change_tr, thresholds)), encoding="utf-8")
        if baseline == "hotelling":
            hn = [run_hotelling(s, hb, burn_in=dcfg.window) for s in nulls]
            hc = [(run_hotelling(s, hb, burn_in=dcfg.window), tau) for s, tau in changes]
            ht_thr = sorted({calibrate_threshold(hn, a) for a in (0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35)})
            epath = Path(args.edd).with_name(Path(args.edd).stem + "_hotelling.csv")
            epath.write_text(edd_csv(edd_table(hn, hc, ht_thr)), encoding="utf-8")
        print(f"EDD table written to {args.edd}")
    print(f"trace written to {args.trace}")
    return EXIT_OK


def bench_gmm(dim: int, n: int, trials: int, seed: int, m_max: int = 10, n_test: int = 1000,
              theta: float | None = None, bandwidth: float | None = None, folds: int = 5,
              grid: list[float] | None = None) -> list[tuple[int, float]]:
    """Mean batch risk (average of the two error rates) for ``m = 1..m_max``."""
    if trials < 1:
        raise InputError("trials must be at least 1")
    risks = np.zeros((trials, m_max))
    for k in range(trials):
        s_train, s_test = np.random.SeedSequence([seed, k]).spawn(2)
        x1, x2 = gmm_pair(dim, n, int(s_train.generate_state(1)[0]))
        t1, t2 = gmm_pair(dim, n_test, int(s_test.generate_state(1)[0]))
        h = bandwidth if bandwidth is not None else silverman_bandwidth(np.vstack([x1, x2]))
        kernel = KernelSpec("gaussian", h)
        d1, d2 = Dataset.h0(x1), Dataset.h1(x2)
        if theta is None:
            rep = cv_select_radius(d1, d2, grid or default_grid(d1, d2), folds=folds, seed=seed + k, kernel=kernel)
            th = rep.suggested_theta
        else:
            th = theta
        model = fit(d1, d2, Radii.equal(th), kernel=kernel)
        v1 = model.evaluate_many(t1)
        v2 = model.evaluate_many(t2)
        for m in range(1, m_max + 1):
            nb = n_test // m
            f1 = v1[: nb * m].reshape(nb, m).mean(axis=1)
            f2 = v2[: nb * m].reshape(nb, m).mean(axis=1)
            # a batch votes H0 when at least half its mass says so
            risks[k, m - 1] = 0.5 * (np.mean(f1 < 0.5) + np.mean(f2 >= 0.5))
    return [(m, float(risks[:, m - 1].mean())) for m in range(1, m_max + 1)]


def cmd_bench(args, cfg) -> int:
    if args.suite != "gmm":
        raise InputError(f"unknown suite {args.suite!r}; available: gmm")
    rows = bench_gmm(args.dim, args.n, args.trials, _seed(args, cfg, "bench"), m_max=args.m_max,
                     n_test=args.n_test, theta=_pick(args.theta, cfg, "radii", "theta"),
                     bandwidth=_pick(args.bandwidth, cfg, "kernel", "bandwidth"),
                     folds=int(_pick(args.cv_folds, cfg, "cv", "folds", 5)),
                     grid=_parse_grid(_pick(args.cv_grid, cfg, "cv", "grid")))
    text = "m,risk\n" + "".join(f"{m},{r!r}\n" for m, r in rows)
    _emit(text, args.output)
    return EXIT_OK


def _emit(text: str, path) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, radii: bool = True, kernel: bool = True) -> None:
    p.add_argument("--header", action="store_true", help="skip the first line of each CSV input")
    p.add_argument("--config", help="JSON file with radii/kernel/metric/cv/detector sections; flags override it")
    p.add_argument("--metric", choices=["euclid"], default=None)
    p.add_argument("--seed", type=int, default=None)
    if radii:
        p.add_argument("--theta", type=float, help="radius for both classes")
        p.add_argument("--theta1", type=float)
        p.add_argument("--theta2", type=float)
    if kernel:
        p.add_argument("--bandwidth", type=float, help="kernel bandwidth h (default: rule of thumb)")
        p.add_argument("--kernel", choices=["gaussian", "epanechnikov"], default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wmtest", description="Wasserstein minimax hypothesis tests.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a robust test from two training CSVs")
    p.add_argument("train1")
    p.add_argument("train2")
    p.add_argument("-o", "--output", default="model.json")
    p.add_argument("--cv-folds", type=int)
    p.add_argument("--cv-grid", help="comma-separated radii to cross-validate")
    p.add_argument("--print-support", action="store_true", help="list the test value at every training point")
    _common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("classify", help="apply a saved model to a CSV of samples")
    p.add_argument("model")
    p.add_argument("test")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--batch", type=int, help="majority vote over consecutive groups of this size")
    _common(p, radii=False, kernel=False)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("tune", help="cross-validate the radius")
    p.add_argument("train1")
    p.add_argument("train2")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--cv-folds", type=int)
    p.add_argument("--cv-grid")
    _common(p, radii=False)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("gen-gmm", help="generate the two-class Gaussian mixture data")
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--n", type=int, default=10, help="samples per class")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out1", default="gmm_h0.csv")
    p.add_argument("--out2", default="gmm_h1.csv")
    p.set_defaults(func=cmd_gen_gmm)

    p = sub.add_parser("detect", help="run the change detector on a stream CSV")
    p.add_argument("stream")
    p.add_argument("--trace", default="trace.csv")
    p.add_argument("--window", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--baseline", choices=["hotelling"])
    p.add_argument("--hotelling-threshold", type=float)
    p.add_argument("--full-recompute", action="store_true", help="recompute every window's costs from scratch")
    p.add_argument("--edd", help="write an EDD table here (needs --null and --change-at)")
    p.add_argument("--null", nargs="+", help="null (no-change) stream CSVs for calibration")
    p.add_argument("--change", nargs="+", help="extra change stream CSVs, all with the same change time")
    p.add_argument("--change-at", type=int, help="1-indexed change time of the change streams")
    p.add_argument("--thresholds", help="comma-separated thresholds for the EDD table")
    _common(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("bench", help="batch-size benchmark on synthetic data")
    p.add_argument("suite", choices=["gmm"])
    p.add_argument("--dim", type=int, default=10)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--m-max", type=int, default=10)
    p.add_argument("--n-test", type=int, default=1000)
    p.add_argument("--cv-folds", type=int)
    p.add_argument("--cv-grid")
    p.add_argument("-o", "--output", default="-")
    _common(p)
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(getattr(args, "config", None))
        return args.func(args, cfg)
    except (InputError, DimensionError, ModelFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

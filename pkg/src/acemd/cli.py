"""Command-line workflows: decompose, filter, spectrum, compare.

All diagnostics go to stderr; data goes to files in ``--out-dir``. Exit code
0 means success; each error class has its own nonzero code (see
``acemd.core``).
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import analysis, io, spectral
from .core import (
    AcemdError,
    DateRangeMismatch,
    Decomposition,
    EnsembleConfig,
    ModeCountMismatch,
    TimeSeries,
)
from .emd import _emd_arrays, emd
from .ensemble import DEFAULT_SIGMA_GRID, ace_emd, ceemd, diagnose, eemd, select_sigma

log = logging.getLogger("acemd")

METHODS = {"ace-emd": ace_emd, "ceemd": ceemd, "eemd": eemd}


# --------------------------------------------------------------------------
# Argument parsing
# --------------------------------------------------------------------------


def _add_input(p: argparse.ArgumentParser, multiple: bool = False) -> None:
    if multiple:
        p.add_argument("--input", action="append", required=True, help="CSV file (repeat for each series)")
        p.add_argument("--label", action="append", help="label per input (default: file stem)")
    else:
        p.add_argument("--input", help="CSV file with a date column and a value column")
    p.add_argument("--column", default="close", help="value column (default: close)")
    p.add_argument("--date-column", default="date", help="ISO-8601 date column (default: date)")
    p.add_argument("--log", dest="log", action="store_true", default=True, help="take natural logs (default)")
    p.add_argument("--no-log", dest="log", action="store_false", help="use values as given")


def _add_decomposition(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=["ace-emd", "ceemd", "eemd", "emd"], default="ace-emd")
    p.add_argument("--modes", type=int, default=None, help="number of IMFs (default: automatic)")
    p.add_argument("--ensemble-size", type=int, default=100)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--sigma", type=float, default=0.2, help="relative noise level (default 0.2)")
    group.add_argument("--auto-sigma", action="store_true", help="grid-search sigma (ACE-EMD)")
    p.add_argument("--sigma-grid", type=float, nargs="+", default=list(DEFAULT_SIGMA_GRID))
    p.add_argument("--oi-threshold", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--sift-tol", type=float, default=0.2)
    p.add_argument("--sift-max-iters", type=int, default=50)
    p.add_argument("--boundary", choices=["mirror", "clamp"], default="mirror")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for ensemble trials")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acemd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="write IMFs, diagnostics and manifest")
    _add_input(p)
    _add_decomposition(p)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("filter", help="low/high-pass reconstructions and volatility statistics")
    _add_input(p)
    _add_decomposition(p)
    p.add_argument("--imfs", help="reuse an imfs.csv instead of decomposing --input")
    p.add_argument("--ml", type=int, default=4, help="components in the low-pass filter")
    p.add_argument("--mh", type=int, default=2, help="components in the high-pass filter")
    p.add_argument("--window", type=int, default=analysis.QUARTER_WINDOW)
    p.add_argument("--epsilon", type=float, nargs="+", default=[analysis.DEFAULT_EPSILON])
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("spectrum", help="Hilbert energy-frequency spectrum and power exponent")
    _add_input(p)
    _add_decomposition(p)
    p.add_argument("--imfs", help="reuse an imfs.csv instead of decomposing --input")
    p.add_argument("--plot", action="store_true", help="also write spectrum.svg")
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("compare", help="frequency deviation between series")
    _add_input(p, multiple=True)
    _add_decomposition(p)
    p.add_argument("--window", type=int, default=None, help="rolling window (observations)")
    p.add_argument("--step", type=int, default=21)
    p.add_argument("--out-dir", required=True)
    return parser


# --------------------------------------------------------------------------
# Helpers
# --------------------------------------------------------------------------


def _config(args, modes: Optional[int] = None) -> EnsembleConfig:
    return EnsembleConfig(
        ensemble_size=args.ensemble_size,
        noise_sigma=0.0 if args.method == "emd" else args.sigma,
        seed=args.seed,
        max_modes=modes if modes is not None else args.modes,
        sift_max_iters=args.sift_max_iters,
        sift_sd_tol=args.sift_tol,
        spline_boundary=args.boundary,
    )


def _options(args) -> dict:
    skip = {"out_dir", "verbose"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _decompose(series: TimeSeries, args, cfg: EnsembleConfig):
    """Decomposition plus a JSON-ready diagnostics dict."""
    extra = {}
    if args.method == "emd" or _nonoscillatory(series, cfg):
        if args.method != "emd":
            log.warning("%s has no oscillation to decompose; using plain EMD", series.label or "input")
        d = emd(series, cfg)
        diag = diagnose(d, 0.0)
    elif args.auto_sigma:
        if args.method != "ace-emd":
            raise SystemExit("--auto-sigma applies to --method ace-emd only")
        sel = select_sigma(series, args.sigma_grid, cfg, args.oi_threshold, n_jobs=args.jobs)
        d, diag = sel.decomposition, sel.diagnostics
        extra["sigma_search"] = {
            "selected": sel.sigma,
            "constraint_unmet": sel.constraint_unmet,
            "oi_threshold": args.oi_threshold,
            "table": [row.to_dict() for row in sel.table],
        }
        if sel.constraint_unmet:
            log.warning("no sigma met |OI| < %g; using the smallest |OI|", args.oi_threshold)
    else:
        d, diag = METHODS[args.method](series, cfg, n_jobs=args.jobs)
    info = {
        "method": d.method,
        "n_imfs": d.n_imfs,
        "reconstruction_error": d.reconstruction_error(),
        **diag.to_dict(),
        **extra,
    }
    if d.method != "EMD":
        reference = emd(series, replace(cfg, max_modes=d.n_imfs or None))
        info["sift_reports"] = [r.to_dict() for r in reference.reports]
    else:
        info["sift_reports"] = [r.to_dict() for r in d.reports]
    if d.config is not None:
        cfg = replace(d.config, noise_sigma=diag.sigma_used)
    return d, info, cfg


def _nonoscillatory(series: TimeSeries, cfg: EnsembleConfig) -> bool:
    imfs, _, _ = _emd_arrays(np.ascontiguousarray(series.values), cfg, 1, reports=False)
    return not imfs


def _load(args):
    """Decomposition from --imfs or from --input; returns (d, inputs, cfg, info)."""
    cfg = _config(args)
    if getattr(args, "imfs", None):
        d = io.read_imfs(args.imfs)
        return d, [(args.imfs, d.source)], None, {"method": "FILE", "n_imfs": d.n_imfs}
    if not args.input:
        raise SystemExit("one of --input or --imfs is required")
    series = io.ingest(args.input, args.column, args.date_column, args.log)
    d, info, cfg = _decompose(series, args, cfg)
    return d, [(args.input, series)], cfg, info


def _clamp(m: int, d: Decomposition, name: str) -> int:
    top = d.n_imfs + 1
    if m > top:
        log.warning("%s=%d exceeds n+1=%d components; using %d", name, m, top, top)
        return top
    return m


def _finish(out: Path, command: str, args, inputs, cfg) -> None:
    io.write_json(
        out / "manifest.json",
        io.manifest(command, _options(args), inputs, None if cfg is None else cfg.to_dict()),
    )
    log.info("wrote %s", out)


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def cmd_decompose(args) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d, inputs, cfg, info = _load(args)
    io.write_imfs(out / "imfs.csv", d)
    io.write_json(out / "diagnostics.json", info)
    _finish(out, "decompose", args, inputs, cfg)


def cmd_filter(args) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d, inputs, cfg, info = _load(args)
    ml = _clamp(args.ml, d, "ml")
    mh = _clamp(args.mh, d, "mh")
    x = d.source.values
    lp = analysis.low_pass(d, ml).values
    hp = analysis.high_pass(d, mh).values
    labels = io.date_labels(d.source)

    header = ["date", "x", f"low_pass_{ml}", f"high_pass_{mh}"]
    cols = [x, lp, hp]
    if args.log:
        header += ["price", f"low_pass_{ml}_price"]
        cols += [np.exp(x), np.exp(lp)]
    io.write_csv(out / "filtered.csv", header, ([labels[t]] + [float(c[t]) for c in cols] for t in range(x.size)))

    r_all, r_hp, r_lp = (analysis.log_returns(v) for v in (x, hp, lp))
    w = args.window
    stats = {
        "n_imfs": d.n_imfs,
        "ml": ml,
        "mh": mh,
        "window": w,
        "mean_return": {"total": float(r_all.mean()), "high_pass": float(r_hp.mean()), "low_pass": float(r_lp.mean())},
        "volatility": {
            "total": analysis.volatility(r_all),
            "high_pass": analysis.volatility(r_hp),
            "low_pass": analysis.volatility(r_lp),
        },
    }
    if r_all.size >= w:
        ret_labels = labels[1:]
        ends = ret_labels[w - 1 :]
        vols = [analysis.rolling_volatility(r, w) for r in (r_all, r_hp, r_lp)]
        io.write_csv(
            out / "rolling_volatility.csv",
            ["date", "total", "high_pass", "low_pass"],
            ([ends[k]] + [float(v[k]) for v in vols] for k in range(len(ends))),
        )
        cond = analysis.rolling_conditional_volatility(r_hp, w)
        io.write_csv(
            out / "conditional_volatility.csv",
            ["date", "sigma_plus", "sigma_minus", "sigma"],
            ([ends[k]] + [float(v) for v in cond[k]] for k in range(len(ends))),
        )
        rows = []
        for eps in args.epsilon:
            p_plus, p_minus = analysis.asymmetry_frequencies(cond, eps)
            rows.append([float(eps), p_plus, p_minus, int(np.all(np.isfinite(cond), axis=1).sum())])
        io.write_csv(out / "asymmetry.csv", ["epsilon", "p_plus", "p_minus", "windows"], rows)
    else:
        log.warning("series shorter than the rolling window (%d); rolling outputs skipped", w)
    io.write_json(out / "stats.json", stats)
    _finish(out, "filter", args, inputs, cfg)


def cmd_spectrum(args) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d, inputs, cfg, info = _load(args)
    hs = spectral.hilbert_spectrum(d)
    labels = io.date_labels(d.source)
    io.write_csv(
        out / "spectrum_triples.csv",
        ["date", "t", "mode", "frequency", "energy", "amplitude"],
        (
            [labels[t], int(t), int(j), float(f), float(e), float(a)]
            for t, j, f, e, a in zip(hs.time, hs.mode, hs.frequency, hs.energy, hs.amplitude)
        ),
    )
    points = dict(spectral.central_points(d))
    io.write_csv(
        out / "central.csv",
        ["mode", "central_frequency", "central_energy", "n_valid", "n_energy_excluded"],
        (
            [int(j), p.frequency, p.energy, p.n_valid, p.n_energy_excluded]
            for j, p in sorted(points.items())
        ),
    )
    summary = spectral.spectrum_summary(d)
    io.write_json(out / "power_law.json", {**summary.to_dict(), "decomposition": info})
    if args.plot:
        _plot_spectrum(out / "spectrum.svg", hs, summary, d.source.label)
    _finish(out, "spectrum", args, inputs, cfg)


def _plot_spectrum(path: Path, hs, summary, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "acemd"
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for j in np.unique(hs.mode):
        sel = hs.mode == j
        ax.scatter(hs.frequency[sel], hs.energy[sel], s=2, alpha=0.3, label=f"c_{j}")
    f, e = summary.central_frequencies, summary.central_energies
    ax.scatter(f, e, marker="x", color="black", s=60, zorder=3)
    grid = np.geomspace(f.min(), f.max(), 50)
    intercept = np.mean(np.log(e) + summary.alpha * np.log(f))
    ax.plot(grid, np.exp(intercept - summary.alpha * np.log(grid)), color="black", lw=1)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("instantaneous frequency (cycles / observation)")
    ax.set_ylabel("instantaneous energy")
    ax.set_title(f"{title}  alpha={summary.alpha:.4f}  R2={summary.r_squared:.4f}")
    ax.legend(markerscale=4, fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _align(series: List[TimeSeries]) -> List[TimeSeries]:
    """Restrict every series to the dates common to all of them."""
    common = set(series[0].dates)
    for s in series[1:]:
        common &= set(s.dates)
    if len(common) < 8:
        raise DateRangeMismatch(f"inputs share only {len(common)} dates")
    out = []
    for s in series:
        keep = [i for i, d in enumerate(s.dates) if d in common]
        dates = tuple(s.dates[i] for i in keep)
        out.append(TimeSeries(s.values[keep], start_time=dates[0], step=s.step, label=s.label, dates=dates))
    return out


def cmd_compare(args) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    labels = args.label or []
    raw = []
    for i, path in enumerate(args.input):
        s = io.ingest(path, args.column, args.date_column, args.log)
        label = labels[i] if i < len(labels) else Path(path).stem
        raw.append(replace(s, label=label) if label != s.label else s)
    names = [s.label for s in raw]
    if len(set(names)) != len(names):
        names = [f"{n}_{i + 1}" for i, n in enumerate(names)]
    series = _align(raw)

    cfg = _config(args)
    n_modes = args.modes
    if n_modes is None:
        counts = [len(_emd_arrays(np.ascontiguousarray(s.values), cfg, None, False)[0]) for s in series]
        n_modes = min(counts)
        log.info("common mode count n=%d (per-input counts %s)", n_modes, counts)
    cfg = replace(cfg, max_modes=n_modes)

    decomps, summaries, infos = [], [], {}
    for name, s in zip(names, series):
        d, info, used = _decompose(s, args, cfg)
        decomps.append(d)
        summaries.append(spectral.spectrum_summary(d, require_fit=False))
        infos[name] = {**info, "alpha": summaries[-1].alpha, "r_squared": summaries[-1].r_squared}

    k = len(series)
    dev = np.zeros((k, k))
    for a, b in itertools.combinations(range(k), 2):
        dev[a, b] = dev[b, a] = spectral.frequency_deviation(summaries[a], summaries[b])
    io.write_csv(out / "deviation_matrix.csv", ["series"] + names, ([names[a]] + [float(v) for v in dev[a]] for a in range(k)))

    modes = summaries[0].mode_index
    io.write_csv(
        out / "central_frequencies.csv",
        ["mode"] + names,
        ([int(m)] + [float(s.central_frequencies[i]) for s in summaries] for i, m in enumerate(modes)),
    )

    dates = io.date_labels(series[0])
    analytic = [[spectral.analytic_mode(c) for c in d.imfs] for d in decomps]
    pair_dir = out / "pairs"
    pair_dir.mkdir(exist_ok=True)
    for a, b in itertools.combinations(range(k), 2):
        rows = []
        for j in range(min(decomps[a].n_imfs, decomps[b].n_imfs)):
            ma, mb = analytic[a][j], analytic[b][j]
            both = np.flatnonzero(ma.valid & mb.valid)
            rows.extend([dates[t], j + 1, float(ma.frequency[t]), float(mb.frequency[t])] for t in both)
        io.write_csv(pair_dir / f"{names[a]}__{names[b]}.csv", ["date", "mode", names[a], names[b]], rows)

    summary = {"modes": n_modes, "series": infos, "deviation": {names[a]: dict(zip(names, dev[a].tolist())) for a in range(k)}}

    if args.window:
        rolled = [spectral.rolling_spectrum(s, args.window, args.step, cfg, n_jobs=args.jobs) for s in series]
        ends = [dates[end] for end, _ in rolled[0]]
        io.write_csv(
            out / "rolling_alpha.csv",
            ["date"] + names,
            ([ends[w]] + [float(r[w][1].alpha) for r in rolled] for w in range(len(ends))),
        )
        rows = []
        for w in range(len(ends)):
            bench = rolled[0][w][1]
            row = [ends[w]]
            for r in rolled[1:]:
                try:
                    row.append(spectral.frequency_deviation(r[w][1], bench))
                except ModeCountMismatch:
                    row.append(float("nan"))
            rows.append(row)
        io.write_csv(out / "rolling_deviation.csv", ["date"] + [f"{n}_vs_{names[0]}" for n in names[1:]], rows)
        summary["rolling"] = {"window": args.window, "step": args.step, "benchmark": names[0]}

    io.write_json(out / "summary.json", summary)
    _finish(out, "compare", args, list(zip(args.input, raw)), cfg)


COMMANDS = {
    "decompose": cmd_decompose,
    "filter": cmd_filter,
    "spectrum": cmd_spectrum,
    "compare": cmd_compare,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        COMMANDS[args.command](args)
    except AcemdError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except FileNotFoundError as exc:
        log.error("FileNotFoundError: %s", exc)
        return 20
    return 0


if __name__ == "__main__":
    sys.exit(main())

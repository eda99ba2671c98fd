"""Command-line energy sweeps.

    weylscat run --config system.json --out out/ [--threads N] [--series|--no-series] [--diagnostics]
    weylscat plotdata out/sweep.csv [--out DIR]

``weylscat --config ...`` is shorthand for ``weylscat run --config ...``.

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import SystemConfig, load_config
from .errors import ConfigError, WeylScatError
from .scattering import ScatterPoint, divergence_diagnostic, r_series, sweep
from .spectra import frozen_family

log = logging.getLogger("weylscat")

SWEEP_COLUMNS = (
    "lambda", "channels", "exclusion",
    "ReS11", "ImS11", "ReS12", "ImS12", "ReS21", "ImS21", "ReS22", "ImS22",
    "R11", "R12", "R21", "R22", "T", "series_error",
)
PLOT_QUANTITIES = SWEEP_COLUMNS[3:]
OUTPUT_FILES = ("sweep.csv", "eigen.csv", "convergence.csv", "diagnostics.csv")


class NumericalFailure(RuntimeError):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return "" if math.isnan(x) else "%.12g" % x


def sweep_row(pt: ScatterPoint) -> list[str]:
    row = [fmt(pt.lam), "+".join(pt.channels), pt.exclusion or ""]
    if pt.S is None:
        return row + [""] * (len(SWEEP_COLUMNS) - 3)
    S, R = pt.full("S"), pt.full("R")
    for i, j in ((0, 0), (0, 1), (1, 0), (1, 1)):
        row += [fmt(S[i, j].real), fmt(S[i, j].imag)]
    row += [fmt(R[i, j].real) for i, j in ((0, 0), (0, 1), (1, 0), (1, 1))]
    row += [fmt(pt.transmission), fmt(pt.series_error)]
    return row


def _write_csv(path: Path, cfg: SystemConfig, description: str, header, rows) -> None:
    buf = io.StringIO()
    buf.write(f"# weylscat {__version__}\n")
    buf.write(f"# config-sha256 {cfg.sha256}\n")
    buf.write(f"# {description}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def _probe_energies(cfg: SystemConfig, points: list[ScatterPoint]) -> list[float]:
    if cfg.options["probe_energies"] is not None:
        return [float(e) for e in cfg.options["probe_energies"]]
    ok = [p.lam for p in points if p.S is not None]
    if not ok:
        return []
    picks = sorted({ok[int(q * (len(ok) - 1))] for q in (0.25, 0.5, 0.75)})
    return picks


def _convergence_rows(cfg: SystemConfig, probes: list[float]) -> list[list[str]]:
    from .weyl import internal_weyl, tau_sample
    from .scattering import r_direct

    sys_, o = cfg.system, cfg.options
    n_max = o["n_series_terms"]
    n_list = sorted({n for n in (5, 10, 20, 50, 100, 200, 400, 800, 1600) if n < n_max} | {n_max})
    rows = []
    for lam in probes:
        try:
            tau = tau_sample(sys_.left, sys_.right, lam)
            direct = r_direct(internal_weyl(sys_.profile, lam), tau)
            _, pairs = frozen_family(sys_.profile, sys_.left, sys_.right, lam, n_max, o["mesh_nodes"])
        except WeylScatError as exc:
            log.warning("skipping probe energy %s: %s", lam, exc)
            continue
        for n in n_list:
            rs, rep = r_series(lam, pairs, tau, n, o["series_tol"])
            err = float(np.max(np.abs(rs.entries - direct.entries)))
            rows.append([fmt(lam), str(n), fmt(err), fmt(rep.tail_estimate), str(int(rep.converged))])
    return rows


def _eigen_rows(cfg: SystemConfig, points: list[ScatterPoint]) -> list[list[str]]:
    rows = []
    for pt in points:
        if pt.frozen is None or pt.frozen_eigenvalues is None:
            continue
        for k, mu in enumerate(pt.frozen_eigenvalues[: cfg.options["eigen_rows"]], start=1):
            rows.append([fmt(pt.lam), str(k), fmt(mu), fmt(pt.frozen.left.kappa), fmt(pt.frozen.right.kappa)])
    return rows


def _diagnostic_rows(cfg: SystemConfig) -> list[list[str]]:
    prof = cfg.system.profile
    lam = cfg.options["diagnostic_energy"]
    if lam is None:
        lam = prof.potential_range()[0] - 1.0
    n_list = [25, 50, 100, 200]
    norms = divergence_diagnostic(prof, lam, n_list, cfg.options["mesh_nodes"])
    return [[fmt(lam), str(n), fmt(v), fmt(v / n)] for n, v in zip(n_list, norms)]


def execute(cfg: SystemConfig, out: Path, workers: int) -> None:
    """Compute everything, then write the outputs; raises NumericalFailure on a failed point."""
    o = cfg.options
    try:
        points = sweep(cfg.system, cfg.grid, cfg.sweep_options, workers)
    except (WeylScatError, FloatingPointError, np.linalg.LinAlgError) as exc:
        raise NumericalFailure(f"sweep aborted: {exc}") from exc
    for pt in points:
        if pt.failure:
            raise NumericalFailure(f"numerical failure at lambda={pt.lam:.12g}: {pt.failure}")
    outputs = {"sweep.csv": ("energy sweep, one row per grid energy", SWEEP_COLUMNS, [sweep_row(p) for p in points])}
    try:
        if o["compare_series"]:
            outputs["eigen.csv"] = (
                "frozen Robin family eigenvalues per sweep energy",
                ("lambda", "k", "eigenvalue", "kappa_l", "kappa_r"),
                _eigen_rows(cfg, points),
            )
            outputs["convergence.csv"] = (
                "max-entry |R_series(N) - R_direct| at probe energies",
                ("lambda", "N", "series_error", "tail_estimate", "converged"),
                _convergence_rows(cfg, _probe_energies(cfg, points)),
            )
        if o["diagnostics"]:
            outputs["diagnostics.csv"] = (
                "trace norm of Dirichlet Gamma_1-trace partial sums (grows linearly in N)",
                ("lambda", "N", "trace_norm", "trace_norm_per_term"),
                _diagnostic_rows(cfg),
            )
    except (WeylScatError, FloatingPointError, ValueError, np.linalg.LinAlgError) as exc:
        raise NumericalFailure(f"report generation failed: {exc}") from exc
    out.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        for name, (desc, header, rows) in outputs.items():
            path = out / name
            written.append(path)
            _write_csv(path, cfg, desc, header, rows)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise


def cmd_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"error: config: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.series is not None:
        cfg.options["compare_series"] = args.series
    if args.diagnostics:
        cfg.options["diagnostics"] = True
    out = Path(args.out)
    # stale files from an earlier run would mix with this one
    for name in OUTPUT_FILES:
        (out / name).unlink(missing_ok=True)
    try:
        execute(cfg, out, args.threads)
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        for name in OUTPUT_FILES:
            (out / name).unlink(missing_ok=True)
        return 3
    return 0


def read_sweep(path: Path) -> tuple[list[str], list[dict]]:
    text = path.read_text()
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    if not lines:
        raise ValueError("no header row")
    reader = csv.DictReader(lines)
    missing = [c for c in ("lambda", "exclusion", "T") if c not in (reader.fieldnames or [])]
    if missing:
        raise ValueError(f"missing column(s): {', '.join(missing)}")
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if None in row or any(v is None for v in row.values()):
            raise ValueError(f"row {lineno}: wrong number of fields")
        for key in [k for k in PLOT_QUANTITIES if k in row] + ["lambda"]:
            if row[key] != "":
                try:
                    float(row[key])
                except ValueError:
                    raise ValueError(f"row {lineno}: {key} is not a number: {row[key]!r}") from None
        rows.append(row)
    return list(reader.fieldnames), rows


def emit_plotdata(sweep_csv: Path, out: Path) -> list[Path]:
    """Two-column (lambda, value) files per quantity, skipping excluded rows."""
    columns, rows = read_sweep(sweep_csv)
    kept = [r for r in rows if not r["exclusion"]]
    if not kept:
        print("warning: every row is excluded; writing empty .dat files", file=sys.stderr)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for q in PLOT_QUANTITIES:
        if q not in columns:
            continue
        lines = [f"# column 1: lambda\n# column 2: {q}\n# source: {sweep_csv.name}\n"]
        for r in kept:
            val = r.get(q, "")
            if val == "" or not math.isfinite(float(val)):
                continue
            lines.append(f"{r['lambda']} {val}\n")
        path = out / f"{q}.dat"
        path.write_text("".join(lines))
        paths.append(path)
    return paths


def cmd_plotdata(args) -> int:
    src = Path(args.sweep)
    try:
        emit_plotdata(src, Path(args.out) if args.out else src.parent)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, csv.Error) as exc:
        print(f"error: malformed sweep CSV {src}: {exc}", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="weylscat", description="Two-lead 1D scattering sweeps from Weyl functions.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="sweep a system over an energy grid")
    run.add_argument("--config", required=True, help="JSON system description")
    run.add_argument("--out", default="./out", help="output directory (default ./out)")
    run.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker processes (default: all cores)")
    g = run.add_mutually_exclusive_group()
    g.add_argument("--series", dest="series", action="store_true", default=None, help="compare with the eigenfunction series")
    g.add_argument("--no-series", dest="series", action="store_false", help="skip the series comparison")
    run.add_argument("--diagnostics", action="store_true", help="write the Dirichlet-trace divergence diagnostic")
    run.set_defaults(func=cmd_run)

    plot = sub.add_parser("plotdata", help="turn sweep.csv into per-quantity .dat files")
    plot.add_argument("sweep", help="path to sweep.csv")
    plot.add_argument("--out", default=None, help="output directory (default: next to sweep.csv)")
    plot.set_defaults(func=cmd_plotdata)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0].startswith("--") and argv[0] not in ("--help", "--version"):
        argv.insert(0, "run")
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Serialization of run results: key-value reports, CSV tables, and figures.

CSV files carry a header row and decimal floats with 17 significant digits so
that reparsing reproduces the stored values bit for bit.  Alongside each
delimited output the report path renders a matplotlib figure (PNG): a
convergence curve for single runs, an error chart for table sweeps.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .experiment import RunRecord

TABLE_COLUMNS = ["distribution", "M=N=P", "method", "relative_error",
                 "cpu_seconds", "iterations", "mu_final", "error"]


def fmt(value) -> str:
    """17-significant-digit decimal rendering for floats; str otherwise."""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_run_report(record: RunRecord, path) -> None:
    """Key = value report for a single run, config echoed first."""
    lines = []
    for key, value in record.config.items():
        lines.append(f"{key} = {fmt(value)}")
    rep = record.report
    lines += [
        f"relative_error = {fmt(record.relative_error)}",
        f"iterations = {rep.outer_iterations}",
        f"inner_steps = {rep.inner_steps}",
        f"termination = {rep.termination}",
        f"mu_final = {fmt(float(rep.mu_history[-1]) if len(rep.mu_history) else 0.0)}",
        f"residual_final = {fmt(float(rep.residual_history[-1]) if len(rep.residual_history) else 0.0)}",
        f"solve_seconds = {fmt(rep.wall_time)}",
        f"assembly_seconds = {fmt(record.assembly_seconds)}",
    ]
    if record.compression:
        for name, stats in record.compression.items():
            for stat_line in stats.to_report().strip().splitlines():
                lines.append(f"compression_{name}_{stat_line}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_convergence_csv(record: RunRecord, path) -> None:
    """(iteration, relative_error) pairs for convergence-curve plots."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "relative_error"])
        for iteration, err in record.convergence:
            writer.writerow([iteration, fmt(err)])


def render_convergence_figure(record: RunRecord, path) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if record.convergence:
        its = [i for i, _ in record.convergence]
        errs = [e for _, e in record.convergence]
        ax.semilogy(its, errs, "o-", lw=1.2, ms=3.5)
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative error")
    ax.set_title(f"{record.config['solver']} on {record.config['domain']} "
                 f"({record.config['dist']}, dims {record.config['dims']})")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _table_row(cfg_snapshot: dict, record, error: str | None) -> list:
    dims = cfg_snapshot["dims"].split()
    size = dims[0] if len(set(dims)) == 1 else "x".join(dims)
    if record is None:
        return [cfg_snapshot["dist"], size, cfg_snapshot["solver"],
                "", "", "", "", error or ""]
    rep = record.report
    mu_final = float(rep.mu_history[-1]) if len(rep.mu_history) else 0.0
    return [cfg_snapshot["dist"], size, cfg_snapshot["solver"],
            fmt(record.relative_error), fmt(rep.wall_time),
            str(rep.outer_iterations), fmt(mu_final), ""]


def write_table_csv(rows, path) -> None:
    """One CSV row per run: (cfg, RunRecord | None, error | None) triples."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TABLE_COLUMNS)
        for cfg, record, error in rows:
            snapshot = record.config if record is not None else cfg.snapshot()
            writer.writerow(_table_row(snapshot, record, error))


def render_table_figure(rows, path) -> None:
    """Relative error per run, grouped by distribution/size, one marker per
    method; log error axis."""
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    labels = []
    by_method = {}
    for cfg, record, error in rows:
        if record is None:
            continue
        snapshot = record.config
        dims = snapshot["dims"].split()
        size = dims[0] if len(set(dims)) == 1 else "x".join(dims)
        label = f"{snapshot['dist']}\n{size}"
        if label not in labels:
            labels.append(label)
        by_method.setdefault(snapshot["solver"], {})[label] = record.relative_error
    markers = {"ggmres": "s", "glsqr": "o"}
    for method, values in sorted(by_method.items()):
        xs = [labels.index(lbl) for lbl in values]
        ys = [values[lbl] for lbl in values]
        ax.semilogy(xs, ys, markers.get(method, "d"), label=method, ms=7, ls="none")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels)
    ax.set_ylabel("relative error")
    ax.grid(True, which="both", alpha=0.3)
    if by_method:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

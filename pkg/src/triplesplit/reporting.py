"""Delimited output and figure emission for solver runs.

CSV writers format floats with ``repr`` (shortest round-trip), so output for
a fixed instance and spec is byte-identical across runs on one platform.
Each report path can also emit a self-contained gnuplot script next to the
CSV, and — when matplotlib is importable — render the same curves to PNG.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np

RUN_HEADER = "iter,residual,error_to_xstar,objective_gap,z_norm"


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return ""
    return repr(x)


def write_run_csv(path, trace, gaps: Optional[np.ndarray] = None) -> None:
    """Per-iteration trace: iter,residual,error_to_xstar,objective_gap,z_norm.

    Error and gap columns are empty when no oracle was attached to the run.
    """
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(RUN_HEADER + "\n")
        for j in range(len(trace)):
            gap = None if gaps is None else gaps[j]
            fh.write(
                f"{trace.iterations[j]},{_fmt(trace.residuals[j])},"
                f"{_fmt(trace.errors[j])},{_fmt(gap)},{_fmt(trace.z_norms[j])}\n"
            )


def write_compare_csv(path, iterations, errors_by_method: dict) -> None:
    """Wide error table: iter,err_<method>,... padded with blanks at the tail."""
    methods = list(errors_by_method)
    header = "iter," + ",".join(f"err_{m}" for m in methods)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(header + "\n")
        for j, k in enumerate(iterations):
            cells = [str(int(k))]
            for m in methods:
                col = errors_by_method[m]
                cells.append(_fmt(col[j]) if j < len(col) else "")
            fh.write(",".join(cells) + "\n")


def write_sweep_csv(path, rows: Sequence[dict]) -> None:
    """Long-form sweep curves: gamma,method,iter,residual,error."""
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("gamma,method,iter,residual,error\n")
        for row in rows:
            fh.write(
                f"{_fmt(row['gamma'])},{row['method']},{int(row['iter'])},"
                f"{_fmt(row['residual'])},{_fmt(row['error'])}\n"
            )


def write_summary_csv(path, rows: Sequence[dict]) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("gamma,method,status,iters,final_residual,min_error\n")
        for row in rows:
            fh.write(
                f"{_fmt(row['gamma'])},{row['method']},{row['status']},"
                f"{int(row['iters'])},{_fmt(row['final_residual'])},{_fmt(row['min_error'])}\n"
            )


def compare_plot_script(csv_path, png_path, methods, title) -> str:
    """Self-contained gnuplot script for a two-method error comparison."""
    lines = [
        "# gnuplot script generated alongside the CSV; run: gnuplot <this file>",
        "set datafile separator ','",
        "set logscale y",
        "set xlabel 'iteration'",
        "set ylabel 'error to x*'",
        f"set title '{title}'",
        "set terminal pngcairo size 900,600",
        f"set output '{png_path}'",
        "plot " + ", \\\n     ".join(
            f"'{csv_path}' using 1:{i + 2} with lines title '{m}'"
            for i, m in enumerate(methods)
        ),
    ]
    return "\n".join(lines) + "\n"


def sweep_plot_script(csv_path, png_path, gammas, methods, title) -> str:
    """Gnuplot script drawing one panel per step size from the long-form CSV."""
    lines = [
        "# gnuplot script generated alongside the CSV; run: gnuplot <this file>",
        "set datafile separator ','",
        "set logscale y",
        "set terminal pngcairo size 1200,800",
        f"set output '{png_path}'",
        f"set multiplot layout {(len(gammas) + 2) // 3},3 title '{title}'",
    ]
    for g in gammas:
        plots = ", \\\n       ".join(
            f"'{csv_path}' using 3:($1=={g!r} && stringcolumn(2) eq '{m}' ? $5 : 1/0) "
            f"with lines title '{m}'"
            for m in methods
        )
        lines += [f"set title 'gamma={g!r}'", "plot " + plots]
    lines.append("unset multiplot")
    return "\n".join(lines) + "\n"


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_compare_png(path, errors_by_method: dict, title: str) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(7, 5))
    for method, err in errors_by_method.items():
        err = np.asarray(err, dtype=float)
        ax.semilogy(np.arange(len(err)), np.where(err > 0, err, np.nan), label=method)
    ax.set_xlabel("iteration")
    ax.set_ylabel("error to x*")
    ax.set_title(title)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_sweep_png(path, panels: dict, title: str) -> None:
    """panels: {gamma_label: {method: error array}} -> grid of log-error panels."""
    plt = _pyplot()
    n = len(panels)
    ncols = min(3, max(1, n))
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4.2 * ncols, 3.2 * nrows), squeeze=False)
    for ax in axes.flat[n:]:
        ax.axis("off")
    for ax, (label, curves) in zip(axes.flat, panels.items()):
        for method, err in curves.items():
            err = np.asarray(err, dtype=float)
            ax.semilogy(np.arange(len(err)), np.where(err > 0, err, np.nan), label=method)
        ax.set_title(label, fontsize=10)
        ax.set_xlabel("iteration", fontsize=8)
        ax.legend(fontsize=8)
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

"""Figure regeneration from epodg run directories.

Consumes the solver's CSV schemas only: solution.csv (x,rho,u,p or x,u),
entropy.csv (t,E_eta), radii.csv, and convergence.csv. Renders are
deterministic: fixed SVG hash salt and no embedded timestamps.
"""

import csv
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

plt.rcParams["svg.hashsalt"] = "epoplot"

_SOLUTION_PANELS = {
    ("x", "rho", "u", "p"): [("rho", "density"), ("u", "velocity"),
                             ("p", "pressure")],
    ("x", "u"): [("u", "u")],
}


class PlotInputError(ValueError):
    """Missing or malformed input file."""


def _read_csv(path, min_rows=1):
    if not os.path.exists(path):
        raise PlotInputError(f"missing input file: {path}")
    with open(path) as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PlotInputError(f"empty input file: {path}") from None
        rows = [row for row in reader if row]
    if len(rows) < min_rows:
        raise PlotInputError(f"not enough data rows in {path}")
    try:
        data = np.array([[np.nan if v == "NA" else float(v) for v in row]
                         for row in rows])
    except ValueError:
        raise PlotInputError(f"non-numeric data in {path}") from None
    return tuple(header), data


def _scenario_name(run_dir):
    meta = os.path.join(run_dir, "run.meta")
    if os.path.exists(meta):
        with open(meta) as fh:
            for line in fh:
                if line.startswith("scenario="):
                    return line.strip().split("=", 1)[1]
    return os.path.basename(os.path.normpath(run_dir)) or "scenario"


def build_scenario_figure(run_dir):
    """Solution panels plus the entropy history; returns (figure, name)."""
    sol_header, sol = _read_csv(os.path.join(run_dir, "solution.csv"))
    ent_header, ent = _read_csv(os.path.join(run_dir, "entropy.csv"))
    if tuple(ent_header) != ("t", "E_eta"):
        raise PlotInputError(
            f"unexpected entropy.csv header in {run_dir}: {ent_header}")
    panels = _SOLUTION_PANELS.get(tuple(sol_header))
    if panels is None:
        raise PlotInputError(
            f"unexpected solution.csv header in {run_dir}: {sol_header}")
    name = _scenario_name(run_dir)
    n_panels = len(panels) + 1
    if n_panels == 4:
        fig, axes = plt.subplots(2, 2, figsize=(10, 7))
        axes = axes.ravel()
    else:
        fig, axes = plt.subplots(1, n_panels, figsize=(5 * n_panels, 4))
        axes = np.atleast_1d(axes)
    x = sol[:, 0]
    for ax, (col, label) in zip(axes, panels):
        idx = sol_header.index(col)
        ax.plot(x, sol[:, idx], lw=0.8, color="tab:blue")
        ax.set_xlabel("x")
        ax.set_ylabel(label)
    ax = axes[len(panels)]
    ax.plot(ent[:, 0], ent[:, 1], lw=1.0, color="tab:red")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$E_\eta$")
    fig.suptitle(name)
    fig.tight_layout()
    return fig, name


def plot_scenario(run_dir, ext="svg"):
    """Render the scenario figure into the run directory; returns its path."""
    fig, name = build_scenario_figure(run_dir)
    out = os.path.join(run_dir, f"{name}.{ext}")
    fig.savefig(out, metadata=_clean_metadata(ext))
    plt.close(fig)
    return out


def build_convergence_figure(csv_path):
    """Log-log errors vs N with a third-order reference slope."""
    header, data = _read_csv(csv_path, min_rows=2)
    if header[:2] != ("N", "L1"):
        raise PlotInputError(f"unexpected convergence header: {header}")
    N = data[:, 0]
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for idx, label in ((1, "L1"), (3, "L2"), (5, "Linf")):
        if idx < data.shape[1]:
            ax.loglog(N, data[:, idx], marker="o", ms=3, lw=0.9, label=label)
    ref = data[0, 1] * (N / N[0]) ** -3.0
    ax.loglog(N, ref, "k--", lw=0.8, label="slope -3")
    ax.set_xlabel("N")
    ax.set_ylabel("error")
    ax.legend(frameon=False)
    fig.tight_layout()
    return fig


def plot_convergence(csv_path, out_path=None, ext="svg"):
    fig = build_convergence_figure(csv_path)
    if out_path is None:
        out_path = os.path.join(os.path.dirname(csv_path) or ".",
                                f"convergence.{ext}")
    fig.savefig(out_path, metadata=_clean_metadata(ext))
    plt.close(fig)
    return out_path


def _clean_metadata(ext):
    # strip render dates so repeated renders are byte-identical
    if ext == "svg":
        return {"Date": None}
    if ext == "pdf":
        return {"CreationDate": None}
    return None

"""Report writers: canonical JSON, plot-ready CSV, and rendered figures.

Figures are written next to the delimited output by the CLI report path;
everything else is deterministic byte-for-byte for a fixed config and seed.
"""

import csv
import json
import math

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_trace_csv(path, trace):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "p", "eps", "energy", "mass",
                         "residual", "iterations"])
        for row in trace:
            writer.writerow([row["stage"], repr(row["p"]), repr(row["eps"]),
                             repr(row["energy"]), repr(row["mass"]),
                             repr(row["residual"]), row["iterations"]])


def write_cut_csv(path, cut):
    """Per-dual-cell weights with the crossed edge's midpoint coordinates."""
    mesh = cut.solution.problem.mesh
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        coords = mesh.vertices
        dim = coords.shape[1]
        header = ["edge_id", "v", "w", "weight", "dual_volume"]
        header += [f"mid_{c}" for c in "xyz"[:dim]]
        writer.writerow(header)
        for ei, weight, dv in zip(cut.edge_ids, cut.weights, cut.dual_volumes):
            v, w = mesh.simplices[1][ei]
            mid = 0.5 * (coords[v] + coords[w])
            writer.writerow([ei, v, w, repr(float(weight)), repr(float(dv))]
                            + [repr(float(c)) for c in mid])


def plot_trace(path, trace):
    fig, ax1 = plt.subplots(figsize=(6, 4))
    stages = [row["stage"] for row in trace]
    ax1.plot(stages, [row["mass"] for row in trace], "o-", color="tab:blue",
             label="mass")
    ax1.set_xlabel("continuation stage")
    ax1.set_ylabel("mass", color="tab:blue")
    ax2 = ax1.twinx()
    ax2.semilogy(stages, [max(row["residual"], 1e-18) for row in trace],
                 "s--", color="tab:red", label="residual")
    ax2.set_ylabel("stationarity residual", color="tab:red")
    ax1.set_title("continuation trace")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def plot_cut(path, cut):
    """Cell-density map of the cut for surface meshes."""
    sol = cut.solution
    mesh = sol.problem.mesh
    if mesh.dimension != 2 or mesh.vertices.shape[1] < 2:
        return False
    coords = mesh.vertices
    tris = np.asarray(mesh.simplices[2])
    fig, ax = plt.subplots(figsize=(6, 5))
    tp = ax.tripcolor(coords[:, 0], coords[:, 1], tris,
                      facecolors=sol.cell_norms, cmap="magma")
    fig.colorbar(tp, ax=ax, label="cut density |grad|")
    ax.set_aspect("equal")
    ax.set_title(f"cut density (mass {sol.mass:.6g})")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return True


def plot_calibration(path, solution, oracle_profile=None):
    """Calibration sup-norm per cell against the first chart coordinate."""
    sup, coords = solution.gamma_profile()
    xs = coords[:, 0]
    order = np.argsort(xs)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs[order], sup[order] / max(sup.max(), 1e-300), ".",
            ms=3, label="|gamma| (scaled)")
    if oracle_profile is not None:
        grid = np.linspace(xs.min(), xs.max(), 200)
        ax.plot(grid, [oracle_profile(x) for x in grid], "-",
                label="analytic profile")
    ax.set_xlabel("x")
    ax.set_ylabel("calibration norm")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def plot_convergence(path, rows, continuum_value=None):
    fig, ax = plt.subplots(figsize=(6, 4))
    eps0 = [row["eps0"] for row in rows]
    ax.plot(eps0, [row["normalized_cut"] for row in rows], "o-",
            label="normalized cut")
    ax.plot(eps0, [row["normalized_flow"] for row in rows], "s--",
            label="normalized flow")
    if continuum_value is not None:
        ax.axhline(continuum_value, color="k", lw=1, ls=":",
                   label="continuum value")
    ax.set_xlabel("eps0")
    ax.set_ylabel("normalized value")
    ax.invert_xaxis()
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def junit_xml(suite_name, results):
    """JUnit-style XML summary; `results` is a list of (name, ok, detail)."""
    failures = sum(0 if ok else 1 for _, ok, _ in results)
    lines = ['<?xml version="1.0" encoding="UTF-8"?>']
    lines.append(f'<testsuite name="{suite_name}" tests="{len(results)}" '
                 f'failures="{failures}">')
    for name, ok, detail in results:
        if ok:
            lines.append(f'  <testcase classname="{suite_name}" name="{name}"/>')
        else:
            lines.append(f'  <testcase classname="{suite_name}" name="{name}">')
            lines.append(f'    <failure message="{_xml_escape(detail)}"/>')
            lines.append('  </testcase>')
    lines.append('</testsuite>')
    return "\n".join(lines) + "\n"


def _xml_escape(text):
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;").replace('"', "&quot;"))

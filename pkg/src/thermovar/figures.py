"""Matplotlib rendering of experiment outputs to PNG files next to the CSVs."""

from __future__ import annotations

import math
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

DPI = 150


def _save(fig, out_dir: Path, name: str) -> None:
    fig.tight_layout()
    fig.savefig(out_dir / name, dpi=DPI)
    plt.close(fig)


def _curves_by(rows, key_fn, best_only=True):
    """Group per-iteration rows into fidelity curves keyed by key_fn."""
    grouped = defaultdict(lambda: defaultdict(list))
    for r in rows:
        grouped[key_fn(r)][r.seed].append((r.iteration, r.fidelity))
    out = {}
    for key, seeds in grouped.items():
        curves = {s: sorted(pts) for s, pts in seeds.items()}
        if best_only:
            best = max(curves.values(), key=lambda pts: pts[-1][1])
            out[key] = best
        else:
            out[key] = curves
    return out


def _fidelity_panels(rows, panel_fn, line_fn, panel_title, out_dir, name):
    panels = sorted({panel_fn(r) for r in rows})
    ncols = min(2, len(panels))
    nrows = math.ceil(len(panels) / ncols)
    fig, axes = plt.subplots(nrows, ncols, figsize=(5.2 * ncols, 3.6 * nrows), squeeze=False)
    for ax, panel in zip(axes.flat, panels):
        sub = [r for r in rows if panel_fn(r) == panel]
        curves = _curves_by(sub, line_fn)
        for key in sorted(curves):
            pts = curves[key]
            ax.plot([p[0] for p in pts], [p[1] for p in pts], label=f"{line_fn.__name__}={key:g}")
        ax.set_xlabel("iteration")
        ax.set_ylabel("fidelity")
        ax.set_ylim(0, 1.02)
        ax.set_title(panel_title(panel))
        ax.legend(fontsize=8)
    for ax in axes.flat[len(panels):]:
        ax.set_visible(False)
    _save(fig, out_dir, name)


def _render_sweep(outcome, out_dir: Path, panel_attr: str, title_fmt: str, name: str) -> None:
    rows = outcome.rows

    def panel_fn(r):
        return getattr(r, panel_attr)

    def beta(r):
        return r.beta

    _fidelity_panels(rows, panel_fn, beta, lambda p: title_fmt.format(p), out_dir, name)


def _render_scaling(outcome, out_dir: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    by_beta = defaultdict(list)
    for row in outcome.summary_rows:
        L, beta, _, fid, log2_gap, _ = row
        by_beta[beta].append((L, log2_gap))
    for beta in sorted(by_beta):
        pts = sorted(by_beta[beta])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=f"beta={beta:g}")
    ax.set_xlabel("chain length L")
    ax.set_ylabel("log2(1 - fidelity)")
    ax.legend(fontsize=8)
    _save(fig, out_dir, "scaling.png")


def _render_k_study(outcome, out_dir: Path) -> None:
    rows = outcome.rows
    betas = sorted({r.beta for r in rows})
    orders = sorted({r.K for r in rows})
    fig, axes = plt.subplots(1, len(betas), figsize=(3.8 * len(betas), 3.6), squeeze=False)
    for ax, beta in zip(axes.flat, betas):
        data = [
            [r.fidelity for r in rows if r.beta == beta and r.K == k] for k in orders
        ]
        ax.boxplot(data, tick_labels=[str(k) for k in orders])
        ax.set_xlabel("truncation order K")
        ax.set_ylabel("fidelity")
        ax.set_title(f"beta={beta:g}")
    _save(fig, out_dir, "k_order_boxplot.png")


def _render_prop1(outcome, out_dir: Path) -> None:
    rows = outcome.rows
    betas = sorted({r.beta for r in rows})
    fig, axes = plt.subplots(1, len(betas), figsize=(5.2 * len(betas), 3.8), squeeze=False)
    res = outcome.config.resolution
    for ax, beta in zip(axes.flat, betas):
        for kind, label in ((0, "free energy"), (2, "order-2 loss")):
            pts = sorted(
                (r.iteration * res, r.loss) for r in rows if r.beta == beta and r.K == kind
            )
            ax.plot([p[0] for p in pts], [p[1] for p in pts], label=label)
        for k in (0, 1):
            ax.axvline(math.pi / 2 + k * math.pi, color="grey", ls=":", lw=0.8)
        ax.set_xlabel("theta")
        ax.set_ylabel("loss")
        ax.set_title(f"beta={beta:g}")
        ax.legend(fontsize=8)
    _save(fig, out_dir, "angle_scan.png")


def _render_prop2(outcome, out_dir: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.2, 3.8))
    rows = sorted(outcome.summary_rows)
    betas = [r[0] for r in rows]
    ax.plot(betas, [r[1] for r in rows], "o-", label="empirical fidelity")
    ax.plot(betas, [r[2] for r in rows], "s--", label="closed-form bound")
    ax.set_xlabel("beta")
    ax.set_ylabel("fidelity")
    ax.set_ylim(0, 1.02)
    ax.legend(fontsize=8)
    _save(fig, out_dir, "bound_curve.png")


def _render_bounds(outcome, out_dir: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    series = defaultdict(list)
    for order, rank, beta, eps, _, _, floor, _ in outcome.summary_rows:
        if eps == 0.0 and beta == outcome.config.betas[0]:
            series[rank].append((order, floor))
    for rank in sorted(series):
        pts = sorted(series[rank])
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", label=f"rank={rank}")
    ax.axhline(0.0, color="grey", lw=0.8)
    ax.set_xlabel("truncation order K")
    ax.set_ylabel("fidelity floor")
    ax.legend(fontsize=8)
    _save(fig, out_dir, "fidelity_floor.png")


def render(outcome, out_dir: str | Path) -> None:
    """Render the figure(s) for one experiment outcome into ``out_dir``."""
    out_dir = Path(out_dir)
    experiment = outcome.config.experiment
    if experiment == "ising-sweep":
        rows = outcome.rows

        def model(r):
            return r.model

        def beta(r):
            return r.beta

        _fidelity_panels(rows, model, beta, lambda m: f"ansatz {m}", out_dir,
                         "fidelity_curves.png")
    elif experiment == "ising-scaling":
        _render_scaling(outcome, out_dir)
    elif experiment == "xy-sweep":
        _render_sweep(outcome, out_dir, "d", "depth d={}", "fidelity_curves.png")
    elif experiment == "k-order-study":
        _render_k_study(outcome, out_dir)
    elif experiment == "prop1-check":
        _render_prop1(outcome, out_dir)
    elif experiment == "prop2-curve":
        _render_prop2(outcome, out_dir)
    elif experiment == "bounds-table":
        _render_bounds(outcome, out_dir)

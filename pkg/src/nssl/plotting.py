"""Figures written next to the delimited outputs (Agg backend, files only)."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def plot_distribution(curve, path, p=None, title="distribution function") -> Path:
    """Step plot of ``m(σ)`` on log axes, with the weak-norm envelope ``(N/σ)^p`` if ``p`` is given."""
    fig, ax = plt.subplots(figsize=(5, 3.6))
    s, m = curve.sigma, curve.measure
    pos = (s > 0) & (m > 0)
    ax.step(s[pos], m[pos], where="post", label="m(σ)")
    if p is not None and np.isfinite(p) and pos.any():
        from .lorentz import weak_norm
        N = weak_norm(curve, p)
        grid = np.geomspace(s[pos].min(), s[pos].max(), 100)
        ax.plot(grid, (N / grid) ** p, "--", label=f"(‖u‖/σ)^{p:g}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("σ")
    ax.set_ylabel("measure")
    ax.set_title(title)
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_morrey(profile, path, title="Morrey bracket") -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.6))
    ax.semilogx(profile.radii, profile.values, "o-")
    ax.set_xlabel("η")
    ax.set_ylabel("bracket")
    ax.set_title(f"{title} (p={profile.p:g})")
    return _save(fig, path)


def plot_series(entries, path, title="verdict series") -> Path:
    """Overlay of verdict series ``(label, series, threshold)``, each divided by its threshold.

    The dashed line at 1 is the decision level for every curve.
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, series, threshold in entries:
        if not series:
            continue
        t, v = zip(*series)
        v = np.asarray(v) / threshold if threshold else np.asarray(v)
        ax.plot(t, v, ".-", lw=0.8, ms=2, label=label)
    ax.axhline(1.0, color="k", ls="--", lw=0.8)
    ax.set_yscale("symlog", linthresh=1e-3)
    ax.set_xlabel("t")
    ax.set_ylabel("value / threshold")
    ax.set_title(title)
    if 0 < len(entries) <= 12:
        ax.legend(fontsize=6)
    return _save(fig, path)


def plot_checks(rows, path, title="verification ratios") -> Path:
    """Bar chart of ``measured / limit`` per check; bars above 1 failed."""
    fig, ax = plt.subplots(figsize=(6, 0.35 * max(len(rows), 4) + 1))
    names = [r["name"] for r in rows]
    vals = [r.get("ratio", 0.0) for r in rows]
    colours = ["tab:green" if r["passed"] else "tab:red" for r in rows]
    ax.barh(range(len(rows)), vals, color=colours)
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels(names, fontsize=7)
    ax.axvline(1.0, color="k", lw=0.8)
    ax.set_xlabel("measured / allowed")
    ax.set_title(title)
    return _save(fig, path)

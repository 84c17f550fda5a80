"""Figure rendering: one deterministic image per (manifest, kind, styling).

Determinism: the Agg backend, pinned fonts, a fixed SVG hash salt, and no
embedded timestamps, so rerunning the same spec on the same inputs gives a
byte-identical file.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import LogNorm

from .loaders import LoaderError, Manifest, load_manifest, read_density_csv, read_scan_csv, read_snapshot

KINDS = ("density_zt", "density_rz", "pz_scan", "chain_panels", "density_2e")

matplotlib.rcParams.update(
    {
        "font.family": "DejaVu Sans",
        "svg.hashsalt": "kickshift-figures",
        "figure.dpi": 100,
        "savefig.dpi": 150,
    }
)


class RenderError(RuntimeError):
    pass


@dataclass
class FigureSpec:
    """What to draw and how."""

    manifest: Path
    kind: str
    out: Path
    colormap: str = "viridis"
    log_scale: bool = False
    fmt: str = "png"

    def __post_init__(self):
        self.manifest = Path(self.manifest)
        self.out = Path(self.out)
        if self.kind not in KINDS:
            raise RenderError(f"unknown figure kind {self.kind!r}; have {KINDS}")
        if self.fmt not in ("png", "svg"):
            raise RenderError(f"unsupported output format {self.fmt!r}")


def _norm(spec: FigureSpec, data):
    if not spec.log_scale:
        return None
    positive = data[data > 0]
    if positive.size == 0:
        raise RenderError("log scale requested but data has no positive values")
    return LogNorm(vmin=positive.min(), vmax=positive.max())


def _density_zt(spec: FigureSpec, man: Manifest, ax):
    times, z, dens, alpha = read_density_csv(man.path_of("density_zt.csv"))
    mesh = ax.pcolormesh(
        times, z, dens.T, cmap=spec.colormap, norm=_norm(spec, dens), shading="nearest"
    )
    z0 = man.results.get("z_mean_initial_au", 0.0)
    ax.plot(times, z0 + alpha, color="white", lw=1.2, ls="--", label=r"$z_0+\alpha(t)$")
    ax.set_xlabel("t (a.u.)")
    ax.set_ylabel("z (a.u.)")
    ax.legend(loc="upper left", framealpha=0.6)
    return mesh


def _density_rz(spec: FigureSpec, man: Manifest, ax):
    snaps = man.paths_matching("snapshot_", ".ksdn")
    if not snaps:
        raise RenderError(f"run {man.preset!r} has no density snapshots")
    system, axes, t, dens = read_snapshot(sorted(snaps)[-1])
    if system != "cylindrical_rz":
        raise RenderError(f"density_rz needs a cylindrical snapshot, got {system}")
    rho, z = axes[0].coordinates(), axes[1].coordinates()
    mesh = ax.pcolormesh(
        z, rho, dens, cmap=spec.colormap, norm=_norm(spec, dens), shading="nearest"
    )
    ax.set_xlabel("z (a.u.)")
    ax.set_ylabel(r"$\rho$ (a.u.)")
    ax.set_title(f"t = {t:g} a.u.")
    return mesh


def _pz_scan(spec: FigureSpec, man: Manifest, ax):
    thetas, phis, pz = read_scan_csv(man.path_of("scan.csv"))
    colors = plt.get_cmap(spec.colormap)(np.linspace(0.15, 0.85, phis.size))
    for j, phi in enumerate(phis):
        ax.plot(
            thetas, pz[:, j], "o", color=colors[j], label=rf"$\varphi={phi:.3f}$"
        )
    r = man.results
    if all(k in r and r[k] is not None for k in ("fit_a_au", "fit_b_au", "fit_phi0_rad")):
        th_fine = np.linspace(thetas.min(), thetas.max(), 200)
        for j, phi in enumerate(phis):
            model = r["fit_a_au"] + r["fit_b_au"] * np.cos(phi + r["fit_phi0_rad"]) * np.sin(
                2.0 * th_fine
            )
            ax.plot(th_fine, model, "-", color=colors[j], lw=1.0)
    ax.axhline(0.0, color="0.7", lw=0.8)
    ax.set_xlabel(r"$\theta_R$ (rad)")
    ax.set_ylabel(r"$\langle p_z \rangle$ (a.u.)")
    ax.legend(fontsize=8)
    return None


def _chain_panels(spec: FigureSpec, man: Manifest, fig):
    times, z, dens, alpha = read_density_csv(man.path_of("density_zt.csv"))
    picks = [0, times.size // 3, 2 * times.size // 3, times.size - 1]
    axs = fig.subplots(len(picks), 1, sharex=True)
    m = man.config.get("model", {})
    spacing = m.get("site_spacing_au", 5.0)
    n_sites = int(m.get("n_sites", 4))
    sites = [spacing * (n_sites - 1) / 2.0 - spacing * k for k in range(n_sites)]
    for ax, ti in zip(axs, picks):
        ax.fill_between(z, dens[ti], color="C0", alpha=0.7)
        for s in sites:
            ax.axvline(s, color="0.8", lw=0.8, zorder=0)
        ax.annotate(
            rf"$t={times[ti]:.2f}$, $\alpha={alpha[ti]:+.2f}$",
            xy=(0.02, 0.7),
            xycoords="axes fraction",
            fontsize=8,
        )
        ax.set_ylabel("P(z)")
        if spec.log_scale:
            ax.set_yscale("log")
    axs[-1].set_xlabel("z (a.u.)")
    return None


def _density_2e(spec: FigureSpec, man: Manifest, ax):
    snaps = man.paths_matching("snapshot_", ".ksdn")
    if not snaps:
        raise RenderError(f"run {man.preset!r} has no density snapshots")
    system, axes, t, dens = read_snapshot(sorted(snaps)[-1])
    if system != "cartesian_2e":
        raise RenderError(f"density_2e needs a two-electron snapshot, got {system}")
    z1, z2 = axes[0].coordinates(), axes[1].coordinates()
    mesh = ax.pcolormesh(
        z2, z1, dens, cmap=spec.colormap, norm=_norm(spec, dens), shading="nearest"
    )
    ax.set_xlabel(r"$z_2$ (a.u.)")
    ax.set_ylabel(r"$z_1$ (a.u.)")
    ax.set_title(f"t = {t:g} a.u.")
    ax.set_aspect("equal")
    return mesh


def render(spec: FigureSpec) -> Path:
    """Draw the figure described by ``spec`` and return the written path."""
    man = load_manifest(spec.manifest)
    fig = plt.figure(figsize=(6.0, 4.0))
    try:
        if spec.kind == "chain_panels":
            _chain_panels(spec, man, fig)
        else:
            ax = fig.add_subplot(111)
            mesh = {
                "density_zt": _density_zt,
                "density_rz": _density_rz,
                "pz_scan": _pz_scan,
                "density_2e": _density_2e,
            }[spec.kind](spec, man, ax)
            if mesh is not None:
                fig.colorbar(mesh, ax=ax, label="density")
        fig.suptitle(f"{man.preset}: {spec.kind}", fontsize=10)
        spec.out.parent.mkdir(parents=True, exist_ok=True)
        metadata = {"Date": None} if spec.fmt == "svg" else None
        fig.savefig(spec.out, format=spec.fmt, metadata=metadata)
    finally:
        plt.close(fig)
    return spec.out

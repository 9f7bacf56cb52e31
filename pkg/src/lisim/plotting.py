"""Figure rendering for sweep reports.

Reproduces the trade-off view: mean sum rate over the (filtering
complexity, global interconnect bandwidth) plane, one panel per
algorithm, with constant-panel-area series drawn as dashed lines.
"""
import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render_sweep_figure(rows, path, target_rate=None):
    """Render the sweep grid to an image file next to the CSV."""
    algorithms = sorted({r.algorithm for r in rows})
    if not algorithms:
        raise ValueError("no sweep rows to plot")
    fig, axes = plt.subplots(1, len(algorithms),
                             figsize=(6.0 * len(algorithms), 5.0),
                             squeeze=False, sharey=True)
    vmin = min(r.mean_rate_bps_hz for r in rows)
    vmax = max(r.mean_rate_bps_hz for r in rows)
    sc = None
    for ax, algorithm in zip(axes[0], algorithms):
        sub = [r for r in rows if r.algorithm == algorithm]
        x = np.array([r.r_global_bps_per_m2 for r in sub])
        y = np.array([r.c_filt_mac_per_s_per_m2 for r in sub])
        c = np.array([r.mean_rate_bps_hz for r in sub])
        for ap in sorted({r.ap_m2 for r in sub}):
            line = sorted((r for r in sub if r.ap_m2 == ap), key=lambda r: r.np)
            ax.plot([r.r_global_bps_per_m2 for r in line],
                    [r.c_filt_mac_per_s_per_m2 for r in line],
                    "--", color="0.6", lw=0.8,
                    label=f"$A_p$ = {ap:g} m$^2$")
        sc = ax.scatter(x, y, c=c, s=45, cmap="viridis", vmin=vmin, vmax=vmax,
                        zorder=3)
        if target_rate is not None:
            hit = [r for r in sub if r.mean_rate_bps_hz >= target_rate]
            if hit:
                ax.scatter([r.r_global_bps_per_m2 for r in hit],
                           [r.c_filt_mac_per_s_per_m2 for r in hit],
                           facecolors="none", edgecolors="red", s=90, zorder=4,
                           label=f"$\\geq$ {target_rate:g} bps/Hz")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("$R_{global}$ [bps/m$^2$]")
        ax.set_title(algorithm.upper())
        ax.legend(fontsize=7, loc="lower right")
    axes[0][0].set_ylabel("$C_{filt}$ [MAC/s/m$^2$]")
    fig.colorbar(sc, ax=axes[0], label="mean sum rate [bps/Hz]")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path

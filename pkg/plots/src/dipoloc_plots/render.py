"""Figure builders for the five dipoloc artifact kinds.

All numbers come from the input files; this module only arranges them on
axes.  Rendering is deterministic: fixed styles, a fixed SVG hash salt, and
no timestamps embedded in the image content.
"""

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
from matplotlib.colors import ListedColormap  # noqa: E402

from dipoloc_plots.io import SchemaError, read_table  # noqa: E402

#: color convention for curve families: green / blue / magenta
CURVE_COLORS = ["#2ca02c", "#1f77b4", "#d62728", "#9467bd", "#e377c2", "#7f7f7f"]

FIGURE_KINDS = ("L_of_t", "ipr_hist", "collapse", "phase_diagram", "scaling_lines")

plt.rcParams["svg.hashsalt"] = "dipoloc-plots"


def _label(path):
    stem = path.rsplit("/", 1)[-1]
    return stem.rsplit(".", 1)[0]


def _new_axes(xlabel, ylabel):
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def figure_l_of_t(paths):
    """Wavepacket size vs time on a log-time axis with a dashed guide line at
    the lattice side-length."""
    fig, ax = _new_axes("time", "wavepacket size L")
    ax.set_xscale("log")
    guide = None
    for path, color in zip(paths, CURVE_COLORS * len(paths)):
        table = read_table(path, "l_of_t")
        if "n_per_dim" in table.metadata:
            guide = max(guide or 0.0, float(table.metadata["n_per_dim"]))
        if not table.rows:
            continue
        t = table.floats("time")
        mean = table.floats("mean_L")
        se = [0.0 if math.isnan(v) else v for v in table.floats("se_L")]
        ax.errorbar(t, mean, yerr=se, color=color, lw=1.5, label=_label(path))
    if guide is not None:
        ax.axhline(guide, ls="--", color="black", lw=1.0, label=f"N = {guide:g}")
        lo, hi = ax.get_ylim()
        ax.set_ylim(min(lo, 0.0), max(hi, 1.1 * guide))
    if ax.get_legend_handles_labels()[0]:
        ax.legend(frameon=False)
    return fig


def figure_ipr_hist(paths):
    """Unit-area IPR histograms, one per input file."""
    fig, ax = _new_axes("IPR", "probability density")
    for path, color in zip(paths, CURVE_COLORS * len(paths)):
        table = read_table(path, "ipr_hist")
        if not table.rows:
            continue
        lo = table.floats("bin_lo")
        hi = table.floats("bin_hi")
        count = table.floats("count")
        total = sum(c * (b - a) for a, b, c in zip(lo, hi, count))
        density = [c / total if total > 0 else 0.0 for c in count]
        centers = [(a + b) / 2 for a, b in zip(lo, hi)]
        widths = [b - a for a, b in zip(lo, hi)]
        ax.bar(
            centers,
            density,
            width=widths,
            color=color,
            alpha=0.6,
            label=_label(path),
        )
    if ax.get_legend_handles_labels()[0]:
        ax.legend(frameon=False)
    return fig


def figure_collapse(paths):
    """Scaled shell histograms as per-radius scatter, overlaid with the
    Gaussian target exp(-x^2)/sqrt(pi)."""
    fig, ax = _new_axes(
        r"$x = (\ln|\psi(r)| + r/\lambda)\,/\,\sqrt{\sigma r/\lambda}$",
        "scaled density",
    )
    xmin, xmax = -3.0, 3.0
    any_points = False
    for path in paths:
        table = read_table(path, "shell_hist")
        if not table.rows:
            continue
        radii = sorted({float(v) for v in table.column("radius")})
        for r, color in zip(radii, CURVE_COLORS * len(radii)):
            rows = [row for row in table.rows if float(row[0]) == r]
            centers = [(float(a) + float(b)) / 2 for _, a, b, _ in rows]
            density = [float(d) for _, _, _, d in rows]
            ax.plot(
                centers,
                density,
                "o",
                ms=4,
                color=color,
                label=f"r = {r:g}",
            )
            xmin = min([xmin] + centers)
            xmax = max([xmax] + centers)
            any_points = True
    steps = 200
    xs = [xmin + (xmax - xmin) * k / steps for k in range(steps + 1)]
    ax.plot(
        xs,
        [math.exp(-x * x) / math.sqrt(math.pi) for x in xs],
        "-",
        color="red",
        lw=1.5,
        label=r"$e^{-x^2}/\sqrt{\pi}$",
    )
    if any_points or True:
        ax.legend(frameon=False, fontsize=8)
    return fig


CLASS_LEVELS = {"localized": 0.0, "crossover": 0.5, "diffusive": 1.0}


def figure_phase_diagram(paths):
    """Black (localized) / grey (crossover) / white (diffusive) map over the
    (p, w) grid."""
    if len(paths) != 1:
        raise SchemaError("phase_diagram takes exactly one phase_grid input")
    table = read_table(paths[0], "phase_grid")
    fig, ax = _new_axes("occupation p", "disorder width w")
    if table.rows:
        ps = sorted({float(row[0]) for row in table.rows})
        ws = sorted({float(row[1]) for row in table.rows})
        grid = [[float("nan")] * len(ps) for _ in ws]
        for row in table.rows:
            p, w, label = float(row[0]), float(row[1]), row[4]
            if label not in CLASS_LEVELS:
                raise SchemaError(
                    f"{paths[0]}: field 'classification' has unknown value "
                    f"{label!r}"
                )
            grid[ws.index(w)][ps.index(p)] = CLASS_LEVELS[label]
        cmap = ListedColormap(["black", "grey", "white"])
        mesh = ax.pcolormesh(
            range(len(ps) + 1),
            range(len(ws) + 1),
            grid,
            cmap=cmap,
            vmin=0.0,
            vmax=1.0,
            edgecolors="lightgrey",
            linewidth=0.3,
        )
        del mesh
        ax.set_xticks([i + 0.5 for i in range(len(ps))], [f"{p:g}" for p in ps])
        ax.set_yticks([i + 0.5 for i in range(len(ws))], [f"{w:g}" for w in ws])
    return fig


def figure_scaling_lines(paths):
    """Crossover disorder w vs occupation p, one line per lattice size."""
    fig, ax = _new_axes("occupation p", "crossover disorder w")
    for path, color in zip(paths, CURVE_COLORS * len(paths)):
        table = read_table(path, "scaling_line")
        label = (
            f"N = {table.metadata['n_per_dim']}"
            if "n_per_dim" in table.metadata
            else _label(path)
        )
        if not table.rows:
            continue
        ax.plot(
            table.floats("p"),
            table.floats("w_solved"),
            "o-",
            color=color,
            label=label,
        )
    if ax.get_legend_handles_labels()[0]:
        ax.legend(frameon=False)
    return fig


BUILDERS = {
    "L_of_t": figure_l_of_t,
    "ipr_hist": figure_ipr_hist,
    "collapse": figure_collapse,
    "phase_diagram": figure_phase_diagram,
    "scaling_lines": figure_scaling_lines,
}


def build_figure(kind, paths):
    if kind not in BUILDERS:
        raise SchemaError(
            f"field 'kind' is {kind!r}; expected one of {FIGURE_KINDS}"
        )
    if not paths:
        raise SchemaError("field 'in' needs at least one input path")
    return BUILDERS[kind](paths)


def render(kind, paths, out, fmt="png"):
    """Render one figure kind from input artifacts to a png/svg file."""
    if fmt not in ("png", "svg"):
        raise SchemaError(f"field 'format' is {fmt!r}; expected png or svg")
    fig = build_figure(kind, paths)
    try:
        # pin the embedded metadata so repeated renders are byte-identical
        metadata = (
            {"Software": "dipoloc-plots"}
            if fmt == "png"
            else {"Date": None, "Creator": "dipoloc-plots"}
        )
        fig.savefig(out, format=fmt, dpi=150, metadata=metadata)
    finally:
        plt.close(fig)
    return out

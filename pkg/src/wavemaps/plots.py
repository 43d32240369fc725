"""Batch rendering of the experiment CSV artifacts into figures.

This component performs no computation of its own: it reads the CSV files
(and optional metadata JSON sidecars) written by the ``wavemaps`` CLI and
renders them. The file formats are the whole contract; nothing here imports
the numerical modules.

Figure kinds:

- ``path3d``      one or more path CSVs (``x, B1..B3, V1..V3``) drawn as 3-D
                  curves on the unit sphere, one panel per input file.
- ``convergence`` convergence CSV (``eps, d_c0cs, d_c1cs1, data_diff``) on
                  log-log axes, with the fitted slope annotated when the
                  metadata sidecar provides one.
- ``divergence``  divergence-scan CSV (``kappa, J, predicted, ...``) on
                  linear axes, measured points with the predicted line
                  overlaid and the fit r^2 in the legend.
- ``hhl_heatmap`` product-norm table CSV (``sign1, sign2, m, n, M, N, t,
                  norm``) as a log-log column plot per scale M plus the
                  (M, N) max-norm heatmap.

Rendering is deterministic: fixed Agg backend, fixed style, metadata
stripped from the PNG output.
"""

import argparse
import csv
import json
import sys
import warnings

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("path3d", "convergence", "divergence", "hhl_heatmap")

# identical bytes for identical inputs: no timestamps, fixed dpi
SAVE_OPTS = {"dpi": 150, "metadata": {"Software": None}}


class SchemaError(ValueError):
    """Input CSV does not match the declared schema for the figure kind."""


def read_table(path: str, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty CSV") from None
        rows = [row for row in reader if row]
    missing = [name for name in required if name not in header]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    if data.shape[1] != len(header):
        raise SchemaError(f"{path}: ragged rows")
    return {name: data[:, j] for j, name in enumerate(header)}


def read_meta(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _deep_get(meta: dict, *names):
    """First matching key at the top level or under 'summary'."""
    for scope in (meta, meta.get("summary", {})):
        for name in names:
            if name in scope:
                return scope[name]
    return None


def _new_figure(n_panels: int = 1, three_d: bool = False):
    fig, axes = plt.subplots(
        1, n_panels, figsize=(5.0 * n_panels, 4.2),
        subplot_kw={"projection": "3d"} if three_d else None, squeeze=False)
    return fig, axes[0]


def _warn_single_row(path: str) -> None:
    warnings.warn(f"{path}: single data row, plotting scatter without a fit",
                  stacklevel=2)


# ---------------------------------------------------------------------------
# renderers


def render_path3d(inputs: list[str], out: str, meta: dict) -> None:
    tables = [read_table(p, ("x", "B1", "B2", "B3")) for p in inputs]
    fig, axes = _new_figure(len(tables), three_d=True)
    u, v = np.meshgrid(np.linspace(0, 2 * np.pi, 40),
                       np.linspace(0, np.pi, 20))
    for ax, table, path in zip(axes, tables, inputs):
        ax.plot_surface(np.cos(u) * np.sin(v), np.sin(u) * np.sin(v),
                        np.cos(v), color="0.9", alpha=0.25, linewidth=0)
        mask = np.abs(table["x"]) <= 1.0
        if not mask.any():
            mask = slice(None)
        ax.plot(table["B1"][mask], table["B2"][mask], table["B3"][mask],
                lw=0.7, color="tab:blue")
        ax.set_title(_eps_label(path, meta), fontsize=10)
        ax.set_box_aspect((1, 1, 1))
        ax.set_axis_off()
    fig.savefig(out, **SAVE_OPTS)
    plt.close(fig)


def _eps_label(path: str, meta: dict) -> str:
    eps = _deep_get(meta, "eps")
    if eps is not None:
        return f"eps = {eps:g}"
    stem = path.rsplit("/", 1)[-1].removesuffix(".csv")
    if "eps" in stem:
        return "eps = " + stem.split("eps")[-1]
    return stem


def render_convergence(inputs: list[str], out: str, meta: dict) -> None:
    table = read_table(inputs[0], ("eps", "d_c0cs", "d_c1cs1", "data_diff"))
    fig, (ax,) = _new_figure()
    single = table["eps"].size == 1
    if single:
        _warn_single_row(inputs[0])
    for column, label, marker in (("d_c0cs", "solution, C_t^0 C_x^s", "o"),
                                  ("d_c1cs1", "solution, C_t^1 C_x^{s-1}", "s"),
                                  ("data_diff", "data, D^s", "^")):
        ax.plot(table["eps"], table[column], marker=marker, lw=0 if single
                else 1.2, label=label)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.invert_xaxis()
    ax.set_xlabel("eps")
    ax.set_ylabel("successive difference")
    slope = _deep_get(meta, "slope_c0cs", "slope")
    if slope is not None and not single:
        ax.annotate(f"fitted slope {slope:.3g}", xy=(0.05, 0.05),
                    xycoords="axes fraction", fontsize=9)
    ax.legend(fontsize=8)
    fig.savefig(out, **SAVE_OPTS)
    plt.close(fig)


def render_divergence(inputs: list[str], out: str, meta: dict) -> None:
    table = read_table(inputs[0], ("kappa", "J", "predicted"))
    fig, (ax,) = _new_figure()
    single = table["kappa"].size == 1
    if single:
        _warn_single_row(inputs[0])
    r2 = _deep_get(meta, "r_squared")
    fit_label = "measured J(kappa)" if r2 is None else (
        f"measured J(kappa), fit r^2 = {r2:.4g}")
    ax.plot(table["kappa"], table["J"], "o", label=fit_label)
    if not single:
        ax.plot(table["kappa"], table["predicted"], "-",
                color="tab:orange", label="predicted main term")
    ax.set_xlabel("kappa")
    ax.set_ylabel("J")
    ax.legend(fontsize=8)
    fig.savefig(out, **SAVE_OPTS)
    plt.close(fig)


def render_hhl_heatmap(inputs: list[str], out: str, meta: dict) -> None:
    table = read_table(inputs[0], ("M", "N", "norm"))
    Ms = np.unique(table["M"])
    Ns = np.unique(table["N"])
    grid = np.full((Ms.size, Ns.size), np.nan)
    column = {}
    for M, N, norm in zip(table["M"], table["N"], table["norm"]):
        i = int(np.searchsorted(Ms, M))
        j = int(np.searchsorted(Ns, N))
        grid[i, j] = max(np.nan_to_num(grid[i, j]), norm)
        column[M] = max(column.get(M, 0.0), norm)
    fig, (ax_col, ax_map) = _new_figure(2)
    single = len(column) == 1
    if single:
        _warn_single_row(inputs[0])
    pairs = sorted(column.items())
    ax_col.plot([p[0] for p in pairs], [p[1] for p in pairs], "o",
                lw=0 if single else 1.2)
    ax_col.set_xscale("log", base=2)
    ax_col.set_yscale("log")
    ax_col.set_xlabel("M")
    ax_col.set_ylabel("max weighted product norm")
    slope = _deep_get(meta, "slope")
    if slope is not None and not single:
        ax_col.annotate(f"fitted slope {slope:.3g}", xy=(0.05, 0.05),
                        xycoords="axes fraction", fontsize=9)
    masked = np.ma.masked_invalid(np.log10(np.maximum(grid, 1e-300)))
    im = ax_map.pcolormesh(np.log2(Ns), np.log2(Ms), masked, shading="auto")
    ax_map.set_xlabel("log2 N")
    ax_map.set_ylabel("log2 M")
    fig.colorbar(im, ax=ax_map, label="log10 norm")
    fig.savefig(out, **SAVE_OPTS)
    plt.close(fig)


_RENDERERS = {
    "path3d": render_path3d,
    "convergence": render_convergence,
    "divergence": render_divergence,
    "hhl_heatmap": render_hhl_heatmap,
}


# ---------------------------------------------------------------------------
# CLI


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render experiment CSVs into figures")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="FILE.csv",
                        help="input CSV (repeatable for path3d panels)")
    parser.add_argument("--out", required=True, metavar="FIG.png")
    parser.add_argument("--meta", default=None, metavar="SUMMARY.json",
                        help="metadata sidecar with fit annotations")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        meta = read_meta(args.meta)
        _RENDERERS[args.kind](args.inputs, args.out, meta)
    except (SchemaError, OSError, json.JSONDecodeError) as exc:
        print(f"plots error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

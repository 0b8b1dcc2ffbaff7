"""CSV time series, rendered figures and a companion plotting script."""
from __future__ import annotations

import csv
from pathlib import Path

from .diagnostics import CSV_HEADER, DiagnosticsRow

_INT_COLUMNS = {"iters_llg", "iters_mom"}

PLOT_SCRIPT = '''\
"""Re-render the figures of {csv_name}."""
from magstrict.report import read_csv, render_figures

rows = read_csv({csv_name!r})
for path in render_figures(rows, {stem!r}):
    print(path)
'''


def _fmt(name: str, value) -> str:
    return str(int(value)) if name in _INT_COLUMNS else f"{float(value):.17g}"


def write_csv(rows, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow([_fmt(n, v) for n, v in zip(CSV_HEADER, row.as_tuple())])
    return path


def read_csv(path) -> list[DiagnosticsRow]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        rows = []
        for rec in reader:
            vals = [int(v) if n in _INT_COLUMNS else float(v) for n, v in zip(CSV_HEADER, rec)]
            rows.append(DiagnosticsRow(*vals))
    return rows


def render_figures(rows, stem, blow_up: float | None = None) -> list[Path]:
    """Energy, W^{1,inf} seminorm and component-average curves as PNG files."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    t = [r.t for r in rows]
    panels = [
        ("energy", [("E_exchange", r"$E(m,t)$")], "energy"),
        ("w1inf", [("W1inf", r"$|m(t)|_{1,\infty}$")], r"$W^{1,\infty}$ seminorm"),
        ("components", [("m1_L2", r"$\|m_1\|_{L^2}$"), ("m3_L2", r"$\|m_3\|_{L^2}$")], r"$L^2$ average"),
    ]
    if any(r.E_elastic for r in rows):
        panels.append(("elastic", [("E_elastic", "elastic energy")], "energy"))
    written = []
    for suffix, series, ylabel in panels:
        fig, ax = plt.subplots(figsize=(5.5, 3.6))
        for name, label in series:
            ax.plot(t, [getattr(r, name) for r in rows], lw=1.2, label=label)
        if blow_up is not None and suffix in ("energy", "w1inf"):
            ax.axvline(blow_up, color="0.5", ls="--", lw=0.8, label=f"$T_B$ = {blow_up:.4g}")
        ax.set_xlabel("t")
        ax.set_ylabel(ylabel)
        if rows:
            ax.legend(frameon=False)
        fig.tight_layout()
        path = stem.with_name(f"{stem.name}_{suffix}.png")
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)
    return written


def write_plot_script(csv_path, stem) -> Path:
    csv_path = Path(csv_path)
    script = csv_path.with_name(f"plot_{csv_path.stem}.py")
    script.write_text(PLOT_SCRIPT.format(csv_name=csv_path.name, stem=Path(stem).name))
    return script


def emit_outputs(rows, path, figures: bool = True, blow_up: float | None = None) -> list[Path]:
    """Write ``<path>.csv``, the plot script and (optionally) the figures."""
    stem = Path(path)
    if stem.suffix == ".csv":
        stem = stem.with_suffix("")
    # append rather than with_suffix: stems such as "run_alpha-0.5" carry a dot
    csv_path = write_csv(rows, stem.with_name(stem.name + ".csv"))
    out = [csv_path, write_plot_script(csv_path, stem)]
    if figures:
        out += render_figures(rows, stem, blow_up)
    return out

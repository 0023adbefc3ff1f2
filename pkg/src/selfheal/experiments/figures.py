"""Smoothed per-SEND curves as CSV data files and static PNG charts."""

from __future__ import annotations

import csv
import logging
from pathlib import Path

import numpy as np

from .grid import GridResult

log = logging.getLogger(__name__)

# fixed metadata keeps the PNG bytes independent of library version and time
PNG_METADATA = {"Software": None}


def sliding_mean(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing mean over the last ``window`` points; the first points average what exists so far."""
    v = np.asarray(values, dtype=np.float64)
    if window < 1:
        raise ValueError("window must be at least 1")
    c = np.concatenate(([0.0], np.cumsum(v)))
    idx = np.arange(1, len(v) + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def _seed_mean(series, attr: str) -> np.ndarray | None:
    arrays = [getattr(m, attr).astype(np.float64) for m in series]
    if not arrays:
        return None
    length = min(len(a) for a in arrays)
    return np.mean([a[:length] for a in arrays], axis=0)


def write_curve(path: Path, values: np.ndarray) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("send_index", "value"))
        for i, v in enumerate(values.tolist()):
            w.writerow((i, f"{v:.6f}"))


def render_curve(path: Path, curves: dict[str, np.ndarray], ylabel: str, title: str) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for label, ys in curves.items():
        ax.plot(np.arange(len(ys)), ys, label=label, linewidth=1.2)
    ax.set_xlabel("# calls to SEND")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    if len(curves) > 1:
        ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata=PNG_METADATA)
    plt.close(fig)


def emit_figures(result: GridResult, out_dir: str | Path, window: int | None = None, render: bool = True) -> list[Path]:
    """Two curves per (n, f, kind): messages per SEND and fraction corrupted, each smoothed."""
    out = Path(out_dir) / "figures"
    out.mkdir(parents=True, exist_ok=True)
    window = window or result.grid.window
    written = []
    for n in result.grid.n_values:
        for f in result.grid.f_values:
            for baseline in (False, True):
                series = result.series(n, f, baseline)
                if not series:
                    continue
                kind = "baseline" if baseline else "selfheal"
                stem = f"{kind}_n{n}_f{f:.6g}"
                for name, attr, ylabel in (
                    ("msgs_curve", "messages", "messages per SEND"),
                    ("corruption_curve", "corrupted", "fraction of SENDs corrupted"),
                ):
                    raw = _seed_mean(series, attr)
                    if raw is None or not len(raw):
                        log.warning("no %s data for %s; skipped", name, stem)
                        continue
                    smooth = sliding_mean(raw, window)
                    data = out / f"{stem}_{name}.csv"
                    write_curve(data, smooth)
                    written.append(data)
                    if render:
                        png = data.with_suffix(".png")
                        render_curve(png, {kind: smooth}, ylabel, f"n={n}, f={f:.6g}")
                        written.append(png)
    return written

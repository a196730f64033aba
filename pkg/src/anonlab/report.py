"""Reporting: long-format CSV, ASCII heat maps, and rendered figures.

Consumes the sweep.csv written by the experiment runner and produces a
plot-ready long-format table plus an accuracy heat map over the
(beta_m, beta_l) grid -- as ASCII on stdout and as PNG files via
matplotlib.
"""

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

REQUIRED_COLUMNS = ["n", "beta_m", "beta_l", "m", "l", "model", "attack",
                    "trials", "accuracy", "ambiguity", "pe"]

LONG_METRICS = ["accuracy", "ambiguity", "pe", "ev1", "ev2", "ev3"]

_SHADES = " .:-=+*#%@"


def read_sweep_csv(path) -> list[dict]:
    """Read and validate a sweep result file.

    Malformed input is a runtime failure (ValueError), not a usage error.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in REQUIRED_COLUMNS:
            if col not in header:
                raise ValueError(f"{path}: missing column {col!r}")
        rows = []
        for i, row in enumerate(reader, 2):
            try:
                parsed = dict(row)
                parsed["n"] = int(row["n"])
                parsed["beta_m"] = float(row["beta_m"])
                parsed["beta_l"] = float(row["beta_l"])
                parsed["accuracy"] = float(row["accuracy"])
            except (TypeError, ValueError):
                raise ValueError(f"{path}: malformed row {i}")
            rows.append(parsed)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return rows


def write_long_csv(rows: list[dict], path) -> None:
    """One (cell, attack, metric, value) record per line."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "beta_m", "beta_l", "attack", "metric", "value"])
        for row in rows:
            for metric in LONG_METRICS:
                if metric in row and row[metric] != "":
                    writer.writerow([row["n"], row["beta_m"], row["beta_l"],
                                     row["attack"], metric, row[metric]])


def _grid(rows: list[dict]) -> tuple[list[float], list[float], np.ndarray]:
    bms = sorted({r["beta_m"] for r in rows})
    bls = sorted({r["beta_l"] for r in rows})
    acc = np.full((len(bls), len(bms)), np.nan)
    for r in rows:
        acc[bls.index(r["beta_l"]), bms.index(r["beta_m"])] = r["accuracy"]
    return bms, bls, acc


def ascii_heatmap(rows: list[dict]) -> str:
    """Accuracy heat map over the (beta_m, beta_l) grid; darker is higher."""
    bms, bls, acc = _grid(rows)
    lines = ["accuracy heat map (rows: beta_l desc, cols: beta_m asc)"]
    lines.append("        " + " ".join(f"{b:6.2f}" for b in bms))
    for bi in range(len(bls) - 1, -1, -1):
        cells = []
        for mi in range(len(bms)):
            v = acc[bi, mi]
            if np.isnan(v):
                cells.append("     .")
            else:
                shade = _SHADES[min(int(v * len(_SHADES)), len(_SHADES) - 1)]
                cells.append(f"{v:5.2f}{shade}")
        lines.append(f"{bls[bi]:6.2f}  " + " ".join(cells))
    return "\n".join(lines)


def render_heatmaps(rows: list[dict], out_dir) -> list[str]:
    """Render one accuracy heat map PNG per (n, attack) group."""
    os.makedirs(out_dir, exist_ok=True)
    groups = {}
    for r in rows:
        groups.setdefault((r["n"], r["attack"]), []).append(r)
    written = []
    for (n, attack), grp in sorted(groups.items()):
        bms, bls, acc = _grid(grp)
        fig, ax = plt.subplots(figsize=(5, 4))
        im = ax.imshow(acc, origin="lower", vmin=0, vmax=1, cmap="viridis",
                       aspect="auto",
                       extent=(-0.5, len(bms) - 0.5, -0.5, len(bls) - 0.5))
        ax.set_xticks(range(len(bms)), [f"{b:g}" for b in bms])
        ax.set_yticks(range(len(bls)), [f"{b:g}" for b in bls])
        ax.set_xlabel("beta_m  (m = n^beta_m)")
        ax.set_ylabel("beta_l  (l = n^beta_l)")
        ax.set_title(f"match accuracy, n={n}, {attack}")
        fig.colorbar(im, ax=ax, label="accuracy")
        fig.tight_layout()
        path = os.path.join(out_dir, f"heatmap_n{n}_{attack}.png")
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written

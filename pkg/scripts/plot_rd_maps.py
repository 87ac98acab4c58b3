"""Plot the two range-Doppler maps of a ``reproduce-paper`` run side by side.

    python3 scripts/plot_rd_maps.py results/fig2/seed_000 --save fig2.png

Needs matplotlib (``pip install -e .[scripts]``).
"""
import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def read_map(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    velocities = np.array([float(v) for v in rows[0][1:]])
    body = np.array([[float(v) for v in row] for row in rows[1:]])
    return body[:, 0], velocities, body[:, 1:]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("run_dir")
    p.add_argument("--save", default=None)
    p.add_argument("--floor-db", type=float, default=-60.0)
    args = p.parse_args()
    run = Path(args.run_dir)

    maps = [read_map(run / f"rd_{name}.csv") for name in ("random", "designed")]
    peak = max(m[2].max() for m in maps)
    fig, axes = plt.subplots(1, 2, figsize=(11, 4), sharey=True)
    for ax, (ranges, vel, db), title in zip(axes, maps, ("random codes", "co-designed codes")):
        im = ax.imshow(np.clip(db - peak, args.floor_db, 0), aspect="auto", origin="lower",
                       extent=[vel[0], vel[-1], ranges[0], ranges[-1]], cmap="viridis")
        ax.set_title(title)
        ax.set_xlabel("velocity (m/s)")
    axes[0].set_ylabel("range (m)")
    fig.colorbar(im, ax=axes, label="dB re. peak")
    out = args.save or run / "rd_maps.png"
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()

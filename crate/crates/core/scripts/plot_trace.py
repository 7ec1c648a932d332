#!/usr/bin/env python3
"""Plot a trace CSV written by `iidetect simulate --out` or `iidetect casestudy`.

usage: plot_trace.py TRACE.csv [OUT.png]

Top panel: plaintext outputs y against encoded outputs y~.
Middle panel: distance z, recovered distance zeta and the threshold.
Bottom panel: alarm a, decoded alarm a^, and the encoded alarm a~ (right axis).
"""

import csv
import json
import sys
from pathlib import Path

import matplotlib.pyplot as plt


def columns(rows, prefix):
    names = [n for n in rows[0] if n.startswith(prefix + "_") and n[len(prefix) + 1:].isdigit()]
    return {n: [float(r[n]) for r in rows] for n in names}


def main():
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    path = Path(sys.argv[1])
    with path.open() as f:
        rows = list(csv.DictReader(f))
    k = [int(r["k"]) for r in rows]

    alpha = None
    summary = path.with_name("summary.json")
    if summary.exists():
        alpha = json.loads(summary.read_text()).get("alpha")

    fig, (ax_y, ax_z, ax_a) = plt.subplots(3, 1, sharex=True, figsize=(9, 8))
    for name, v in columns(rows, "y").items():
        ax_y.plot(k, v, label=name)
    ax_yt = ax_y.twinx()
    for name, v in columns(rows, "ytilde").items():
        ax_yt.plot(k, v, "--", linewidth=0.8, label=name)
    ax_y.set_ylabel("y")
    ax_yt.set_ylabel("y~")
    ax_y.legend(loc="upper left", fontsize=7)
    ax_yt.legend(loc="upper right", fontsize=7)

    ax_z.plot(k, [float(r["z"]) for r in rows], label="z")
    ax_z.plot(k, [float(r["zeta"]) for r in rows], ":", label="zeta")
    if alpha is not None:
        ax_z.axhline(alpha, color="k", linewidth=0.8, label="alpha")
    ax_z.set_yscale("symlog")
    ax_z.set_ylim(bottom=0)
    ax_z.legend(fontsize=7)

    ax_a.step(k, [int(r["a"]) for r in rows], where="mid", label="a")
    ax_a.step(k, [int(r["ahat"]) for r in rows], ":", where="mid", label="a^")
    ax_at = ax_a.twinx()
    for name, v in columns(rows, "atilde").items():
        ax_at.plot(k, v, "--", linewidth=0.8, label=name)
    onset = next((ki for ki, r in zip(k, rows) if r["fault_active"] == "1"), None)
    if onset is not None:
        for ax in (ax_y, ax_z, ax_a):
            ax.axvline(onset, color="r", linewidth=0.6)
    ax_a.set_xlabel("k")
    ax_a.legend(loc="upper left", fontsize=7)
    ax_at.legend(loc="upper right", fontsize=7)

    fig.tight_layout()
    out = sys.argv[2] if len(sys.argv) > 2 else str(path.with_suffix(".png"))
    fig.savefig(out, dpi=120)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()

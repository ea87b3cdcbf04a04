"""Matplotlib figures for CLI reports (Agg backend, no timestamps)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_META = {"Software": None}


def page_heatmap(pg, path):
    ents = {k: v for k, v in pg.entries.items() if v}
    ps = [p for p, _ in ents] or [0]
    qs = [q for _, q in ents] or [0]
    p0, p1, q0, q1 = min(0, min(ps)), max(ps), min(0, min(qs)), max(qs)
    grid = [[ents.get((p, q), 0) for p in range(p0, p1 + 1)] for q in range(q0, q1 + 1)]
    fig, ax = plt.subplots(figsize=(1 + 0.6 * (p1 - p0 + 1), 1 + 0.6 * (q1 - q0 + 1)))
    ax.imshow(grid, origin="lower", cmap="Blues", extent=(p0 - .5, p1 + .5, q0 - .5, q1 + .5))
    for (p, q), v in ents.items():
        ax.text(p, q, str(v), ha="center", va="center")
    for (p, q), m in sorted(pg.differentials.items()):
        if pg.rank(p, q):
            ax.annotate("", xy=(p + pg.r, q - pg.r + 1), xytext=(p, q),
                        arrowprops={"arrowstyle": "->", "color": "crimson"})
    ax.set_xlabel("p")
    ax.set_ylabel("q")
    ax.set_title(f"E_{pg.r}")
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)


def betti_bars(betti: dict, path, dual: dict | None = None, d: int | None = None):
    top = max([d or 0] + list(betti) + list(dual or {}))
    xs = list(range(top + 1))
    fig, ax = plt.subplots(figsize=(4, 3))
    w = 0.4 if dual is not None else 0.8
    ax.bar([x - (w / 2 if dual is not None else 0) for x in xs], [betti.get(x, 0) for x in xs], w, label="p")
    if dual is not None:
        ax.bar([x + w / 2 for x in xs], [dual.get(top - x, 0) for x in xs], w, label="q, reversed")
        ax.legend()
    ax.set_xticks(xs)
    ax.set_xlabel("degree")
    ax.set_ylabel("dimension")
    fig.tight_layout()
    fig.savefig(path, metadata=_META)
    plt.close(fig)

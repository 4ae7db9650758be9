"""Regenerate the golden KDE reference files in this directory.

The reference is a direct, loop-based summation of the bivariate Gaussian
kernel over every (node, sample) combination with no truncation and no
vectorized shortcuts, deliberately independent of the library's grid code.

Run from the repository root:  python3 tests/data/make_golden.py
"""

import math
from pathlib import Path

PAIRS = [(0.0, 0.0), (1.0, -1.0), (-2.0, 0.5)]
H = 0.7
XMIN = XMAX_NEG = -6.0
XMAX = 6.0
STEP = 0.05
OUT = Path(__file__).parent


def kernel(z1, z2):
    return math.exp(-0.5 * (z1 * z1 + z2 * z2)) / (2.0 * math.pi)


def main():
    n_nodes = int(round((XMAX - XMIN) / STEP)) + 1
    nodes = [XMIN + STEP * i for i in range(n_nodes)]
    norm = 1.0 / (len(PAIRS) * H * H)
    rows = []
    for x in nodes:
        row = []
        for y in nodes:
            total = 0.0
            for px, py in PAIRS:
                total += kernel((x - px) / H, (y - py) / H)
            row.append(total * norm)
        rows.append(row)

    grid_file = OUT / "golden_kde_3pairs.csv"
    with open(grid_file, "w") as fh:
        fh.write("xmin,xmax,ymin,ymax,step\n")
        fh.write(
            f"{XMIN:.17g},{nodes[-1]:.17g},{XMIN:.17g},{nodes[-1]:.17g},{STEP:.17g}\n"
        )
        for row in rows:
            fh.write(",".join(f"{v:.15g}" for v in row) + "\n")

    marginal_file = OUT / "golden_kde_3pairs_marginal.txt"
    with open(marginal_file, "w") as fh:
        for row in rows:
            fh.write(f"{STEP * sum(row):.15g}\n")

    print(f"wrote {grid_file} ({n_nodes}x{n_nodes}) and {marginal_file}")


if __name__ == "__main__":
    main()

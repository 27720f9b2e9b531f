"""Writes synthetic_counts.csv: a 12 x 39 count table (grand total 1075) whose
expected profile has two correspondence-analysis dimensions.

    python3 make_synthetic_counts.py [seed]
"""
import sys

import numpy as np

ROWS, COLS, TOTAL = 12, 39, 1075
SINGULAR = (0.44, 0.15)


def standardized(v, w):
    v = v - np.sum(w * v)
    return v / np.sqrt(np.sum(w * v * v))


def orthogonalized(v, u, w):
    return standardized(v - np.sum(w * u * v) * u, w)


def main(seed):
    rng = np.random.default_rng(seed)
    r = rng.gamma(8.0, size=ROWS)
    r /= r.sum()
    c = rng.gamma(1.2, size=COLS) + 0.05
    c /= c.sum()

    f1 = standardized(rng.normal(size=ROWS), r)
    f2 = orthogonalized(rng.normal(size=ROWS), f1, r)
    g1 = standardized(rng.normal(size=COLS), c)
    g2 = orthogonalized(rng.normal(size=COLS), g1, c)

    core = 1.0 + SINGULAR[0] * np.outer(f1, g1) + SINGULAR[1] * np.outer(f2, g2)
    prob = np.outer(r, c) * np.clip(core, 0.02, None)
    prob /= prob.sum()

    while True:
        x = rng.multinomial(TOTAL, prob.ravel()).reshape(ROWS, COLS)
        if (x.sum(axis=0) > 0).all() and (x.sum(axis=1) > 0).all():
            break

    header = ",".join(["perfume"] + [f"w{j + 1:02d}" for j in range(COLS)])
    lines = [header] + [",".join([f"p{i + 1:02d}"] + [str(v) for v in row]) for i, row in enumerate(x)]
    with open("synthetic_counts.csv", "w") as fh:
        fh.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 11)

#!/usr/bin/env python3
"""Write a two-class 8x8 digit subset as IDX files (train/test split).

Uses the scikit-learn copy of the UCI optical digits (already 8x8, levels 0..16),
so no download is needed. Intensities are rescaled to 0..255.
"""
import argparse
import struct
from pathlib import Path

import numpy as np
from sklearn.datasets import load_digits


def write_images(path, images):
    count, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, count, rows, cols))
        f.write(images.astype(np.uint8).tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(np.asarray(labels, dtype=np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="tests/data")
    ap.add_argument("--classes", type=int, nargs=2, default=[3, 8])
    ap.add_argument("--test-fraction", type=float, default=0.2)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    digits = load_digits()
    keep = np.isin(digits.target, args.classes)
    images = np.rint(digits.images[keep] * 255.0 / 16.0).astype(np.uint8)
    labels = digits.target[keep]
    order = np.random.RandomState(args.seed).permutation(len(labels))
    n_test = int(round(args.test_fraction * len(labels)))
    test, train = order[:n_test], order[n_test:]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_images(out / "digits-train-images.idx3-ubyte", images[train])
    write_labels(out / "digits-train-labels.idx1-ubyte", labels[train])
    write_images(out / "digits-test-images.idx3-ubyte", images[test])
    write_labels(out / "digits-test-labels.idx1-ubyte", labels[test])
    print(f"train {len(train)} test {len(test)} classes {args.classes}")


if __name__ == "__main__":
    main()

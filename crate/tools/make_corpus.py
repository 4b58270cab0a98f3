#!/usr/bin/env python3
"""Cut the scikit-image sample photographs into 128x128 grayscale PGM tiles.

Tiles are non-overlapping, gray = mean over color channels rounded half up,
and the pooled tiles are shuffled with a fixed seed before being split into
train/val/test directories.
"""
import argparse
import pathlib

import numpy as np
from skimage import data

SOURCES = [
    "astronaut", "camera", "chelsea", "coffee", "coins", "rocket",
    "stereo_motorcycle", "brick", "grass", "gravel", "moon",
]
TILE = 128


def gray8(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3:
        img = img[..., :3].mean(axis=2)
    return np.floor(img + 0.5).clip(0, 255).astype(np.uint8)


def tiles(name):
    img = getattr(data, name)()
    if isinstance(img, tuple):  # stereo pairs: keep the left view
        img = img[0]
    img = gray8(img)
    h, w = img.shape
    for r in range(0, h - TILE + 1, TILE):
        for c in range(0, w - TILE + 1, TILE):
            yield f"{name}_{r:04d}_{c:04d}", img[r:r + TILE, c:c + TILE]


def write_pgm(path, img):
    h, w = img.shape
    path.write_bytes(f"P5\n{w} {h}\n255\n".encode() + img.tobytes())


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/natural")
    ap.add_argument("--seed", type=int, default=2016)
    ap.add_argument("--split", default="50,10,20", help="train,val,test tile counts")
    args = ap.parse_args()

    pool = [t for name in SOURCES for t in tiles(name)]
    order = np.random.default_rng(args.seed).permutation(len(pool))
    counts = [int(x) for x in args.split.split(",")]
    if sum(counts) > len(pool):
        raise SystemExit(f"only {len(pool)} tiles available")
    start = 0
    for split, n in zip(["train", "val", "test"], counts):
        d = pathlib.Path(args.out) / split
        d.mkdir(parents=True, exist_ok=True)
        for i in order[start:start + n]:
            name, img = pool[i]
            write_pgm(d / f"{name}.pgm", img)
        start += n
        print(f"{split}: {n} tiles -> {d}")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Regenerate the bundled 128x128 grayscale corpus from scikit-image sample photographs.

All source images ship with scikit-image and are CC0 or public domain
(see corpus/SOURCES.md). Each source is converted to luma, area-downscaled
by an integer factor and tiled into 128x128 crops at fixed positions.
"""
import os
import sys

import numpy as np
from PIL import Image

import skimage

DATA = os.path.join(os.path.dirname(skimage.__file__), "data")
OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "corpus")

# (file, downscale factor, list of (row, col) tile origins in the downscaled image)
SOURCES = [
    ("astronaut.png", 2, [(0, 0), (128, 64), (96, 128)]),
    ("camera.png", 2, [(0, 64), (128, 0), (128, 128)]),
    ("brick.png", 2, [(0, 0), (128, 128), (0, 128)]),
    ("grass.png", 2, [(0, 0), (128, 128), (0, 128)]),
    ("gravel.png", 2, [(0, 0), (128, 128), (0, 128)]),
    ("coffee.png", 2, [(0, 0), (64, 160)]),
    ("chelsea.png", 2, [(10, 20), (10, 96)]),
    ("coins.png", 2, [(0, 0), (20, 60)]),
    ("ihc.png", 2, [(0, 0), (128, 128), (0, 128), (128, 0)]),
    ("cell.png", 2, [(0, 0), (140, 140)]),
    ("rocket.jpg", 2, [(40, 40), (80, 180)]),
    ("hubble_deep_field.jpg", 2, [(0, 0), (200, 300)]),
    ("retina.jpg", 4, [(100, 100), (150, 180), (50, 200)]),
]


def luma(img: Image.Image) -> np.ndarray:
    a = np.asarray(img.convert("RGB"), dtype=np.float64)
    return 0.299 * a[..., 0] + 0.587 * a[..., 1] + 0.114 * a[..., 2]


def area_downscale(a: np.ndarray, f: int) -> np.ndarray:
    h, w = (a.shape[0] // f) * f, (a.shape[1] // f) * f
    a = a[:h, :w]
    return a.reshape(h // f, f, w // f, f).mean(axis=(1, 3))


def main() -> int:
    os.makedirs(OUT, exist_ok=True)
    for old in os.listdir(OUT):
        if old.endswith(".png"):
            os.remove(os.path.join(OUT, old))
    n = 0
    for name, factor, tiles in SOURCES:
        img = Image.open(os.path.join(DATA, name))
        small = area_downscale(luma(img), factor)
        stem = os.path.splitext(name)[0]
        for i, (r, c) in enumerate(tiles):
            tile = small[r : r + 128, c : c + 128]
            if tile.shape != (128, 128):
                print(f"tile {name} {r},{c} out of range {small.shape}", file=sys.stderr)
                return 1
            out = np.clip(np.rint(tile), 0, 255).astype(np.uint8)
            Image.fromarray(out, mode="L").save(os.path.join(OUT, f"{stem}_{i}.png"))
            n += 1
    print(f"wrote {n} images to {os.path.normpath(OUT)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

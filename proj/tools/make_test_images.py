#!/usr/bin/env python3
"""Regenerates the PGM fixtures in tests/data from scikit-image's bundled data."""

import os
import sys

import numpy as np
import skimage
import skimage.color
import skimage.data


def write_pgm(path, img):
    img = np.ascontiguousarray(img, dtype=np.uint8)
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n255\n" % (w, h))
        f.write(img.tobytes())


def to_gray8(rgb):
    return np.clip(np.round(skimage.color.rgb2gray(rgb) * 255.0), 0, 255).astype(np.uint8)


def disparity_to_depth8(disp):
    disp = disp.astype(np.float64)
    valid = np.isfinite(disp)
    # Fill occlusions from the nearest valid pixel to the left (then right).
    for row, ok in zip(disp, valid):
        last = None
        for i in range(row.size):
            if ok[i]:
                last = row[i]
            elif last is not None:
                row[i] = last
        nxt = None
        for i in range(row.size - 1, -1, -1):
            if np.isfinite(row[i]):
                nxt = row[i]
            elif nxt is not None:
                row[i] = nxt
    lo, hi = np.min(disp), np.max(disp)
    return np.clip(np.round((disp - lo) / (hi - lo) * 255.0), 0, 255).astype(np.uint8)


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "tests", "data")
    os.makedirs(out, exist_ok=True)
    write_pgm(os.path.join(out, "camera.pgm"), skimage.data.camera())
    write_pgm(os.path.join(out, "astronaut.pgm"), to_gray8(skimage.data.astronaut()))
    write_pgm(os.path.join(out, "coffee.pgm"), to_gray8(skimage.data.coffee()))
    data_dir = os.path.join(os.path.dirname(skimage.__file__), "data")
    disp = np.load(os.path.join(data_dir, "motorcycle_disp.npz"))["arr_0"]
    write_pgm(os.path.join(out, "motorcycle_depth.pgm"), disparity_to_depth8(disp))


if __name__ == "__main__":
    main()

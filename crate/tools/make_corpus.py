"""Cut the benchmark corpus out of sample photographs bundled with scikit-image,
scikit-learn and matplotlib. Tiles never overlap, so every output is a distinct image.

    python3 tools/make_corpus.py crates/core/tests/data/corpus
"""
import os
import sys

import numpy as np
from PIL import Image

SITE = os.path.dirname(os.path.dirname(np.__file__))
def grid(size, nx, ny, x0=0, y0=0):
    return [(x0 + size * i, y0 + size * j) for j in range(ny) for i in range(nx)]


SOURCES = [
    # (relative path, tile size, list of top-left corners)
    ("skimage/data/astronaut.png", 170, grid(170, 3, 3, 1, 1)),
    ("skimage/data/camera.png", 170, grid(170, 3, 3, 1, 1)),
    ("skimage/data/coffee.png", 300, grid(300, 2, 1, 0, 50)),
    ("skimage/data/chelsea.png", 300, [(75, 0)]),
    ("sklearn/datasets/images/china.jpg", 213, grid(213, 3, 1, 0, 107)),
    ("sklearn/datasets/images/flower.jpg", 213, grid(213, 3, 1, 0, 107)),
    ("matplotlib/mpl-data/sample_data/grace_hopper.jpg", 256, grid(256, 2, 2, 0, 44)),
    ("skimage/data/motorcycle_left.png", 370, grid(370, 2, 1, 0, 65)),
    ("skimage/data/ihc.png", 256, grid(256, 2, 2)),
    ("skimage/data/coins.png", 300, [(42, 1)]),
    ("skimage/data/gravel.png", 256, grid(256, 2, 2)),
    ("skimage/data/brick.png", 256, grid(256, 2, 2)),
    ("skimage/data/grass.png", 256, grid(256, 2, 2)),
    ("skimage/data/hubble_deep_field.jpg", 290, grid(290, 3, 3)),
]


# Tiles that are mostly sky or defocused background carry no usable detail.
MIN_DETAIL = 0.01


def detail(tile):
    """Mean gradient magnitude on a [0, 1] intensity scale."""
    a = np.asarray(tile, dtype=float) / 255.0
    gy, gx = np.gradient(a)
    return float(np.hypot(gx, gy).mean())


def main(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    n = skipped = 0
    for rel, size, corners in SOURCES:
        img = Image.open(os.path.join(SITE, rel)).convert("L")
        stem = os.path.splitext(os.path.basename(rel))[0]
        for i, (x, y) in enumerate(corners):
            tile = img.crop((x, y, x + size, y + size)).resize((300, 300), Image.BILINEAR)
            if detail(tile) < MIN_DETAIL:
                skipped += 1
                continue
            tile.save(os.path.join(out_dir, f"{stem}_{i:02d}.pgm"))
            n += 1
    print(f"wrote {n} images to {out_dir}, skipped {skipped} featureless tiles")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "corpus")

"""Deterministic synthetic clothing-silhouette images in IDX files.

Network access is often unavailable where the simulations run, so this module
draws minimal 28x28 grayscale stand-ins for the two stimulus classes the
experiments need (shirt-like, class 0; boot-like, class 9; plus a trouser-like
filler class 1 so class selection is non-trivial). Intensity jitter, shape
jitter and pixel noise give each class enough within-class variety for the
cosine-similarity context picks to be meaningful.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .dataset import LabeledImages, write_idx

SHIRT_CLASS = 0
TROUSER_CLASS = 1
BOOT_CLASS = 9


def _shirt(rng) -> np.ndarray:
    img = np.zeros((28, 28), dtype=np.float64)
    base = rng.uniform(170, 230)
    dx = rng.integers(-2, 3)
    top = 6 + rng.integers(-1, 2)
    bottom = 22 + rng.integers(-1, 2)
    left, right = 9 + dx, 19 + dx
    img[top:bottom, left:right] = base                      # torso
    img[top:top + 4, max(left - 5, 0):left] = base * 0.9    # sleeves
    img[top:top + 4, right:min(right + 5, 28)] = base * 0.9
    img[top - 1, left + 3:right - 3] = base * 0.6           # collar
    return img


def _boot(rng) -> np.ndarray:
    img = np.zeros((28, 28), dtype=np.float64)
    base = rng.uniform(170, 230)
    dx = rng.integers(-2, 3)
    shaft_l, shaft_r = 14 + dx, 20 + dx
    img[5 + rng.integers(-1, 2):20, shaft_l:shaft_r] = base     # shaft
    img[17:22, 5 + dx:shaft_r] = base * 0.95                    # foot
    img[21:23, 4 + dx:shaft_r + 1] = base * 0.7                 # sole
    return img


def _trouser(rng) -> np.ndarray:
    img = np.zeros((28, 28), dtype=np.float64)
    base = rng.uniform(170, 230)
    dx = rng.integers(-1, 2)
    img[4:24, 9 + dx:13 + dx] = base
    img[4:24, 15 + dx:19 + dx] = base
    img[4:8, 12 + dx:16 + dx] = base    # waistband joins the legs
    return img


_DRAWERS = {SHIRT_CLASS: _shirt, TROUSER_CLASS: _trouser, BOOT_CLASS: _boot}


def make_synthetic_dataset(n_per_class: int = 30, seed: int = 0) -> LabeledImages:
    """n_per_class examples of each class, interleaved, deterministic."""
    rng = np.random.default_rng(seed)
    images, labels = [], []
    for i in range(n_per_class):
        for cls, draw in _DRAWERS.items():
            img = draw(rng)
            img += rng.normal(0, 6, size=img.shape) * (img > 0)  # texture on the garment only
            images.append(np.clip(img, 0, 255).astype(np.uint8))
            labels.append(cls)
    return LabeledImages(images=np.stack(images), labels=np.array(labels, dtype=np.uint8))


def write_synthetic_idx(out_dir, n_train: int = 30, n_test: int = 6, seed: int = 0):
    """Write train/test IDX pairs with the conventional FMNIST file names.

    Returns the four paths (train images, train labels, test images, test labels).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train = make_synthetic_dataset(n_train, seed=seed)
    test = make_synthetic_dataset(n_test, seed=seed + 1)
    paths = (
        out / "train-images-idx3-ubyte",
        out / "train-labels-idx1-ubyte",
        out / "t10k-images-idx3-ubyte",
        out / "t10k-labels-idx1-ubyte",
    )
    write_idx(train, paths[0], paths[1])
    write_idx(test, paths[2], paths[3])
    return paths

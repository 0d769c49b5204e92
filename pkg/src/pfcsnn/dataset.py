"""Fashion-MNIST style IDX ingestion and stimulus selection.

IDX is the big-endian binary container used by the MNIST family:
image files start with magic 2051 (0x00000803) followed by count, rows, cols;
label files start with magic 2049 (0x00000801) followed by count; payloads are
unsigned bytes. Gzip compression is detected transparently by the 1f 8b
prefix.

Stimulus selection picks a Target and a Non-Target anchor image from two
classes, then finds the most cosine-similar same-class image for each anchor
to serve as its context stimulus.
"""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049


class IdxFormatError(ValueError):
    pass


@dataclass
class LabeledImages:
    images: np.ndarray  # (n, 28, 28) uint8
    labels: np.ndarray  # (n,) uint8

    def __len__(self) -> int:
        return self.images.shape[0]


@dataclass(frozen=True)
class StimulusSet:
    """The four experiment stimuli plus where they came from."""

    target: np.ndarray
    non_target: np.ndarray
    context_target: np.ndarray
    context_non_target: np.ndarray
    provenance: dict  # dataset indices and context similarity scores


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse_idx_images(raw: bytes, path) -> np.ndarray:
    if len(raw) < 16:
        raise IdxFormatError(f"{path}: truncated payload (header incomplete)")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IMAGE_MAGIC:
        raise IdxFormatError(f"{path}: bad magic {magic}, expected {IMAGE_MAGIC} for an image file")
    expected = 16 + count * rows * cols
    if len(raw) < expected:
        raise IdxFormatError(
            f"{path}: truncated payload ({len(raw)} bytes, header promises {expected})"
        )
    data = np.frombuffer(raw, dtype=np.uint8, count=count * rows * cols, offset=16)
    return data.reshape(count, rows, cols).copy()


def _parse_idx_labels(raw: bytes, path) -> np.ndarray:
    if len(raw) < 8:
        raise IdxFormatError(f"{path}: truncated payload (header incomplete)")
    magic, count = struct.unpack(">II", raw[:8])
    if magic != LABEL_MAGIC:
        raise IdxFormatError(f"{path}: bad magic {magic}, expected {LABEL_MAGIC} for a label file")
    if len(raw) < 8 + count:
        raise IdxFormatError(
            f"{path}: truncated payload ({len(raw)} bytes, header promises {8 + count})"
        )
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=8).copy()


def load_idx(path_images, path_labels) -> LabeledImages:
    """Parse an IDX image/label file pair; counts must agree."""
    images = _parse_idx_images(_read_bytes(path_images), path_images)
    labels = _parse_idx_labels(_read_bytes(path_labels), path_labels)
    if images.shape[0] != labels.shape[0]:
        raise IdxFormatError(
            f"count mismatch: {images.shape[0]} images vs {labels.shape[0]} labels"
        )
    return LabeledImages(images=images, labels=labels)


def write_idx(data: LabeledImages, path_images, path_labels) -> None:
    """Serialize back to IDX bytes (round-trip exact for uint8 payloads)."""
    n, rows, cols = data.images.shape
    with open(path_images, "wb") as fh:
        fh.write(struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols))
        fh.write(np.ascontiguousarray(data.images, dtype=np.uint8).tobytes())
    with open(path_labels, "wb") as fh:
        fh.write(struct.pack(">II", LABEL_MAGIC, n))
        fh.write(np.ascontiguousarray(data.labels, dtype=np.uint8).tobytes())


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two flattened intensity vectors."""
    x = np.asarray(a, dtype=np.float64).reshape(-1)
    y = np.asarray(b, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: {x.shape} vs {y.shape}")
    nx = np.linalg.norm(x)
    ny = np.linalg.norm(y)
    if nx == 0.0 and ny == 0.0:
        raise ValueError("cosine similarity of two zero images is undefined")
    if nx == 0.0 or ny == 0.0:
        return 0.0
    return float(np.dot(x, y) / (nx * ny))


def _pick_anchor(indices: np.ndarray, policy: str, rng) -> int:
    if policy == "first":
        return int(indices[0])
    if policy == "random":
        return int(rng.choice(indices))
    raise ValueError(f"unknown anchor policy {policy!r}")


def _best_context(data: LabeledImages, class_indices: np.ndarray, anchor_idx: int):
    """Exhaustive same-class cosine scan, excluding the anchor itself.

    Ties break toward the lowest dataset index.
    """
    anchor = data.images[anchor_idx].reshape(-1).astype(np.float64)
    candidates = class_indices[class_indices != anchor_idx]
    if candidates.size == 0:
        raise ValueError("class has no context candidate besides the anchor")
    mats = data.images[candidates].reshape(candidates.size, -1).astype(np.float64)
    norms = np.linalg.norm(mats, axis=1)
    anorm = np.linalg.norm(anchor)
    with np.errstate(invalid="ignore", divide="ignore"):
        sims = mats @ anchor / (norms * anorm)
    sims = np.nan_to_num(sims, nan=-np.inf)
    best = int(np.argmax(sims))  # argmax returns first maximum; candidates ascend
    return int(candidates[best]), float(sims[best])


def select_stimuli(
    data: LabeledImages,
    target_class: int,
    non_target_class: int,
    target_index_policy: str = "first",
    seed: int = 0,
) -> StimulusSet:
    """Pick the four stimuli: two class anchors and their most similar
    same-class context images."""
    if target_class == non_target_class:
        raise ValueError("target and non-target classes must differ")
    rng = np.random.default_rng(seed)
    picks = {}
    for name, cls in (("target", target_class), ("non_target", non_target_class)):
        indices = np.flatnonzero(data.labels == cls)
        if indices.size == 0:
            raise ValueError(f"class {cls} is not present in the dataset")
        anchor = _pick_anchor(indices, target_index_policy, rng)
        ctx, sim = _best_context(data, indices, anchor)
        picks[name] = (anchor, ctx, sim)

    t_idx, ct_idx, ct_sim = picks["target"]
    nt_idx, cnt_idx, cnt_sim = picks["non_target"]
    return StimulusSet(
        target=data.images[t_idx].copy(),
        non_target=data.images[nt_idx].copy(),
        context_target=data.images[ct_idx].copy(),
        context_non_target=data.images[cnt_idx].copy(),
        provenance={
            "target_index": t_idx,
            "non_target_index": nt_idx,
            "context_target_index": ct_idx,
            "context_non_target_index": cnt_idx,
            "context_target_similarity": ct_sim,
            "context_non_target_similarity": cnt_sim,
            "target_class": target_class,
            "non_target_class": non_target_class,
        },
    )

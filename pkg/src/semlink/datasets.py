"""Dataset container, IDX ingestion, and a synthetic desk-scale generator."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FormatError
from .numerics import RandomSource

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with integer class labels, standardized to zero mean."""

    features: np.ndarray   # (n, dim) float64, normalized
    labels: np.ndarray     # (n,) int64 in [0, n_classes)
    n_classes: int
    norm_mean: float
    norm_scale: float

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.shape != (self.features.shape[0],):
            raise DomainError("features must be (n, dim) with one label per row")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.n_classes):
            raise DomainError("labels must lie in [0, n_classes)")

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def __len__(self) -> int:
        return self.features.shape[0]


def _standardize(raw: np.ndarray) -> tuple[np.ndarray, float, float]:
    mean = float(raw.mean())
    scale = float(raw.std())
    if scale == 0.0:
        scale = 1.0
    return (raw - mean) / scale, mean, scale


def _read_exact(blob: bytes, offset: int, count: int, path, what: str) -> bytes:
    if len(blob) < offset + count:
        raise FormatError(
            f"{path}: truncated {what}: expected {offset + count} bytes, "
            f"file has {len(blob)}"
        )
    return blob[offset:offset + count]


def load_idx_images(path) -> np.ndarray:
    """Images from a big-endian IDX file as a flattened (n, rows*cols) array."""
    with open(path, "rb") as fh:
        blob = fh.read()
    header = _read_exact(blob, 0, 16, path, "header")
    magic, n, rows, cols = struct.unpack(">IIII", header)
    if magic != IDX_IMAGES_MAGIC:
        raise FormatError(
            f"{path}: bad magic 0x{magic:08x} at byte 0, expected 0x{IDX_IMAGES_MAGIC:08x}"
        )
    payload = _read_exact(blob, 16, n * rows * cols, path, "pixel payload")
    data = np.frombuffer(payload, dtype=np.uint8)
    return data.reshape(n, rows * cols).astype(np.float64)


def load_idx_labels(path) -> np.ndarray:
    """Labels from a big-endian IDX file as an (n,) integer array."""
    with open(path, "rb") as fh:
        blob = fh.read()
    header = _read_exact(blob, 0, 8, path, "header")
    magic, n = struct.unpack(">II", header)
    if magic != IDX_LABELS_MAGIC:
        raise FormatError(
            f"{path}: bad magic 0x{magic:08x} at byte 0, expected 0x{IDX_LABELS_MAGIC:08x}"
        )
    payload = _read_exact(blob, 8, n, path, "label payload")
    return np.frombuffer(payload, dtype=np.uint8).astype(np.int64)


def load_idx(images_path, labels_path=None) -> Dataset:
    """Dataset from IDX files: pixels scaled to [0, 1] then standardized.

    Without a labels file every example gets label 0 (single dummy class),
    which suits reconstruction-only runs.
    """
    pixels = load_idx_images(images_path) / 255.0
    if labels_path is not None:
        labels = load_idx_labels(labels_path)
        if labels.shape[0] != pixels.shape[0]:
            raise FormatError(
                f"{labels_path}: {labels.shape[0]} labels for {pixels.shape[0]} images"
            )
        n_classes = int(labels.max()) + 1 if labels.size else 1
    else:
        labels = np.zeros(pixels.shape[0], dtype=np.int64)
        n_classes = 1
    features, mean, scale = _standardize(pixels)
    return Dataset(features=features, labels=labels, n_classes=n_classes,
                   norm_mean=mean, norm_scale=scale)


def synth_dataset(n_classes: int, dim: int, n_per_class: int, noise_sigma: float,
                  rng: RandomSource) -> Dataset:
    """Gaussian class templates plus isotropic noise, then standardized.

    Deterministic given the random source: the same seed reproduces both the
    templates and the noise.
    """
    if n_classes < 1 or dim < 1 or n_per_class < 1:
        raise DomainError("n_classes, dim, and n_per_class must be positive")
    if noise_sigma < 0:
        raise DomainError(f"noise_sigma must be >= 0, got {noise_sigma}")
    template_rng, noise_rng = rng.split(2)
    templates = template_rng.std_normal((n_classes, dim))
    labels = np.repeat(np.arange(n_classes, dtype=np.int64), n_per_class)
    raw = templates[labels] + noise_sigma * noise_rng.std_normal((len(labels), dim))
    features, mean, scale = _standardize(raw)
    return Dataset(features=features, labels=labels, n_classes=n_classes,
                   norm_mean=mean, norm_scale=scale)

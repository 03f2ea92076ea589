"""Synthetic 2-D datasets, IDX image ingestion, and positive/unlabeled splits."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor

__all__ = [
    "FormatError",
    "LabeledDataset",
    "PuDataset",
    "DigitImages",
    "LatentPrior",
    "make_two_moons",
    "make_concentric_circles",
    "make_gaussian_mixture",
    "pu_split",
    "load_idx",
    "select_digit_pair",
    "save_csv",
    "load_csv",
]

IDX_IMAGE_MAGIC = 0x00000803
IDX_LABEL_MAGIC = 0x00000801


class FormatError(ValueError):
    """A binary input file does not parse."""


@dataclass(frozen=True)
class LabeledDataset:
    """Points with labels in {+1, -1}."""

    points: Tensor
    labels: np.ndarray

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1 or len(labels) != len(self.points):
            raise ValueError("labels must be a vector matched to points")
        if not np.all(np.isin(labels, (-1, 1))):
            raise ValueError("labels must be +1 or -1")

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def positives(self) -> np.ndarray:
        return self.points.data[self.labels == 1]

    def negatives(self) -> np.ndarray:
        return self.points.data[self.labels == -1]


@dataclass(frozen=True)
class PuDataset:
    """The PU task: labeled positives, an unlabeled pool, optional labeled negatives.

    `true_pi_p` is the positive fraction of the unlabeled pool recorded at
    split time; trainers use it as the known class prior.
    """

    x_p: Tensor
    x_u: Tensor
    true_pi_p: float
    x_n: Tensor | None = None

    def __post_init__(self):
        if len(self.x_p) < 1 or len(self.x_u) < 1:
            raise ValueError("need at least one labeled positive and one unlabeled point")
        if not 0.0 <= self.true_pi_p <= 1.0:
            raise ValueError(f"true_pi_p {self.true_pi_p} outside [0, 1]")
        if self.x_n is not None and self.x_n.shape[1] != self.x_p.shape[1]:
            raise ValueError("x_n dimension does not match x_p")

    @property
    def dim(self) -> int:
        return self.x_p.shape[1]


@dataclass(frozen=True)
class DigitImages:
    """Flattened images scaled to [-1, 1] plus their 0-9 digit labels."""

    points: Tensor
    digits: np.ndarray


@dataclass(frozen=True)
class LatentPrior:
    """Standard-normal latent code source for the generators."""

    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("latent dimension must be positive")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal((n, self.dim))


def make_two_moons(n_per_class: int, noise_std: float, seed: int) -> LabeledDataset:
    """Two interleaving half-circles; class +1 is the upper moon.

    Unit-radius arcs with the conventional offsets: the lower moon is shifted
    by 1.0 horizontally and 0.5 vertically. Angles are drawn uniformly, then
    isotropic Gaussian noise of the given standard deviation is added.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    rng = np.random.default_rng(seed)
    t_pos = rng.uniform(0.0, np.pi, n_per_class)
    t_neg = rng.uniform(0.0, np.pi, n_per_class)
    pos = np.column_stack([np.cos(t_pos), np.sin(t_pos)])
    neg = np.column_stack([1.0 - np.cos(t_neg), 0.5 - np.sin(t_neg)])
    points = np.vstack([pos, neg])
    if noise_std > 0:
        points = points + rng.normal(0.0, noise_std, points.shape)
    labels = np.concatenate([np.ones(n_per_class, dtype=np.int64), -np.ones(n_per_class, dtype=np.int64)])
    return LabeledDataset(Tensor(points), labels)


def make_concentric_circles(
    n_per_class: int,
    noise_std: float,
    radii: tuple[float, float] = (0.5, 1.0),
    seed: int = 0,
) -> LabeledDataset:
    """Class +1 on the inner circle, -1 on the outer, plus isotropic noise."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    r_in, r_out = radii
    if not 0 < r_in < r_out:
        raise ValueError(f"radii must satisfy 0 < r_in < r_out, got {radii}")
    rng = np.random.default_rng(seed)
    theta_in = rng.uniform(0.0, 2 * np.pi, n_per_class)
    theta_out = rng.uniform(0.0, 2 * np.pi, n_per_class)
    pos = r_in * np.column_stack([np.cos(theta_in), np.sin(theta_in)])
    neg = r_out * np.column_stack([np.cos(theta_out), np.sin(theta_out)])
    points = np.vstack([pos, neg])
    if noise_std > 0:
        points = points + rng.normal(0.0, noise_std, points.shape)
    labels = np.concatenate([np.ones(n_per_class, dtype=np.int64), -np.ones(n_per_class, dtype=np.int64)])
    return LabeledDataset(Tensor(points), labels)


def make_gaussian_mixture(
    centers_p,
    centers_n,
    noise_std: float,
    n_per_class: int,
    seed: int = 0,
) -> LabeledDataset:
    """Each class is an equal-weight Gaussian mixture over its centers."""
    centers_p = np.atleast_2d(np.asarray(centers_p, dtype=np.float64))
    centers_n = np.atleast_2d(np.asarray(centers_n, dtype=np.float64))
    if centers_p.size == 0 or centers_n.size == 0:
        raise ValueError("center lists must be non-empty")
    if centers_p.shape[1] != centers_n.shape[1]:
        raise ValueError("positive and negative centers must share a dimension")
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")
    rng = np.random.default_rng(seed)
    d = centers_p.shape[1]
    pick_p = rng.integers(0, len(centers_p), n_per_class)
    pick_n = rng.integers(0, len(centers_n), n_per_class)
    pos = centers_p[pick_p]
    neg = centers_n[pick_n]
    points = np.vstack([pos, neg])
    if noise_std > 0:
        points = points + rng.normal(0.0, noise_std, (2 * n_per_class, d))
    labels = np.concatenate([np.ones(n_per_class, dtype=np.int64), -np.ones(n_per_class, dtype=np.int64)])
    return LabeledDataset(Tensor(points), labels)


def pu_split(
    data: LabeledDataset,
    n_labeled: int,
    seed: int = 0,
    n_labeled_negatives: int = 0,
) -> PuDataset:
    """Partition a labeled dataset into the PU task.

    `n_labeled` positives are chosen uniformly without replacement as the
    labeled set; everything else goes into the unlabeled pool with labels
    discarded. `n_labeled_negatives > 0` additionally carves out a labeled
    negative set for the semi-supervised variant.
    """
    pos_idx = np.flatnonzero(data.labels == 1)
    neg_idx = np.flatnonzero(data.labels == -1)
    if not 1 <= n_labeled <= len(pos_idx):
        raise ValueError(f"n_labeled {n_labeled} outside [1, {len(pos_idx)}]")
    if not 0 <= n_labeled_negatives <= len(neg_idx):
        raise ValueError(f"n_labeled_negatives {n_labeled_negatives} outside [0, {len(neg_idx)}]")
    rng = np.random.default_rng(seed)
    chosen_p = rng.choice(pos_idx, size=n_labeled, replace=False)
    chosen_n = rng.choice(neg_idx, size=n_labeled_negatives, replace=False) if n_labeled_negatives else np.empty(0, dtype=np.int64)
    taken = np.zeros(data.n, dtype=bool)
    taken[chosen_p] = True
    taken[chosen_n] = True
    rest = np.flatnonzero(~taken)
    if len(rest) == 0:
        raise ValueError("split leaves the unlabeled pool empty")
    pts = data.points.data
    n_pos_in_u = int(np.sum(data.labels[rest] == 1))
    return PuDataset(
        x_p=Tensor(pts[chosen_p]),
        x_u=Tensor(pts[rest]),
        true_pi_p=n_pos_in_u / len(rest),
        x_n=Tensor(pts[chosen_n]) if n_labeled_negatives else None,
    )


def _read_be32(buf: bytes, offset: int, path: str) -> int:
    if offset + 4 > len(buf):
        raise FormatError(f"{path}: truncated header at offset {offset}")
    return struct.unpack_from(">I", buf, offset)[0]


def load_idx(images_path: str, labels_path: str) -> DigitImages:
    """Read an IDX image/label file pair.

    Big-endian format: images carry magic 0x00000803 then [count, rows, cols],
    labels carry 0x00000801 then [count]. Pixel bytes are rescaled from
    [0, 255] to [-1, 1] so a tanh-output generator can match the range.
    """
    with open(images_path, "rb") as f:
        img_buf = f.read()
    with open(labels_path, "rb") as f:
        lbl_buf = f.read()

    magic = _read_be32(img_buf, 0, images_path)
    if magic != IDX_IMAGE_MAGIC:
        raise FormatError(f"{images_path}: bad magic 0x{magic:08x} at offset 0")
    count = _read_be32(img_buf, 4, images_path)
    rows = _read_be32(img_buf, 8, images_path)
    cols = _read_be32(img_buf, 12, images_path)
    expected = 16 + count * rows * cols
    if len(img_buf) < expected:
        raise FormatError(f"{images_path}: payload ends at offset {len(img_buf)}, expected {expected}")
    pixels = np.frombuffer(img_buf, dtype=np.uint8, count=count * rows * cols, offset=16)
    points = pixels.reshape(count, rows * cols).astype(np.float64) * (2.0 / 255.0) - 1.0

    magic = _read_be32(lbl_buf, 0, labels_path)
    if magic != IDX_LABEL_MAGIC:
        raise FormatError(f"{labels_path}: bad magic 0x{magic:08x} at offset 0")
    lbl_count = _read_be32(lbl_buf, 4, labels_path)
    if lbl_count != count:
        raise FormatError(f"{labels_path}: {lbl_count} labels for {count} images")
    if len(lbl_buf) < 8 + count:
        raise FormatError(f"{labels_path}: payload ends at offset {len(lbl_buf)}, expected {8 + count}")
    digits = np.frombuffer(lbl_buf, dtype=np.uint8, count=count, offset=8).copy()

    return DigitImages(points=Tensor(points), digits=digits)


def select_digit_pair(data: DigitImages, pos_digit: int, neg_digit: int, n_per_class: int) -> LabeledDataset:
    """Balanced binary dataset from two digits; `pos_digit` maps to +1."""
    if pos_digit == neg_digit:
        raise ValueError("positive and negative digits must differ")
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    picked = []
    for digit in (pos_digit, neg_digit):
        idx = np.flatnonzero(data.digits == digit)
        if len(idx) < n_per_class:
            raise ValueError(f"digit {digit} has only {len(idx)} examples, need {n_per_class}")
        picked.append(idx[:n_per_class])
    pts = data.points.data
    points = np.vstack([pts[picked[0]], pts[picked[1]]])
    labels = np.concatenate([np.ones(n_per_class, dtype=np.int64), -np.ones(n_per_class, dtype=np.int64)])
    return LabeledDataset(Tensor(points), labels)


def save_csv(dataset: LabeledDataset, path: str) -> None:
    """Write `x0,...,x{d-1},label` rows with a header."""
    d = dataset.dim
    header = ",".join([f"x{i}" for i in range(d)] + ["label"])
    with open(path, "w", encoding="ascii") as f:
        f.write(header + "\n")
        for row, label in zip(dataset.points.data, dataset.labels):
            f.write(",".join(f"{v:.17g}" for v in row) + f",{label}\n")


def load_csv(path: str) -> LabeledDataset:
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if raw.shape[1] < 2:
        raise FormatError(f"{path}: need at least one coordinate column plus a label column")
    return LabeledDataset(Tensor(raw[:, :-1]), raw[:, -1].astype(np.int64))

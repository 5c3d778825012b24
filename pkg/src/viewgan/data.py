"""Two-view datasets: partition by missing view, sparse text format, synthetic task.

A training set splits into three subsets: examples with both views, examples
missing view 1, and examples missing view 2. Every example is labeled. The
synthetic generator produces Gaussian class-conditional views with a shared
latent factor and reports the exact Bayes accuracy of the complete-pair task,
which anchors end-to-end accuracy tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataFormatError, DimensionError

_BAYES_MC_SAMPLES = 100_000


def one_hot(index: int, num_classes: int) -> np.ndarray:
    if not 0 <= index < num_classes:
        raise ValueError(f"label {index} outside [0, {num_classes})")
    y = np.zeros(num_classes, dtype=np.float64)
    y[index] = 1.0
    return y


def label_index(label: np.ndarray) -> int:
    return int(np.argmax(label))


@dataclass(eq=False)
class MultiviewExample:
    """One observation: two optional views and a one-hot label.

    At least one view must be present; a missing view is None.
    """

    view1: np.ndarray | None
    view2: np.ndarray | None
    label: np.ndarray

    def __post_init__(self):
        if self.view1 is None and self.view2 is None:
            raise ValueError("example with both views missing")
        for name in ("view1", "view2"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.asarray(v, dtype=np.float64)
            if v.ndim != 1:
                raise DimensionError(f"{name} must be a vector")
            if not np.all(np.isfinite(v)):
                raise ValueError(f"non-finite values in {name}")
            setattr(self, name, v)
        self.label = np.asarray(self.label, dtype=np.float64)
        if self.label.ndim != 1 or self.label.size < 1:
            raise DimensionError("label must be a nonempty vector")
        ones = np.count_nonzero(self.label == 1.0)
        if ones != 1 or np.count_nonzero(self.label) != 1:
            raise ValueError("label must be one-hot")

    def __eq__(self, other):
        if not isinstance(other, MultiviewExample):
            return NotImplemented
        for a, b in ((self.view1, other.view1), (self.view2, other.view2)):
            if (a is None) != (b is None):
                return False
            if a is not None and not np.array_equal(a, b):
                return False
        return np.array_equal(self.label, other.label)


def _check_subset(examples, d1, d2, num_classes, want1: bool, want2: bool, name: str):
    for ex in examples:
        if (ex.view1 is not None) != want1 or (ex.view2 is not None) != want2:
            raise ValueError(f"example in {name} has the wrong view pattern")
        if ex.view1 is not None and ex.view1.size != d1:
            raise DimensionError(f"view1 length {ex.view1.size} != d1 {d1}")
        if ex.view2 is not None and ex.view2.size != d2:
            raise DimensionError(f"view2 length {ex.view2.size} != d2 {d2}")
        if ex.label.size != num_classes:
            raise DimensionError("label length mismatch")


@dataclass(eq=False)
class PartitionedDataset:
    """Training examples split by which views are observed.

    s_full has both views, s_missing1 lacks view 1, s_missing2 lacks view 2.
    """

    s_full: list
    s_missing1: list
    s_missing2: list
    d1: int
    d2: int
    num_classes: int

    def __post_init__(self):
        if min(self.d1, self.d2) < 1 or self.num_classes < 1:
            raise DimensionError("d1, d2, num_classes must be positive")
        _check_subset(self.s_full, self.d1, self.d2, self.num_classes, True, True, "s_full")
        _check_subset(self.s_missing1, self.d1, self.d2, self.num_classes, False, True, "s_missing1")
        _check_subset(self.s_missing2, self.d1, self.d2, self.num_classes, True, False, "s_missing2")

    @property
    def m(self) -> int:
        return len(self.s_full) + len(self.s_missing1) + len(self.s_missing2)


def stack_examples(examples) -> tuple[np.ndarray | None, np.ndarray | None, np.ndarray]:
    """Stack a uniform subset into (view1 array, view2 array, labels).

    A view absent from every example comes back as None. Used to turn the
    list-of-examples representation into batched arrays for training.
    """
    if not examples:
        raise ConfigError("cannot stack an empty example list")
    has1 = examples[0].view1 is not None
    has2 = examples[0].view2 is not None
    for ex in examples:
        if (ex.view1 is not None) != has1 or (ex.view2 is not None) != has2:
            raise ValueError("mixed view patterns in subset")
    x1 = np.stack([ex.view1 for ex in examples]) if has1 else None
    x2 = np.stack([ex.view2 for ex in examples]) if has2 else None
    y = np.stack([ex.label for ex in examples])
    return x1, x2, y


# ---------------------------------------------------------------------------
# Sparse multiview text format.
#
# Header:  #dims <d1> <d2> <K>
# Line:    <label> \t <view1> \t <view2>
# where each view is space-separated index:value pairs with strictly
# increasing 0-based indices, the single character "-" for a missing view,
# or an empty field for a present all-zero view.

def _format_view(v: np.ndarray | None) -> str:
    if v is None:
        return "-"
    idx = np.nonzero(v)[0]
    return " ".join(f"{int(i)}:{repr(float(v[i]))}" for i in idx)


def _parse_view(text: str, dim: int, lineno: int) -> np.ndarray | None:
    if text == "-":
        return None
    v = np.zeros(dim, dtype=np.float64)
    if text == "":
        return v
    prev = -1
    for pair in text.split(" "):
        idx_s, sep, val_s = pair.partition(":")
        if not sep:
            raise DataFormatError(f"malformed pair {pair!r}", line=lineno)
        try:
            idx = int(idx_s)
            val = float(val_s)
        except ValueError:
            raise DataFormatError(f"malformed pair {pair!r}", line=lineno) from None
        if idx >= dim or idx < 0:
            raise DataFormatError(f"index {idx} outside [0, {dim})", line=lineno)
        if idx <= prev:
            raise DataFormatError("indices must be strictly increasing", line=lineno)
        if not math.isfinite(val):
            raise DataFormatError(f"non-finite value {val_s!r}", line=lineno)
        prev = idx
        v[idx] = val
    return v


def save_multiview_file(path, dataset: PartitionedDataset) -> None:
    """Write a dataset in the sparse text format; loading inverts exactly."""
    with open(path, "w", encoding="ascii") as f:
        f.write(f"#dims {dataset.d1} {dataset.d2} {dataset.num_classes}\n")
        for subset in (dataset.s_full, dataset.s_missing1, dataset.s_missing2):
            for ex in subset:
                f.write(f"{label_index(ex.label)}\t{_format_view(ex.view1)}"
                        f"\t{_format_view(ex.view2)}\n")


def load_multiview_file(path) -> PartitionedDataset:
    """Parse the sparse multiview format; the partition is derived from "-" marks."""
    with open(path, "r", encoding="ascii") as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith("#dims"):
        raise DataFormatError("missing '#dims d1 d2 K' header", line=1)
    head = lines[0].split()
    if len(head) != 4:
        raise DataFormatError("header must be '#dims d1 d2 K'", line=1)
    try:
        d1, d2, num_classes = (int(p) for p in head[1:])
    except ValueError:
        raise DataFormatError("non-integer dimensions in header", line=1) from None
    if min(d1, d2, num_classes) < 1:
        raise DataFormatError("dimensions must be positive", line=1)

    s_full, s_missing1, s_missing2 = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        fields = line.split("\t")
        if len(fields) != 3:
            raise DataFormatError("expected 'label<TAB>view1<TAB>view2'", line=lineno)
        try:
            label = int(fields[0])
        except ValueError:
            raise DataFormatError(f"malformed label {fields[0]!r}", line=lineno) from None
        if not 0 <= label < num_classes:
            raise DataFormatError(f"label {label} outside [0, {num_classes})", line=lineno)
        v1 = _parse_view(fields[1], d1, lineno)
        v2 = _parse_view(fields[2], d2, lineno)
        if v1 is None and v2 is None:
            raise DataFormatError("both views missing", line=lineno)
        ex = MultiviewExample(v1, v2, one_hot(label, num_classes))
        if v1 is None:
            s_missing1.append(ex)
        elif v2 is None:
            s_missing2.append(ex)
        else:
            s_full.append(ex)
    return PartitionedDataset(s_full, s_missing1, s_missing2, d1, d2, num_classes)


def l2_normalize_views(dataset: PartitionedDataset) -> PartitionedDataset:
    """Optional preprocessing: scale each present view vector to unit length.

    Zero vectors stay zero. Returns a new dataset; the input is untouched.
    """
    def norm(v):
        if v is None:
            return None
        n = float(np.linalg.norm(v))
        return v.copy() if n == 0.0 else v / n

    def conv(examples):
        return [MultiviewExample(norm(ex.view1), norm(ex.view2), ex.label.copy())
                for ex in examples]

    return PartitionedDataset(conv(dataset.s_full), conv(dataset.s_missing1),
                              conv(dataset.s_missing2),
                              dataset.d1, dataset.d2, dataset.num_classes)


# ---------------------------------------------------------------------------
# Synthetic two-view Gaussian task.

def block_class_means(num_classes: int, dim: int, scale: float) -> np.ndarray:
    """Pairwise-distinct means: class k puts ``scale`` on its own coordinate block."""
    if dim < num_classes:
        raise ConfigError(f"dim {dim} < num_classes {num_classes}")
    if scale == 0.0:
        raise ConfigError("scale must be nonzero for distinct means")
    means = np.zeros((num_classes, dim), dtype=np.float64)
    block = dim // num_classes
    for k in range(num_classes):
        means[k, k * block:(k + 1) * block] = scale
    return means


@dataclass
class SyntheticSpec:
    """Parameters of the Gaussian two-view task.

    Each view of an example is its class mean plus ``view_correlation`` times
    a shared latent factor pushed through a fixed random map, plus isotropic
    noise. view_correlation=0 makes the views conditionally independent given
    the class; 1 ties them strongly through the latent.
    """

    num_classes: int
    d1: int
    d2: int
    means_view1: np.ndarray
    means_view2: np.ndarray
    noise_sigma: float
    view_correlation: float
    m_full: int
    m_missing1: int
    m_missing2: int
    m_test: int
    seed: int
    latent_dim: int | None = None

    def __post_init__(self):
        if min(self.d1, self.d2) < 1 or self.num_classes < 2:
            raise ConfigError("need positive dims and at least two classes")
        self.means_view1 = np.asarray(self.means_view1, dtype=np.float64)
        self.means_view2 = np.asarray(self.means_view2, dtype=np.float64)
        if self.means_view1.shape != (self.num_classes, self.d1):
            raise ConfigError("means_view1 must have shape (num_classes, d1)")
        if self.means_view2.shape != (self.num_classes, self.d2):
            raise ConfigError("means_view2 must have shape (num_classes, d2)")
        for name, means in (("view1", self.means_view1), ("view2", self.means_view2)):
            for j in range(self.num_classes):
                for k in range(j + 1, self.num_classes):
                    if np.array_equal(means[j], means[k]):
                        raise ConfigError(f"classes {j} and {k} share a {name} mean")
        if not self.noise_sigma > 0:
            raise ConfigError("noise_sigma must be positive")
        if not 0.0 <= self.view_correlation <= 1.0:
            raise ConfigError("view_correlation must lie in [0, 1]")
        if min(self.m_full, self.m_missing1, self.m_missing2, self.m_test) < 0:
            raise ConfigError("subset sizes must be nonnegative")
        if self.latent_dim is None:
            self.latent_dim = min(self.d1, self.d2)
        if self.latent_dim < 1:
            raise ConfigError("latent_dim must be positive")


def _pair_gaussian(spec: SyntheticSpec, a1: np.ndarray, a2: np.ndarray):
    """Mean matrix and shared covariance of the complete pair [view1|view2]."""
    means = np.concatenate([spec.means_view1, spec.means_view2], axis=1)
    a = np.concatenate([a1, a2], axis=0)
    rho = spec.view_correlation
    cov = rho * rho * (a @ a.T) + spec.noise_sigma ** 2 * np.eye(spec.d1 + spec.d2)
    return means, cov


def _bayes_accuracy(spec: SyntheticSpec, a1, a2, rng: np.random.Generator) -> float:
    """Exact Bayes accuracy of the complete-pair task under equal priors.

    The class-conditional pairs are Gaussian with shared covariance, so the
    Bayes rule is the linear discriminant. For two classes the error has the
    closed form Phi(-delta/2) with delta the Mahalanobis distance between the
    means; for more classes it is estimated by Monte Carlo with the exact
    discriminant.
    """
    means, cov = _pair_gaussian(spec, a1, a2)
    weights = np.linalg.solve(cov, means.T)  # (d1+d2, K)
    if spec.num_classes == 2:
        diff = means[1] - means[0]
        delta = math.sqrt(float(diff @ np.linalg.solve(cov, diff)))
        return 0.5 * (1.0 + math.erf(delta / (2.0 * math.sqrt(2.0))))
    labels = rng.integers(0, spec.num_classes, size=_BAYES_MC_SAMPLES)
    u = rng.standard_normal((_BAYES_MC_SAMPLES, spec.latent_dim))
    eps = rng.standard_normal((_BAYES_MC_SAMPLES, spec.d1 + spec.d2))
    a = np.concatenate([a1, a2], axis=0)
    x = means[labels] + spec.view_correlation * u @ a.T + spec.noise_sigma * eps
    scores = x @ weights - 0.5 * np.sum(means.T * weights, axis=0)
    return float(np.mean(np.argmax(scores, axis=1) == labels))


def generate_synthetic(spec: SyntheticSpec):
    """Draw a partitioned train set and a complete test set from the spec.

    Returns (PartitionedDataset, test examples, bayes_accuracy). The same
    seed reproduces everything, Bayes estimate included.
    """
    rng = np.random.default_rng(spec.seed)
    scale = 1.0 / math.sqrt(spec.latent_dim)
    a1 = rng.standard_normal((spec.d1, spec.latent_dim)) * scale
    a2 = rng.standard_normal((spec.d2, spec.latent_dim)) * scale

    n = spec.m_full + spec.m_missing1 + spec.m_missing2 + spec.m_test
    labels = rng.integers(0, spec.num_classes, size=n)
    u = rng.standard_normal((n, spec.latent_dim))
    rho = spec.view_correlation
    x1 = (spec.means_view1[labels] + rho * u @ a1.T
          + spec.noise_sigma * rng.standard_normal((n, spec.d1)))
    x2 = (spec.means_view2[labels] + rho * u @ a2.T
          + spec.noise_sigma * rng.standard_normal((n, spec.d2)))

    def make(i, drop1=False, drop2=False):
        return MultiviewExample(None if drop1 else x1[i],
                                None if drop2 else x2[i],
                                one_hot(int(labels[i]), spec.num_classes))

    pos = 0
    s_full = [make(i) for i in range(pos, pos + spec.m_full)]
    pos += spec.m_full
    s_missing1 = [make(i, drop1=True) for i in range(pos, pos + spec.m_missing1)]
    pos += spec.m_missing1
    s_missing2 = [make(i, drop2=True) for i in range(pos, pos + spec.m_missing2)]
    pos += spec.m_missing2
    test = [make(i) for i in range(pos, n)]

    dataset = PartitionedDataset(s_full, s_missing1, s_missing2,
                                 spec.d1, spec.d2, spec.num_classes)
    bayes = _bayes_accuracy(spec, a1, a2, rng)
    return dataset, test, bayes


def split_for_protocol(pool, m_full: int, m_missing1: int, m_missing2: int, seed: int):
    """Randomly split a pool of complete pairs into the three-subset layout.

    The view-1 subset has its first view deleted and the view-2 subset its
    second; whatever remains stays complete and is returned as the test set.
    """
    if not pool:
        raise ConfigError("empty pool")
    for ex in pool:
        if ex.view1 is None or ex.view2 is None:
            raise ValueError("pool examples must have both views")
    need = m_full + m_missing1 + m_missing2
    if min(m_full, m_missing1, m_missing2) < 0 or need > len(pool):
        raise ConfigError(f"cannot draw {need} examples from a pool of {len(pool)}")
    d1, d2 = pool[0].view1.size, pool[0].view2.size
    num_classes = pool[0].label.size

    order = np.random.default_rng(seed).permutation(len(pool))
    picked = [pool[i] for i in order]
    s_full = picked[:m_full]
    s_missing1 = [MultiviewExample(None, ex.view2, ex.label)
                  for ex in picked[m_full:m_full + m_missing1]]
    s_missing2 = [MultiviewExample(ex.view1, None, ex.label)
                  for ex in picked[m_full + m_missing1:need]]
    test = picked[need:]
    dataset = PartitionedDataset(s_full, s_missing1, s_missing2, d1, d2, num_classes)
    return dataset, test

"""Dataset container, CSV I/O, binarization, splitting, synthetic data.

Two UTF-8 comma-separated file formats, both with a mandatory header:

* ``csv-ld``      - header ``f0,...,f{m-1},d0,...,d{c-1}``; the ``d*``
  columns hold a label distribution per row, validated to sum to one
  within 1e-4 and then renormalized exactly.
* ``csv-logical`` - header ``f0,...,f{m-1},y0,...,y{c-1}`` with ``y*``
  entries in {0, 1}.

Column counts are inferred from the header prefixes; decimal points are
dots.  Error messages carry 1-based file line numbers.
"""

import csv
from dataclasses import dataclass, replace

import numpy as np

from .core import AllZeroLabelRow, as_feature_matrix, as_logical_labels

LOAD_ROW_SUM_TOL = 1e-4
FORMATS = ("csv-ld", "csv-logical")


class ParseError(ValueError):
    """Malformed CSV content."""

    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


class RowSumViolation(ValueError):
    """A distribution row strays too far from summing to one."""

    def __init__(self, line, total):
        self.line = line
        self.total = total
        super().__init__(f"line {line}: distribution sums to {total!r}")


class HeaderMismatch(ValueError):
    """Header does not follow the f*/d* or f*/y* convention."""


class TooFewSamples(ValueError):
    """Splitting needs at least five samples."""


class DegenerateRow(ValueError):
    """Synthetic sparsification kept rejecting a row."""


@dataclass(frozen=True)
class LdlDataset:
    """Features plus ground-truth distributions and/or logical labels.

    At least one of ``D_true``/``Y`` is present.  When Y was derived from
    D_true by thresholding, every zero of D_true is a zero of Y's source
    criterion, so D_true == 0 implies Y == 0.
    """

    name: str
    X: np.ndarray
    D_true: np.ndarray = None
    Y: np.ndarray = None

    def __post_init__(self):
        if self.D_true is None and self.Y is None:
            raise ValueError("dataset needs D_true or Y")

    @property
    def n(self):
        return self.X.shape[0]


def _parse_header(header, path):
    stripped = [h.strip() for h in header]
    m = 0
    while m < len(stripped) and stripped[m] == f"f{m}":
        m += 1
    if m == 0:
        raise HeaderMismatch(f"{path}: header must start with f0, f1, ...")
    rest = stripped[m:]
    if not rest:
        raise HeaderMismatch(f"{path}: header has no label columns")
    kind = rest[0][:1]
    if kind not in ("d", "y"):
        raise HeaderMismatch(f"{path}: label columns must be d* or y*")
    expected = [f"{kind}{j}" for j in range(len(rest))]
    if rest != expected:
        raise HeaderMismatch(f"{path}: label columns must be {kind}0..{kind}{len(rest) - 1}")
    return m, len(rest), kind


def load_dataset(path, fmt="csv-ld", name=None):
    """Load a dataset from a csv-ld or csv-logical file.

    Raises ParseError/RowSumViolation/AllZeroLabelRow with the offending
    1-based line number, HeaderMismatch for a bad header, and ValueError
    when the header kind disagrees with ``fmt``.
    """
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise HeaderMismatch(f"{path}: empty file") from None
        m, c, kind = _parse_header(header, path)
        want = "d" if fmt == "csv-ld" else "y"
        if kind != want:
            raise ValueError(f"{path}: header has {kind}* columns, expected {want}* for {fmt}")
        feats, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != m + c:
                raise ParseError(lineno, f"expected {m + c} fields, got {len(row)}")
            try:
                values = [float(v) for v in row]
            except ValueError as exc:
                raise ParseError(lineno, str(exc)) from None
            feats.append(values[:m])
            lab = values[m:]
            if fmt == "csv-ld":
                total = sum(lab)
                if abs(total - 1.0) > LOAD_ROW_SUM_TOL:
                    raise RowSumViolation(lineno, total)
                labels.append([v / total for v in lab])
            else:
                if any(v not in (0.0, 1.0) for v in lab):
                    raise ParseError(lineno, "logical labels must be 0 or 1")
                if not any(lab):
                    raise AllZeroLabelRow(lineno, f"line {lineno}: no positive label")
                labels.append(lab)

    X = as_feature_matrix(np.array(feats, dtype=np.float64))
    name = name or str(path)
    if fmt == "csv-ld":
        return LdlDataset(name=name, X=X, D_true=np.array(labels, dtype=np.float64))
    return LdlDataset(name=name, X=X, Y=as_logical_labels(np.array(labels)))


def save_dataset(dataset, path, fmt="csv-ld"):
    """Write a dataset in one of the two CSV formats (full float precision)."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}")
    X = dataset.X
    if fmt == "csv-ld":
        if dataset.D_true is None:
            raise ValueError("dataset has no D_true to write")
        labels, prefix = dataset.D_true, "d"
    else:
        if dataset.Y is None:
            raise ValueError("dataset has no Y to write")
        labels, prefix = dataset.Y, "y"
    m, c = X.shape[1], labels.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j}" for j in range(m)] + [f"{prefix}{j}" for j in range(c)])
        for i in range(X.shape[0]):
            row = [repr(float(v)) for v in X[i]]
            if prefix == "d":
                row += [repr(float(v)) for v in labels[i]]
            else:
                row += [str(int(v)) for v in labels[i]]
            writer.writerow(row)


def binarize(D_true, delta=0.01):
    """Threshold distributions into logical labels: Y = 1 where degree > delta.

    Raises AllZeroLabelRow when a row's maximum degree does not exceed
    ``delta`` (strict inequality, so a degree exactly at the threshold
    stays negative).
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie strictly between 0 and 1")
    D_true = np.asarray(D_true, dtype=np.float64)
    Y = (D_true > delta).astype(np.int64)
    starved = Y.sum(axis=1) == 0
    if np.any(starved):
        raise AllZeroLabelRow(int(np.argmax(starved)))
    return Y


@dataclass(frozen=True)
class SplitSpec:
    """60/20/20 split with a deterministic shuffle."""

    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    seed: int = 0

    def __post_init__(self):
        total = self.train_frac + self.val_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"fractions sum to {total}, expected 1")
        if min(self.train_frac, self.val_frac, self.test_frac) <= 0:
            raise ValueError("all fractions must be positive")


def _take(dataset, idx, suffix):
    return LdlDataset(
        name=f"{dataset.name}/{suffix}",
        X=dataset.X[idx],
        D_true=None if dataset.D_true is None else dataset.D_true[idx],
        Y=None if dataset.Y is None else dataset.Y[idx],
    )


def split(dataset, spec=SplitSpec()):
    """Shuffle by ``spec.seed`` and cut into (train, val, test).

    Sizes are floor(train_frac * n), floor(val_frac * n), and the
    remainder; partitions are disjoint and cover every sample.
    """
    n = dataset.n
    if n < 5:
        raise TooFewSamples(f"need n >= 5 to split, got {n}")
    perm = np.random.default_rng(spec.seed).permutation(n)
    n_train = int(np.floor(spec.train_frac * n))
    n_val = int(np.floor(spec.val_frac * n))
    if n_train == 0 or n_val == 0 or n_train + n_val >= n:
        raise TooFewSamples(f"fractions leave an empty split for n={n}")
    parts = (perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:])
    return tuple(_take(dataset, idx, tag)
                 for idx, tag in zip(parts, ("train", "val", "test")))


def synth_dataset(n, m, c, n_clusters=5, temperature=1.0, sparsify_delta=0.0,
                  seed=0, name=None):
    """Clustered features with softmax ground-truth label distributions.

    Cluster centers are uniform in [-1, 1]^m; each sample is its center
    plus isotropic Gaussian noise (scale 0.1).  Ground truth is the
    row-softmax of X W* / temperature for a standard-normal W*.  With
    ``sparsify_delta > 0``, degrees below the threshold are zeroed and the
    row renormalized, which plants exact zeros; rows that would lose all
    mass are resampled (same center, fresh noise) up to 100 times before
    DegenerateRow is raised.  Deterministic for a fixed seed.
    """
    if n_clusters > n:
        raise ValueError("n_clusters cannot exceed n")
    if c < 2:
        raise ValueError("need at least two labels")
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if sparsify_delta < 0:
        raise ValueError("sparsify_delta must be nonnegative")
    rng = np.random.default_rng(seed)
    centers = rng.uniform(-1.0, 1.0, size=(n_clusters, m))
    assignment = rng.integers(0, n_clusters, size=n)
    X = centers[assignment] + 0.1 * rng.standard_normal((n, m))
    W_star = rng.standard_normal((m, c))

    def row_distribution(x):
        logits = x @ W_star / temperature
        logits -= logits.max()
        d = np.exp(logits)
        d /= d.sum()
        if sparsify_delta > 0:
            d[d < sparsify_delta] = 0.0
            total = d.sum()
            if total == 0.0:
                return None
            d /= total
        return d

    D = np.empty((n, c))
    for i in range(n):
        d = row_distribution(X[i])
        for _ in range(100):
            if d is not None:
                break
            X[i] = centers[assignment[i]] + 0.1 * rng.standard_normal(m)
            d = row_distribution(X[i])
        if d is None:
            raise DegenerateRow(f"row {i} kept losing all mass")
        D[i] = d

    return LdlDataset(name=name or f"synth-n{n}-m{m}-c{c}-seed{seed}",
                      X=X, D_true=D)


def with_logical_labels(dataset, delta=0.01):
    """Return a copy of the dataset with Y derived from D_true by thresholding."""
    if dataset.D_true is None:
        raise ValueError("dataset has no D_true to binarize")
    return replace(dataset, Y=binarize(dataset.D_true, delta))

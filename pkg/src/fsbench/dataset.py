"""Labeled datasets: challenge-format I/O, synthetic generation and summary statistics.

File formats
------------
dense data    one example per line, whitespace separated numbers
sparse data   one example per line, ``index:value`` tokens, 1-based, strictly increasing
labels        one of ``+1``, ``1``, ``-1`` per line
probe sidecar one 1-based feature index per line
manifest      ``key=value`` lines naming the split files, the format and the width
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import linalg

__all__ = [
    "DatasetFormatError",
    "LabeledDataset",
    "DatasetBundle",
    "SynthSpec",
    "SynthTruth",
    "DatasetStats",
    "load_dataset",
    "write_dataset",
    "read_labels",
    "read_probe_sidecar",
    "write_probe_sidecar",
    "load_manifest",
    "write_manifest",
    "write_bundle",
    "generate_synthetic",
    "dataset_stats",
    "format_number",
]

SPLITS = ("train", "validation", "test")


class DatasetFormatError(ValueError):
    """A data, label, sidecar or manifest file could not be parsed."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Examples x features matrix with +-1 labels and optional per-feature flags.

    ``probe_flags`` is None when probe ground truth is unknown. ``informative``
    is only populated by the synthetic generator.
    """

    X: linalg.Matrix
    y: np.ndarray
    probe_flags: Optional[np.ndarray] = None
    split: str = "train"
    informative: Optional[np.ndarray] = None

    def __post_init__(self):
        X = self.X
        if sp.issparse(X):
            X = sp.csr_matrix(X, dtype=np.float64)
            X.sort_indices()
        else:
            X = np.ascontiguousarray(X, dtype=np.float64)
            if X.ndim != 2:
                raise ValueError("data matrix must be 2-d")
            X = _readonly(X)
        y = np.asarray(self.y)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValueError("labels length %d does not match %d rows" % (y.size, X.shape[0]))
        if not np.all((y == 1) | (y == -1)):
            raise ValueError("label not in {+1,-1}")
        if self.split not in SPLITS:
            raise ValueError("split must be one of %s" % (SPLITS,))
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", _readonly(y.astype(np.int8)))
        for name in ("probe_flags", "informative"):
            flags = getattr(self, name)
            if flags is not None:
                flags = np.asarray(flags, dtype=bool).ravel()
                if flags.size != X.shape[1]:
                    raise ValueError("%s length does not match feature count" % name)
                object.__setattr__(self, name, _readonly(flags.copy()))

    @property
    def n_examples(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.X)

    def select_features(self, idx) -> "LabeledDataset":
        """Dataset restricted to the columns ``idx`` (in that order)."""
        idx = np.asarray(idx, dtype=np.int64)
        pick = lambda f: None if f is None else f[idx]  # noqa: E731
        return LabeledDataset(linalg.take_columns(self.X, idx), self.y,
                              pick(self.probe_flags), self.split, pick(self.informative))

    def select_examples(self, rows) -> "LabeledDataset":
        rows = np.asarray(rows, dtype=np.int64)
        X = self.X[rows] if sp.issparse(self.X) else self.X[rows, :]
        return replace(self, X=X, y=self.y[rows])

    def concat(self, other: "LabeledDataset", split: str = "train") -> "LabeledDataset":
        if other.n_features != self.n_features:
            raise ValueError("feature counts differ")
        return LabeledDataset(linalg.vstack_rows([self.X, other.X]),
                              np.concatenate([self.y, other.y]),
                              self.probe_flags, split, self.informative)


@dataclass(frozen=True)
class SynthTruth:
    """Generating model of a synthetic bundle (all indices are final column positions)."""

    weights: np.ndarray
    bias: float
    noise: np.ndarray
    informative: np.ndarray
    probe_source: np.ndarray  # source column of each probe, -1 for real features


@dataclass(frozen=True, eq=False)
class DatasetBundle:
    train: LabeledDataset
    validation: LabeledDataset
    test: LabeledDataset
    truth: Optional[SynthTruth] = None

    def __post_init__(self):
        widths = {self.train.n_features, self.validation.n_features, self.test.n_features}
        if len(widths) != 1:
            raise ValueError("feature counts differ across splits")
        roles = (self.train.split, self.validation.split, self.test.split)
        if roles != SPLITS:
            raise ValueError("split roles must be train/validation/test, got %s" % (roles,))

    @property
    def n_features(self) -> int:
        return self.train.n_features

    @property
    def probe_flags(self) -> Optional[np.ndarray]:
        return self.train.probe_flags

    def train_plus_validation(self) -> LabeledDataset:
        return self.train.concat(self.validation)


# --------------------------------------------------------------------------- I/O

def format_number(v: float) -> str:
    """Shortest text that parses back to the same float; integral values lose '.0'."""
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


def _lines(path) -> list[str]:
    """File lines without the leading block of '#' comment lines (the provenance header)."""
    with open(path, "r") as fh:
        lines = fh.read().splitlines()
    start = 0
    while start < len(lines) and lines[start].startswith("#"):
        start += 1
    return lines[start:]


def read_labels(path) -> np.ndarray:
    lines = _lines(path)
    while lines and not lines[-1].strip():
        lines.pop()
    out = np.empty(len(lines), dtype=np.int8)
    for lineno, line in enumerate(lines, 1):
        tok = line.strip()
        if tok in ("1", "+1"):
            out[lineno - 1] = 1
        elif tok == "-1":
            out[lineno - 1] = -1
        else:
            raise DatasetFormatError("%s:%d: label not in {+1,-1}: %r" % (path, lineno, tok))
    return out


def _parse_dense(path) -> np.ndarray:
    lines = _lines(path)
    while lines and not lines[-1].strip():
        lines.pop()
    rows = []
    width = None
    for lineno, line in enumerate(lines, 1):
        toks = line.split()
        try:
            row = [float(t) for t in toks]
        except ValueError:
            raise DatasetFormatError("%s:%d: malformed number" % (path, lineno)) from None
        if width is None:
            width = len(row)
        if not row or len(row) != width:
            raise DatasetFormatError("%s:%d: expected %s values, found %d"
                                     % (path, lineno, width, len(row)))
        rows.append(row)
    if not rows:
        return np.zeros((0, 0))
    return np.array(rows, dtype=np.float64)


def _parse_sparse(path, n_features: Optional[int]) -> sp.csr_matrix:
    lines = _lines(path)
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    max_index = 0
    for lineno, line in enumerate(lines, 1):
        last = 0
        for tok in line.split():
            head, sep, tail = tok.partition(":")
            try:
                if not sep:
                    raise ValueError
                j = int(head)
                v = float(tail)
            except ValueError:
                raise DatasetFormatError("%s:%d: malformed token %r" % (path, lineno, tok)) from None
            if j <= last:
                raise DatasetFormatError("%s:%d: indices must be 1-based and strictly increasing"
                                         % (path, lineno))
            if n_features is not None and j > n_features:
                raise DatasetFormatError("%s:%d: index %d out of declared range 1..%d"
                                         % (path, lineno, j, n_features))
            last = j
            if v != 0.0:
                indices.append(j - 1)
                data.append(v)
        max_index = max(max_index, last)
        indptr.append(len(indices))
    width = n_features if n_features is not None else max_index
    return sp.csr_matrix((np.array(data, dtype=np.float64), np.array(indices, dtype=np.int64),
                          np.array(indptr, dtype=np.int64)), shape=(len(lines), width))


def load_dataset(data_path, labels_path, fmt: str = "dense", n_features: Optional[int] = None,
                 split: str = "train", probes_path=None) -> LabeledDataset:
    """Read a data file and its labels file.

    Parameters
    ----------
    fmt : {"dense", "sparse"}
    n_features : int, optional
        Declared width. Required to reject out-of-range sparse indices and to
        keep trailing all-zero columns; inferred from the data otherwise.
    probes_path : path, optional
        Probe sidecar; when given the dataset carries probe flags.
    """
    for p in (data_path, labels_path):
        if not os.path.exists(p):
            raise FileNotFoundError("no such file: %s" % p)
    if fmt == "dense":
        X = _parse_dense(data_path)
        if n_features is not None and X.size and X.shape[1] != n_features:
            raise DatasetFormatError("%s: %d columns, manifest declares %d"
                                     % (data_path, X.shape[1], n_features))
    elif fmt == "sparse":
        X = _parse_sparse(data_path, n_features)
    else:
        raise ValueError("format must be 'dense' or 'sparse'")
    y = read_labels(labels_path)
    if y.size != X.shape[0]:
        raise DatasetFormatError("%s has %d rows but %s has %d labels"
                                 % (data_path, X.shape[0], labels_path, y.size))
    flags = None
    if probes_path is not None:
        flags = read_probe_sidecar(probes_path, X.shape[1])
    return LabeledDataset(X, y, flags, split)


def write_dataset(ds: LabeledDataset, data_path, labels_path, fmt: Optional[str] = None,
                  header: str = "") -> None:
    fmt = fmt or ("sparse" if ds.is_sparse else "dense")
    with open(data_path, "w") as fh:
        fh.write(header)
        if fmt == "sparse":
            X = sp.csr_matrix(ds.X)
            X.sort_indices()
            for i in range(X.shape[0]):
                lo, hi = X.indptr[i], X.indptr[i + 1]
                toks = ["%d:%s" % (j + 1, format_number(v))
                        for j, v in zip(X.indices[lo:hi], X.data[lo:hi]) if v != 0]
                fh.write(" ".join(toks) + "\n")
        elif fmt == "dense":
            for row in linalg.as_dense(ds.X):
                fh.write(" ".join(format_number(v) for v in row) + "\n")
        else:
            raise ValueError("format must be 'dense' or 'sparse'")
    with open(labels_path, "w") as fh:
        fh.write(header)
        fh.writelines("%d\n" % v for v in ds.y)


def read_probe_sidecar(path, n_features: int) -> np.ndarray:
    flags = np.zeros(n_features, dtype=bool)
    for lineno, line in enumerate(_lines(path), 1):
        tok = line.strip()
        if not tok:
            continue
        try:
            j = int(tok)
        except ValueError:
            raise DatasetFormatError("%s:%d: malformed index %r" % (path, lineno, tok)) from None
        if not 1 <= j <= n_features:
            raise DatasetFormatError("%s:%d: probe index %d out of range 1..%d"
                                     % (path, lineno, j, n_features))
        flags[j - 1] = True
    return flags


def write_probe_sidecar(flags, path, header: str = "") -> None:
    with open(path, "w") as fh:
        fh.write(header)
        fh.writelines("%d\n" % (j + 1) for j in np.flatnonzero(flags))


_MANIFEST_FILES = ("train_data", "train_labels", "valid_data", "valid_labels",
                   "test_data", "test_labels")


def _read_manifest_keys(path) -> dict:
    if not os.path.exists(path):
        raise FileNotFoundError("no such file: %s" % path)
    keys = {}
    for lineno, line in enumerate(_lines(path), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        k, sep, v = line.partition("=")
        if not sep:
            raise DatasetFormatError("%s:%d: expected key=value" % (path, lineno))
        keys[k.strip()] = v.strip()
    return keys


def load_manifest(path) -> DatasetBundle:
    """Load the three splits named by a manifest; relative paths resolve against its directory."""
    keys = _read_manifest_keys(path)
    missing = [k for k in _MANIFEST_FILES + ("format",) if k not in keys]
    if missing:
        raise DatasetFormatError("%s: missing keys %s" % (path, ", ".join(missing)))
    base = Path(path).resolve().parent
    resolve = lambda k: str(base / keys[k])  # noqa: E731
    width = int(keys["n_features"]) if "n_features" in keys else None
    fmt = keys["format"]
    probes = resolve("probes") if keys.get("probes") else None
    if probes is not None and not os.path.exists(probes):
        raise FileNotFoundError("no such file: %s" % probes)
    splits = []
    for prefix, role in (("train", "train"), ("valid", "validation"), ("test", "test")):
        splits.append(load_dataset(resolve(prefix + "_data"), resolve(prefix + "_labels"), fmt,
                                   width, role, probes))
    if width is None:
        width = max(s.n_features for s in splits)
        if fmt == "sparse":
            splits = [replace(s, X=sp.csr_matrix((s.X.data, s.X.indices, s.X.indptr),
                                                 shape=(s.n_examples, width))) for s in splits]
    return DatasetBundle(*splits)


def write_manifest(path, fmt: str, n_features: int, files: dict, header: str = "") -> None:
    with open(path, "w") as fh:
        if header:
            fh.write(header)
        fh.write("format=%s\n" % fmt)
        fh.write("n_features=%d\n" % n_features)
        for k in _MANIFEST_FILES + ("probes",):
            if k in files:
                fh.write("%s=%s\n" % (k, files[k]))


def write_bundle(bundle: DatasetBundle, out_dir, fmt: Optional[str] = None, header: str = "") -> Path:
    """Write all splits, the probe sidecar (when flags exist) and a manifest. Returns the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fmt = fmt or ("sparse" if bundle.train.is_sparse else "dense")
    files = {}
    for prefix, ds in (("train", bundle.train), ("valid", bundle.validation), ("test", bundle.test)):
        files[prefix + "_data"] = prefix + ".data"
        files[prefix + "_labels"] = prefix + ".labels"
        write_dataset(ds, out / files[prefix + "_data"], out / files[prefix + "_labels"], fmt,
                      header)
    if bundle.probe_flags is not None:
        files["probes"] = "probes.idx"
        write_probe_sidecar(bundle.probe_flags, out / "probes.idx", header)
    manifest = out / "manifest.txt"
    write_manifest(manifest, fmt, bundle.n_features, files, header)
    return manifest


# --------------------------------------------------------------------- generator

@dataclass(frozen=True)
class SynthSpec:
    n_train: int = 500
    n_valid: int = 250
    n_test: int = 500
    d_real: int = 200
    d_probes: int = 200
    k_informative: int = 10
    sparsity_target: float = 0.0
    correlation_block_size: int = 5
    correlation_strength: float = 0.0
    probe_kind: str = "permutation"
    noise_sd: float = 0.1
    seed: int = 0

    def __post_init__(self):
        for name in ("n_train", "n_valid", "n_test", "d_real", "d_probes", "k_informative"):
            if getattr(self, name) < 0:
                raise ValueError("%s must be non-negative" % name)
        if self.k_informative > self.d_real:
            raise ValueError("k_informative exceeds d_real")
        if not 0.0 <= self.sparsity_target < 1.0:
            raise ValueError("sparsity_target must lie in [0, 1)")
        if not 0.0 <= self.correlation_strength < 1.0:
            raise ValueError("correlation_strength must lie in [0, 1)")
        if self.correlation_block_size < 1:
            raise ValueError("correlation_block_size must be at least 1")
        if self.probe_kind not in ("permutation", "zipf"):
            raise ValueError("probe_kind must be 'permutation' or 'zipf'")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be non-negative")
        if self.d_probes > 0 and self.probe_kind == "permutation" and self.d_real == 0:
            raise ValueError("permutation probes need at least one real feature")

    @property
    def n_total(self) -> int:
        return self.n_train + self.n_valid + self.n_test


def _real_features(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    n, d = spec.n_total, spec.d_real
    rho = spec.correlation_strength
    Z = rng.standard_normal((n, d))
    if rho > 0:
        n_blocks = math.ceil(d / spec.correlation_block_size)
        latent = rng.standard_normal((n, n_blocks))
        block = np.arange(d) // spec.correlation_block_size
        Z = math.sqrt(rho) * latent[:, block] + math.sqrt(1.0 - rho) * Z
    if spec.sparsity_target > 0:
        Z *= rng.random((n, d)) >= spec.sparsity_target
    return Z


def _zipf_probes(spec: SynthSpec, real: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n, p = spec.n_total, spec.d_probes
    pool = real[real != 0]
    density = 1.0 - spec.sparsity_target
    harmonic = np.sum(1.0 / np.arange(1, p + 1))
    scale = p * density / harmonic
    probes = np.zeros((n, p))
    for r in range(1, p + 1):
        count = int(round(min(1.0, scale / r) * n))
        count = max(count, 1) if n else 0
        rows = rng.choice(n, size=count, replace=False)
        vals = rng.choice(pool, size=count) if pool.size else rng.standard_normal(count)
        probes[rows, r - 1] = vals
    return probes


def generate_synthetic(spec: SynthSpec) -> DatasetBundle:
    """Bundle with ``k_informative`` relevant features, redundant correlates and probes.

    Real features come in blocks sharing a latent factor (pairwise correlation
    ``correlation_strength``). Labels are ``sign(w . x - t + noise)`` with ``w``
    supported on the informative features (magnitudes uniform in [0.5, 1.5],
    random signs, so ``noise_sd`` is in feature units) and ``t`` set between the
    two middle scores. Permutation
    probes are row-permuted copies of the real features least correlated with the
    clean score; zipf probes get nonzero counts proportional to ``1/rank``.
    Columns are shuffled so that neither kind of feature sits in a fixed position.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_total
    real = _real_features(spec, rng)

    informative = np.sort(rng.choice(spec.d_real, size=spec.k_informative, replace=False))
    w_real = np.zeros(spec.d_real)
    w_real[informative] = rng.uniform(0.5, 1.5, spec.k_informative) * rng.choice([-1.0, 1.0],
                                                                                spec.k_informative)
    score = real @ w_real
    if n >= 2:
        ordered = np.sort(score)
        threshold = 0.5 * (ordered[n // 2 - 1] + ordered[n // 2])
    else:
        threshold = 0.0
    noise = spec.noise_sd * rng.standard_normal(n)
    y = np.where(score - threshold + noise >= 0, 1, -1)

    source = np.full(spec.d_probes, -1, dtype=np.int64)
    if spec.probe_kind == "permutation" and spec.d_probes:
        mu, sdev = linalg.column_moments(real)
        cov = ((real - mu) * (score - score.mean())[:, None]).mean(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            relevance = np.where(sdev > 0, np.abs(cov) / (sdev * score.std()), 0.0)
        relevance[informative] = np.inf
        least = np.lexsort((np.arange(spec.d_real), relevance))
        # reuse the least informative sources cyclically; informative ones only if nothing else exists
        pool = spec.d_real - spec.k_informative or spec.d_real
        source = least[np.arange(spec.d_probes) % pool]
        probes = np.column_stack([real[rng.permutation(n), j] for j in source])
    elif spec.d_probes:
        probes = _zipf_probes(spec, real, rng)
    else:
        probes = np.zeros((n, 0))

    d = spec.d_real + spec.d_probes
    perm = rng.permutation(d)  # final column c holds original column perm[c]
    where = np.empty(d, dtype=np.int64)
    where[perm] = np.arange(d)
    X = np.hstack([real, probes])[:, perm]
    is_probe = (perm >= spec.d_real)
    is_inf = np.zeros(d, dtype=bool)
    is_inf[where[informative]] = True
    weights = np.concatenate([w_real, np.zeros(spec.d_probes)])[perm]
    probe_source = np.full(d, -1, dtype=np.int64)
    if spec.probe_kind == "permutation" and spec.d_probes:
        probe_source[where[spec.d_real + np.arange(spec.d_probes)]] = where[source]

    if spec.sparsity_target >= 0.5:
        X = sp.csr_matrix(X)
    cuts = np.cumsum([spec.n_train, spec.n_valid])
    parts = []
    for role, rows in zip(SPLITS, np.split(np.arange(n), cuts)):
        Xs = X[rows] if sp.issparse(X) else X[rows, :]
        parts.append(LabeledDataset(Xs, y[rows], is_probe, role, is_inf))
    truth = SynthTruth(_readonly(weights), -float(threshold), _readonly(noise),
                       _readonly(np.flatnonzero(is_inf)), _readonly(probe_source))
    return DatasetBundle(*parts, truth=truth)


# --------------------------------------------------------------------- statistics

@dataclass(frozen=True)
class DatasetStats:
    rows: int
    cols: int
    sparsity: float
    mean_abs_corr: float
    class_balance: float

    def as_row(self) -> dict:
        return {"rows": self.rows, "cols": self.cols, "sparsity": self.sparsity,
                "mean_abs_corr": self.mean_abs_corr, "class_balance": self.class_balance}


def dataset_stats(ds: LabeledDataset, sample_pairs: int = 100_000, seed: int = 0) -> DatasetStats:
    """Size, sparsity, mean |pairwise correlation| and fraction of positive labels."""
    if ds.n_examples == 0 or ds.n_features == 0:
        raise ValueError("statistics of an empty dataset are undefined")
    corr = (linalg.mean_abs_pairwise_correlation(ds.X, sample_pairs, seed)
            if ds.n_features >= 2 and ds.n_examples >= 2 else 0.0)
    return DatasetStats(ds.n_examples, ds.n_features, linalg.sparsity(ds.X), corr,
                        float(np.mean(ds.y == 1)))

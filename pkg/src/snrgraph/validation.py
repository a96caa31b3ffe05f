"""Input validation helpers."""

import numbers

import numpy as np
import scipy.sparse as sp

from .exceptions import GraphDataError


def as_rng(seed):
    """Return a ``numpy.random.Generator`` for an int, SeedSequence, Generator or None."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def check_labels(labels, n=None, k=None):
    """Validate a class vector and return it as ``int64`` together with ``k``."""
    y = np.asarray(labels)
    if y.ndim != 1:
        raise GraphDataError(f"labels must be one-dimensional, got shape {y.shape}")
    if y.size and not np.all(np.equal(np.mod(y, 1), 0)):
        raise GraphDataError("labels must be integers")
    y = y.astype(np.int64)
    if n is not None and y.shape[0] != n:
        raise GraphDataError(f"expected {n} labels, got {y.shape[0]}")
    if y.size and y.min() < 0:
        raise GraphDataError("labels must be non-negative")
    inferred = int(y.max()) + 1 if y.size else 0
    if k is None:
        k = inferred
    elif inferred > k:
        raise GraphDataError(f"label {inferred - 1} out of range for k={k}")
    return y, int(k)


def check_square(matrix, n=None, name="matrix"):
    """Check that ``matrix`` is square (and n x n when ``n`` is given)."""
    shape = matrix.shape
    if len(shape) != 2 or shape[0] != shape[1]:
        raise ValueError(f"{name} must be square, got shape {shape}")
    if n is not None and shape[0] != n:
        raise ValueError(f"{name} has size {shape[0]}, expected {n}")
    return matrix


def as_operator_matrix(s):
    """Accept a ShiftOperator, sparse matrix or dense array; return CSR float64."""
    m = getattr(s, "matrix", s)
    if sp.issparse(m):
        return sp.csr_matrix(m, dtype=np.float64)
    return sp.csr_matrix(np.asarray(m, dtype=np.float64))


def check_simplex(pi, atol=1e-12, name="pi"):
    p = np.asarray(pi, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"{name} must be a non-empty vector")
    if np.any(p <= 0):
        raise ValueError(f"{name} entries must be strictly positive")
    if abs(p.sum() - 1.0) > atol:
        raise ValueError(f"{name} must sum to 1 (got {p.sum():.15g})")
    return p


def check_psd(matrix, name, floor=-1e-10):
    m = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    check_square(m, name=name)
    if not np.allclose(m, m.T, atol=1e-12):
        raise ValueError(f"{name} must be symmetric")
    if m.size and np.linalg.eigvalsh(m).min() < floor:
        raise ValueError(f"{name} must be positive semi-definite")
    return m


def check_nonneg(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value < 0:
        raise ValueError(f"{name} must be a finite non-negative number, got {value!r}")
    return float(value)


def check_order(value, name="order"):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < 0:
        raise ValueError(f"{name} must be a non-negative integer, got {value!r}")
    return int(value)


def check_index_set(idx, n, name="index set"):
    a = np.asarray(idx, dtype=np.int64).ravel()
    if a.size and (a.min() < 0 or a.max() >= n):
        raise ValueError(f"{name} has entries outside [0, {n})")
    if np.unique(a).size != a.size:
        raise ValueError(f"{name} contains duplicates")
    return a


def as_seed_sequence(seed):
    """Return a ``SeedSequence`` for an int, sequence of ints, SeedSequence or None."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)

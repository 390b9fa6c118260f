"""Unit-norm frames: coherence metrics, sign canonicalization, tight-frame certificates.

A frame here is an m x N real matrix of unit-norm columns, m <= N. The metrics
of interest are the largest and the average absolute pairwise correlation, the
frame potential, and the Welch lower bound on the largest correlation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput

_UNIT_TOL = 1e-10


def unit_columns(a):
    """Return a copy of ``a`` with every column scaled to unit Euclidean norm."""
    a = np.asarray(a, dtype=float)
    norms = np.linalg.norm(a, axis=0)
    if (norms <= 0.0).any() or not np.isfinite(norms).all():
        raise InvalidInput("cannot normalize a zero or non-finite column")
    return a / norms


@dataclass(frozen=True)
class Frame:
    """Immutable m x N matrix of unit-norm columns (2 <= m <= N)."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=float)
        if v.ndim != 2:
            raise InvalidInput(f"frame must be a 2-D matrix, got shape {v.shape}")
        m, n = v.shape
        if m < 2 or n < m:
            raise InvalidInput(f"frame needs 2 <= m <= N, got m={m}, N={n}")
        if not np.isfinite(v).all():
            raise InvalidInput("frame contains non-finite entries")
        norms = np.linalg.norm(v, axis=0)
        bad = np.abs(norms - 1.0) > _UNIT_TOL
        if bad.any():
            raise InvalidInput(
                f"columns must be unit norm within {_UNIT_TOL:g}; "
                f"worst deviation {np.abs(norms - 1.0).max():.3e}"
            )
        # Column-major storage, frozen against accidental mutation.
        v = np.asfortranarray(v)
        v.flags.writeable = False
        object.__setattr__(self, "vectors", v)

    @property
    def m(self):
        return self.vectors.shape[0]

    @property
    def n_vectors(self):
        return self.vectors.shape[1]

    def gram(self):
        """Gram matrix of the columns, shape (N, N)."""
        return self.vectors.T @ self.vectors


@dataclass(frozen=True)
class FrameMetrics:
    """Scalar summary of a frame's correlation structure.

    ``sparsity_cap`` is the largest sparsity level with a uniqueness
    guarantee, ``floor((1/mu + 1) / 2)``; it is None when ``mu == 0``
    (orthonormal columns, no finite cap).
    """

    mu: float
    mu_avg: float
    frame_potential: float
    welch: float
    sparsity_cap: int | None


def welch_bound(m, n):
    """Lower bound on the peak |correlation| of any m x N unit-norm frame."""
    if m < 1 or n < m:
        raise InvalidInput(f"welch_bound needs 1 <= m <= N, got m={m}, N={n}")
    if n == m:
        return 0.0
    return math.sqrt((n - m) / (m * (n - 1)))


def mutual_coherence(frame):
    """Largest absolute inner product between distinct columns."""
    g = frame.gram()
    off = np.abs(g[np.triu_indices(frame.n_vectors, k=1)])
    return float(off.max())


def average_coherence(frame):
    """Mean absolute inner product over distinct column pairs."""
    g = frame.gram()
    off = np.abs(g[np.triu_indices(frame.n_vectors, k=1)])
    return float(off.mean())


def frame_potential(frame):
    """Squared Frobenius norm of the Gram matrix; at least N^2/m, with equality iff tight."""
    g = frame.gram()
    return float((g * g).sum())


def frame_metrics(frame):
    """All scalar metrics of a frame in one pass."""
    g = frame.gram()
    n = frame.n_vectors
    off = np.abs(g[np.triu_indices(n, k=1)])
    mu = float(off.max())
    # The cap is inclusive at the boundary; guard the floor against the
    # one-ulp overshoot when 1/mu lands on an integer (e.g. mu = 1/3).
    cap = None if mu == 0.0 else int(math.floor(0.5 * (1.0 / mu + 1.0) + 1e-9))
    return FrameMetrics(
        mu=mu,
        mu_avg=float(off.mean()),
        frame_potential=float((g * g).sum()),
        welch=welch_bound(frame.m, n),
        sparsity_cap=cap,
    )


def canonicalize_signs(frame, i):
    """Flip columns so every correlation with column ``i`` is non-negative.

    Returns the new Frame and the +-1 sign vector applied; multiplying the
    new columns by the signs restores the original orientation. Coherence is
    invariant under the flip.
    """
    v = frame.vectors
    n = v.shape[1]
    if not 0 <= i < n:
        raise InvalidInput(f"column index {i} out of range for N={n}")
    corr = v.T @ v[:, i]
    signs = np.where(corr < 0.0, -1.0, 1.0)
    signs[i] = 1.0
    return Frame(v * signs), signs


def make_simplex_etf(m):
    """Regular simplex frame: m x (m+1), every pairwise correlation equal to -1/m.

    Built from a Householder basis of the hyperplane orthogonal to the all-ones
    vector in R^(m+1), then column-normalized. The result is an equiangular
    tight frame attaining the Welch bound 1/m.
    """
    if m < 2:
        raise InvalidInput(f"simplex frame needs m >= 2, got {m}")
    k = m + 1
    w = np.full(k, 1.0 / math.sqrt(k))
    v = w - np.eye(k)[:, 0]
    h = np.eye(k) - 2.0 * np.outer(v, v) / (v @ v)
    # Columns 2..k of the reflector span the complement of the ones vector.
    f = h[:, 1:].T
    return Frame(unit_columns(f))


@dataclass(frozen=True)
class EtfCertificate:
    """Outcome of testing a frame for equiangular tightness.

    When both flags hold with ``mu_attained > 0`` the certificate also checks
    two structural identities of such frames around a reference column: the
    canonicalized neighbor Gram has the ones vector as an eigenvector with
    eigenvalue (N - m)/m, and every column's positive-minus-negative
    correlation-sign count equals the integer (N - 2m)/(m mu) + 1.
    """

    is_equiangular: bool
    is_tight: bool
    mu_attained: float
    eigen_residual: float | None = None
    sign_balance: np.ndarray | None = field(default=None, repr=False)
    balance_value: float | None = None
    balance_ok: bool | None = None


def certify_etf(frame, tol=1e-6):
    """Certify whether ``frame`` is an equiangular tight frame at tolerance ``tol``."""
    if not (0.0 < tol <= 1e-2):
        raise InvalidInput(f"tol must be in (0, 1e-2], got {tol}")
    v = frame.vectors
    m, n = v.shape
    g = v.T @ v
    iu = np.triu_indices(n, k=1)
    off = np.abs(g[iu])
    mu = float(off.max())
    spread = float(off.max() - off.min())
    is_eq = spread <= tol * max(mu, 1e-300) if mu > 0.0 else True
    tight_target = n / m
    tight_dev = float(np.abs(v @ v.T - tight_target * np.eye(m)).max())
    is_tight = tight_dev <= tol * tight_target

    if not (is_eq and is_tight and mu > tol):
        return EtfCertificate(is_equiangular=is_eq, is_tight=is_tight, mu_attained=mu)

    canon, _ = canonicalize_signs(frame, 0)
    neigh = np.delete(canon.vectors, 0, axis=1)
    gn = neigh.T @ neigh
    target = (n - m) / m
    eigen_residual = float(np.abs(gn @ np.ones(n - 1) - target).max())

    gc = canon.vectors.T @ canon.vectors
    signs = np.sign(gc)
    np.fill_diagonal(signs, 0.0)
    balance = signs.sum(axis=0)  # N+ minus N- per column
    expected = (n - 2 * m) / (m * mu) + 1.0
    nearest = round(expected)
    balance_ok = bool(
        abs(expected - nearest) <= tol * max(1.0, abs(expected))
        and np.all(balance[1:] == nearest)
    )
    return EtfCertificate(
        is_equiangular=is_eq,
        is_tight=is_tight,
        mu_attained=mu,
        eigen_residual=eigen_residual,
        sign_balance=balance[1:].astype(int),
        balance_value=float(expected),
        balance_ok=balance_ok,
    )

"""Two-sample Gram bundles, pooled-covariance spectra and the regularized
Fisher quadratic form.

Notation: the pooled points are ordered sample 1 first; ``K`` is their Gram
matrix, ``N`` the block-diagonal centering projector diag(P_n1, P_n2) and
``m`` the contrast vector (-1/n1 on sample 1, +1/n2 on sample 2).  The pooled
within-sample covariance has the same nonzero spectrum as ``N K N / n`` and

    (n1 n2 / n) <delta, (S_W + gamma)^-1 delta>
        = n1 n2 / (gamma n) * (m'Km - m'KN (gamma I + NKN/n)^-1 NKm / n).

``N`` is never materialized outside :meth:`GramBundle.centering_matrix`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg as sla

from .errors import InvalidInputError, NumericFailureError
from .kernels import KernelSpec, as_points, gram, resolve_bandwidth

EIG_RTOL = 1e-12
# largest tolerated relative roundoff in the dual form before switching to
# the primal (feature-space) evaluation
CANCELLATION_RTOL = 1e-8
_EPS = np.finfo(float).eps


@dataclass(frozen=True, eq=False)
class TwoSample:
    points: np.ndarray
    n1: int
    n2: int

    def __post_init__(self):
        pts = as_points(self.points)
        object.__setattr__(self, "points", pts)
        if self.n1 < 2 or self.n2 < 2:
            raise InvalidInputError(
                f"each sample needs at least 2 points (n1={self.n1}, n2={self.n2})"
            )
        if self.n1 + self.n2 != pts.shape[0]:
            raise InvalidInputError(
                f"n1 + n2 = {self.n1 + self.n2} but {pts.shape[0]} points given"
            )

    @classmethod
    def from_samples(cls, x1, x2) -> "TwoSample":
        a, b = as_points(x1), as_points(x2)
        if a.shape[1] != b.shape[1]:
            raise InvalidInputError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
        return cls(np.vstack([a, b]), a.shape[0], b.shape[0])

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @property
    def sample1(self) -> np.ndarray:
        return self.points[: self.n1]

    @property
    def sample2(self) -> np.ndarray:
        return self.points[self.n1 :]


def contrast_vector(n1: int, n2: int) -> np.ndarray:
    return np.concatenate([np.full(n1, -1.0 / n1), np.full(n2, 1.0 / n2)])


def _blocks(n1: int, n: int):
    return (slice(0, n1), slice(n1, n))


def center_columns(v: np.ndarray, n1: int) -> np.ndarray:
    """N v for a vector (or the rows of a matrix) without forming N."""
    out = np.array(v, dtype=float, copy=True)
    for s in _blocks(n1, out.shape[0]):
        out[s] -= out[s].mean(axis=0)
    return out


def center_gram(K: np.ndarray, n1: int) -> np.ndarray:
    """N K N via per-block rank-one corrections."""
    n = K.shape[0]
    out = np.empty_like(K, dtype=float)
    for a in _blocks(n1, n):
        for b in _blocks(n1, n):
            sub = K[a, b]
            out[a, b] = sub - sub.mean(axis=0) - sub.mean(axis=1)[:, None] + sub.mean()
    return out


@dataclass(frozen=True, eq=False)
class GramBundle:
    """Pooled Gram matrix plus the two sample sizes."""

    K: np.ndarray
    n1: int
    n2: int
    spec: KernelSpec | None = None

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise InvalidInputError(f"Gram matrix must be square, got {K.shape}")
        if self.n1 < 2 or self.n2 < 2:
            raise InvalidInputError(
                f"each sample needs at least 2 points (n1={self.n1}, n2={self.n2})"
            )
        if self.n1 + self.n2 != K.shape[0]:
            raise InvalidInputError("n1 + n2 does not match the Gram matrix size")
        object.__setattr__(self, "K", K)

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    @cached_property
    def contrast(self) -> np.ndarray:
        return contrast_vector(self.n1, self.n2)

    @cached_property
    def centered(self) -> np.ndarray:
        """N K N (symmetrized)."""
        C = center_gram(self.K, self.n1)
        return 0.5 * (C + C.T)

    def centering_matrix(self) -> np.ndarray:
        """Dense N; for invariant checks only."""
        return sla.block_diag(
            np.eye(self.n1) - 1.0 / self.n1, np.eye(self.n2) - 1.0 / self.n2
        )

    def permuted(self, index: np.ndarray, n1: int | None = None) -> "GramBundle":
        """Bundle of the points ``index`` (may repeat), first ``n1`` as sample 1."""
        index = np.asarray(index)
        n1 = self.n1 if n1 is None else n1
        return GramBundle(self.K[np.ix_(index, index)], n1, index.size - n1, self.spec)

    @cached_property
    def _primal(self):
        """Feature map Phi with K ~= Phi Phi^T from the numerically nonnull eigenpairs."""
        try:
            vals, vecs = sla.eigh(self.K)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericFailureError(_diagnose("eigendecomposition of K", self.K, exc)) from exc
        top = max(vals[-1], 0.0)
        keep = vals > 10.0 * self.n * _EPS * top
        phi = vecs[:, keep] * np.sqrt(vals[keep])
        centered = center_columns(phi, self.n1)
        b = phi.T @ self.contrast
        return centered, b


def build_bundle(sample: TwoSample, spec: KernelSpec) -> GramBundle:
    spec = resolve_bandwidth(spec, sample.points)
    return GramBundle(gram(spec, sample.points), sample.n1, sample.n2, spec)


def _diagnose(what: str, M: np.ndarray, exc: Exception) -> str:
    finite = bool(np.all(np.isfinite(M)))
    diag = np.diag(M) if M.ndim == 2 else M
    msg = f"{what} failed ({exc}); n={M.shape[0]}, finite={finite}"
    if finite:
        msg += f", max|entry|={np.max(np.abs(M)):.3e}, min diag={np.min(diag):.3e}"
        try:
            msg += f", cond~{np.linalg.cond(M):.3e}"
        except np.linalg.LinAlgError:
            pass
    return msg


def truncate_spectrum(eigenvalues) -> np.ndarray:
    """Drop values below 1e-12 * max(lambda_1, 1); return nonincreasing."""
    lam = np.sort(np.asarray(eigenvalues, dtype=float))[::-1]
    if lam.size == 0:
        return lam
    tol = EIG_RTOL * max(lam[0], 1.0)
    return lam[lam > tol]


def pooled_spectrum(bundle: GramBundle) -> np.ndarray:
    """Retained eigenvalues of the pooled empirical covariance, nonincreasing."""
    A = bundle.centered / bundle.n
    try:
        vals = sla.eigh(A, eigvals_only=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericFailureError(_diagnose("pooled spectrum", A, exc)) from exc
    return truncate_spectrum(vals)


def d_r(spectrum, gamma: float, r: int) -> float:
    """(sum_p (lambda_p / (lambda_p + gamma))^r)^(1/r)."""
    if not gamma > 0:
        raise InvalidInputError(f"gamma must be positive, got {gamma}")
    if r not in (1, 2):
        raise InvalidInputError(f"r must be 1 or 2, got {r}")
    lam = np.asarray(spectrum, dtype=float)
    if np.any(lam < 0):
        raise InvalidInputError("spectrum entries must be nonnegative")
    w = lam / (lam + gamma)
    return float(np.sum(w**r) ** (1.0 / r))


@dataclass(frozen=True, eq=False)
class SpectralSummary:
    eigenvalues: np.ndarray
    gamma: float
    d1: float
    d2: float

    @classmethod
    def from_spectrum(cls, spectrum, gamma: float) -> "SpectralSummary":
        lam = np.asarray(spectrum, dtype=float)
        return cls(lam, gamma, d_r(lam, gamma, 1), d_r(lam, gamma, 2))

    @property
    def weights(self) -> np.ndarray:
        return self.eigenvalues / (self.eigenvalues + self.gamma)


def spectral_summary(bundle: GramBundle, gamma: float) -> SpectralSummary:
    return SpectralSummary.from_spectrum(pooled_spectrum(bundle), gamma)


def _check_gamma(gamma: float) -> None:
    if not (isinstance(gamma, (int, float, np.floating)) and math.isfinite(gamma) and gamma > 0):
        raise InvalidInputError(f"gamma must be a positive finite real, got {gamma}")


def _primal_quadratic(bundle: GramBundle, gamma: float) -> float:
    """<delta, (S_W + gamma)^-1 delta> in the finite feature space of K."""
    centered, b = bundle._primal
    if b.size == 0:
        return 0.0
    C = centered.T @ centered / bundle.n
    C[np.diag_indices_from(C)] += gamma
    try:
        L = sla.cholesky(C, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(_diagnose("primal factorization", C, exc)) from exc
    y = sla.solve_triangular(L, b, lower=True)
    return float(y @ y)


def _roundoff_scale(bundle: GramBundle) -> float:
    a = np.abs(bundle.contrast)
    return float(a @ (np.abs(bundle.K) @ a))


def regularized_quadratic(bundle: GramBundle, gamma: float) -> float:
    """(n1 n2 / n) ||(S_W + gamma I)^(-1/2) (mu2_hat - mu1_hat)||^2.

    Evaluated with a Cholesky factorization of gamma I + NKN/n.  The dual form
    subtracts two O(||delta||^2) terms and divides by gamma; when that loses
    more than ``CANCELLATION_RTOL`` of relative accuracy (tiny gamma, large
    kernel values) the value is recomputed in the primal feature space.
    """
    _check_gamma(gamma)
    n, m = bundle.n, bundle.contrast
    Km = bundle.K @ m
    v = center_columns(Km, bundle.n1)
    A = bundle.centered / n
    A[np.diag_indices_from(A)] += gamma
    try:
        factor = sla.cho_factor(A, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(
            _diagnose("Cholesky of gamma I + NKN/n", A, exc) + "; kernel is probably not PSD"
        ) from exc
    diff = float(m @ Km) - float(v @ sla.cho_solve(factor, v)) / n
    if diff <= 0 or _EPS * _roundoff_scale(bundle) > CANCELLATION_RTOL * diff:
        q = _primal_quadratic(bundle, gamma)
    else:
        q = diff / gamma
    return bundle.n1 * bundle.n2 / n * max(q, 0.0)


class GammaSweep:
    """One eigendecomposition of NKN/n reused for many values of gamma.

    Gives the same numbers as :func:`pooled_spectrum` and
    :func:`regularized_quadratic` but costs a single O(n^3) step for a whole
    grid of regularization parameters.
    """

    def __init__(self, bundle: GramBundle):
        self.bundle = bundle
        n, m = bundle.n, bundle.contrast
        try:
            vals, vecs = sla.eigh(bundle.centered / n)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericFailureError(_diagnose("pooled spectrum", bundle.centered, exc)) from exc
        Km = bundle.K @ m
        v = center_columns(Km, bundle.n1)
        self._vals = np.maximum(vals, 0.0)
        self._proj2 = (vecs.T @ v) ** 2
        self._mkm = float(m @ Km)
        self._scale = _roundoff_scale(bundle)
        self.spectrum = truncate_spectrum(vals)

    def quadratic(self, gamma: float) -> float:
        _check_gamma(gamma)
        b = self.bundle
        diff = self._mkm - float(np.sum(self._proj2 / (self._vals + gamma))) / b.n
        if diff <= 0 or _EPS * self._scale > CANCELLATION_RTOL * diff:
            q = _primal_quadratic(b, gamma)
        else:
            q = diff / gamma
        return b.n1 * b.n2 / b.n * max(q, 0.0)

    def summary(self, gamma: float) -> SpectralSummary:
        return SpectralSummary.from_spectrum(self.spectrum, gamma)

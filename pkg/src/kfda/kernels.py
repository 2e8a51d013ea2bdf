"""Kernel functions and Gram matrices.

Three families are supported:

* ``linear``   k(x, y) = x^T y  (unbounded; meant for the Hotelling cross-check)
* ``gaussian`` k(x, y) = exp(-||x - y||^2 / (2 sigma^2))
* ``spline``   periodic spline of order m on the unit circle,
  k_m(x, y) = (-1)^(m-1) / (2m)! * B_2m({x - y}),  {t} = t - floor(t),
  whose Fourier expansion is 2 * sum_{p>=1} (2 pi p)^(-2m) cos(2 pi p (x - y)).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.spatial.distance import pdist

from .errors import InvalidInputError, UnsupportedOrderError

MAX_BERNOULLI_DEGREE = 20


class KernelFamily(str, enum.Enum):
    LINEAR = "linear"
    GAUSSIAN = "gaussian"
    PERIODIC_SPLINE = "spline"


@dataclass(frozen=True)
class KernelSpec:
    """Declarative kernel choice.

    ``bandwidth=None`` for the Gaussian family means "resolve with the median
    heuristic on the pooled sample" (see :func:`resolve_bandwidth`).
    """

    family: KernelFamily
    bandwidth: float | None = None
    spline_order: int | None = None

    def __post_init__(self):
        family = KernelFamily(self.family)
        object.__setattr__(self, "family", family)
        if family is KernelFamily.GAUSSIAN:
            if self.bandwidth is not None and not (
                math.isfinite(self.bandwidth) and self.bandwidth > 0
            ):
                raise InvalidInputError(
                    f"gaussian bandwidth must be positive, got {self.bandwidth}"
                )
        elif family is KernelFamily.PERIODIC_SPLINE:
            m = self.spline_order
            if m is None or int(m) != m or m < 1:
                raise InvalidInputError(f"spline order must be an integer >= 1, got {m}")
            if 2 * m > MAX_BERNOULLI_DEGREE:
                raise UnsupportedOrderError(
                    f"spline order {m} needs B_{2 * m}; cap is degree {MAX_BERNOULLI_DEGREE}"
                )
            object.__setattr__(self, "spline_order", int(m))

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls(KernelFamily.LINEAR)

    @classmethod
    def gaussian(cls, bandwidth: float | None = None) -> "KernelSpec":
        return cls(KernelFamily.GAUSSIAN, bandwidth=bandwidth)

    @classmethod
    def spline(cls, order: int) -> "KernelSpec":
        return cls(KernelFamily.PERIODIC_SPLINE, spline_order=order)

    @property
    def is_bounded(self) -> bool:
        return self.family is not KernelFamily.LINEAR

    def describe(self) -> dict:
        out = {"family": self.family.value}
        if self.family is KernelFamily.GAUSSIAN:
            out["bandwidth"] = self.bandwidth
        elif self.family is KernelFamily.PERIODIC_SPLINE:
            out["spline_order"] = self.spline_order
        return out


# --------------------------------------------------------------------------
# Bernoulli polynomials


@lru_cache(maxsize=None)
def bernoulli_coefficients(degree: int) -> tuple[Fraction, ...]:
    """Exact coefficients of B_degree, lowest power first.

    Built from B_0 = 1, B_n' = n B_{n-1} and int_0^1 B_n = 0 (n >= 1).
    """
    if degree < 0 or int(degree) != degree:
        raise InvalidInputError(f"degree must be a nonnegative integer, got {degree}")
    if degree > MAX_BERNOULLI_DEGREE:
        raise UnsupportedOrderError(
            f"Bernoulli degree {degree} exceeds cap {MAX_BERNOULLI_DEGREE}"
        )
    if degree == 0:
        return (Fraction(1),)
    prev = bernoulli_coefficients(degree - 1)
    integrated = [Fraction(0)] + [degree * a / (k + 1) for k, a in enumerate(prev)]
    # choose the constant so that the integral over [0, 1] vanishes
    integrated[0] = -sum(a / (k + 1) for k, a in enumerate(integrated))
    return tuple(integrated)


def _horner(coeffs, t):
    out = np.zeros_like(t, dtype=float)
    for c in reversed(coeffs):
        out = out * t + c
    return out


def bernoulli_polynomial(degree: int, t):
    """Evaluate the Bernoulli polynomial B_degree at ``t`` (scalar or array)."""
    coeffs = [float(c) for c in bernoulli_coefficients(int(degree))]
    arr = np.asarray(t, dtype=float)
    out = _horner(coeffs, arr)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def _spline_coefficients(order: int) -> tuple[float, ...]:
    scale = Fraction((-1) ** (order - 1), math.factorial(2 * order))
    return tuple(float(scale * c) for c in bernoulli_coefficients(2 * order))


def periodic_spline(order: int, diff):
    """Spline kernel as a function of the difference x - y (any real)."""
    # |x - y| is exactly symmetric in floating point, and B_2m is even about 1/2,
    # so folding to [0, 1/2] both symmetrizes and keeps Horner well conditioned.
    u = np.abs(np.asarray(diff, dtype=float))
    u = u - np.floor(u)
    u = np.minimum(u, 1.0 - u)
    return _horner(_spline_coefficients(order), u)


# --------------------------------------------------------------------------
# Points, evaluation and Gram matrices


def as_points(points) -> np.ndarray:
    """Coerce to a finite (n, d) float array; 1-D input is read as n scalars."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr[:, None]
    elif arr.ndim != 2:
        raise InvalidInputError(f"points must be 1-D or 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise InvalidInputError(f"non-finite coordinate at point {bad[0]}, dim {bad[1]}")
    return arr


def _as_vector(x) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise InvalidInputError(f"a data point must be a vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError("non-finite coordinate in data point")
    return v


def _check_dimension(spec: KernelSpec, d: int) -> None:
    if spec.family is KernelFamily.PERIODIC_SPLINE and d != 1:
        raise InvalidInputError(f"spline kernel is defined on the circle (d = 1), got d = {d}")


def _require_bandwidth(spec: KernelSpec) -> float:
    if spec.bandwidth is None:
        raise InvalidInputError(
            "gaussian bandwidth unresolved; call resolve_bandwidth() on the pooled sample"
        )
    return spec.bandwidth


def eval_kernel(spec: KernelSpec, x, y) -> float:
    x, y = _as_vector(x), _as_vector(y)
    if x.shape != y.shape:
        raise InvalidInputError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    _check_dimension(spec, x.shape[0])
    if spec.family is KernelFamily.LINEAR:
        return float(np.sum(x * y))
    if spec.family is KernelFamily.GAUSSIAN:
        sigma = _require_bandwidth(spec)
        return float(np.exp(-np.sum((x - y) ** 2) / (2.0 * sigma * sigma)))
    return float(periodic_spline(spec.spline_order, x[0] - y[0]))


def _pairwise_sq_dist(X: np.ndarray) -> np.ndarray:
    D = np.zeros((X.shape[0], X.shape[0]))
    for k in range(X.shape[1]):
        col = X[:, k]
        D += (col[:, None] - col[None, :]) ** 2
    return D


def gram(spec: KernelSpec, points) -> np.ndarray:
    """n x n Gram matrix; the lower triangle is a mirror of the upper one."""
    try:
        X = as_points(points)
    except InvalidInputError as exc:
        raise InvalidInputError(f"gram: {exc}") from exc
    if X.shape[0] == 0:
        raise InvalidInputError("gram: empty point sequence")
    _check_dimension(spec, X.shape[1])
    if spec.family is KernelFamily.LINEAR:
        F = X @ X.T
    elif spec.family is KernelFamily.GAUSSIAN:
        sigma = _require_bandwidth(spec)
        F = np.exp(-_pairwise_sq_dist(X) / (2.0 * sigma * sigma))
    else:
        x = X[:, 0]
        F = periodic_spline(spec.spline_order, x[:, None] - x[None, :])
    K = np.triu(F)
    K += np.triu(F, 1).T
    return K


def median_bandwidth(points) -> float:
    """Median pairwise Euclidean distance (1.0 if all points coincide)."""
    X = as_points(points)
    if X.shape[0] < 2:
        return 1.0
    med = float(np.median(pdist(X)))
    return med if med > 0 else 1.0


def resolve_bandwidth(spec: KernelSpec, points) -> KernelSpec:
    if spec.family is KernelFamily.GAUSSIAN and spec.bandwidth is None:
        return replace(spec, bandwidth=median_bandwidth(points))
    return spec


def spline_eigenvalue(p, order: int):
    """Population covariance eigenvalue of the spline kernel under Uniform[0, 1].

    Index p >= 1 pairs sine/cosine at frequency ceil(p / 2); p = 0 is the
    constant component (eigenvalue 1, removed by centering).
    """
    p = np.asarray(p)
    freq = np.ceil(p / 2.0)
    with np.errstate(divide="ignore"):
        lam = np.where(p == 0, 1.0, (2.0 * np.pi * np.maximum(freq, 1)) ** (-2.0 * order))
    return float(lam) if lam.ndim == 0 else lam


def spline_spectrum(order: int, n_terms: int) -> np.ndarray:
    """First ``n_terms`` nonconstant eigenvalues lambda_1 >= lambda_2 >= ..."""
    return spline_eigenvalue(np.arange(1, n_terms + 1), order)

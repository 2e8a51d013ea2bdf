"""KFDA and MMD two-sample statistics, plus exact small-instance oracles."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateSpectrumError, InvalidInputError, SingularCovarianceError
from .kernels import KernelSpec, gram, resolve_bandwidth
from .spectrum import (
    GramBundle,
    SpectralSummary,
    TwoSample,
    build_bundle,
    pooled_spectrum,
    regularized_quadratic,
)


class GammaSchedule(str, enum.Enum):
    FIXED = "fixed"
    DECAYING = "decaying"


def decaying_gamma(n: int, scale: float = 1.0, exponent: float = 0.25) -> float:
    """gamma_n = scale * n^(-exponent), with 0 < exponent < 1/2."""
    if not 0 < exponent < 0.5:
        raise InvalidInputError(
            f"decay exponent must lie in (0, 1/2) for the normal limit, got {exponent}"
        )
    if not scale > 0:
        raise InvalidInputError(f"gamma scale must be positive, got {scale}")
    return scale * n ** (-exponent)


@dataclass(frozen=True, eq=False)
class StatisticRequest:
    sample: TwoSample
    spec: KernelSpec
    gamma: float
    schedule: GammaSchedule = GammaSchedule.FIXED
    decay_exponent: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "schedule", GammaSchedule(self.schedule))
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise InvalidInputError(f"gamma must be positive, got {self.gamma}")
        if self.schedule is GammaSchedule.DECAYING:
            a = self.decay_exponent
            if a is None or not 0 < a < 0.5:
                raise InvalidInputError(
                    f"decaying schedule needs an exponent in (0, 1/2), got {a}"
                )


@dataclass(frozen=True)
class TestStatisticValue:
    """Raw Fisher ratio, its studentized version and the normalizers."""

    __test__ = False  # not a pytest class

    raw_quadratic: float
    normalized: float
    d1: float
    d2: float
    spectrum: np.ndarray = field(repr=False, compare=False, default=None)

    def as_dict(self) -> dict:
        return {
            "raw_quadratic": self.raw_quadratic,
            "normalized": self.normalized,
            "d1": self.d1,
            "d2": self.d2,
        }


def normalize(raw: float, summary: SpectralSummary) -> TestStatisticValue:
    if not summary.d2 > 0:
        raise DegenerateSpectrumError(
            "pooled covariance has no positive eigenvalue (d2 = 0); "
            "the kernel is constant on this sample"
        )
    t = (raw - summary.d1) / (math.sqrt(2.0) * summary.d2)
    return TestStatisticValue(raw, t, summary.d1, summary.d2, summary.eigenvalues)


def kfda_from_bundle(bundle: GramBundle, gamma: float, spectrum=None) -> TestStatisticValue:
    if spectrum is None:
        spectrum = pooled_spectrum(bundle)
    summary = SpectralSummary.from_spectrum(spectrum, gamma)
    if summary.eigenvalues.size == 0:
        raise DegenerateSpectrumError(
            "pooled covariance has no positive eigenvalue (d2 = 0); "
            "the kernel is constant on this sample"
        )
    return normalize(regularized_quadratic(bundle, gamma), summary)


def kfda_statistic(req: StatisticRequest) -> TestStatisticValue:
    return kfda_from_bundle(build_bundle(req.sample, req.spec), req.gamma)


def mmd_statistic(bundle: GramBundle) -> float:
    """(n1 n2 / n) ||mu2_hat - mu1_hat||^2 = (n1 n2 / n) m'Km."""
    m = bundle.contrast
    return bundle.n1 * bundle.n2 / bundle.n * float(m @ bundle.K @ m)


def hotelling_oracle(sample: TwoSample) -> float:
    """(n1 n2 / n) delta' S_W^-1 delta in coordinate space (biased covariances)."""
    x1, x2 = sample.sample1, sample.sample2
    n1, n2, n = sample.n1, sample.n2, sample.n
    delta = x2.mean(axis=0) - x1.mean(axis=0)
    c1 = x1 - x1.mean(axis=0)
    c2 = x2 - x2.mean(axis=0)
    S = (c1.T @ c1 + c2.T @ c2) / n
    d = S.shape[0]
    if np.linalg.matrix_rank(S) < d:
        raise SingularCovarianceError(f"pooled covariance is singular (d={d}, n={n})")
    return n1 * n2 / n * float(delta @ np.linalg.solve(S, delta))


class Chi2Identity(NamedTuple):
    lhs: float
    rhs: float
    singular: bool


def population_chi2_identity(
    p1, p2, rho1: float, spec: KernelSpec, support
) -> Chi2Identity:
    """Both sides of ||S_W^(-1/2)(mu2 - mu1)||^2 = (1 - I) / (rho1 rho2 I),
    I = sum p1 p2 / (rho1 p1 + rho2 p2), for distributions on a finite support.

    The left side is computed through the kernel: mean elements and covariance
    operators are expressed in the coordinates of a Cholesky feature map of the
    support Gram matrix, and the zero-gamma limit is taken with the
    pseudo-inverse on the span of the support.
    """
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != p2.shape or p1.ndim != 1:
        raise InvalidInputError("p1 and p2 must be vectors over the same support")
    if np.any(p1 < 0) or np.any(p2 < 0):
        raise InvalidInputError("probabilities must be nonnegative")
    if not (np.isclose(p1.sum(), 1.0) and np.isclose(p2.sum(), 1.0)):
        raise InvalidInputError("probabilities must sum to one")
    if not 0 < rho1 < 1:
        raise InvalidInputError(f"rho1 must lie in (0, 1), got {rho1}")
    if p1.size > 50:
        raise InvalidInputError("support larger than 50 points")
    rho2 = 1.0 - rho1
    pbar = rho1 * p1 + rho2 * p2
    live = pbar > 0
    overlap = float(np.sum(p1[live] * p2[live] / pbar[live]))
    if overlap == 0.0:
        return Chi2Identity(math.inf, math.inf, True)
    rhs = (1.0 - overlap) / (rho1 * rho2 * overlap)

    spec = resolve_bandwidth(spec, support)
    K = gram(spec, support)
    if K.shape[0] != p1.size:
        raise InvalidInputError("support size does not match the probability vectors")
    try:
        L = np.linalg.cholesky(K)
    except np.linalg.LinAlgError as exc:
        raise InvalidInputError("kernel is not strictly positive definite on the support") from exc
    # feature of support point i is row i of L, so means are L' p and
    # covariances L' (diag p - p p') L
    cov = lambda p: L.T @ (np.diag(p) - np.outer(p, p)) @ L  # noqa: E731
    S_w = rho1 * cov(p1) + rho2 * cov(p2)
    delta = L.T @ (p2 - p1)
    vals, vecs = np.linalg.eigh(0.5 * (S_w + S_w.T))
    keep = vals > 1e-12 * max(vals[-1], 1e-300)
    proj = vecs[:, keep].T @ delta
    lhs = float(np.sum(proj**2 / vals[keep]))
    return Chi2Identity(lhs, rhs, False)

"""Null calibration: weighted chi-square mixture (fixed gamma), standard
normal (decaying gamma), and resampling (permutation, bootstrap, block
bootstrap).

All Monte Carlo p-values are add-one smoothed, (1 + #{draw >= t}) / (R + 1),
and all empirical quantiles are the inverse-ECDF (type 1) quantile.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy import special

from ._rng import ordered_map, substream, worker_count
from .errors import DegenerateSpectrumError, InvalidInputError
from .kernels import KernelSpec
from .spectrum import GramBundle, TwoSample, build_bundle
from .statistics import kfda_from_bundle, mmd_statistic

MIN_MIXTURE_REPLICATES = 10_000
MIN_RESAMPLE_REPLICATES = 200
_CHUNK_ENTRIES = 2_000_000


class CalibrationMethod(str, enum.Enum):
    MIXTURE = "mixture"
    NORMAL = "normal"
    PERMUTATION = "permutation"
    BOOTSTRAP = "bootstrap"
    BLOCK_BOOTSTRAP = "block-bootstrap"

    @property
    def is_resampling(self) -> bool:
        return self in (
            CalibrationMethod.PERMUTATION,
            CalibrationMethod.BOOTSTRAP,
            CalibrationMethod.BLOCK_BOOTSTRAP,
        )


@dataclass(frozen=True)
class CalibrationResult:
    method: CalibrationMethod
    alpha: float
    critical_value: float
    p_value: float
    mc_replicates: int
    seed: int

    def rejects(self) -> bool:
        return self.p_value <= self.alpha

    def as_dict(self) -> dict:
        return {
            "method": self.method.value,
            "alpha": self.alpha,
            "critical_value": self.critical_value,
            "p_value": self.p_value,
            "mc_replicates": self.mc_replicates,
            "seed": self.seed,
        }


def _check_alpha(alpha: float) -> None:
    if not 0 < alpha < 1:
        raise InvalidInputError(f"alpha must lie in (0, 1), got {alpha}")


# --------------------------------------------------------------------------
# weighted chi-square mixtures


@dataclass(frozen=True, eq=False)
class MixtureSpec:
    """Null law 2^(-1/2) d2^-1 sum_p w_p (Z_p^2 - 1), w_p = lambda_p / (lambda_p + gamma)."""

    weights: np.ndarray
    d2: float

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.size and (np.any(w <= 0) or np.any(w > 1) or np.any(np.diff(w) > 0)):
            raise InvalidInputError("mixture weights must lie in (0, 1] and be nonincreasing")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_spectrum(cls, spectrum, gamma: float) -> "MixtureSpec":
        lam = np.sort(np.asarray(spectrum, dtype=float))[::-1]
        lam = lam[lam > 0]
        w = lam / (lam + gamma)
        return cls(w, float(np.sqrt(np.sum(w**2))))

    @property
    def d1(self) -> float:
        return float(np.sum(self.weights))


def chi2_combinations(weights, replicates: int, rng: np.random.Generator) -> np.ndarray:
    """Draws of sum_p W[g, p] Z_p^2 sharing the same Z across rows g.

    ``weights`` may be one vector (returns shape (R,)) or a (G, P) matrix
    (returns shape (G, R)).
    """
    W = np.atleast_2d(np.asarray(weights, dtype=float))
    P = W.shape[1]
    out = np.empty((W.shape[0], replicates))
    chunk = max(1, _CHUNK_ENTRIES // max(P, 1))
    for start in range(0, replicates, chunk):
        rows = min(chunk, replicates - start)
        z2 = rng.standard_normal((rows, P)) ** 2
        out[:, start : start + rows] = W @ z2.T
    return out[0] if np.ndim(weights) == 1 else out


def mixture_draws(mix: MixtureSpec, replicates: int, seed: int) -> np.ndarray:
    if mix.weights.size == 0 or not mix.d2 > 0:
        raise DegenerateSpectrumError("mixture has no positive weight")
    raw = chi2_combinations(mix.weights, replicates, substream(seed, "mixture"))
    return (raw - mix.d1) / (math.sqrt(2.0) * mix.d2)


def empirical_quantile(draws, alpha: float) -> float:
    """Type-1 (1 - alpha) quantile: the ceil(R (1 - alpha))-th order statistic."""
    _check_alpha(alpha)
    return float(np.quantile(np.asarray(draws), 1.0 - alpha, method="inverted_cdf"))


def empirical_p_value(statistic: float, draws) -> float:
    draws = np.asarray(draws)
    return (1.0 + np.count_nonzero(draws >= statistic)) / (draws.size + 1.0)


def mixture_quantile(
    mix: MixtureSpec, alpha: float, replicates: int = 20_000, seed: int = 0
) -> float:
    _check_alpha(alpha)
    if replicates < MIN_MIXTURE_REPLICATES:
        raise InvalidInputError(
            f"mixture calibration needs >= {MIN_MIXTURE_REPLICATES} draws, got {replicates}"
        )
    return empirical_quantile(mixture_draws(mix, replicates, seed), alpha)


def calibrate_mixture(
    statistic: float,
    mix: MixtureSpec,
    alpha: float,
    replicates: int = 20_000,
    seed: int = 0,
) -> CalibrationResult:
    _check_alpha(alpha)
    if replicates < MIN_MIXTURE_REPLICATES:
        raise InvalidInputError(
            f"mixture calibration needs >= {MIN_MIXTURE_REPLICATES} draws, got {replicates}"
        )
    draws = mixture_draws(mix, replicates, seed)
    return CalibrationResult(
        CalibrationMethod.MIXTURE,
        alpha,
        empirical_quantile(draws, alpha),
        empirical_p_value(statistic, draws),
        replicates,
        seed,
    )


# --------------------------------------------------------------------------
# standard normal


def normal_quantile(alpha: float) -> float:
    """z_{1-alpha}."""
    _check_alpha(alpha)
    return float(-special.ndtri(alpha))


def normal_cdf(x):
    return special.ndtr(x)


def normal_p_value(statistic: float) -> float:
    return float(special.ndtr(-statistic))


def calibrate_normal(statistic: float, alpha: float, seed: int = 0) -> CalibrationResult:
    return CalibrationResult(
        CalibrationMethod.NORMAL,
        alpha,
        normal_quantile(alpha),
        normal_p_value(statistic),
        0,
        seed,
    )


# --------------------------------------------------------------------------
# resampling


def default_block_length(n1: int, n2: int) -> int:
    return max(1, math.ceil(min(n1, n2) ** (1.0 / 3.0)))


def block_bootstrap_indices(
    n1: int, n2: int, block_length: int, rng: np.random.Generator
) -> np.ndarray:
    """Pooled-null pseudo-sample built from contiguous blocks.

    Each original sequence is cut into non-overlapping blocks of
    ``block_length`` consecutive indices (no wrap-around; a short tail is not
    used as a block).  Blocks from both sequences form one pool, and each
    pseudo-sample is the concatenation of blocks drawn with replacement,
    truncated to the original size.
    """
    if not 1 <= block_length <= min(n1, n2):
        raise InvalidInputError(
            f"block length must lie in [1, min(n1, n2) = {min(n1, n2)}], got {block_length}"
        )
    starts = np.concatenate(
        [
            np.arange(0, n1 - block_length + 1, block_length),
            n1 + np.arange(0, n2 - block_length + 1, block_length),
        ]
    )
    offsets = np.arange(block_length)
    parts = []
    for size in (n1, n2):
        count = -(-size // block_length)
        chosen = rng.choice(starts, size=count, replace=True)
        parts.append((chosen[:, None] + offsets).ravel()[:size])
    return np.concatenate(parts)


def _replicate_index(method, n1, n2, block_length, rng) -> np.ndarray:
    n = n1 + n2
    if method is CalibrationMethod.PERMUTATION:
        return rng.permutation(n)
    if method is CalibrationMethod.BOOTSTRAP:
        return rng.integers(0, n, size=n)
    return block_bootstrap_indices(n1, n2, block_length, rng)


def _evaluate(bundle: GramBundle, gamma: float, statistic: str) -> float:
    if statistic == "mmd":
        return mmd_statistic(bundle)
    return kfda_from_bundle(bundle, gamma).normalized


def _replicate_batch(bundle, gamma, statistic, method, block_length, seed, indices):
    out = []
    for i in indices:
        rng = substream(seed, "resample", method.value, i)
        idx = _replicate_index(method, bundle.n1, bundle.n2, block_length, rng)
        try:
            out.append(_evaluate(bundle.permuted(idx), gamma, statistic))
        except DegenerateSpectrumError:
            # resampled points all coincide within a sample; never exceeds the observed value
            out.append(-math.inf)
    return out


def resample_statistics(
    bundle: GramBundle,
    gamma: float,
    method: CalibrationMethod,
    replicates: int,
    seed: int,
    block_length: int | None = None,
    statistic: str = "kfda",
) -> np.ndarray:
    method = CalibrationMethod(method)
    if not method.is_resampling:
        raise InvalidInputError(f"{method.value} is not a resampling method")
    if replicates < MIN_RESAMPLE_REPLICATES:
        raise InvalidInputError(
            f"resampling needs >= {MIN_RESAMPLE_REPLICATES} replicates, got {replicates}"
        )
    if method is CalibrationMethod.BLOCK_BOOTSTRAP:
        if block_length is None:
            block_length = default_block_length(bundle.n1, bundle.n2)
        if not 1 <= block_length <= min(bundle.n1, bundle.n2):
            raise InvalidInputError(
                f"block length {block_length} exceeds the shorter sequence "
                f"({min(bundle.n1, bundle.n2)})"
            )
    workers = worker_count()
    batches = np.array_split(np.arange(replicates), max(1, workers))
    fn = partial(_replicate_batch, bundle, gamma, statistic, method, block_length, seed)
    results = ordered_map(fn, batches, workers)
    return np.array([x for batch in results for x in batch])


def resample_from_bundle(
    bundle: GramBundle,
    observed: float,
    gamma: float,
    method: CalibrationMethod,
    replicates: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
    block_length: int | None = None,
    statistic: str = "kfda",
) -> CalibrationResult:
    _check_alpha(alpha)
    method = CalibrationMethod(method)
    draws = resample_statistics(bundle, gamma, method, replicates, seed, block_length, statistic)
    return CalibrationResult(
        method,
        alpha,
        empirical_quantile(draws, alpha),
        empirical_p_value(observed, draws),
        replicates,
        seed,
    )


def resample_critical_value(
    sample: TwoSample,
    spec: KernelSpec,
    gamma: float,
    method: CalibrationMethod,
    block_length: int | None = None,
    replicates: int = 1000,
    alpha: float = 0.05,
    seed: int = 0,
    statistic: str = "kfda",
) -> CalibrationResult:
    bundle = build_bundle(sample, spec)
    observed = _evaluate(bundle, gamma, statistic)
    return resample_from_bundle(
        bundle, observed, gamma, method, replicates, alpha, seed, block_length, statistic
    )


def calibrate(
    bundle: GramBundle,
    value,
    gamma: float,
    method: CalibrationMethod,
    alpha: float = 0.05,
    replicates: int | None = None,
    seed: int = 0,
    block_length: int | None = None,
) -> CalibrationResult:
    """Calibrate an observed KFDA statistic with any supported method."""
    method = CalibrationMethod(method)
    _check_alpha(alpha)
    if method is CalibrationMethod.NORMAL:
        return calibrate_normal(value.normalized, alpha, seed)
    if method is CalibrationMethod.MIXTURE:
        mix = MixtureSpec.from_spectrum(value.spectrum, gamma)
        return calibrate_mixture(value.normalized, mix, alpha, replicates or 20_000, seed)
    return resample_from_bundle(
        bundle, value.normalized, gamma, method, replicates or 1000, alpha, seed, block_length
    )

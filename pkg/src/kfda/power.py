"""Fourier-contamination alternatives on [0, 1] and power studies.

Sample 1 is Uniform[0, 1]; sample 2 has density 1 + eta * c_q(t) with the
orthonormal trigonometric basis

    c_0 = 1,  c_{2l-1}(t) = sqrt(2) sin(2 pi l t),  c_{2l}(t) = sqrt(2) cos(2 pi l t).

With the order-m periodic spline kernel, c_p is an eigenfunction of the
uniform covariance operator with eigenvalue (2 pi ceil(p/2))^(-2m), and the
mean-element difference projects on the q-th unit eigenvector as
eta * lambda_q^(1/2).  Writing the raw statistic as
sum_p (lambda_p + gamma)^-1 (S_p + sqrt(n1 n2 / n) <delta, e_p>)^2 with
S_p ~ N(0, lambda_p), its limit is sum_p w_p (Z_p + a_p)^2 with

    a_q = sqrt(n1 n2 / n) * <delta, e_q> / lambda_q^(1/2) = sqrt(n1 n2 / n) * eta,

which does not depend on gamma; gamma enters only through the weights w_p.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import partial
from typing import Callable, Sequence

import numpy as np

from ._rng import ordered_map, substream
from .calibration import (
    CalibrationMethod,
    MixtureSpec,
    calibrate,
    chi2_combinations,
    mixture_quantile,
    normal_cdf,
    normal_quantile,
)
from .errors import InvalidAmplitudeError, InvalidInputError
from .kernels import KernelFamily, KernelSpec, spline_spectrum
from .spectrum import GammaSweep, TwoSample, build_bundle
from .statistics import kfda_from_bundle, mmd_statistic, normalize

SQRT2 = math.sqrt(2.0)


def fourier_basis(p: int, t):
    """c_p(t) for p >= 0 (vectorized over t)."""
    if p < 0 or int(p) != p:
        raise InvalidInputError(f"basis index must be a nonnegative integer, got {p}")
    t = np.asarray(t, dtype=float)
    if p == 0:
        out = np.ones_like(t)
    else:
        freq = (p + 1) // 2
        trig = np.sin if p % 2 else np.cos
        out = SQRT2 * trig(2.0 * np.pi * freq * t)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# alternative models


class AlternativeKind(str, enum.Enum):
    DIRECTIONAL = "directional"
    NON_DIRECTIONAL = "nondirectional"
    FIXED = "fixed"


def _check_eta(eta: float) -> None:
    if not (math.isfinite(eta) and eta >= 0):
        raise InvalidAmplitudeError(f"contamination amplitude must be >= 0, got {eta}")
    if eta * SQRT2 >= 1.0:
        raise InvalidAmplitudeError(
            f"eta * sqrt(2) = {eta * SQRT2:.4g} >= 1 makes the density 1 + eta c_q negative"
        )


@dataclass(frozen=True)
class AlternativeModel:
    """One-component Fourier contamination of the uniform density.

    * ``FIXED``: eta and q do not move with n.
    * ``DIRECTIONAL``: eta_n = amplitude / sqrt(n), q fixed.
    * ``NON_DIRECTIONAL``: q_n = q_rule(n), eta_n = eta_rule(n).
    """

    kind: AlternativeKind
    q: int = 1
    eta: float = 0.0
    amplitude: float = 0.0
    q_rule: Callable[[int], int] | None = None
    eta_rule: Callable[[int], float] | None = None

    def __post_init__(self):
        kind = AlternativeKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is AlternativeKind.NON_DIRECTIONAL:
            if self.q_rule is None or self.eta_rule is None:
                raise InvalidInputError("non-directional model needs q_rule and eta_rule")
        elif self.q < 1 or int(self.q) != self.q:
            raise InvalidInputError(f"q must be an integer >= 1, got {self.q}")
        if kind is AlternativeKind.FIXED:
            _check_eta(self.eta)
        if kind is AlternativeKind.DIRECTIONAL and not self.amplitude >= 0:
            raise InvalidAmplitudeError(f"amplitude must be >= 0, got {self.amplitude}")

    @classmethod
    def fixed(cls, q: int, eta: float) -> "AlternativeModel":
        return cls(AlternativeKind.FIXED, q=q, eta=eta)

    @classmethod
    def directional(cls, q: int, amplitude: float) -> "AlternativeModel":
        return cls(AlternativeKind.DIRECTIONAL, q=q, amplitude=amplitude)

    @classmethod
    def non_directional(cls, q_rule, eta_rule) -> "AlternativeModel":
        return cls(AlternativeKind.NON_DIRECTIONAL, q_rule=q_rule, eta_rule=eta_rule)

    def contamination(self, n: int) -> tuple[int, float]:
        """(q_n, eta_n) at total sample size n, validated."""
        if self.kind is AlternativeKind.FIXED:
            q, eta = self.q, self.eta
        elif self.kind is AlternativeKind.DIRECTIONAL:
            q, eta = self.q, self.amplitude / math.sqrt(n)
        else:
            q, eta = int(self.q_rule(n)), float(self.eta_rule(n))
            if q < 1:
                raise InvalidInputError(f"q_rule({n}) = {q} must be >= 1")
        _check_eta(eta)
        return q, eta


def sample_density(q: int, eta: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. draws from 1 + eta c_q(t) on [0, 1) by rejection from a uniform envelope."""
    _check_eta(eta)
    if eta == 0.0:
        return rng.random(size)
    height = 1.0 + eta * SQRT2
    out = np.empty(size)
    filled = 0
    while filled < size:
        need = size - filled
        batch = int(need * height * 1.1) + 16
        t = rng.random(batch)
        u = rng.random(batch) * height
        accepted = t[u <= 1.0 + eta * fourier_basis(q, t)]
        take = min(need, accepted.size)
        out[filled : filled + take] = accepted[:take]
        filled += take
    return out


def sample_alternative(
    model: AlternativeModel, n2: int, rng: np.random.Generator, n: int | None = None
) -> np.ndarray:
    """n2 draws of the contaminated sample; ``n`` indexes the local sequence (default n2)."""
    q, eta = model.contamination(n2 if n is None else n)
    return sample_density(q, eta, n2, rng)


# --------------------------------------------------------------------------
# limiting power formulas


def fisher_shift(q: int, eta: float, n1: int, n2: int, size: int | None = None) -> np.ndarray:
    """Shift vector a_p, p = 1..size, for the contamination eta c_q."""
    if q < 1:
        raise InvalidInputError(f"q must be >= 1, got {q}")
    a = np.zeros(max(q, size or q))
    a[q - 1] = math.sqrt(n1 * n2 / (n1 + n2)) * eta
    return a


def directional_shift(q: int, A: float, n1: int, n2: int, size: int | None = None) -> np.ndarray:
    """Shift of the directional alternative 1 + A n^(-1/2) c_q: a_q = A sqrt(n1 n2) / n."""
    return fisher_shift(q, A / math.sqrt(n1 + n2), n1, n2, size)


def spline_mixture(order: int, gamma: float, rel_cut: float = 1e-5, max_terms: int = 8000):
    """Population null mixture of the spline kernel under Uniform[0, 1].

    Terms are kept while lambda_p / (lambda_p + gamma) >= rel_cut * first weight.
    """
    lam = spline_spectrum(order, max_terms)
    w = lam / (lam + gamma)
    keep = w >= rel_cut * w[0]
    return MixtureSpec.from_spectrum(lam[keep], gamma)


def shifted_mixture_draws(weights, shift, replicates: int, rng) -> np.ndarray:
    """Draws of sum_p w_p (Z_p + a_p)^2."""
    w = np.asarray(weights, dtype=float)
    a = np.zeros_like(w)
    s = np.asarray(shift, dtype=float)[: w.size]
    a[: s.size] = s
    out = np.empty(replicates)
    chunk = max(1, 2_000_000 // max(w.size, 1))
    for start in range(0, replicates, chunk):
        rows = min(chunk, replicates - start)
        y = rng.standard_normal((rows, w.size)) + a
        out[start : start + rows] = (y * y) @ w
    return out


def shifted_mixture_mean(weights, shift) -> float:
    """E sum_p w_p (Z_p + a_p)^2 = d1 + sum_p w_p a_p^2."""
    w = np.asarray(weights, dtype=float)
    a = np.zeros_like(w)
    s = np.asarray(shift, dtype=float)[: w.size]
    a[: s.size] = s
    return float(np.sum(w) + np.sum(w * a * a))


def fixed_gamma_theoretical_power(
    shift, mix: MixtureSpec, alpha: float, replicates: int = 20_000, seed: int = 0
) -> float:
    """P(shifted normalized mixture > null (1 - alpha) quantile), by Monte Carlo."""
    if np.count_nonzero(np.asarray(shift)[mix.weights.size :]):
        raise InvalidInputError("shift has nonzero entries beyond the mixture length")
    crit = mixture_quantile(mix, alpha, replicates, seed)
    raw = shifted_mixture_draws(mix.weights, shift, replicates, substream(seed, "shifted"))
    alt = (raw - mix.d1) / (SQRT2 * mix.d2)
    return float(np.mean(alt > crit))


def mmd_theoretical_power(
    shift, spectrum, alpha: float, replicates: int = 20_000, seed: int = 0
) -> float:
    """Limiting power of the MMD statistic, law sum_p lambda_p (Z_p + a_p)^2,
    with the same shift vector as the Fisher statistic."""
    lam = np.sort(np.asarray(spectrum, dtype=float))[::-1]
    w = lam / lam[0]
    mix = MixtureSpec(w, float(np.sqrt(np.sum(w * w))))
    return fixed_gamma_theoretical_power(shift, mix, alpha, replicates, seed)


def decaying_gamma_theoretical_power(delta: float, rho1: float, alpha: float) -> float:
    """1 - Phi(z_{1-alpha} - rho1 rho2 Delta)."""
    if delta < 0:
        raise InvalidInputError(f"delta must be >= 0, got {delta}")
    if not 0 < rho1 < 1:
        raise InvalidInputError(f"rho1 must lie in (0, 1), got {rho1}")
    return float(1.0 - normal_cdf(normal_quantile(alpha) - rho1 * (1.0 - rho1) * delta))


# --------------------------------------------------------------------------
# empirical power


@dataclass(frozen=True)
class PowerPoint:
    gamma: float
    q: int
    n: int
    theoretical_power: float
    empirical_power: float
    replications: int
    empirical_power_mmd: float = math.nan

    @property
    def se(self) -> float:
        p = self.empirical_power
        return math.sqrt(p * (1.0 - p) / self.replications)


def _reject_mixture(stats_by_gamma, spectrum, gammas, mmd, alpha, mc_replicates, rng):
    """Mixture-calibrated decisions for every gamma (and MMD) from shared draws."""
    lam = spectrum
    W = np.vstack([lam / (lam + g) for g in gammas] + [lam])
    raw = chi2_combinations(W, mc_replicates, rng)
    decisions = []
    for i, t in enumerate(stats_by_gamma):
        w = W[i]
        d1, d2 = w.sum(), math.sqrt(np.sum(w * w))
        draws = (raw[i] - d1) / (SQRT2 * d2)
        decisions.append(_p_le(t, draws, alpha))
    mmd_reject = _p_le(mmd, raw[-1], alpha)
    return np.array(decisions), mmd_reject


def _p_le(t, draws, alpha):
    return (1.0 + np.count_nonzero(draws >= t)) / (draws.size + 1.0) <= alpha


def _power_replicate(job, r):
    model, spec, gammas, n1, n2, alpha, method, mc_replicates, seed = job
    rng = substream(seed, "power-data", r)
    x1 = rng.random(n1)
    x2 = sample_alternative(model, n2, rng, n=n1 + n2)
    bundle = build_bundle(TwoSample.from_samples(x1, x2), spec)
    sweep = GammaSweep(bundle)
    values = [normalize(sweep.quadratic(g), sweep.summary(g)) for g in gammas]
    mmd = mmd_statistic(bundle)
    mc_rng = substream(seed, "power-mc", r)
    if method is CalibrationMethod.MIXTURE:
        return _reject_mixture(
            [v.normalized for v in values], sweep.spectrum, gammas, mmd, alpha,
            mc_replicates, mc_rng,
        )
    # MMD is always mixture-calibrated; it has no gamma
    _, mmd_reject = _reject_mixture([], sweep.spectrum, [], mmd, alpha, mc_replicates, mc_rng)
    decisions = []
    for g, v in zip(gammas, values):
        res = calibrate(bundle, v, g, method, alpha, None, int(substream(seed, "power-cal", r).integers(2**63)))
        decisions.append(res.rejects())
    return np.array(decisions), mmd_reject


def empirical_power_curve(
    model: AlternativeModel,
    spec: KernelSpec,
    gammas: Sequence[float],
    n1: int,
    n2: int,
    alpha: float = 0.05,
    replications: int = 200,
    calibration: CalibrationMethod = CalibrationMethod.MIXTURE,
    seed: int = 0,
    mc_replicates: int = 10_000,
    workers: int | None = None,
) -> list[PowerPoint]:
    """Rejection rates of KFDA (per gamma) and MMD on simulated alternatives.

    The theoretical column is the fixed-gamma limiting power when the kernel
    is the periodic spline (NaN otherwise).
    """
    if replications < 100:
        raise InvalidInputError(f"need >= 100 replications, got {replications}")
    gammas = [float(g) for g in gammas]
    method = CalibrationMethod(calibration)
    job = (model, spec, gammas, n1, n2, alpha, method, mc_replicates, seed)
    results = ordered_map(partial(_power_replicate, job), range(replications), workers)
    kfda = np.mean([r[0] for r in results], axis=0)
    mmd = float(np.mean([r[1] for r in results]))
    n = n1 + n2
    q, eta = model.contamination(n)
    points = []
    for g, p in zip(gammas, kfda):
        theo = math.nan
        if spec.family is KernelFamily.PERIODIC_SPLINE:
            mix = spline_mixture(spec.spline_order, g)
            if q <= mix.weights.size:
                shift = fisher_shift(q, eta, n1, n2)
                theo = fixed_gamma_theoretical_power(
                    shift, mix, alpha, max(mc_replicates, 10_000), seed
                )
        points.append(PowerPoint(g, q, n, theo, float(p), replications, mmd))
    return points


# --------------------------------------------------------------------------
# ROC harness


Generator = Callable[[int, int, np.random.Generator], TwoSample]


def uniform_null(n1: int, n2: int, rng) -> TwoSample:
    return TwoSample.from_samples(rng.random(n1), rng.random(n2))


def gaussian_null(n1: int, n2: int, rng) -> TwoSample:
    return TwoSample.from_samples(rng.standard_normal(n1), rng.standard_normal(n2))


@dataclass(frozen=True)
class MixtureGenerator:
    """Two-component Gaussian mixture pair; picklable for worker processes."""

    shift: float = 0.5
    dim: int = 2
    weight: float = 0.3
    alternative: bool = False

    def _draw(self, n, offset, rng):
        comp = rng.random(n) < self.weight
        x = rng.standard_normal((n, self.dim))
        x[comp] += 2.0 + offset
        return x

    def __call__(self, n1, n2, rng) -> TwoSample:
        offset = self.shift if self.alternative else 0.0
        return TwoSample.from_samples(self._draw(n1, 0.0, rng), self._draw(n2, offset, rng))


def gaussian_mixture_scenario(shift: float = 0.5, dim: int = 2, weight: float = 0.3):
    """Synthetic stand-in for a same/different-source task.

    Both samples come from a two-component Gaussian mixture in ``dim``
    dimensions; under the alternative the second sample's minority component
    is displaced by ``shift`` along every axis.
    """
    return (
        MixtureGenerator(shift, dim, weight, False),
        MixtureGenerator(shift, dim, weight, True),
    )


def _roc_replicate(job, item):
    gen, spec, gamma, n1, n2, method, mc_replicates, seed = job
    label, r = item
    rng = substream(seed, "roc", label, r)
    sample = gen(n1, n2, rng)
    bundle = build_bundle(sample, spec)
    value = kfda_from_bundle(bundle, gamma)
    cal_seed = int(substream(seed, "roc-cal", label, r).integers(2**63))
    res = calibrate(bundle, value, gamma, method, 0.5, mc_replicates, cal_seed)
    return res.p_value


def roc_curve(
    scenario: tuple[Generator, Generator],
    spec: KernelSpec,
    gamma: float,
    n1: int,
    n2: int,
    alpha_grid: Sequence[float],
    replications: int = 200,
    seed: int = 0,
    calibration: CalibrationMethod = CalibrationMethod.MIXTURE,
    mc_replicates: int | None = None,
    workers: int | None = None,
) -> list[tuple[float, float, float]]:
    """(alpha, false positive rate, true positive rate) per alpha; raw MC rates."""
    grid = np.asarray(alpha_grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0) or grid[0] <= 0 or grid[-1] >= 1:
        raise InvalidInputError("alpha grid must be strictly increasing inside (0, 1)")
    method = CalibrationMethod(calibration)
    pvals = {}
    for label, gen in (("h0", scenario[0]), ("ha", scenario[1])):
        job = (gen, spec, gamma, n1, n2, method, mc_replicates, seed)
        items = [(label, r) for r in range(replications)]
        pvals[label] = np.array(ordered_map(partial(_roc_replicate, job), items, workers))
    return [
        (float(a), float(np.mean(pvals["h0"] <= a)), float(np.mean(pvals["ha"] <= a)))
        for a in grid
    ]

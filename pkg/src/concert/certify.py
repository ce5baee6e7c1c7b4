"""Sampled contraction-rate and noise-energy certificates over state regions.

Rates are suprema of local quantities: the discrete one-step squared gain
lambda_max(F.T F) of the generalized Jacobian, and for flows the largest
eigenvalue of the symmetrized factored drift Jacobian (reported negated, so
positive values mean contraction).  Noise energies are suprema of the injected
trace tr(sigma^T M sigma Q) (discrete; Q is the draw covariance) and
tr(sigma^T M sigma) (per unit time, continuous).  Suprema over a region are
estimated on a deterministic low-discrepancy sample, so a certificate built
from a region is evidence, not proof: is_global_claim stays false unless the
rate was supplied analytically.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .statespace import (ContinuousSDESystem, DimensionMismatch, DiscreteMapSystem,
                         MetricSpec)
from .geometry import SingularFactor, numerical_jacobian

_COND_LIMIT = 1e12


@dataclass(frozen=True)
class SamplingRegion:
    """Deterministic sample source over a box, a ball, or an explicit point list.

    The same region always yields the same samples (scrambled Halton sequence
    keyed by `seed`); ball regions prepend their own center so suprema that
    peak there are found exactly.
    """

    kind: str  # "box" | "ball" | "points"
    dimension: int
    sample_count: int
    seed: int = 0
    lows: np.ndarray | None = None
    highs: np.ndarray | None = None
    center: np.ndarray | None = None
    radius: float | None = None
    point_list: np.ndarray | None = None

    @classmethod
    def box(cls, lows, highs, sample_count: int, seed: int = 0) -> "SamplingRegion":
        lows = np.atleast_1d(np.asarray(lows, dtype=float))
        highs = np.atleast_1d(np.asarray(highs, dtype=float))
        if lows.shape != highs.shape or lows.ndim != 1:
            raise DimensionMismatch(f"bounds must share shape (n,), got {lows.shape}, {highs.shape}")
        if np.any(lows >= highs):
            raise ValueError("every low bound must be strictly below its high bound")
        if sample_count < 1:
            raise ValueError(f"sample_count must be >= 1, got {sample_count}")
        return cls(kind="box", dimension=lows.size, sample_count=sample_count,
                   seed=seed, lows=lows, highs=highs)

    @classmethod
    def ball(cls, center, radius: float, sample_count: int, seed: int = 0) -> "SamplingRegion":
        center = np.atleast_1d(np.asarray(center, dtype=float))
        if not (radius > 0):
            raise ValueError(f"radius must be positive, got {radius}")
        if sample_count < 1:
            raise ValueError(f"sample_count must be >= 1, got {sample_count}")
        return cls(kind="ball", dimension=center.size, sample_count=sample_count,
                   seed=seed, center=center, radius=float(radius))

    @classmethod
    def points(cls, point_list) -> "SamplingRegion":
        pts = np.asarray(point_list, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise DimensionMismatch(f"point list must have shape (m, n), got {pts.shape}")
        return cls(kind="points", dimension=pts.shape[1], sample_count=pts.shape[0],
                   point_list=pts)

    def samples(self) -> np.ndarray:
        """Sample array of shape (m, dimension); identical on every call."""
        if self.kind == "points":
            return self.point_list.copy()
        if self.kind == "box":
            unit = qmc.Halton(d=self.dimension, scramble=True, seed=self.seed) \
                .random(self.sample_count)
            return self.lows + unit * (self.highs - self.lows)
        # Ball: inverse-normal directions plus a radial u^(1/n) transform keeps
        # the low-discrepancy stream deterministic; the exact center leads.
        n = self.dimension
        unit = qmc.Halton(d=n + 1, scramble=True, seed=self.seed).random(self.sample_count)
        unit = np.clip(unit, 1e-12, 1.0 - 1e-12)
        z = ndtri(unit[:, :n])
        norms = np.maximum(np.linalg.norm(z, axis=1, keepdims=True), np.finfo(float).tiny)
        radii = self.radius * unit[:, n] ** (1.0 / n)
        return np.vstack([self.center, self.center + (z / norms) * radii[:, None]])

    def to_json_dict(self) -> dict:
        out = {"kind": self.kind, "dimension": self.dimension,
               "sample_count": self.sample_count}
        if self.kind == "box":
            out.update(seed=self.seed, lows=self.lows.tolist(), highs=self.highs.tolist())
        elif self.kind == "ball":
            out.update(seed=self.seed, center=self.center.tolist(), radius=self.radius)
        return out


@dataclass(frozen=True)
class SupEstimate:
    """A sampled supremum and the sample attaining it."""

    value: float
    argmax: np.ndarray

    def __float__(self) -> float:
        return self.value


def _metric_factor(metric, dimension: int, t: float = 0.0, side: str = "post") -> np.ndarray:
    if metric is None:
        metric = MetricSpec.identity(dimension)
    if not isinstance(metric, MetricSpec):
        metric = MetricSpec.constant(np.asarray(metric, dtype=float))
    if metric.dimension != dimension:
        raise DimensionMismatch(
            f"metric dimension {metric.dimension} does not match system dimension {dimension}")
    return metric.factor(t, side)


def _metric_value(metric, dimension: int, t: float = 0.0, side: str = "post") -> np.ndarray:
    if metric is None:
        return np.eye(dimension)
    if isinstance(metric, MetricSpec):
        if metric.dimension != dimension:
            raise DimensionMismatch(
                f"metric dimension {metric.dimension} does not match system dimension {dimension}")
        return metric.value(t, side)
    m = np.asarray(metric, dtype=float)
    if m.shape != (dimension, dimension):
        raise DimensionMismatch(f"metric shape {m.shape} does not match dimension {dimension}")
    return m


def _checked_inverse(theta: np.ndarray) -> np.ndarray:
    if np.linalg.cond(theta) > _COND_LIMIT:
        raise SingularFactor("input-side factor is singular to working precision")
    return np.linalg.inv(theta)


def _jacobian_fn(system, index) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(system, DiscreteMapSystem):
        if system.jacobian is not None:
            return lambda x: np.asarray(system.jacobian(x, index), dtype=float)
        return lambda x: numerical_jacobian(lambda y: system.map(y, index), x)
    if system.jacobian is not None:
        return lambda x: np.asarray(system.jacobian(x, index), dtype=float)
    return lambda x: numerical_jacobian(lambda y: system.drift(y, index), x)


def estimate_discrete_rate(system: DiscreteMapSystem, metric_pair, region: SamplingRegion,
                           k: int = 0) -> SupEstimate:
    """Sampled sup of the one-step squared gain of a discrete map at step k.

    metric_pair is (metric at step k, metric at step k+1); either entry may be
    a matrix, a MetricSpec, or None for identity.  Returns the largest
    lambda_max(F.T F) over the region's samples with the attaining sample.
    """
    metric_in, metric_out = metric_pair if metric_pair is not None else (None, None)
    theta_in = _metric_factor(metric_in, system.dimension)
    theta_out = _metric_factor(metric_out, system.dimension)
    theta_in_inv = _checked_inverse(theta_in)
    jac = _jacobian_fn(system, k)
    best = -np.inf
    best_at = None
    for x in region.samples():
        gen = theta_out @ jac(x) @ theta_in_inv
        gain = float(np.linalg.eigvalsh(gen.T @ gen).max())
        if gain > best:
            best, best_at = gain, x
    return SupEstimate(value=best, argmax=np.asarray(best_at, dtype=float))


def estimate_continuous_rate(system: ContinuousSDESystem, metric, region: SamplingRegion,
                             t: float = 0.0) -> SupEstimate:
    """Sampled contraction rate of a flow: minus the sup over the region of
    lambda_max(((dTheta/dt + Theta J) Theta^{-1})_sym); positive values mean
    the flow contracts the metric at rate at least the returned value."""
    if metric is None or not isinstance(metric, MetricSpec):
        metric = MetricSpec.identity(system.dimension) if metric is None \
            else MetricSpec.constant(np.asarray(metric, dtype=float))
    theta = metric.factor(t)
    theta_inv = _checked_inverse(theta)
    theta_dot = metric.factor_dot(t)
    jac = _jacobian_fn(system, t)
    worst = -np.inf
    worst_at = None
    for x in region.samples():
        gen = (theta_dot + theta @ jac(x)) @ theta_inv
        top = float(np.linalg.eigvalsh((gen + gen.T) / 2.0).max())
        if top > worst:
            worst, worst_at = top, x
    return SupEstimate(value=-worst, argmax=np.asarray(worst_at, dtype=float))


def noise_bound_discrete(system: DiscreteMapSystem, metric_next, region: SamplingRegion,
                         k: int = 0) -> SupEstimate:
    """Sampled sup of the injected reset-noise energy tr(sigma^T M' sigma Q)."""
    m_next = _metric_value(metric_next, system.dimension)
    q = system.noise.covariance
    best = -np.inf
    best_at = None
    for x in region.samples():
        gain = np.asarray(system.noise_gain(x, k), dtype=float)
        energy = float(np.trace(gain.T @ m_next @ gain @ q))
        if energy > best:
            best, best_at = energy, x
    return SupEstimate(value=best, argmax=np.asarray(best_at, dtype=float))


def noise_bound_continuous(system: ContinuousSDESystem, metric, region: SamplingRegion,
                           t: float = 0.0) -> SupEstimate:
    """Sampled sup of the per-unit-time injected energy tr(sigma^T M sigma)."""
    m = _metric_value(metric, system.dimension, t)
    best = -np.inf
    best_at = None
    for x in region.samples():
        sig = np.asarray(system.diffusion(x, t), dtype=float)
        energy = float(np.trace(sig.T @ m @ sig))
        if energy > best:
            best, best_at = energy, x
    return SupEstimate(value=best, argmax=np.asarray(best_at, dtype=float))


@dataclass(frozen=True)
class ContractionCertificate:
    """A rate plus noise-energy claim for one system in one metric.

    kind "discrete" pairs the one-step squared gain with the reset-noise
    energy; kind "continuous" pairs the flow contraction rate with the
    per-unit-time energy.  is_global_claim is true only when the rate holds
    everywhere by construction (supplied analytically), never for sampled
    estimates.
    """

    kind: str  # "discrete" | "continuous"
    rate: float
    noise_bound: float
    metric: MetricSpec
    region: SamplingRegion | None
    is_global_claim: bool
    rate_argmax: np.ndarray | None = None

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "rate": self.rate,
            "noise_bound": self.noise_bound,
            "metric": {"kind": self.metric.kind,
                       "value": self.metric.value().tolist()},
            "region": None if self.region is None else self.region.to_json_dict(),
            "is_global_claim": self.is_global_claim,
        }


def certify_discrete(system: DiscreteMapSystem, region: SamplingRegion,
                     metric=None, metric_next=None, k: int = 0,
                     analytic_rate: float | None = None) -> ContractionCertificate:
    """Assemble a discrete certificate: sampled (or analytic) rate plus noise energy."""
    metric_spec = metric if isinstance(metric, MetricSpec) else (
        MetricSpec.identity(system.dimension) if metric is None
        else MetricSpec.constant(np.asarray(metric, dtype=float)))
    est = estimate_discrete_rate(system, (metric, metric_next), region, k=k)
    noise = noise_bound_discrete(system, metric_next, region, k=k)
    rate = float(analytic_rate) if analytic_rate is not None else est.value
    return ContractionCertificate(kind="discrete", rate=rate, noise_bound=noise.value,
                                  metric=metric_spec, region=region,
                                  is_global_claim=analytic_rate is not None,
                                  rate_argmax=est.argmax)


def certify_continuous(system: ContinuousSDESystem, region: SamplingRegion,
                       metric=None, t: float = 0.0,
                       analytic_rate: float | None = None) -> ContractionCertificate:
    """Assemble a continuous certificate: sampled (or analytic) rate plus noise energy."""
    metric_spec = metric if isinstance(metric, MetricSpec) else (
        MetricSpec.identity(system.dimension) if metric is None
        else MetricSpec.constant(np.asarray(metric, dtype=float)))
    est = estimate_continuous_rate(system, metric_spec, region, t=t)
    noise = noise_bound_continuous(system, metric_spec, region, t=t)
    rate = float(analytic_rate) if analytic_rate is not None else est.value
    return ContractionCertificate(kind="continuous", rate=rate, noise_bound=noise.value,
                                  metric=metric_spec, region=region,
                                  is_global_claim=analytic_rate is not None,
                                  rate_argmax=est.argmax)

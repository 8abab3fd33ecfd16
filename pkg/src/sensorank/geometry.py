"""Embedding-space geometry: global spectra and local neighborhood isotropy.

All functionals operate on a SingularSpectrum so the same code serves both
covariance eigenvalues (global geometry) and Jacobian singular values.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from . import streams
from .embio import EmbeddingMatrix
from .errors import AllZeroSpectrum, InsufficientNeighbors

# Values below this fraction of the leading eigenvalue are numerical noise
# from the symmetric eigensolver and get clamped to exactly 0.
EIG_CLAMP_REL = 1e-12

METRIC_KINDS = ("variance", "effective_rank", "participation_ratio")


@dataclasses.dataclass(frozen=True)
class SingularSpectrum:
    """Nonincreasing, nonnegative spectrum tagged with its origin."""

    values: np.ndarray
    source: str  # "covariance" | "jacobian"

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 1 or values.size == 0:
            raise ValueError(f"spectrum must be a nonempty vector, got shape {values.shape}")
        if np.any(values < 0):
            raise ValueError("spectrum values must be nonnegative")
        if np.any(np.diff(values) > 0):
            raise ValueError("spectrum values must be sorted nonincreasing")
        if self.source not in ("covariance", "jacobian"):
            raise ValueError(f"unknown spectrum source {self.source!r}")


def covariance_spectrum(emb: EmbeddingMatrix) -> SingularSpectrum:
    """Eigenvalues of the mean-centered sample covariance (divisor N-1).

    Always returns D values; when D > N the trailing eigenvalues are exact
    zeros obtained through the thin SVD of the centered rows.
    """
    if emb.n < 2:
        raise InsufficientNeighbors(f"covariance needs at least 2 rows, got {emb.n}")
    centered = emb.values - emb.values.mean(axis=0)
    n, d = centered.shape
    if d <= n:
        cov = centered.T @ centered / (n - 1)
        eig = np.linalg.eigvalsh(cov)[::-1]
    else:
        svals = np.linalg.svd(centered, compute_uv=False)
        eig = np.zeros(d)
        eig[: svals.size] = svals**2 / (n - 1)
    return _clamped_spectrum(eig, "covariance")


def _clamped_spectrum(eig: np.ndarray, source: str) -> SingularSpectrum:
    eig = np.array(eig, dtype=np.float64)
    top = eig.max(initial=0.0)
    if top <= 0.0:
        raise AllZeroSpectrum("covariance has no positive eigenvalue (identical rows?)")
    eig[eig < EIG_CLAMP_REL * top] = 0.0
    eig[::-1].sort()
    return SingularSpectrum(eig, source)


def _positive(s: SingularSpectrum) -> np.ndarray:
    values = s.values
    if not np.any(values > 0):
        raise AllZeroSpectrum("spectrum is identically zero")
    return values


def participation_ratio(s: SingularSpectrum, normalized: bool = False, dim: int | None = None) -> float:
    """(Sum lam)^2 / Sum lam^2, optionally divided by the ambient dimension."""
    values = _positive(s)
    pr = float(values.sum() ** 2 / (values**2).sum())
    if not normalized:
        return pr
    if dim is None:
        dim = values.size
    return pr / dim


def isotropy_score(s: SingularSpectrum) -> float:
    """1 - lam_1 / Sum lam: how much variance lives beyond the top component."""
    values = _positive(s)
    return float(1.0 - values[0] / values.sum())


def effective_rank_entropy(s: SingularSpectrum) -> float:
    """exp of the eigenvalue entropy; 1 for rank-1, D for a flat spectrum."""
    values = _positive(s)
    p = values / values.sum()
    nonzero = p[p > 0]
    return float(np.exp(-(nonzero * np.log(nonzero)).sum()))


_FUNCTIONALS = {
    "variance": isotropy_score,
    "effective_rank": effective_rank_entropy,
    "participation_ratio": participation_ratio,
}


def local_isotropy(
    emb: EmbeddingMatrix,
    k: int = 16,
    n_anchors: int = 500,
    metric_kind: str = "variance",
    seed: int = 42,
    exclude_anchor: bool = True,
) -> float:
    """Mean local-neighborhood score over seeded anchor points.

    Each anchor's k nearest neighbors (Euclidean, anchor itself excluded by
    default) define a local covariance whose spectrum is scored with the
    chosen functional. Anchors whose neighborhood carries no variance
    contribute 0 so dataset-level averages stay total.
    """
    if metric_kind not in _FUNCTIONALS:
        raise ValueError(f"metric_kind must be one of {METRIC_KINDS}, got {metric_kind!r}")
    n = emb.n
    if k < 2 or k >= n:
        raise InsufficientNeighbors(f"need N > k >= 2, got N={n}, k={k}")
    if n_anchors > n:
        raise ValueError(f"n_anchors={n_anchors} exceeds N={n}")

    rng = streams.generator(seed, streams.LOCAL_ANCHORS)
    anchors = rng.choice(n, size=n_anchors, replace=False)
    values = emb.values
    functional = _FUNCTIONALS[metric_kind]

    total = 0.0
    for anchor in anchors:
        delta = values - values[anchor]
        dist = np.einsum("ij,ij->i", delta, delta)
        order = np.argsort(dist, kind="stable")
        if exclude_anchor:
            order = order[order != anchor]
        neighbors = values[order[:k]]
        centered = neighbors - neighbors.mean(axis=0)
        cov = centered.T @ centered / (k - 1)
        eig = np.linalg.eigvalsh(cov)[::-1]
        try:
            spectrum = _clamped_spectrum(eig, "covariance")
        except AllZeroSpectrum:
            continue  # degenerate neighborhood contributes 0
        total += functional(spectrum)
    return total / n_anchors


def local_isotropy_sweep(
    emb: EmbeddingMatrix,
    ks: tuple[int, ...] = (8, 16, 32),
    metric_kinds: tuple[str, ...] = METRIC_KINDS,
    n_anchors: int = 500,
    seed: int = 42,
) -> dict[tuple[int, str], float]:
    """Robustness grid: one local score per (k, metric formulation) cell."""
    return {
        (k, kind): local_isotropy(emb, k=k, n_anchors=n_anchors, metric_kind=kind, seed=seed)
        for k in ks
        for kind in metric_kinds
    }

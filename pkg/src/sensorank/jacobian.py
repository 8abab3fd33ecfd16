"""Jacobian spectrum estimation via randomized range finding.

The object of interest is J(x) = df/dx for an encoder f at a probe input x.
Forming J explicitly is intractable at image resolution, so we sketch it:
stack k Jacobian-vector products along random orthonormal directions into
Y = J Omega (D x k) and take Y's singular values as spectrum estimates.
The sketch is exact for maps of rank <= k and conservative otherwise
(column selection can only shrink singular values).

Jacobian Effective Rank (JER) is the participation-ratio functional applied
to that spectrum, averaged over a batch of noise probe images.
"""

from __future__ import annotations

import dataclasses
from typing import Protocol

import numpy as np

from . import streams
from .errors import AllZeroSpectrum, CapabilityMissing, DimensionMismatch, OracleNumericalFault
from .geometry import SingularSpectrum

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

PROBE_MEAN = 0.45
PROBE_STD = 0.225


class JvpOracle(Protocol):
    """Anything that can embed inputs and push directions through its Jacobian.

    Built-in encoders satisfy this structurally; external models join through
    the adapter wire client. Oracles declaring reentrant=False must be called
    serially.
    """

    input_shape: tuple[int, ...]
    output_dim: int
    taps: tuple[str, ...]
    reentrant: bool

    def embed(self, x, tap: str | None = None) -> np.ndarray: ...

    def jvp(self, x, v, tap: str | None = None) -> np.ndarray: ...


# --------------------------------------------------------------------------
# probe inputs and sketch directions
# --------------------------------------------------------------------------


@dataclasses.dataclass
class ProbeBatch:
    """Noise probe images before and after channel normalization."""

    pixels: np.ndarray   # (n, *shape), values in [0, 1]
    inputs: np.ndarray   # (n, *shape), normalized
    seed: int
    mean: float = PROBE_MEAN
    std: float = PROBE_STD

    @property
    def count(self) -> int:
        return self.pixels.shape[0]


def sample_probe_inputs(n: int, seed: int, shape: tuple[int, ...] = (3, 224, 224)) -> ProbeBatch:
    """Gaussian pixel noise N(0.45, 0.225^2) clipped to [0,1], then normalized.

    Three-channel shapes get the standard ImageNet channel statistics; any
    other shape is normalized with the sampling mean/std so toy oracles with
    unstructured inputs still see zero-centered probes.
    """
    if n < 1:
        raise ValueError("need at least one probe image")
    rng = streams.generator(seed, streams.PROBE_PIXELS)
    pixels = np.clip(rng.normal(PROBE_MEAN, PROBE_STD, size=(n, *shape)), 0.0, 1.0)
    if len(shape) == 3 and shape[0] == 3:
        mean = np.asarray(IMAGENET_MEAN).reshape(3, 1, 1)
        std = np.asarray(IMAGENET_STD).reshape(3, 1, 1)
    else:
        mean, std = PROBE_MEAN, PROBE_STD
    return ProbeBatch(pixels=pixels, inputs=(pixels - mean) / std, seed=seed)


@dataclasses.dataclass
class DirectionSet:
    """k orthonormal probe directions as columns of an input_dim x k matrix."""

    matrix: np.ndarray
    seed: int

    @property
    def input_dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def k(self) -> int:
        return self.matrix.shape[1]


def orthonormal_directions(input_dim: int, k: int, seed: int) -> DirectionSet:
    """Gaussian matrix orthonormalized by modified Gram-Schmidt.

    Each column is orthogonalized twice against its predecessors ("twice is
    enough"), which keeps Omega^T Omega - I below 1e-6 even at input_dim of
    the 224x224x3 scale.
    """
    if not 1 <= k <= input_dim:
        raise DimensionMismatch(f"need 1 <= k <= input_dim, got k={k}, input_dim={input_dim}")
    rng = streams.generator(seed, streams.SKETCH_DIRECTIONS)
    omega = rng.standard_normal((input_dim, k))
    for j in range(k):
        col = omega[:, j]
        for _ in range(2):
            if j > 0:
                col = col - omega[:, :j] @ (omega[:, :j].T @ col)
        norm = np.linalg.norm(col)
        if norm == 0.0:
            raise OracleNumericalFault(f"direction {j} collapsed to zero during orthonormalization")
        omega[:, j] = col / norm
    return DirectionSet(matrix=omega, seed=seed)


# --------------------------------------------------------------------------
# spectrum estimation and JER
# --------------------------------------------------------------------------


def estimate_singular_values(
    oracle: JvpOracle, x: np.ndarray, dirs: DirectionSet, tap: str | None = None
) -> SingularSpectrum:
    """Singular values of Y = [J omega_1 ... J omega_k], nonincreasing."""
    input_size = int(np.prod(oracle.input_shape))
    if dirs.input_dim != input_size:
        raise DimensionMismatch(
            f"directions have input_dim {dirs.input_dim}, oracle expects {input_size}"
        )
    columns = []
    for i in range(dirs.k):
        out = np.asarray(oracle.jvp(x, dirs.matrix[:, i], tap=tap), dtype=np.float64)
        if not np.all(np.isfinite(out)):
            raise OracleNumericalFault(f"non-finite jvp output for direction {i}")
        columns.append(out)
    sketch = np.stack(columns, axis=1)
    svals = np.linalg.svd(sketch, compute_uv=False)
    return SingularSpectrum(svals, "jacobian")


def jer(s: SingularSpectrum) -> float:
    """(Sum sigma)^2 / Sum sigma^2; 1 for rank-1 maps, k for flat sketches."""
    values = s.values
    denom = float((values**2).sum())
    if denom <= 0.0:
        raise AllZeroSpectrum("Jacobian sketch is identically zero")
    return float(values.sum() ** 2 / denom)


def normalized_spectrum(s: SingularSpectrum) -> np.ndarray:
    """sigma_i / sigma_1; leading entry is exactly 1."""
    values = s.values
    if values[0] <= 0.0:
        raise AllZeroSpectrum("cannot normalize an all-zero spectrum")
    return values / values[0]


@dataclasses.dataclass
class JerResult:
    mean: float
    per_image: list[float]
    k: int
    seed: int
    n_images: int
    spectra: list[SingularSpectrum] | None = None


def jer_mean(
    oracle: JvpOracle,
    n_images: int = 100,
    k: int = 32,
    seed: int = 42,
    tap: str | None = None,
    collect_spectra: bool = False,
) -> JerResult:
    """Mean JER over fresh noise probes; per-image values are retained so
    seed-stability protocols can report mean, std, and CV.

    A fresh direction set is drawn per probe image (recorded in run
    metadata); sketches are therefore independent across images.
    """
    batch = sample_probe_inputs(n_images, seed, tuple(oracle.input_shape))
    input_dim = int(np.prod(oracle.input_shape))
    per_image: list[float] = []
    spectra: list[SingularSpectrum] = []
    for i in range(n_images):
        dirs = orthonormal_directions(input_dim, k, streams.child_seed(seed, streams.SKETCH_DIRECTIONS, i))
        try:
            spectrum = estimate_singular_values(oracle, batch.inputs[i].ravel(), dirs, tap=tap)
            per_image.append(jer(spectrum))
        except (OracleNumericalFault, AllZeroSpectrum) as exc:
            raise OracleNumericalFault(f"image {i}: {exc}") from exc
        if collect_spectra:
            spectra.append(spectrum)
    return JerResult(
        mean=float(np.mean(per_image)),
        per_image=per_image,
        k=k,
        seed=seed,
        n_images=n_images,
        spectra=spectra if collect_spectra else None,
    )


def jer_depth_profile(
    oracle: JvpOracle, n_images: int = 100, k: int = 32, seed: int = 42
) -> dict[str, float]:
    """JER at every declared tap, keyed in declared depth order.

    Probe inputs and per-image directions are shared across taps (they live
    in input space), so profile values are directly comparable block to
    block. Directions are regenerated per tap from the same seeds rather
    than cached: identical by construction, without holding n_images
    direction matrices in memory.
    """
    taps = tuple(getattr(oracle, "taps", ()) or ())
    if not taps:
        raise CapabilityMissing("oracle declares no taps; depth profile unavailable")
    return {tap: jer_mean(oracle, n_images=n_images, k=k, seed=seed, tap=tap).mean for tap in taps}


# --------------------------------------------------------------------------
# covariance propagation check
# --------------------------------------------------------------------------


@dataclasses.dataclass
class CovCheckResult:
    empirical: np.ndarray
    predicted: np.ndarray
    max_rel_error: float


def local_feature_covariance_check(
    oracle: JvpOracle, x: np.ndarray, sigma: float, n_samples: int = 100_000, seed: int = 42
) -> CovCheckResult:
    """Monte-Carlo check that Cov(f(x + delta)) tracks sigma^2 J J^T.

    J is materialized column by column through exact JVPs along the
    canonical basis, so this is only meant for toy-scale inputs. The
    empirical side is the sample covariance of f over delta ~ N(0, sigma^2 I)
    with shared base draws, so errors across sigma values are comparable.
    Disagreement is reported, never raised: for nonlinear maps the gap is
    the curvature signal itself.
    """
    if n_samples < 1000:
        raise ValueError("n_samples must be at least 1000 for a meaningful check")
    x = np.asarray(x, dtype=np.float64).ravel()
    input_size = int(np.prod(oracle.input_shape))
    if x.size != input_size:
        raise DimensionMismatch(f"input has {x.size} elements, oracle expects {input_size}")

    basis = np.eye(input_size)
    jac = np.stack([np.asarray(oracle.jvp(x, basis[:, j]), dtype=np.float64) for j in range(input_size)], axis=1)
    predicted = sigma**2 * (jac @ jac.T)

    rng = streams.generator(seed, streams.NOISE_DELTAS)
    deltas = sigma * rng.standard_normal((n_samples, input_size))
    outputs = np.stack([np.asarray(oracle.embed(x + d), dtype=np.float64) for d in deltas])
    centered = outputs - outputs.mean(axis=0)
    empirical = centered.T @ centered / (n_samples - 1)

    denom = np.linalg.norm(predicted)
    if denom == 0.0:
        rel = 0.0 if np.linalg.norm(empirical) == 0.0 else float("inf")
    else:
        rel = float(np.linalg.norm(empirical - predicted) / denom)
    return CovCheckResult(empirical=empirical, predicted=predicted, max_rel_error=rel)

"""Built-in encoders with exact forward-mode JVPs.

These exist so every pipeline stage (spectrum estimation, readouts, the
acceptance suite) runs without any external model: a linear map whose
Jacobian is known in closed form, a small MLP differentiated by dual-number
propagation, and the two bag-of-features scene encoders that demonstrate
why factored aggregation cannot bind shape to position.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
from scipy.special import erf

from . import streams
from .errors import CapabilityMissing, DimensionMismatch
from .probes import SceneSpec

# --------------------------------------------------------------------------
# activations: value and exact derivative, vectorized
# --------------------------------------------------------------------------


def _tanh(z):
    return np.tanh(z)


def _tanh_d(z):
    t = np.tanh(z)
    return 1.0 - t * t


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_d(z):
    # Derivative at the kink is taken as 0; finite differences disagree
    # there, which is the documented mismatch.
    return (z > 0).astype(np.float64)


_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def _gelu(z):
    return 0.5 * z * (1.0 + erf(z * _INV_SQRT2))


def _gelu_d(z):
    phi = 0.5 * (1.0 + erf(z * _INV_SQRT2))
    return phi + z * np.exp(-0.5 * z * z) * _INV_SQRT2PI


ACTIVATIONS = {
    "tanh": (_tanh, _tanh_d),
    "relu": (_relu, _relu_d),
    "gelu": (_gelu, _gelu_d),
}


def _flat(x, size: int, what: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64).ravel()
    if arr.size != size:
        raise DimensionMismatch(f"{what} has {arr.size} elements, encoder expects {size}")
    return arr


# --------------------------------------------------------------------------
# linear encoders
# --------------------------------------------------------------------------


class LinearEncoder:
    """y = W x + b. The Jacobian is W everywhere, which makes this the
    ground-truth oracle for the spectrum estimator."""

    def __init__(self, weight: np.ndarray, bias: np.ndarray | float = 0.0, input_shape: tuple[int, ...] | None = None):
        self.weight = np.asarray(weight, dtype=np.float64)
        if self.weight.ndim != 2:
            raise DimensionMismatch(f"weight must be 2-d, got shape {self.weight.shape}")
        out_dim, in_dim = self.weight.shape
        self.bias = np.broadcast_to(np.asarray(bias, dtype=np.float64), (out_dim,)).copy()
        self.input_shape = tuple(input_shape) if input_shape is not None else (in_dim,)
        if int(np.prod(self.input_shape)) != in_dim:
            raise DimensionMismatch(f"input_shape {self.input_shape} incompatible with weight columns {in_dim}")
        self.output_dim = out_dim
        self.taps: tuple[str, ...] = ()
        self.reentrant = True

    @classmethod
    def random(cls, out_dim: int, input_shape: tuple[int, ...], seed: int) -> "LinearEncoder":
        in_dim = int(np.prod(input_shape))
        rng = streams.generator(seed, streams.ENCODER_INIT)
        weight = rng.normal(0.0, 1.0 / math.sqrt(in_dim), size=(out_dim, in_dim))
        return cls(weight, 0.0, input_shape)

    def embed(self, x, tap: str | None = None) -> np.ndarray:
        _no_tap(self, tap)
        return self.weight @ _flat(x, self.weight.shape[1], "input") + self.bias

    def jvp(self, x, v, tap: str | None = None) -> np.ndarray:
        _no_tap(self, tap)
        _flat(x, self.weight.shape[1], "input")
        return self.weight @ _flat(v, self.weight.shape[1], "direction")


class IdentityEncoder:
    """Flattening identity. Used where materializing I would be absurd
    (224x224x3 inputs); jvp returns the direction unchanged."""

    def __init__(self, input_shape: tuple[int, ...]):
        self.input_shape = tuple(input_shape)
        self.output_dim = int(np.prod(self.input_shape))
        self.taps: tuple[str, ...] = ()
        self.reentrant = True

    def embed(self, x, tap: str | None = None) -> np.ndarray:
        _no_tap(self, tap)
        return _flat(x, self.output_dim, "input").copy()

    def jvp(self, x, v, tap: str | None = None) -> np.ndarray:
        _no_tap(self, tap)
        _flat(x, self.output_dim, "input")
        return _flat(v, self.output_dim, "direction").copy()


def _no_tap(encoder, tap: str | None) -> None:
    if tap is not None:
        raise CapabilityMissing(f"{type(encoder).__name__} declares no taps, got tap={tap!r}")


# --------------------------------------------------------------------------
# MLP with dual-number JVP
# --------------------------------------------------------------------------


class MlpEncoder:
    """Small fully connected net; taps expose each layer's activations.

    The JVP propagates (value, tangent) pairs through every layer, so it is
    exact for the smooth activations and matches the convention derivative
    at the relu kink.
    """

    def __init__(self, layers: list[tuple[np.ndarray, np.ndarray, str]], input_shape: tuple[int, ...]):
        if not layers:
            raise ValueError("need at least one layer")
        self.layers = []
        prev = int(np.prod(input_shape))
        for i, (weight, bias, act) in enumerate(layers):
            weight = np.asarray(weight, dtype=np.float64)
            bias = np.asarray(bias, dtype=np.float64)
            if act not in ACTIVATIONS:
                raise ValueError(f"unsupported activation {act!r}; known: {sorted(ACTIVATIONS)}")
            if weight.ndim != 2 or weight.shape[1] != prev or bias.shape != (weight.shape[0],):
                raise DimensionMismatch(f"layer {i}: weight {weight.shape} / bias {bias.shape} do not chain from {prev}")
            self.layers.append((weight, bias, act))
            prev = weight.shape[0]
        self.input_shape = tuple(input_shape)
        self.output_dim = prev
        self.taps = tuple(f"layer{i + 1}" for i in range(len(self.layers)))
        self.reentrant = True

    @classmethod
    def from_widths(
        cls,
        widths: tuple[int, ...] = (64, 64, 32),
        activation: str = "tanh",
        input_shape: tuple[int, ...] = (3, 16, 16),
        seed: int = 0,
    ) -> "MlpEncoder":
        """Seeded Gaussian parameters with std 1/sqrt(fan_in): keeps the
        Jacobian well conditioned for estimator tests."""
        layers = []
        fan_in = int(np.prod(input_shape))
        for i, width in enumerate(widths):
            rng = streams.generator(seed, streams.ENCODER_INIT, i)
            std = 1.0 / math.sqrt(fan_in)
            weight = rng.normal(0.0, std, size=(width, fan_in))
            bias = rng.normal(0.0, std, size=width)
            layers.append((weight, bias, activation))
            fan_in = width
        return cls(layers, input_shape)

    def _tap_index(self, tap: str | None) -> int:
        if tap is None:
            return len(self.layers)
        if tap not in self.taps:
            raise CapabilityMissing(f"unknown tap {tap!r}; declared taps: {self.taps}")
        return self.taps.index(tap) + 1

    def embed(self, x, tap: str | None = None) -> np.ndarray:
        depth = self._tap_index(tap)
        a = _flat(x, int(np.prod(self.input_shape)), "input")
        for weight, bias, act in self.layers[:depth]:
            a = ACTIVATIONS[act][0](weight @ a + bias)
        return a

    def jvp(self, x, v, tap: str | None = None) -> np.ndarray:
        depth = self._tap_index(tap)
        size = int(np.prod(self.input_shape))
        a = _flat(x, size, "input")
        da = _flat(v, size, "direction")
        for weight, bias, act in self.layers[:depth]:
            z = weight @ a + bias
            dz = weight @ da
            f, df = ACTIVATIONS[act]
            a = f(z)
            da = df(z) * dz
        return da


def jvp_finite_diff(forward, x, v, h: float = 1e-3) -> np.ndarray:
    """Central finite difference (f(x+hv) - f(x-hv)) / 2h; the independent
    oracle the exact JVPs are checked against."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return (forward(x + h * v) - forward(x - h * v)) / (2.0 * h)


# --------------------------------------------------------------------------
# bag-of-features scene encoders
# --------------------------------------------------------------------------


@dataclasses.dataclass
class BagOfFeaturesEncoder:
    """Symbolic scene encoder over (shape, position) codes; color is ignored.

    factored: phi(left.shape) + phi(right.shape) + psi(LEFT) + psi(RIGHT).
      Shape and position information never interact, so any two scenes with
      the same shape multiset embed identically; swaps are invisible.
    joint: phi(left.shape, LEFT) + phi(right.shape, RIGHT).
      Codes are indexed by the pair, so swapped scenes embed differently.
    """

    variant: str
    dim: int = 32
    seed: int = 0

    def __post_init__(self) -> None:
        if self.variant not in ("joint", "factored"):
            raise ValueError(f"variant must be 'joint' or 'factored', got {self.variant!r}")
        rng = streams.generator(self.seed, streams.ENCODER_INIT)
        if self.variant == "factored":
            self.shape_codes = rng.standard_normal((3, self.dim))
            self.position_codes = rng.standard_normal((2, self.dim))
        else:
            self.joint_codes = rng.standard_normal((3, 2, self.dim))

    def embed_scene(self, spec: SceneSpec) -> np.ndarray:
        left_shape, right_shape = int(spec.left[0]), int(spec.right[0])
        if self.variant == "factored":
            return (
                self.shape_codes[left_shape]
                + self.shape_codes[right_shape]
                + self.position_codes[0]
                + self.position_codes[1]
            )
        return self.joint_codes[left_shape, 0] + self.joint_codes[right_shape, 1]


def bag_embed(encoder: BagOfFeaturesEncoder, spec: SceneSpec) -> np.ndarray:
    return encoder.embed_scene(spec)

"""Models the adapter can host.

Two run anywhere: ``identity`` echoes its (flattened) input, and ``mlp``
is a small torch-hosted network whose JVPs come from forward-mode autodiff.
Both exist so the wire protocol and the export path can be exercised
without downloading weights.

The named pretrained encoders carry their source, checkpoint id, and
output dimension in a static registry; serving one requires its weights,
which this package does not bundle, so resolving them reports a load
failure with the source to fetch from.
"""

from __future__ import annotations

import dataclasses

import numpy as np


class ModelLoadError(Exception):
    """The requested model cannot be constructed in this process."""


@dataclasses.dataclass(frozen=True)
class CheckpointInfo:
    """Registry row for a known pretrained encoder."""

    model: str  # leaderboard display name
    arch: str
    source: str  # openclip | torch.hub | timm | torchvision
    checkpoint: str
    output_dim: int
    # True when the public checkpoint name does not pin the exact weights;
    # the handshake must then carry the id actually loaded, never a guess.
    ambiguous: bool = False


CHECKPOINTS: dict[str, CheckpointInfo] = {
    "clip-vit-b32": CheckpointInfo("CLIP", "ViT-B/32", "openclip", "openai", 512),
    "clip-vit-b16": CheckpointInfo("CLIP", "ViT-B/16", "openclip", "openai", 512),
    "clip-vit-l14": CheckpointInfo("CLIP", "ViT-L/14", "openclip", "openai", 768),
    "siglip-vit-b16": CheckpointInfo("SigLIP", "ViT-B/16", "openclip", "webli", 768),
    "eva-clip-vit-b16": CheckpointInfo(
        "EVA-CLIP", "ViT-B/16", "openclip", "merged2b_s8b_b131k", 512
    ),
    "dinov2-vit-s14": CheckpointInfo(
        "DINOv2", "ViT-S/14", "torch.hub", "facebookresearch/dinov2", 384
    ),
    "dinov2-vit-b14": CheckpointInfo(
        "DINOv2", "ViT-B/14", "torch.hub", "facebookresearch/dinov2", 768
    ),
    "dinov2-vit-l14": CheckpointInfo(
        "DINOv2", "ViT-L/14", "torch.hub", "facebookresearch/dinov2", 1024
    ),
    "dino-vit-s16": CheckpointInfo("DINO", "ViT-S/16", "torch.hub", "facebookresearch/dino", 384),
    "dino-vit-b16": CheckpointInfo("DINO", "ViT-B/16", "torch.hub", "facebookresearch/dino", 768),
    "mae-vit-b16": CheckpointInfo("MAE", "ViT-B/16", "timm", "vit_base_patch16_224.mae", 768),
    "mae-vit-l16": CheckpointInfo("MAE", "ViT-L/16", "timm", "vit_large_patch16_224.mae", 1024),
    "ijepa-vit-b16": CheckpointInfo(
        "I-JEPA", "ViT-B/16", "timm", "vit_base_patch16_224", 768, ambiguous=True
    ),
    "ijepa-vit-l16": CheckpointInfo(
        "I-JEPA", "ViT-L/16", "timm", "vit_large_patch16_224", 1024, ambiguous=True
    ),
    "beit-vit-b16": CheckpointInfo("BEiT", "ViT-B/16", "timm", "beit_base_patch16_224", 768),
    "beitv2-vit-b16": CheckpointInfo("BEiTv2", "ViT-B/16", "timm", "beitv2_base_patch16_224", 768),
    "barlowtwins-resnet50": CheckpointInfo(
        "Barlow Twins", "ResNet-50", "torch.hub", "facebookresearch/barlowtwins", 1000
    ),
    "vicreg-resnet50": CheckpointInfo(
        "VICReg", "ResNet-50", "torch.hub", "facebookresearch/vicreg", 2048
    ),
    "swav-resnet50": CheckpointInfo(
        "SwAV", "ResNet-50", "torch.hub", "facebookresearch/swav", 2048
    ),
    "simclr-resnet50": CheckpointInfo(
        "SimCLR", "ResNet-50", "torchvision", "ResNet50_Weights.V2", 2048
    ),
    "convnext-base": CheckpointInfo(
        "ConvNeXt", "Base", "timm", "convnext_base.fb_in22k_ft_in1k", 1024
    ),
}

_DEFAULT_SHAPE = (3, 224, 224)


class IdentityModel:
    """Echo model: output is the flattened input, the Jacobian is I."""

    name = "identity"
    capabilities = {"embed": True, "jvp": True, "taps": []}
    checkpoint = None

    def __init__(self, input_shape: tuple[int, ...] = _DEFAULT_SHAPE):
        self.input_shape = tuple(int(d) for d in input_shape)
        self.output_dim = int(np.prod(self.input_shape))

    def embed(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=np.float64).ravel()

    def jvp(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=np.float64).ravel()


class TorchMlpModel:
    """Small seeded torch network; JVPs via forward-mode autodiff.

    Stands in for a real hosted checkpoint: same framework path (tensors
    in, torch.func.jvp for directional derivatives), small enough to
    construct instantly and deterministic given the seed.
    """

    name = "mlp"
    capabilities = {"embed": True, "jvp": True, "taps": []}
    checkpoint = None

    def __init__(self, input_shape: tuple[int, ...] = _DEFAULT_SHAPE, seed: int = 0):
        import torch  # local import: identity serving must not pay for it

        self._torch = torch
        self.input_shape = tuple(int(d) for d in input_shape)
        in_dim = int(np.prod(self.input_shape))
        self.output_dim = 32
        torch.manual_seed(seed)
        self._net = torch.nn.Sequential(
            torch.nn.Linear(in_dim, 64),
            torch.nn.Tanh(),
            torch.nn.Linear(64, self.output_dim),
        ).eval()
        for p in self._net.parameters():
            p.requires_grad_(False)

    def _forward(self, x):
        return self._net(x)

    def embed(self, x: np.ndarray) -> np.ndarray:
        t = self._torch.from_numpy(np.asarray(x, dtype=np.float32).ravel())
        with self._torch.no_grad():
            return self._forward(t).numpy().astype(np.float64)

    def jvp(self, x: np.ndarray, v: np.ndarray) -> np.ndarray:
        torch = self._torch
        t = torch.from_numpy(np.asarray(x, dtype=np.float32).ravel())
        tv = torch.from_numpy(np.asarray(v, dtype=np.float32).ravel())
        _, out = torch.func.jvp(self._forward, (t,), (tv,))
        return out.numpy().astype(np.float64)


def _parse_shape(spec: str) -> tuple[int, ...]:
    try:
        shape = tuple(int(tok) for tok in spec.split(","))
    except ValueError:
        raise ModelLoadError(f"bad shape spec {spec!r} (want comma-separated ints)") from None
    if not shape or any(d < 1 for d in shape):
        raise ModelLoadError(f"bad shape spec {spec!r} (dims must be positive)")
    return shape


def resolve_model(spec: str):
    """Model spec -> hosted model instance.

    ``identity[:C,H,W]`` and ``mlp[:C,H,W]`` construct in-process; a
    registry name reports where its weights live instead of guessing.
    """
    kind, _, rest = spec.partition(":")
    if kind == "identity":
        return IdentityModel(_parse_shape(rest) if rest else _DEFAULT_SHAPE)
    if kind == "mlp":
        return TorchMlpModel(_parse_shape(rest) if rest else _DEFAULT_SHAPE)
    if spec in CHECKPOINTS:
        info = CHECKPOINTS[spec]
        raise ModelLoadError(
            f"model {spec!r} needs checkpoint {info.checkpoint!r} from {info.source}; "
            "no weights are bundled with this adapter"
        )
    known = ", ".join(["identity[:shape]", "mlp[:shape]", *sorted(CHECKPOINTS)])
    raise ModelLoadError(f"unknown model {spec!r}; known: {known}")

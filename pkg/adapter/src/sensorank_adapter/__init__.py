"""Adapter side of the SRA/1 wire protocol.

Hosts models as subprocesses the sensorank toolkit can drive: a handshake
on stdout, then line-delimited JSON embed/jvp requests with base64 f32
payloads. Also batch-exports manifest images to EMB1 embedding files with
the standard resize-crop-normalize preprocessing.
"""

__version__ = "0.1.0"

from .emb1 import write_emb1
from .export import ExportError, export_embeddings
from .models import CHECKPOINTS, IdentityModel, ModelLoadError, TorchMlpModel, resolve_model
from .preprocess import load_rgb, preprocess
from .serve import serve
from .wire import PROTOCOL_VERSION, decode_f32, encode_f32

__all__ = [name for name in dir() if not name.startswith("_")]

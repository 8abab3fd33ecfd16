"""The wire loop: handshake, then answer frames until shutdown.

Request handling is strictly serial and the handshake says so
(reentrant=false). A malformed frame gets an error reply and the loop
continues; only shutdown or EOF ends the process.
"""

from __future__ import annotations

import json
import sys

import numpy as np

from .wire import PROTOCOL_VERSION, decode_f32, encode_f32


def _writeline(stream, obj: dict) -> None:
    stream.write(json.dumps(obj) + "\n")
    stream.flush()


def _payload(req: dict, key: str, want: int) -> np.ndarray:
    if key not in req:
        raise ValueError(f"request lacks {key!r}")
    arr = decode_f32(req[key])
    if arr.size != want:
        raise ValueError(f"{key} carries {arr.size} floats, expected {want}")
    return arr


def serve(model, stdin=None, stdout=None) -> int:
    """Run the request loop for a resolved model. Returns the exit code."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    _writeline(stdout, {
        "protocol_version": PROTOCOL_VERSION,
        "model": model.name,
        "checkpoint": model.checkpoint,
        "input_shape": list(model.input_shape),
        "output_dim": model.output_dim,
        "capabilities": model.capabilities,
        "reentrant": False,
    })

    in_dim = int(np.prod(model.input_shape))
    for line in stdin:
        if not line.strip():
            continue
        try:
            req = json.loads(line)
            if not isinstance(req, dict):
                raise ValueError("frame is not an object")
        except (json.JSONDecodeError, ValueError) as exc:
            _writeline(stdout, {"id": None, "error": f"malformed frame: {exc}"})
            continue

        req_id = req.get("id")
        op = req.get("op")
        if op == "shutdown":
            return 0
        try:
            if op == "embed":
                out = model.embed(_payload(req, "input", in_dim))
            elif op == "jvp":
                out = model.jvp(_payload(req, "input", in_dim), _payload(req, "direction", in_dim))
            else:
                raise ValueError(f"unknown op {op!r}")
            _writeline(stdout, {"id": req_id, "output": encode_f32(out)})
        except Exception as exc:  # error reply, keep serving
            _writeline(stdout, {"id": req_id, "error": str(exc)})
    return 0

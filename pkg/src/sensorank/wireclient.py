"""Client side of the SRA/1 adapter wire protocol.

External models join the pipeline as subprocesses speaking line-delimited
JSON over stdio: a handshake first, then embed/jvp requests with base64
little-endian f32 payloads. This module adapts such a subprocess to the
JvpOracle interface, so estimator code never knows whether it is talking to
a built-in encoder or a hosted checkpoint.
"""

from __future__ import annotations

import base64
import json
import shlex
import subprocess

import numpy as np

from .errors import CapabilityMissing, SensorankError

PROTOCOL_VERSION = "SRA/1"


class WireProtocolError(SensorankError):
    """Adapter subprocess misbehaved: bad handshake, dead pipe, or a frame
    that does not follow the protocol."""


def encode_f32(arr) -> str:
    return base64.b64encode(np.ascontiguousarray(arr, dtype="<f4").tobytes()).decode("ascii")


def decode_f32(payload: str) -> np.ndarray:
    return np.frombuffer(base64.b64decode(payload), dtype="<f4").astype(np.float64)


class AdapterOracle:
    """JvpOracle over a subprocess. Use as a context manager so the child
    is always shut down."""

    def __init__(self, cmd: str | list[str]):
        argv = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,  # line buffered
            )
        except OSError as exc:
            raise WireProtocolError(f"could not start adapter {argv!r}: {exc}") from exc
        self._next_id = 0
        handshake = self._read_frame()
        if handshake.get("protocol_version") != PROTOCOL_VERSION:
            self.close()
            raise WireProtocolError(
                f"adapter speaks {handshake.get('protocol_version')!r}, expected {PROTOCOL_VERSION!r}"
            )
        self.handshake = handshake
        self.model = handshake.get("model", "unknown")
        self.input_shape = tuple(int(d) for d in handshake["input_shape"])
        self.output_dim = int(handshake["output_dim"])
        caps = handshake.get("capabilities", {})
        self._can_embed = bool(caps.get("embed", False))
        self._can_jvp = bool(caps.get("jvp", False))
        self.taps = tuple(caps.get("taps") or ())
        self.reentrant = bool(handshake.get("reentrant", False))

    # -- plumbing ----------------------------------------------------------

    def _read_frame(self) -> dict:
        line = self._proc.stdout.readline()
        if not line:
            code = self._proc.poll()
            raise WireProtocolError(f"adapter closed its stdout (exit code {code})")
        try:
            frame = json.loads(line)
        except json.JSONDecodeError as exc:
            raise WireProtocolError(f"adapter sent invalid JSON: {line[:200]!r}") from exc
        if not isinstance(frame, dict):
            raise WireProtocolError(f"adapter frame is not an object: {line[:200]!r}")
        return frame

    def _request(self, payload: dict) -> dict:
        payload["id"] = self._next_id
        self._next_id += 1
        try:
            self._proc.stdin.write(json.dumps(payload) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise WireProtocolError(f"adapter pipe broke: {exc}") from exc
        reply = self._read_frame()
        if reply.get("id") != payload["id"]:
            raise WireProtocolError(f"reply id {reply.get('id')} does not match request {payload['id']}")
        if "error" in reply:
            raise WireProtocolError(f"adapter error: {reply['error']}")
        if "output" not in reply:
            raise WireProtocolError("adapter reply carries neither output nor error")
        return reply

    # -- JvpOracle surface --------------------------------------------------

    def embed(self, x, tap: str | None = None) -> np.ndarray:
        if not self._can_embed:
            raise CapabilityMissing(f"adapter {self.model!r} does not declare embed")
        payload = {"op": "embed", "input": encode_f32(np.asarray(x).ravel())}
        if tap is not None:
            payload["tap"] = tap
        return decode_f32(self._request(payload)["output"])

    def jvp(self, x, v, tap: str | None = None) -> np.ndarray:
        if not self._can_jvp:
            raise CapabilityMissing(f"adapter {self.model!r} does not declare jvp")
        payload = {
            "op": "jvp",
            "input": encode_f32(np.asarray(x).ravel()),
            "direction": encode_f32(np.asarray(v).ravel()),
        }
        if tap is not None:
            payload["tap"] = tap
        return decode_f32(self._request(payload)["output"])

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._proc.stdin.write(json.dumps({"op": "shutdown", "id": self._next_id}) + "\n")
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError):
                pass
            try:
                self._proc.wait(timeout=10)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        for stream in (self._proc.stdin, self._proc.stdout):
            if stream is not None:
                stream.close()

    def __enter__(self) -> "AdapterOracle":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

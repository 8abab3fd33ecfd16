"""Drive an external encoder over the stdio wire protocol.

Writes a minimal adapter (a linear map that speaks SRA/1) to a temp file,
spawns it as a subprocess, and runs the same JER estimator against it that
the built-in encoders use. The estimator never learns it is talking to a
subprocess: AdapterOracle satisfies the JvpOracle interface.
"""

import sys
import tempfile
import textwrap
from pathlib import Path

import numpy as np

from sensorank import jacobian
from sensorank.wireclient import AdapterOracle

ADAPTER = textwrap.dedent(
    """
    import base64, json, sys
    import numpy as np

    rng = np.random.default_rng(0)
    W = rng.standard_normal((8, 32)) / np.sqrt(32)

    def b64(a):
        return base64.b64encode(np.asarray(a, dtype="<f4").tobytes()).decode()

    def unb64(s):
        return np.frombuffer(base64.b64decode(s), dtype="<f4").astype(np.float64)

    print(json.dumps({
        "protocol_version": "SRA/1", "model": "demo-linear",
        "input_shape": [32], "output_dim": 8,
        "capabilities": {"embed": True, "jvp": True, "taps": []},
        "reentrant": False,
    }), flush=True)

    for line in sys.stdin:
        req = json.loads(line)
        if req["op"] == "shutdown":
            break
        x = unb64(req["input"])
        if req["op"] == "embed":
            out = W @ x
        else:  # jvp of a linear map is the map itself
            out = W @ unb64(req["direction"])
        print(json.dumps({"id": req["id"], "output": b64(out)}), flush=True)
    """
)

with tempfile.NamedTemporaryFile("w", suffix=".py", delete=False) as fh:
    fh.write(ADAPTER)
    adapter_path = Path(fh.name)

# ------------------------------------------------------------------ handshake

with AdapterOracle([sys.executable, str(adapter_path)]) as oracle:
    print(f"connected to {oracle.model!r}: input {oracle.input_shape},"
          f" output dim {oracle.output_dim}")
    print(f"capabilities: embed={oracle.handshake['capabilities']['embed']}"
          f" jvp={oracle.handshake['capabilities']['jvp']}")

    # round trip one embedding; payloads are f32 on the wire
    x = np.linspace(-1, 1, 32)
    y = oracle.embed(x)
    print(f"\nembed([32]) -> {y.shape}, first values {np.round(y[:4], 4)}")

    # jvp linearity across the pipe (f32 transport caps the precision)
    v, w = np.random.default_rng(1).standard_normal((2, 32))
    lhs = oracle.jvp(x, 2.0 * v - 3.0 * w)
    rhs = 2.0 * oracle.jvp(x, v) - 3.0 * oracle.jvp(x, w)
    print(f"jvp linearity residual: {np.abs(lhs - rhs).max():.2e} (f32 wire)")

    # ---------------------------------------------------------- estimator run

    res = jacobian.jer_mean(oracle, n_images=20, k=8, seed=42)
    print(f"\nJER over the wire: {res.mean:.4f} ({res.n_images} probes, k={res.k})")

adapter_path.unlink()
print("adapter shut down cleanly")

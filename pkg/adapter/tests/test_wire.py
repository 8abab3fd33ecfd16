"""Protocol conformance, driven over real subprocess pipes."""

import numpy as np

from sensorank_adapter.wire import decode_f32, encode_f32

# ----------------------------------------------------------------- handshake


def test_handshake_shape(wire):
    p = wire("--model", "identity:8", "serve")
    hs = p.recv()
    assert hs["protocol_version"] == "SRA/1"
    assert hs["model"] == "identity"
    assert hs["checkpoint"] is None
    assert hs["input_shape"] == [8]
    assert hs["output_dim"] == 8
    assert hs["capabilities"] == {"embed": True, "jvp": True, "taps": []}
    assert hs["reentrant"] is False
    assert p.shutdown() == 0


def test_load_failure_emits_error_frame_and_exit_4(wire):
    p = wire("--model", "clip-vit-b32", "serve")
    frame = p.recv()
    assert "error" in frame and "openclip" in frame["error"]
    assert p.proc.wait(timeout=10) == 4


# -------------------------------------------------------------------- frames


def test_identity_echo_bit_exact(wire):
    p = wire("--model", "identity:16", "serve")
    p.recv()
    payload = encode_f32(np.random.default_rng(0).standard_normal(16))
    p.send({"op": "embed", "id": 0, "input": payload})
    reply = p.recv()
    assert reply["id"] == 0
    assert reply["output"] == payload  # same f32 bits, same base64
    assert p.shutdown() == 0


def test_identity_jvp_passes_direction_through(wire):
    p = wire("--model", "identity:4", "serve")
    p.recv()
    x = encode_f32([1.0, 2.0, 3.0, 4.0])
    v = encode_f32([0.5, -0.5, 0.25, 0.0])
    p.send({"op": "jvp", "id": 0, "input": x, "direction": v})
    assert p.recv()["output"] == v
    assert p.shutdown() == 0


def test_malformed_frame_gets_error_reply_and_loop_continues(wire):
    p = wire("--model", "identity:2", "serve")
    p.recv()
    p.send_raw("this is not json")
    err = p.recv()
    assert err["id"] is None and "malformed" in err["error"]
    # next well-formed request still answered
    p.send({"op": "embed", "id": 7, "input": encode_f32([1.0, 2.0])})
    assert p.recv()["id"] == 7
    assert p.shutdown() == 0


def test_non_object_frame_is_malformed(wire):
    p = wire("--model", "identity:2", "serve")
    p.recv()
    p.send_raw("[1, 2, 3]")
    assert "malformed" in p.recv()["error"]
    assert p.shutdown() == 0


def test_unknown_op_and_missing_key_replies(wire):
    p = wire("--model", "identity:2", "serve")
    p.recv()
    p.send({"op": "train", "id": 0})
    assert "unknown op" in p.recv()["error"]
    p.send({"op": "embed", "id": 1})
    assert "lacks 'input'" in p.recv()["error"]
    p.send({"op": "jvp", "id": 2, "input": encode_f32([1.0, 2.0])})
    assert "lacks 'direction'" in p.recv()["error"]
    assert p.shutdown() == 0


def test_wrong_payload_length_reported(wire):
    p = wire("--model", "identity:4", "serve")
    p.recv()
    p.send({"op": "embed", "id": 0, "input": encode_f32([1.0, 2.0])})
    err = p.recv()
    assert err["id"] == 0
    assert "2 floats, expected 4" in err["error"]
    assert p.shutdown() == 0


def test_eof_exits_cleanly(wire):
    p = wire("--model", "identity:2", "serve")
    p.recv()
    p.proc.stdin.close()
    assert p.proc.wait(timeout=10) == 0


# ------------------------------------------------------------- hosted models


def test_mlp_linearity_over_the_wire(wire):
    p = wire("--model", "mlp:3,8,8", "serve")
    hs = p.recv()
    assert hs["output_dim"] == 32

    rng = np.random.default_rng(0)
    x = rng.standard_normal(192)
    u, v = rng.standard_normal((2, 192))

    def jvp(direction, req_id):
        p.send({"op": "jvp", "id": req_id, "input": encode_f32(x),
                "direction": encode_f32(direction)})
        return decode_f32(p.recv()["output"])

    lhs = jvp(u + v, 0)
    rhs = jvp(u, 1) + jvp(v, 2)
    assert np.abs(lhs - rhs).max() / np.abs(rhs).max() < 1e-4
    assert p.shutdown() == 0


def test_mlp_embed_deterministic_across_processes(wire):
    x = encode_f32(np.random.default_rng(5).standard_normal(192))
    outs = []
    for _ in range(2):
        p = wire("--model", "mlp:3,8,8", "serve")
        p.recv()
        p.send({"op": "embed", "id": 0, "input": x})
        outs.append(p.recv()["output"])
        assert p.shutdown() == 0
    assert outs[0] == outs[1]


# ----------------------------------------------------- primary client interop


def test_primary_adapter_oracle_speaks_to_us():
    sensorank = __import__("sensorank")  # consumer side of the interface
    with sensorank.AdapterOracle(
        "sensorank-adapter --model identity:6 serve"
    ) as oracle:
        assert oracle.model == "identity"
        assert oracle.input_shape == (6,)
        x = np.arange(6.0)
        assert np.array_equal(oracle.embed(x), x)
        assert np.array_equal(oracle.jvp(x, 2.0 * x), 2.0 * x)

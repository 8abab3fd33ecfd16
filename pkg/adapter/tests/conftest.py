import json
import subprocess
import sys

import numpy as np
import pytest
from PIL import Image

# ------------------------------------------------------------- wire harness


class WireProc:
    """Raw line-frame client around an adapter subprocess."""

    def __init__(self, *cli_args: str):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "sensorank_adapter.cli", *cli_args],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def recv(self) -> dict:
        line = self.proc.stdout.readline()
        assert line, f"adapter closed stdout (exit {self.proc.poll()})"
        return json.loads(line)

    def send(self, obj) -> None:
        self.proc.stdin.write(json.dumps(obj) + "\n")
        self.proc.stdin.flush()

    def send_raw(self, text: str) -> None:
        self.proc.stdin.write(text + "\n")
        self.proc.stdin.flush()

    def shutdown(self) -> int:
        if self.proc.poll() is None:
            try:
                self.send({"op": "shutdown", "id": 9999})
            except (BrokenPipeError, OSError):
                pass
        try:
            return self.proc.wait(timeout=10)
        finally:
            self.proc.stdin.close()
            self.proc.stdout.close()


@pytest.fixture
def wire():
    procs = []

    def start(*cli_args: str) -> WireProc:
        p = WireProc(*cli_args)
        procs.append(p)
        return p

    yield start
    for p in procs:
        if p.proc.poll() is None:
            p.proc.kill()
            p.proc.wait()


# ----------------------------------------------------------- image fixtures


@pytest.fixture(scope="session")
def image_dir(tmp_path_factory):
    """Three distinct PNGs plus a manifest listing them, no toolkit needed."""
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(0)
    names = []
    for i in range(3):
        img = rng.integers(0, 256, size=(224, 224, 3), dtype=np.uint8)
        name = f"img{i}.png"
        Image.fromarray(img).save(root / name)
        names.append(name)
    manifest = {
        "kind": "binding",
        "seed": 0,
        "generator_version": "1",
        "entries": [
            {"id": "t0", "images": names[:2], "target_index": 0, "kinds": ["target"]},
            {"id": "t1", "images": names[2:], "target_index": 0, "kinds": ["target"]},
        ],
    }
    (root / "manifest.json").write_text(json.dumps(manifest))
    return root, names


# ------------------------------------------------------ acceptance reporting

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_acceptance(name: str, ok: bool, detail: str = "") -> bool:
    ACCEPTANCE_RESULTS.append((name, ok, detail))
    return ok


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {name}"
        if detail:
            line += f"  --  {detail}"
        terminalreporter.write_line(line)

import numpy as np
import pytest

from sensorank import probes

# ---- acceptance reporting ---------------------------------------------------
# test_acceptance.py records one line per release criterion; the summary hook
# prints them even under output capture so every run shows the full scorecard.

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record_acceptance(name: str, ok: bool, detail: str = "") -> bool:
    ACCEPTANCE_RESULTS.append((name, bool(ok), detail))
    return bool(ok)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        line = f"[{'PASS' if ok else 'FAIL'}] {name}"
        if detail:
            line += f"  --  {detail}"
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def binding_manifest():
    """Symbolic 40-trial binding manifest; no pixels rendered."""
    return probes.build_binding_manifest(40, seed=42)


@pytest.fixture(scope="session")
def samediff_manifest():
    return probes.build_samediff_manifest(40, seed=42)


@pytest.fixture(scope="session")
def binding_dataset(tmp_path_factory):
    """A tiny rendered binding dataset on disk (manifest + PNGs)."""
    out = tmp_path_factory.mktemp("datasets") / "binding"
    manifest = probes.gen_dataset("binding", 4, 42, out)
    return out, manifest


def random_embeddings(ids, dim, seed=0):
    rng = np.random.default_rng(seed)
    from sensorank.embio import EmbeddingMatrix

    return EmbeddingMatrix(rng.standard_normal((len(ids), dim)), list(ids))

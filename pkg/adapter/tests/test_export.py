import json

import numpy as np
import pytest

from sensorank_adapter import cli
from sensorank_adapter.export import ExportError, export_embeddings
from sensorank_adapter.models import IdentityModel, TorchMlpModel


def test_identity_export_n3(image_dir, tmp_path):
    root, names = image_dir
    out = tmp_path / "id.emb"
    n, d = export_embeddings(root / "manifest.json", IdentityModel(), out)
    assert (n, d) == (3, 3 * 224 * 224)
    assert out.exists()


def test_export_parses_in_primary_toolkit(image_dir, tmp_path):
    from sensorank import read_embeddings

    root, names = image_dir
    out = tmp_path / "mlp.emb"
    n, d = export_embeddings(root / "manifest.json", TorchMlpModel(), out)
    emb = read_embeddings(out)
    assert (emb.n, emb.dim) == (n, d) == (3, 32)
    assert emb.ids == names


def test_rerun_is_byte_identical(image_dir, tmp_path):
    root, _ = image_dir
    a, b = tmp_path / "a.emb", tmp_path / "b.emb"
    export_embeddings(root / "manifest.json", TorchMlpModel(), a)
    export_embeddings(root / "manifest.json", TorchMlpModel(), b)
    assert a.read_bytes() == b.read_bytes()


def test_missing_images_listed_per_name(image_dir, tmp_path):
    root, names = image_dir
    manifest = json.loads((root / "manifest.json").read_text())
    manifest["entries"][0]["images"] = ["gone0.png", names[0], "gone1.png"]
    broken = tmp_path / "manifest.json"
    broken.write_text(json.dumps(manifest))

    with pytest.raises(ExportError) as exc:
        export_embeddings(broken, IdentityModel(), tmp_path / "x.emb", root=root)
    msg = str(exc.value)
    assert "gone0.png" in msg and "gone1.png" in msg
    assert names[0] not in msg  # the good image is not blamed


def test_corrupt_image_listed(image_dir, tmp_path):
    root, names = image_dir
    bad_root = tmp_path / "imgs"
    bad_root.mkdir()
    for name in names:
        (bad_root / name).write_bytes((root / name).read_bytes())
    (bad_root / names[1]).write_bytes(b"not a png at all")

    with pytest.raises(ExportError, match=names[1]):
        export_embeddings(root / "manifest.json", IdentityModel(),
                          tmp_path / "x.emb", root=bad_root)


def test_model_input_shape_mismatch_reported(image_dir, tmp_path):
    root, names = image_dir
    with pytest.raises(ExportError, match="model input"):
        export_embeddings(root / "manifest.json", IdentityModel((8,)), tmp_path / "x.emb")


@pytest.mark.parametrize("content", ["{broken", '{"entries": [{"id": "x"}]}'])
def test_bad_manifest_rejected(tmp_path, content):
    path = tmp_path / "manifest.json"
    path.write_text(content)
    with pytest.raises(ExportError, match="bad manifest"):
        export_embeddings(path, IdentityModel(), tmp_path / "x.emb")


def test_empty_manifest_rejected(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text('{"entries": []}')
    with pytest.raises(ExportError, match="no images"):
        export_embeddings(path, IdentityModel(), tmp_path / "x.emb")


# ------------------------------------------------------------------ CLI exits


def test_cli_export_happy_path(image_dir, tmp_path, capsys):
    root, _ = image_dir
    out = tmp_path / "cli.emb"
    code = cli.main(["--model", "mlp", "export",
                     "--manifest", str(root / "manifest.json"), "--out", str(out)])
    assert code == 0
    assert "3 x 32" in capsys.readouterr().out
    assert out.exists()


def test_cli_export_data_error_exit_3(image_dir, tmp_path, capsys):
    root, _ = image_dir
    code = cli.main(["--model", "identity", "export",
                     "--manifest", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x.emb")])
    assert code == 3
    assert "nope.json" in capsys.readouterr().err


def test_cli_model_load_failure_exit_4(image_dir, tmp_path, capsys):
    root, _ = image_dir
    code = cli.main(["--model", "dinov2-vit-l14", "export",
                     "--manifest", str(root / "manifest.json"), "--out", str(tmp_path / "x.emb")])
    assert code == 4
    assert "torch.hub" in capsys.readouterr().err

"""Bundled reference leaderboard for the statistics suite.

table2.csv carries published evaluation results for 21 pretrained vision
encoders (geometry metrics, JER, same/different, binding accuracy);
dims.csv carries each encoder's embedding dimension for the
dimensionality-controlled analyses. The tests treat these numbers as frozen
ground truth, so edit them only with a matching test update.
"""

from __future__ import annotations

from importlib import resources

from ..stats import ModelRecord, load_records


def _fixture_path(name: str):
    return resources.files("sensorank.fixtures").joinpath(name)


def reference_records(with_dims: bool = True) -> list[ModelRecord]:
    """The 21-model leaderboard, optionally with embed_dim covariates."""
    table = _fixture_path("table2.csv")
    dims = _fixture_path("dims.csv") if with_dims else None
    with resources.as_file(table) as table_file:
        if dims is None:
            return load_records(table_file)
        with resources.as_file(dims) as dims_file:
            return load_records(table_file, dims_file)

"""Task readouts: binding selection and same/different thresholding.

Three selection rules are implemented on top of frozen embeddings: plain
cosine argmax, neighborhood-overlap kNN, and local-PCA projection followed
by cosine. All three break ties toward the lowest candidate index and
record a tie flag so chance-level results stay auditable.
"""

from __future__ import annotations

import dataclasses
import warnings

import numpy as np

from .embio import EmbeddingMatrix
from .errors import (
    DegenerateLabels,
    InsufficientPool,
    ManifestMismatch,
    ZeroVector,
)
from .probes import DatasetManifest

READOUT_KINDS = ("cosine", "knn", "localpca")

# Eigenvalues below this fraction of the leading one do not count toward the
# usable rank of a local PCA basis.
RANK_EPS = 1e-12


@dataclasses.dataclass(frozen=True)
class TrialEmbeddings:
    query: np.ndarray
    candidates: np.ndarray  # (4, D)
    target_index: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "query", np.asarray(self.query, dtype=np.float64))
        object.__setattr__(self, "candidates", np.asarray(self.candidates, dtype=np.float64))
        if self.candidates.shape[0] != 4:
            raise ValueError(f"expected 4 candidates, got {self.candidates.shape[0]}")
        if not (np.all(np.isfinite(self.query)) and np.all(np.isfinite(self.candidates))):
            raise ValueError("trial embeddings must be finite")
        if not 0 <= self.target_index < 4:
            raise ValueError(f"target_index out of range: {self.target_index}")


@dataclasses.dataclass(frozen=True)
class Selection:
    index: int
    tie: bool
    scores: np.ndarray  # per-candidate similarity in the readout's own scale


def _unit(v: np.ndarray, slot: str) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ZeroVector(f"zero-norm vector in slot {slot!r}")
    return v / norm


def _pick(scores: np.ndarray) -> tuple[int, bool]:
    """Argmax with lowest-index tie-breaking; exact equality counts as a tie."""
    best = int(np.argmax(scores))
    tie = bool(np.any(scores[np.arange(scores.size) != best] == scores[best]))
    return best, tie


def cosine_select(t: TrialEmbeddings) -> Selection:
    q = _unit(t.query, "query")
    scores = np.array([float(q @ _unit(t.candidates[i], f"candidate {i}")) for i in range(4)])
    index, tie = _pick(scores)
    return Selection(index, tie, scores)


def _unit_rows(values: np.ndarray, what: str) -> np.ndarray:
    norms = np.linalg.norm(values, axis=1)
    bad = np.where(norms == 0.0)[0]
    if bad.size:
        raise ZeroVector(f"zero-norm vector in {what} row {int(bad[0])}")
    return values / norms[:, None]


def _neighbor_set(v: np.ndarray, pool_unit: np.ndarray, k: int, slot: str) -> frozenset[int]:
    dist = 1.0 - pool_unit @ _unit(v, slot)
    order = np.argsort(dist, kind="stable")  # stable: equal distances resolve to lowest index
    return frozenset(int(i) for i in order[:k])


def knn_select(t: TrialEmbeddings, pool: EmbeddingMatrix, k: int = 60) -> Selection:
    """Candidate whose cosine k-NN set in the pool best overlaps the query's.

    Overlap is Jaccard similarity of the two index sets. The readout asks
    whether query and candidate occupy the same neighborhood of the dataset,
    not whether they are pointwise close.
    """
    if pool.n <= k:
        raise InsufficientPool(f"pool has {pool.n} rows, need more than k={k}")
    pool_unit = _unit_rows(pool.values, "pool")
    q_set = _neighbor_set(t.query, pool_unit, k, "query")
    scores = np.empty(4)
    for i in range(4):
        c_set = _neighbor_set(t.candidates[i], pool_unit, k, f"candidate {i}")
        scores[i] = len(q_set & c_set) / len(q_set | c_set)
    index, tie = _pick(scores)
    return Selection(index, tie, scores)


def localpca_select(
    t: TrialEmbeddings, pool: EmbeddingMatrix, components: int = 32, neighborhood: int = 50
) -> Selection:
    """Cosine selection after projecting onto the query's local PCA basis.

    The basis comes from the covariance of the query's `neighborhood`
    nearest pool rows (cosine distance). Raw vectors are projected without
    centering: when the basis is complete this is an isometry, so selection
    provably reduces to cosine_select. Rank-deficient neighborhoods fall
    back to the available rank with a warning; a candidate projecting to
    exactly zero scores -1 rather than erroring.
    """
    if not components <= neighborhood < pool.n:
        raise InsufficientPool(
            f"need pool rows > neighborhood >= components, got {pool.n}, {neighborhood}, {components}"
        )
    pool_unit = _unit_rows(pool.values, "pool")
    dist = 1.0 - pool_unit @ _unit(t.query, "query")
    order = np.argsort(dist, kind="stable")[:neighborhood]
    local = pool.values[order]
    centered = local - local.mean(axis=0)
    cov = centered.T @ centered / (neighborhood - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    eigvals, eigvecs = eigvals[::-1], eigvecs[:, ::-1]
    rank = int(np.sum(eigvals > RANK_EPS * max(eigvals[0], 0.0)))
    use = min(components, rank)
    if use < components:
        warnings.warn(
            f"local PCA basis rank {rank} below requested components {components}; using {use}",
            stacklevel=2,
        )
    if use == 0:
        # Degenerate neighborhood: no basis at all, every candidate ties.
        return Selection(0, True, np.full(4, -1.0))
    basis = eigvecs[:, :use]

    def project_score(v: np.ndarray) -> float | None:
        p = basis.T @ v
        norm = np.linalg.norm(p)
        return None if norm == 0.0 else p / norm

    pq = project_score(t.query)
    scores = np.empty(4)
    for i in range(4):
        pc = project_score(t.candidates[i])
        scores[i] = -1.0 if (pq is None or pc is None) else float(pq @ pc)
    index, tie = _pick(scores)
    return Selection(index, tie, scores)


# --------------------------------------------------------------------------
# same/different thresholding
# --------------------------------------------------------------------------

PERCENTILE_GRID = tuple(range(0, 101, 5))


@dataclasses.dataclass(frozen=True)
class SameDiffResult:
    accuracy: float
    threshold: float


def samediff_accuracy(distances, labels) -> SameDiffResult:
    """Best in-sample accuracy of "predict SAME iff d < tau" over the
    21-point percentile grid of the distances (linear interpolation);
    ties in accuracy resolve to the lowest threshold."""
    distances = np.asarray(distances, dtype=np.float64)
    labels = np.asarray(labels)
    if distances.shape != labels.shape or distances.ndim != 1:
        raise ValueError("distances and labels must be equal-length vectors")
    if distances.size < 2:
        raise ValueError("need at least two pairs")
    is_same = labels == "same"
    if is_same.all() or (~is_same).all():
        raise DegenerateLabels("need both classes to fit a threshold")

    thresholds = np.percentile(distances, PERCENTILE_GRID, method="linear")
    best_acc, best_tau = -1.0, None
    for tau in thresholds:  # ascending, so strict improvement keeps the lowest tau
        acc = float(np.mean((distances < tau) == is_same))
        if acc > best_acc:
            best_acc, best_tau = acc, float(tau)
    return SameDiffResult(accuracy=best_acc, threshold=best_tau)


# --------------------------------------------------------------------------
# dataset-level evaluation
# --------------------------------------------------------------------------


@dataclasses.dataclass
class ReadoutResult:
    accuracy: float
    n: int
    per_trial: list[dict]
    readout_kind: str


def _gather(emb_index: dict[str, int], values: np.ndarray, paths: list[str], missing: list[str]) -> np.ndarray | None:
    rows = []
    for path in paths:
        i = emb_index.get(path)
        if i is None:
            missing.append(path)
        else:
            rows.append(values[i])
    return None if len(rows) != len(paths) else np.asarray(rows)


def eval_binding(
    manifest: DatasetManifest,
    embeddings: EmbeddingMatrix,
    readout_kind: str = "cosine",
    pool_policy: str = "dataset",
    pool: EmbeddingMatrix | None = None,
    knn_k: int = 60,
    components: int = 32,
    neighborhood: int = 50,
) -> ReadoutResult:
    """Accuracy and margin diagnostics for a binding manifest.

    The margin is the similarity gap between target and best distractor in
    the readout's own score space, so "correct but barely" and "wrong with
    high confidence" stay distinguishable. For kNN/local-PCA the reference
    pool defaults to every query+candidate embedding in the dataset.
    """
    if manifest.kind != "binding":
        raise ValueError(f"expected a binding manifest, got kind={manifest.kind!r}")
    if readout_kind not in READOUT_KINDS:
        raise ValueError(f"readout_kind must be one of {READOUT_KINDS}, got {readout_kind!r}")
    if pool_policy not in ("dataset", "external"):
        raise ValueError(f"pool_policy must be 'dataset' or 'external', got {pool_policy!r}")

    emb_index = embeddings.index()
    missing: list[str] = []
    if readout_kind in ("knn", "localpca"):
        if pool_policy == "external":
            if pool is None:
                raise ValueError("pool_policy='external' requires a pool")
        else:
            rows = _gather(emb_index, embeddings.values, manifest.image_paths(), missing)
            if missing:
                raise ManifestMismatch(f"embeddings missing for: {sorted(set(missing))[:10]}")
            pool = EmbeddingMatrix(rows, manifest.image_paths())

    per_trial: list[dict] = []
    correct = 0
    for entry in manifest.entries:
        rows = _gather(emb_index, embeddings.values, entry["images"], missing)
        if rows is None:
            continue
        trial = TrialEmbeddings(rows[0], rows[1:], entry["target_index"])
        if readout_kind == "cosine":
            sel = cosine_select(trial)
        elif readout_kind == "knn":
            sel = knn_select(trial, pool, k=knn_k)
        else:
            sel = localpca_select(trial, pool, components=components, neighborhood=neighborhood)
        distractor_scores = np.delete(sel.scores, trial.target_index)
        margin = float(sel.scores[trial.target_index] - distractor_scores.max())
        hit = sel.index == trial.target_index
        correct += hit
        per_trial.append(
            {
                "id": entry["id"],
                "selected": sel.index,
                "correct": bool(hit),
                "margin": margin,
                "tie": sel.tie,
            }
        )
    if missing:
        raise ManifestMismatch(f"embeddings missing for: {sorted(set(missing))[:10]}")
    n = len(per_trial)
    return ReadoutResult(accuracy=correct / n, n=n, per_trial=per_trial, readout_kind=readout_kind)


def eval_samediff(manifest: DatasetManifest, embeddings: EmbeddingMatrix) -> dict:
    """Cosine-distance thresholding over a same/different manifest."""
    if manifest.kind != "samediff":
        raise ValueError(f"expected a samediff manifest, got kind={manifest.kind!r}")
    emb_index = embeddings.index()
    missing: list[str] = []
    distances, labels, ids = [], [], []
    for entry in manifest.entries:
        rows = _gather(emb_index, embeddings.values, entry["images"], missing)
        if rows is None:
            continue
        a = _unit(rows[0], f"{entry['id']} image a")
        b = _unit(rows[1], f"{entry['id']} image b")
        distances.append(1.0 - float(a @ b))
        labels.append(entry["label"])
        ids.append(entry["id"])
    if missing:
        raise ManifestMismatch(f"embeddings missing for: {sorted(set(missing))[:10]}")
    result = samediff_accuracy(distances, labels)
    per_pair = [
        {
            "id": pid,
            "distance": d,
            "label": lab,
            "predicted": "same" if d < result.threshold else "different",
        }
        for pid, d, lab in zip(ids, distances, labels)
    ]
    return {
        "accuracy": result.accuracy,
        "threshold": result.threshold,
        "n": len(per_pair),
        "per_pair": per_pair,
    }

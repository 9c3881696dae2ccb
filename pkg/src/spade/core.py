"""Shared domain types: ligands, datasets, classifiers, configs, endpoints."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

BINARY = "binary"
DENSE = "dense"


class DatasetError(ValueError):
    """Raised when a dataset violates a structural invariant."""


class ConfigError(ValueError):
    """Raised when a policy/endpoint configuration is invalid."""


@dataclass(frozen=True)
class Ligand:
    """One candidate molecule: an opaque id plus its embedding vector."""

    id: str
    embedding: np.ndarray

    def __post_init__(self):
        emb = np.asarray(self.embedding, dtype=np.float64)
        object.__setattr__(self, "embedding", emb)


@dataclass(frozen=True)
class Observation:
    """A measured PIC for one ligand."""

    ligand_id: str
    pic: float

    def __post_init__(self):
        if not math.isfinite(self.pic):
            raise DatasetError(f"non-finite PIC for ligand {self.ligand_id!r}")


@dataclass(frozen=True)
class EndpointSpec:
    """Stopping rule: mean of the top-k PICs >= target, or k-th best PIC >= target."""

    kind: str  # "avg_top_k" | "min_top_k"
    k: int
    target: float

    AVG = "avg_top_k"
    MIN = "min_top_k"

    def __post_init__(self):
        if self.kind not in (self.AVG, self.MIN):
            raise ConfigError(f"unknown endpoint kind {self.kind!r}")
        if self.k < 1:
            raise ConfigError("endpoint k must be >= 1")

    @property
    def label(self) -> str:
        short = "avg" if self.kind == self.AVG else "min"
        return f"{short}{self.k}@{self.target:g}"


@dataclass(frozen=True)
class PolicyConfig:
    """Hyperparameters for the selection policies.

    Defaults follow the standard setting: alpha=5, sigma=1, beta=0.05,
    n_max=20, p_plus=7, batch_size=10, help_limit=10.  Ablation switches:
    sigma=0 disables the robustness term, alpha=1 disables exponential
    weighting, help_limit=None lifts the per-ligand help cap.
    """

    sigma: float = 1.0
    alpha: float = 5.0
    beta: float = 0.05
    n_max: int = 20
    p_plus: float = 7.0
    batch_size: int = 10
    help_limit: Optional[int] = 10
    solver_max_iter: int = 2000
    solver_tol: float = 1e-7

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError("sigma must be >= 0")
        if self.alpha < 1:
            raise ConfigError("alpha must be >= 1")
        if not 0 <= self.beta < 1:
            raise ConfigError("beta must be in [0, 1)")
        if self.n_max < 1:
            raise ConfigError("n_max must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.help_limit is not None and self.help_limit < 0:
            raise ConfigError("help_limit must be >= 0 or None")

    def with_overrides(self, **kwargs) -> "PolicyConfig":
        return replace(self, **kwargs)


@dataclass(frozen=True)
class LinearClassifier:
    """Affine scorer x -> c + w.x."""

    c: float
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        object.__setattr__(self, "w", w)
        if not math.isfinite(self.c) or not np.all(np.isfinite(w)):
            raise ValueError("classifier parameters must be finite")

    def score(self, X: np.ndarray) -> np.ndarray:
        return self.c + np.asarray(X, dtype=np.float64) @ self.w


class Dataset:
    """A ground-truth candidate pool: ligand ids, embeddings, and hidden PICs.

    Embeddings are stored row-wise in a dense float matrix; ``kind`` records
    whether they originated as binary fingerprints (enables the packed-bit
    scoring fast path) or dense vectors.  PICs are the simulator's ground
    truth and must stay hidden from policies until a ligand is tested.
    """

    def __init__(self, protein_id: str, ids: Sequence[str], X: np.ndarray,
                 pics: Sequence[float], kind: str = BINARY):
        self.protein_id = str(protein_id)
        self.ids = [str(i) for i in ids]
        self.X = np.asarray(X, dtype=np.float64)
        self.pics = np.asarray(pics, dtype=np.float64)
        self.kind = kind
        self._index = {lid: i for i, lid in enumerate(self.ids)}

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return self.X.shape[1] if self.X.ndim == 2 else 0

    def index_of(self, ligand_id: str) -> int:
        return self._index[ligand_id]

    def pic_of(self, ligand_id: str) -> float:
        return float(self.pics[self._index[ligand_id]])

    def ligands(self):
        return [Ligand(lid, self.X[i]) for i, lid in enumerate(self.ids)]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.protein_id == other.protein_id
                and self.ids == other.ids
                and self.kind == other.kind
                and self.X.shape == other.X.shape
                and np.array_equal(self.X, other.X)
                and np.array_equal(self.pics, other.pics))


def validate_dataset(dataset: Dataset) -> Dataset:
    """Check structural invariants; returns the dataset unchanged if valid.

    Raises DatasetError naming the offending ligand for dimension
    mismatches, duplicate ids, and missing or non-finite PICs.
    """
    if dataset.kind not in (BINARY, DENSE):
        raise DatasetError(f"unknown embedding kind {dataset.kind!r}")
    n = len(dataset.ids)
    if dataset.X.ndim != 2 or dataset.X.shape[0] != n:
        raise DatasetError(
            f"embedding matrix shape {dataset.X.shape} does not match {n} ligands")
    if dataset.pics.shape != (n,):
        raise DatasetError(
            f"PIC vector length {dataset.pics.shape} does not match {n} ligands")
    seen = set()
    for lid in dataset.ids:
        if lid in seen:
            raise DatasetError(f"duplicate ligand id {lid!r}")
        seen.add(lid)
    bad = np.flatnonzero(~np.all(np.isfinite(dataset.X), axis=1))
    if bad.size:
        raise DatasetError(f"non-finite embedding for ligand {dataset.ids[bad[0]]!r}")
    bad = np.flatnonzero(~np.isfinite(dataset.pics))
    if bad.size:
        raise DatasetError(f"non-finite PIC for ligand {dataset.ids[bad[0]]!r}")
    return dataset


def dataset_from_ligands(protein_id: str, ligands: Sequence[Ligand],
                         observations: Sequence[Observation],
                         kind: str = BINARY) -> Dataset:
    """Assemble and validate a Dataset from per-ligand pieces.

    Every ligand must have exactly one observation.  Dimension consistency is
    checked here because ragged embeddings cannot be stacked into a matrix.
    """
    if not ligands:
        return validate_dataset(Dataset(protein_id, [], np.zeros((0, 0)), [], kind))
    dims = {lig.embedding.shape for lig in ligands}
    if len(dims) > 1:
        offender = next(l for l in ligands if l.embedding.shape != ligands[0].embedding.shape)
        raise DatasetError(
            f"dimension mismatch: ligand {offender.id!r} has d={offender.embedding.shape[0]}, "
            f"expected d={ligands[0].embedding.shape[0]}")
    pic_by_id = {}
    for obs in observations:
        if obs.ligand_id in pic_by_id:
            raise DatasetError(f"duplicate observation for ligand {obs.ligand_id!r}")
        pic_by_id[obs.ligand_id] = obs.pic
    pics = []
    for lig in ligands:
        if lig.id not in pic_by_id:
            raise DatasetError(f"missing PIC for ligand {lig.id!r}")
        pics.append(pic_by_id[lig.id])
    X = np.stack([lig.embedding for lig in ligands])
    return validate_dataset(Dataset(protein_id, [l.id for l in ligands], X, pics, kind))

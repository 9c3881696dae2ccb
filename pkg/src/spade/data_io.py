"""Dataset ingestion, serialization, and calibrated synthetic generation.

CSV rows are `protein_id,ligand_id,embedding,pic` with the embedding either a
hex string (packed binary fingerprint, dimension = 8 * bytes) or
`;`-separated decimals (dense).  The binary format packs fingerprints
bit-exactly and preserves any dimension.  Synthetic datasets plant a sparse
linear signal in random fingerprints and map raw scores through a monotone
piecewise-linear quantile transform so the realized PIC distribution hits the
configured median and tail fractions.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import BINARY, DENSE, Dataset, DatasetError, validate_dataset

MAGIC = b"SPDF"
FORMAT_VERSION = 1
_KIND_CODE = {BINARY: 0, DENSE: 1}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}

_HEX_CHARS = set("0123456789abcdefABCDEF")


class FormatError(DatasetError):
    """Raised for malformed dataset files."""


def save_csv(dataset: Dataset, path) -> None:
    """Write one row per ligand; binary embeddings as hex when d % 8 == 0.

    Binary fingerprints whose dimension is not a byte multiple fall back to
    the dense notation (the packed binary format has no such restriction).
    """
    use_hex = dataset.kind == BINARY and dataset.dim % 8 == 0 and dataset.dim > 0
    with open(path, "w", encoding="utf-8") as fh:
        for i, lid in enumerate(dataset.ids):
            row = dataset.X[i]
            if use_hex:
                emb = np.packbits(row.astype(np.uint8)).tobytes().hex()
            else:
                emb = ";".join(repr(float(v)) for v in row)
            fh.write(f"{dataset.protein_id},{lid},{emb},{repr(float(dataset.pics[i]))}\n")


def load_csv(path) -> Dataset:
    """Parse and validate; errors name the offending line number."""
    path = Path(path)
    ids: list[str] = []
    rows: list[np.ndarray] = []
    pics: list[float] = []
    protein_id = None
    kind = None
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise FormatError(f"line {lineno}: expected 4 fields, got {len(parts)}")
            prot, lid, emb, pic_str = parts
            if protein_id is None:
                protein_id = prot
            elif prot != protein_id:
                raise FormatError(
                    f"line {lineno}: protein {prot!r} differs from {protein_id!r}")
            if kind is None:
                kind = BINARY if (";" not in emb and set(emb) <= _HEX_CHARS
                                  and emb) else DENSE
            try:
                if kind == BINARY:
                    vec = np.unpackbits(np.frombuffer(bytes.fromhex(emb),
                                                      dtype=np.uint8)).astype(np.float64)
                else:
                    vec = np.array([float(v) for v in emb.split(";")], dtype=np.float64)
            except ValueError as exc:
                raise FormatError(f"line {lineno}: bad embedding ({exc})") from exc
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise FormatError(
                    f"line {lineno}: embedding dimension {vec.size} != {dim}")
            try:
                pic = float(pic_str)
            except ValueError as exc:
                raise FormatError(f"line {lineno}: bad PIC {pic_str!r}") from exc
            ids.append(lid)
            rows.append(vec)
            pics.append(pic)
    if protein_id is None:
        raise FormatError(f"{path}: empty dataset file")
    X = np.stack(rows) if rows else np.zeros((0, 0))
    return validate_dataset(Dataset(protein_id, ids, X, pics, kind or BINARY))


def save_binary(dataset: Dataset, path) -> None:
    """Compact little-endian format; bit-exact round trip for any dimension."""
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIBQ", FORMAT_VERSION, dataset.dim,
                             _KIND_CODE[dataset.kind], dataset.n))
        prot = dataset.protein_id.encode("utf-8")
        fh.write(struct.pack("<H", len(prot)))
        fh.write(prot)
        row_bytes = (dataset.dim + 7) // 8
        for i, lid in enumerate(dataset.ids):
            name = lid.encode("utf-8")
            fh.write(struct.pack("<H", len(name)))
            fh.write(name)
            if dataset.kind == BINARY:
                fh.write(np.packbits(dataset.X[i].astype(np.uint8)).tobytes()
                         .ljust(row_bytes, b"\0"))
            else:
                fh.write(dataset.X[i].astype("<f8").tobytes())
            fh.write(struct.pack("<d", float(dataset.pics[i])))


def load_binary(path) -> Dataset:
    path = Path(path)
    data = path.read_bytes()
    if data[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic bytes (not a dataset file)")
    version, dim, kind_code, count = struct.unpack_from("<IIBQ", data, 4)
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    if kind_code not in _CODE_KIND:
        raise FormatError(f"{path}: unknown embedding kind code {kind_code}")
    kind = _CODE_KIND[kind_code]
    off = 4 + struct.calcsize("<IIBQ")

    def take(n):
        nonlocal off
        if off + n > len(data):
            raise FormatError(f"{path}: truncated file")
        chunk = data[off:off + n]
        off += n
        return chunk

    (plen,) = struct.unpack("<H", take(2))
    protein_id = take(plen).decode("utf-8")
    ids = []
    X = np.zeros((count, dim))
    pics = np.zeros(count)
    row_bytes = (dim + 7) // 8
    for i in range(count):
        (nlen,) = struct.unpack("<H", take(2))
        ids.append(take(nlen).decode("utf-8"))
        if kind == BINARY:
            packed = np.frombuffer(take(row_bytes), dtype=np.uint8)
            X[i] = np.unpackbits(packed)[:dim]
        else:
            X[i] = np.frombuffer(take(8 * dim), dtype="<f8")
        (pics[i],) = struct.unpack("<d", take(8))
    if off != len(data):
        raise FormatError(f"{path}: {len(data) - off} trailing bytes")
    return validate_dataset(Dataset(protein_id, ids, X, pics, kind))


@dataclass(frozen=True)
class SyntheticConfig:
    """Knobs for generated benchmarks.

    The planted signal is linear in a sparse set of informative bits, so the
    ground truth has structure an affine scorer can learn, mirroring
    fingerprint-activity correlation; the signal is standardized before noise
    is added, so noise_scale is a noise-to-signal ratio.  Quantile anchors
    follow the observed sparsity regime: median PIC 5.9, roughly 75% below 7,
    7% of ligands at or above 8, 2.7% at or above 8.5, and a thin extreme
    tail (0.07% above 9.3).
    """

    n_ligands: int = 5000
    dim: int = 2048
    bit_density: float = 0.05
    signal_bits: int = 64
    noise_scale: float = 1.0
    median_pic: float = 5.9
    frac_ge_8: float = 0.07
    frac_ge_85: float = 0.027
    mid_anchors: tuple = ((0.75, 6.7), (0.90, 7.4))
    tail_anchor: tuple = (0.9993, 9.3)
    pic_min: float = 5.0
    pic_max: float = 9.8
    seed: int = 0
    protein_id: str = ""

    def __post_init__(self):
        if not (0 < self.frac_ge_85 < self.frac_ge_8 < 1):
            raise DatasetError("anchor fractions must be in (0,1), decreasing in threshold")
        if self.n_ligands < 1 or self.dim < 1:
            raise DatasetError("need at least one ligand and one dimension")
        if not 0 < self.bit_density < 1:
            raise DatasetError("bit_density must be in (0,1)")
        if not 0 <= self.signal_bits <= self.dim:
            raise DatasetError("signal_bits must be in [0, dim]")
        if self.noise_scale < 0:
            raise DatasetError("noise_scale must be >= 0")
        knots_u, knots_pic = self.quantile_knots()
        if not (np.all(np.diff(knots_u) > 0) and np.all(np.diff(knots_pic) > 0)):
            raise DatasetError(f"infeasible anchors: {list(zip(knots_u, knots_pic))}")

    def quantile_knots(self):
        points = [(0.0, self.pic_min), (0.5, self.median_pic)]
        points.extend(self.mid_anchors)
        points.append((1.0 - self.frac_ge_8, 8.0))
        points.append((1.0 - self.frac_ge_85, 8.5))
        points.append(tuple(self.tail_anchor))
        points.append((1.0, self.pic_max))
        u, pic = zip(*points)
        return np.array(u), np.array(pic)


def default_signal_bits(dim: int) -> int:
    """Scale the informative-bit count down with the embedding dimension."""
    base = SyntheticConfig.__dataclass_fields__["signal_bits"].default
    return min(base, max(1, dim // 8))


def generate_synthetic(config: SyntheticConfig) -> Dataset:
    """Deterministic-in-seed synthetic pool; passes validate_dataset."""
    rng = np.random.default_rng(config.seed)
    n, d = config.n_ligands, config.dim
    X = (rng.random((n, d)) < config.bit_density).astype(np.uint8)
    raw = np.zeros(n)
    if config.signal_bits:
        informative = rng.choice(d, size=config.signal_bits, replace=False)
        weights = rng.uniform(0.5, 1.5, size=config.signal_bits)
        raw = X[:, informative].astype(np.float64) @ weights
        spread = raw.std()
        if spread > 0:
            raw = raw / spread
    if config.noise_scale > 0:
        raw = raw + config.noise_scale * rng.standard_normal(n)

    # Monotone empirical-quantile transform: rank i gets the target
    # distribution's quantile at (i + 0.5) / n, so anchor fractions are hit
    # by construction and zero noise keeps PIC a monotone function of signal.
    order = np.argsort(raw, kind="stable")
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(n)
    u = (ranks + 0.5) / n
    knots_u, knots_pic = config.quantile_knots()
    pics = np.interp(u, knots_u, knots_pic)

    protein_id = config.protein_id or f"SYN-{config.seed}"
    width = max(5, len(str(n - 1)))
    ids = [f"L{i:0{width}d}" for i in range(n)]
    return validate_dataset(Dataset(protein_id, ids, X.astype(np.float64), pics, BINARY))

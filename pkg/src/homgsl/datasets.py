"""Dataset directories, planted-partition generator and label-oracle edits.

A dataset directory holds::

    meta.json     {"n": N, "f": F, "k": K, "name": str, "features": "dense" | "sparse"}
    edges.tsv     "u<TAB>v" per line, 0-based; duplicates and reversed pairs tolerated
    features.tsv  N lines; dense: F reals, sparse: "idx:val" tokens
    labels.tsv    optional, one integer per line
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .graph import EdgeDelta, UndirectedGraph, apply_edge_delta, canonical_pairs, edge_homophily


class DatasetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    graph: UndirectedGraph
    features: np.ndarray
    labels: Optional[np.ndarray]
    k: int
    name: str = "dataset"
    raw_edge_lines: int = field(default=0, compare=False)

    def __post_init__(self):
        n = self.graph.num_nodes
        if self.features.shape[0] != n:
            raise DatasetError(f"features have {self.features.shape[0]} rows, graph has {n} nodes")
        if self.labels is not None:
            if self.labels.shape[0] != n:
                raise DatasetError(f"labels have length {self.labels.shape[0]}, graph has {n} nodes")
            if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.k):
                raise DatasetError(f"labels must lie in [0, {self.k})")

    @property
    def num_nodes(self) -> int:
        return self.graph.num_nodes

    def homophily(self) -> Optional[float]:
        if self.labels is None or self.graph.edge_count == 0:
            return None
        return edge_homophily(self.graph, self.labels)

    def summary(self) -> str:
        h = self.homophily()
        hs = "n/a" if h is None else f"{h:.4f}"
        return (f"{self.name}: N={self.num_nodes} |E|={self.graph.edge_count} "
                f"F={self.features.shape[1]} K={self.k} homophily={hs}")


# ---------------------------------------------------------------------------
# directory I/O
# ---------------------------------------------------------------------------

def _read_meta(path: Path) -> dict:
    meta_path = path / "meta.json"
    if not meta_path.is_file():
        raise DatasetError(f"missing file {meta_path}")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{meta_path}: invalid JSON ({exc})") from exc
    for key in ("n", "f", "k"):
        if key not in meta:
            raise DatasetError(f"{meta_path}: missing key {key!r}")
    meta.setdefault("name", path.name)
    meta.setdefault("features", "dense")
    if meta["features"] not in ("dense", "sparse"):
        raise DatasetError(f"{meta_path}: features must be 'dense' or 'sparse'")
    return meta


def _read_edges(file: Path, n: int):
    if not file.is_file():
        raise DatasetError(f"missing file {file}")
    pairs = []
    with open(file, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            tok = line.split()
            if not tok:
                continue
            if len(tok) != 2:
                raise DatasetError(f"{file}:{lineno}: expected 'u<TAB>v', got {line.rstrip()!r}")
            try:
                u, v = int(tok[0]), int(tok[1])
            except ValueError:
                raise DatasetError(f"{file}:{lineno}: node ids must be integers") from None
            if not (0 <= u < n and 0 <= v < n):
                raise DatasetError(f"{file}:{lineno}: node id out of range [0, {n})")
            pairs.append((u, v))
    return pairs


def _read_features(file: Path, n: int, f: int, kind: str) -> np.ndarray:
    if not file.is_file():
        raise DatasetError(f"missing file {file}")
    x = np.zeros((n, f), dtype=np.float64)
    rows = 0
    with open(file, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if rows >= n:
                if line.strip():
                    raise DatasetError(f"{file}:{lineno}: more than {n} feature rows")
                continue
            tok = line.split()
            if kind == "dense":
                if len(tok) != f:
                    raise DatasetError(f"{file}:{lineno}: ragged row, expected {f} values, got {len(tok)}")
                try:
                    x[rows] = [float(t) for t in tok]
                except ValueError:
                    raise DatasetError(f"{file}:{lineno}: non-numeric feature value") from None
            else:
                for t in tok:
                    idx, sep, val = t.partition(":")
                    try:
                        j = int(idx)
                        x[rows, j] = float(val) if sep else 1.0
                    except (ValueError, IndexError):
                        raise DatasetError(f"{file}:{lineno}: bad sparse token {t!r}") from None
                    if j < 0:
                        raise DatasetError(f"{file}:{lineno}: negative feature index {j}")
            rows += 1
    if rows != n:
        raise DatasetError(f"{file}: expected {n} feature rows, found {rows}")
    if not np.all(np.isfinite(x)):
        raise DatasetError(f"{file}: non-finite feature values")
    return x


def _read_labels(file: Path, n: int, k: int) -> np.ndarray:
    labels = []
    with open(file, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            try:
                y = int(s)
            except ValueError:
                raise DatasetError(f"{file}:{lineno}: label must be an integer") from None
            if not 0 <= y < k:
                raise DatasetError(f"{file}:{lineno}: label {y} outside [0, {k}) (K={k} in meta.json)")
            labels.append(y)
    if len(labels) != n:
        raise DatasetError(f"{file}: expected {n} labels, found {len(labels)}")
    return np.asarray(labels, dtype=np.int64)


def load_dataset(path) -> Dataset:
    path = Path(path)
    if not path.is_dir():
        raise DatasetError(f"dataset directory {path} does not exist")
    meta = _read_meta(path)
    n, f, k = int(meta["n"]), int(meta["f"]), int(meta["k"])
    pairs = _read_edges(path / "edges.tsv", n)
    graph = UndirectedGraph.from_edges(n, pairs)
    dropped = len(pairs) - graph.edge_count
    if dropped:
        warnings.warn(f"{path.name}: dropped {dropped} duplicate, reversed or self-loop edge lines",
                      stacklevel=2)
    x = _read_features(path / "features.tsv", n, f, meta["features"])
    labels = None
    if (path / "labels.tsv").is_file():
        labels = _read_labels(path / "labels.tsv", n, k)
    return Dataset(graph, x, labels, k, str(meta["name"]), raw_edge_lines=len(pairs))


def save_dataset(ds: Dataset, path, features: str = "dense") -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    n, f = ds.features.shape
    meta = {"n": n, "f": f, "k": int(ds.k), "name": ds.name, "features": features}
    (path / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    write_edges(path / "edges.tsv", ds.graph)
    with open(path / "features.tsv", "w", encoding="utf-8", newline="\n") as fh:
        for row in ds.features:
            if features == "dense":
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
            else:
                nz = np.flatnonzero(row)
                fh.write(" ".join(f"{j}:{float(row[j])!r}" for j in nz) + "\n")
    if ds.labels is not None:
        np.savetxt(path / "labels.tsv", ds.labels, fmt="%d")
    return path


def write_edges(file, graph: UndirectedGraph) -> None:
    with open(file, "w", encoding="utf-8", newline="\n") as fh:
        for u, v in graph.edges:
            fh.write(f"{u}\t{v}\n")


def read_edge_file(file, num_nodes: int) -> UndirectedGraph:
    return UndirectedGraph.from_edges(num_nodes, _read_edges(Path(file), num_nodes))


# ---------------------------------------------------------------------------
# planted partitions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SbmParams:
    block_sizes: Sequence[int] = (100, 100)
    p_in: float = 0.3
    p_out: float = 0.02
    feature_dim: int = 16
    feature_signal: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_out <= self.p_in <= 1.0:
            raise ValueError("need 0 <= p_out <= p_in <= 1")
        if not self.block_sizes or min(self.block_sizes) < 1:
            raise ValueError("block sizes must be positive")
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be positive")


def generate_sbm(params: SbmParams) -> Dataset:
    rng = np.random.default_rng(params.seed)
    sizes = [int(s) for s in params.block_sizes]
    labels = np.repeat(np.arange(len(sizes)), sizes)
    n = labels.size
    iu, ju = np.triu_indices(n, k=1)
    prob = np.where(labels[iu] == labels[ju], params.p_in, params.p_out)
    hit = rng.random(iu.size) < prob
    graph = UndirectedGraph._from_canonical(n, np.stack([iu[hit], ju[hit]], axis=1).astype(np.int64))
    means = np.zeros((len(sizes), params.feature_dim))
    means[np.arange(len(sizes)), np.arange(len(sizes)) % params.feature_dim] = params.feature_signal
    x = means[labels] + rng.standard_normal((n, params.feature_dim))
    return Dataset(graph, x, labels, len(sizes), "sbm", raw_edge_lines=graph.edge_count)


# ---------------------------------------------------------------------------
# label-oracle homophily edits
# ---------------------------------------------------------------------------

def _split_budget(total: int, weights: np.ndarray) -> np.ndarray:
    """Largest-remainder split of ``total`` proportional to ``weights``."""
    if total <= 0 or weights.sum() == 0:
        return np.zeros(weights.size, dtype=np.int64)
    raw = total * weights / weights.sum()
    out = np.floor(raw).astype(np.int64)
    rest = total - out.sum()
    order = np.lexsort((np.arange(weights.size), -(raw - out)))
    out[order[:rest]] += 1
    return out


def _intra_candidates(ds: Dataset, cls: int, sample: np.ndarray, rng) -> tuple:
    nodes = np.sort(sample)
    iu, ju = np.triu_indices(nodes.size, k=1)
    pairs = np.stack([nodes[iu], nodes[ju]], axis=1)
    fresh = ~ds.graph.contains(pairs)
    pairs = pairs[fresh]
    x = ds.features[nodes]
    sims = (x @ x.T)[iu, ju][fresh]
    # binary word vectors tie a lot; break ties with a seeded shuffle
    tiebreak = rng.permutation(pairs.shape[0])
    order = np.lexsort((tiebreak, -sims))
    return pairs[order]


def oracle_perturb(ds: Dataset, target_homophily: float, seed: int = 0, gamma: float = 0.5) -> Dataset:
    """Raise edge homophily to ``target_homophily`` using ground-truth labels.

    Intra-class recovery adds, per class, the highest raw-feature inner product
    non-edges among a random ``gamma`` fraction of that class's nodes (falling
    back to the whole class when the sample is too small). Inter-class removal
    deletes uniformly random inter-class edges. The two counts are equal when
    possible, so the new homophily is ``(same + a) / |E|``.
    """
    if ds.labels is None:
        raise DatasetError("oracle_perturb needs ground-truth labels")
    y = ds.labels
    g = ds.graph
    m = g.edge_count
    if m == 0:
        raise DatasetError("graph has no edges")
    same_mask = y[g.edges[:, 0]] == y[g.edges[:, 1]]
    s = int(same_mask.sum())
    h0 = s / m
    if target_homophily < h0 - 0.005:
        raise DatasetError(f"target {target_homophily:.4f} is below current homophily {h0:.4f}")
    inter_idx = np.flatnonzero(~same_mask)
    class_sizes = np.bincount(y, minlength=ds.k)
    intra_pairs_total = int((class_sizes * (class_sizes - 1) // 2).sum())
    intra_free = intra_pairs_total - s
    # equal add/remove counts a = r give h = (s + a) / m
    a = int(round(target_homophily * m - s))
    a = max(a, 0)
    r = a
    if a > intra_free:
        a = intra_free
        denom = target_homophily if target_homophily > 0 else 1.0
        r = int(round(m + a - (s + a) / denom))
    if s + a == 0 or r > inter_idx.size:
        # deleting every inter-class edge reaches 1.0 unless no intra-class edge can exist
        raise DatasetError(
            f"target homophily {target_homophily:.4f} unreachable; max achievable is 0.0000")
    if a == 0 and r == 0:
        return ds
    rng = np.random.default_rng(seed)
    removed = g.edges[np.sort(rng.choice(inter_idx, size=r, replace=False))] if r else np.empty((0, 2), np.int64)
    budgets = _split_budget(a, class_sizes.astype(np.float64))
    added = []
    carry = 0
    for cls in range(ds.k):
        want = int(budgets[cls]) + carry
        if want == 0:
            continue
        members = np.flatnonzero(y == cls)
        take = max(2, int(round(gamma * members.size)))
        sample = rng.choice(members, size=min(take, members.size), replace=False)
        ranked = _intra_candidates(ds, cls, sample, rng)
        if ranked.shape[0] < want:
            ranked = _intra_candidates(ds, cls, members, rng)
        got = ranked[:want]
        carry = want - got.shape[0]
        added.append(got)
    if carry:
        raise DatasetError(f"not enough intra-class non-edges to add {a} edges")
    delta = EdgeDelta(canonical_pairs(np.concatenate(added) if added else []), canonical_pairs(removed))
    return replace(ds, graph=apply_edge_delta(g, delta))

"""Convert the Cora / Citeseer copies shipped inside the PGL source
distribution (PyPI: pgl==2.2.6) into the dataset directory layout used by
``homgsl.datasets``.

    python scripts/convert_pgl_data.py /path/to/pgl-2.2.6/pgl/data data/

Cora comes from the LINQS ``cora.content`` / ``cora.cites`` pair; node ids
follow the order of ``cora.content`` and labels follow the sorted class names.
Citeseer comes from the Planetoid pickles; the 15 test indices missing from
``ind.citeseer.tx`` get zero feature rows and label 0.
"""
import json
import pickle
import sys
from pathlib import Path

import numpy as np
import scipy.sparse as sp


def _write(out: Path, name: str, edges, features: sp.csr_matrix, labels, k: int) -> None:
    out.mkdir(parents=True, exist_ok=True)
    n, f = features.shape
    meta = {"n": int(n), "f": int(f), "k": int(k), "name": name, "features": "sparse"}
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    with open(out / "edges.tsv", "w") as fh:
        for u, v in edges:
            fh.write(f"{u}\t{v}\n")
    features = features.tocsr()
    features.sort_indices()
    with open(out / "features.tsv", "w") as fh:
        for i in range(n):
            lo, hi = features.indptr[i], features.indptr[i + 1]
            toks = [f"{j}:{features.data[p]:g}" for p, j in zip(range(lo, hi), features.indices[lo:hi])]
            fh.write(" ".join(toks) + "\n")
    with open(out / "labels.tsv", "w") as fh:
        for y in labels:
            fh.write(f"{int(y)}\n")


def convert_cora(src: Path, out: Path) -> None:
    ids, rows, classes = [], [], []
    for line in (src / "cora.content").read_text().splitlines():
        tok = line.split()
        ids.append(tok[0])
        rows.append([float(x) for x in tok[1:-1]])
        classes.append(tok[-1])
    index = {pid: i for i, pid in enumerate(ids)}
    names = sorted(set(classes))
    labels = [names.index(c) for c in classes]
    edges = []
    for line in (src / "cora.cites").read_text().splitlines():
        a, b = line.split()
        edges.append((index[a], index[b]))
    _write(out, "cora", edges, sp.csr_matrix(np.array(rows)), labels, len(names))


def convert_citeseer(src: Path, out: Path) -> None:
    objs = {}
    for key in ("tx", "ty", "allx", "ally", "graph"):
        with open(src / f"ind.citeseer.{key}", "rb") as fh:
            objs[key] = pickle.load(fh, encoding="latin1")
    test_idx = [int(x) for x in (src / "ind.citeseer.test.index").read_text().split()]
    n = len(objs["graph"])
    lo, hi = min(test_idx), max(test_idx)
    tx = sp.lil_matrix((hi - lo + 1, objs["tx"].shape[1]))
    ty = np.zeros((hi - lo + 1, objs["ty"].shape[1]))
    order = np.sort(test_idx)
    tx[order - lo, :] = objs["tx"]
    ty[order - lo, :] = objs["ty"]
    feats = sp.vstack([objs["allx"], tx]).tolil()
    labs = np.vstack([objs["ally"], ty])
    feats[test_idx, :] = feats[order, :]
    labs[test_idx, :] = labs[order, :]
    assert feats.shape[0] == n
    labels = labs.argmax(1)
    edges = [(u, v) for u, nbrs in sorted(objs["graph"].items()) for v in nbrs]
    _write(out, "citeseer", edges, sp.csr_matrix(feats), labels, labs.shape[1])


if __name__ == "__main__":
    src, dst = Path(sys.argv[1]), Path(sys.argv[2])
    convert_cora(src / "cora", dst / "cora")
    convert_citeseer(src / "citeseer", dst / "citeseer")

"""Synthetic instance generators for the experiments.

Biclustered sign matrices with optional label noise, ideal clique-star
side graphs, edge-flip perturbation with connectivity repair, same-class
community comparators, and box-separated point clouds for the min
kernel setting. All generators are deterministic functions of their
seed / rng argument.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .quasidim import BlockDecomposition
from .sideinfo import Graph, box_separation, read_graph, write_graph


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


@dataclass
class Instance:
    """One synthetic completion problem.

    u is the noise-free sign matrix R U* C^T; labels is the presented
    table (u with noise flips applied, if any). Side information per
    side is either None (identity) or a Graph; kernel-based sides are
    assembled by the callers that need them and are not serialized here.
    """

    u: np.ndarray
    labels: np.ndarray
    dec: BlockDecomposition
    row_graph: Graph | None = None
    col_graph: Graph | None = None
    noise_mask: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    @property
    def m(self) -> int:
        return self.u.shape[0]

    @property
    def n(self) -> int:
        return self.u.shape[1]

    def trials(self, rng) -> list:
        """All m*n entries in uniform random order without replacement."""
        rng = _as_rng(rng)
        order = rng.permutation(self.m * self.n)
        out = []
        for flat in order:
            i, j = int(flat) // self.n, int(flat) % self.n
            out.append((i, j, int(self.labels[i, j])))
        return out

    def save(self, directory):
        """Write manifest.json, labels.csv, u.csv and any graph files."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        manifest = {
            "m": self.m,
            "n": self.n,
            "k": self.dec.k,
            "l": self.dec.l,
            "row_classes": self.dec.row_classes.tolist(),
            "col_classes": self.dec.col_classes.tolist(),
            "u_star": self.dec.u_star.tolist(),
            "meta": self.meta,
            "row_graph": None,
            "col_graph": None,
            "has_noise_mask": self.noise_mask is not None,
        }
        np.savetxt(directory / "labels.csv", self.labels, fmt="%d", delimiter=",")
        np.savetxt(directory / "u.csv", self.u, fmt="%d", delimiter=",")
        if self.noise_mask is not None:
            np.savetxt(directory / "noise_mask.csv", self.noise_mask.astype(int),
                       fmt="%d", delimiter=",")
        if self.row_graph is not None:
            manifest["row_graph"] = "row_graph.txt"
            write_graph(directory / "row_graph.txt", self.row_graph)
        if self.col_graph is not None:
            manifest["col_graph"] = "col_graph.txt"
            write_graph(directory / "col_graph.txt", self.col_graph)
        with open(directory / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, directory) -> "Instance":
        directory = Path(directory)
        with open(directory / "manifest.json") as fh:
            manifest = json.load(fh)
        dec = BlockDecomposition(
            row_classes=np.array(manifest["row_classes"], dtype=int),
            col_classes=np.array(manifest["col_classes"], dtype=int),
            u_star=np.array(manifest["u_star"], dtype=int),
        )
        labels = np.loadtxt(directory / "labels.csv", dtype=int, delimiter=",", ndmin=2)
        u = np.loadtxt(directory / "u.csv", dtype=int, delimiter=",", ndmin=2)
        mask = None
        if manifest.get("has_noise_mask"):
            mask = np.loadtxt(directory / "noise_mask.csv", dtype=int,
                              delimiter=",", ndmin=2).astype(bool)
        row_graph = (read_graph(directory / manifest["row_graph"])
                     if manifest.get("row_graph") else None)
        col_graph = (read_graph(directory / manifest["col_graph"])
                     if manifest.get("col_graph") else None)
        return cls(u=u, labels=labels, dec=dec, row_graph=row_graph,
                   col_graph=col_graph, noise_mask=mask, meta=manifest.get("meta", {}))


def _surjective_assignment(size: int, n_classes: int, rng) -> np.ndarray:
    # first n_classes slots get distinct classes (random order), the rest
    # are i.i.d. uniform; guarantees every class is occupied
    head = rng.permutation(n_classes)
    tail = rng.integers(0, n_classes, size=size - n_classes)
    return np.concatenate((head, tail))


def gen_biclustered(m: int, n: int, k: int, l: int, seed) -> Instance:
    """Random (k, l)-biclustered sign matrix with surjective class maps."""
    if not (m >= k >= 1 and n >= l >= 1):
        raise ValueError("need m >= k >= 1 and n >= l >= 1")
    rng = _as_rng(seed)
    row_classes = _surjective_assignment(m, k, rng)
    col_classes = _surjective_assignment(n, l, rng)
    u_star = rng.choice((-1, 1), size=(k, l))
    dec = BlockDecomposition(row_classes=row_classes, col_classes=col_classes,
                             u_star=u_star)
    u = dec.matrix()
    return Instance(u=u, labels=u.copy(), dec=dec,
                    meta={"kind": "biclustered", "m": m, "n": n, "k": k, "l": l})


def apply_label_noise(instance: Instance, p: float, seed) -> Instance:
    """Flip each label independently with probability p; mask recorded."""
    if not 0 <= p < 1:
        raise ValueError("noise rate p must lie in [0, 1)")
    rng = _as_rng(seed)
    mask = rng.random(instance.u.shape) < p
    labels = np.where(mask, -instance.u, instance.u)
    meta = dict(instance.meta)
    meta["p"] = p
    meta["flips"] = int(mask.sum())
    return Instance(u=instance.u, labels=labels, dec=instance.dec,
                    row_graph=instance.row_graph, col_graph=instance.col_graph,
                    noise_mask=mask, meta=meta)


def clique_star_graph(assignment) -> Graph:
    """Ideal side graph for a class assignment: cliques joined as a star.

    Every class becomes a unit-weight clique. The class of lowest index
    is the center; its lowest-index member is the central vertex, which
    gets one edge to the lowest-index member of each other class. The
    result is connected with diameter at most 4.
    """
    assignment = np.asarray(assignment, dtype=int)
    m = len(assignment)
    classes = np.unique(assignment)
    members = {c: np.flatnonzero(assignment == c) for c in classes}
    for c in classes:
        if len(members[c]) == 0:
            raise ValueError(f"class {c} is empty")
    edges = []
    for c in classes:
        idx = members[c]
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                edges.append((int(idx[a]), int(idx[b]), 1.0))
    center_class = classes[0]
    central_vertex = int(members[center_class][0])
    for c in classes[1:]:
        edges.append((central_vertex, int(members[c][0]), 1.0))
    return Graph(n_vertices=m, edges=tuple(edges))


def perturb_graph(g: Graph, beta: float, seed) -> Graph:
    """Flip each vertex pair between edge and non-edge with probability beta.

    Afterwards the graph is repaired to connectivity: a uniformly random
    pair of components is joined by an edge between uniformly random
    vertices of each, repeatedly until one component remains. All output
    edges have unit weight.
    """
    if not 0 <= beta <= 0.5:
        raise ValueError("beta must lie in [0, 0.5]")
    rng = _as_rng(seed)
    m = g.n_vertices
    present = g.edge_set()
    edges = set()
    if beta > 0:
        iu, ju = np.triu_indices(m, k=1)
        flips = rng.random(len(iu)) < beta
        for i, j, flip in zip(iu, ju, flips):
            pair = (int(i), int(j))
            if (pair in present) != bool(flip):
                edges.add(pair)
    else:
        edges = set(present)
    out = Graph(n_vertices=m, edges=tuple((i, j, 1.0) for i, j in sorted(edges)))
    while not out.is_connected():
        labels = out.component_labels()
        comp_ids = np.unique(labels)
        pick = rng.choice(len(comp_ids), size=2, replace=False)
        ca, cb = comp_ids[pick[0]], comp_ids[pick[1]]
        va = int(rng.choice(np.flatnonzero(labels == ca)))
        vb = int(rng.choice(np.flatnonzero(labels == cb)))
        i, j = min(va, vb), max(va, vb)
        out = Graph(n_vertices=m, edges=out.edges + ((i, j, 1.0),))
    return out


def community_instance(assignment) -> Instance:
    """Square same-class comparator: +1 iff row and column share a class."""
    assignment = np.asarray(assignment, dtype=int)
    classes, normalized = np.unique(assignment, return_inverse=True)
    k = len(classes)
    u_star = 2 * np.eye(k, dtype=int) - np.ones((k, k), dtype=int)
    dec = BlockDecomposition(row_classes=normalized, col_classes=normalized,
                             u_star=u_star)
    u = dec.matrix()
    return Instance(u=u, labels=u.copy(), dec=dec,
                    meta={"kind": "community", "m": len(assignment), "k": k})


def box_instance(k: int, d: int, r: float, delta_min: float,
                 points_per_box: int, seed, max_attempts: int = 500):
    """Sample k separated boxes in [-r, r]^d and uniform points inside them.

    Returns (points, assignment, boxes) where assignment is the m x k
    one-hot matrix mapping each point to its box. Boxes are rejection
    sampled until every pair is at least delta_min apart in l-infinity
    box distance; an infeasible request raises after max_attempts.
    """
    if not r >= 2:
        raise ValueError("domain radius must be >= 2")
    if k < 1 or d < 1 or points_per_box < 1:
        raise ValueError("k, d and points_per_box must be >= 1")
    if delta_min <= 0:
        raise ValueError("delta_min must be positive")
    rng = _as_rng(seed)
    width_cap = max(min(2.0 * r / (3.0 * k), r / 2.0), 1e-3)
    boxes = None
    for _ in range(max_attempts):
        candidate = []
        for _ in range(k):
            widths = rng.uniform(1e-3, width_cap, size=d)
            lo = rng.uniform(-r, r - widths)
            candidate.append((lo, lo + widths))
        try:
            sep = box_separation(candidate)
        except ValueError:
            continue
        if k == 1 or sep.delta >= delta_min:
            boxes = candidate
            break
    if boxes is None:
        raise RuntimeError(
            f"could not place {k} boxes with separation >= {delta_min} "
            f"in [-{r},{r}]^{d} after {max_attempts} attempts"
        )
    points = []
    assignment = np.zeros((k * points_per_box, k))
    for b, (lo, hi) in enumerate(boxes):
        for s in range(points_per_box):
            points.append(rng.uniform(lo, hi))
            assignment[b * points_per_box + s, b] = 1.0
    return np.array(points), assignment, boxes

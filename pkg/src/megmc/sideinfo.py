"""Side information objects: graphs, PDLaplacians, kernels, embeddings.

Both predictors consume a side matrix only through the per-identity
embedding column sqrt(M^+) e_i / sqrt(2 R_M), where R_M is the largest
diagonal entry of M^+. This module builds those embeddings from graph
Laplacians (shifted to strict positive definiteness) or from kernel Gram
matrices, and provides the box-separation geometry used by the min
kernel analysis.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .spectral import eig_sym, pinv_psd, sqrt_psd, symmetrize


@dataclass(frozen=True)
class Graph:
    """Undirected weighted graph on vertices 0..n_vertices-1.

    Edges are (i, j, weight) with i < j, positive weight, no self loops,
    no duplicate pairs.
    """

    n_vertices: int
    edges: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ValueError("graph needs at least one vertex")
        seen = set()
        canon = []
        for e in self.edges:
            i, j, w = int(e[0]), int(e[1]), float(e[2])
            if i == j:
                raise ValueError(f"self loop at vertex {i}")
            if i > j:
                i, j = j, i
            if not (0 <= i < j < self.n_vertices):
                raise ValueError(f"edge ({i},{j}) out of range for {self.n_vertices} vertices")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i},{j})")
            if not (w > 0 and np.isfinite(w)):
                raise ValueError(f"edge ({i},{j}) needs a positive finite weight, got {w}")
            seen.add((i, j))
            canon.append((i, j, w))
        object.__setattr__(self, "edges", tuple(canon))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def edge_set(self) -> set:
        return {(i, j) for i, j, _ in self.edges}

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_vertices, self.n_vertices))
        for i, j, w in self.edges:
            a[i, j] = w
            a[j, i] = w
        return a

    def n_components(self) -> int:
        if not self.edges:
            return self.n_vertices
        rows = [i for i, _, _ in self.edges]
        cols = [j for _, j, _ in self.edges]
        data = [1.0] * len(self.edges)
        adj = coo_matrix((data, (rows, cols)), shape=(self.n_vertices, self.n_vertices))
        ncomp, _ = connected_components(adj, directed=False)
        return int(ncomp)

    def component_labels(self) -> np.ndarray:
        rows = [i for i, _, _ in self.edges]
        cols = [j for _, j, _ in self.edges]
        data = [1.0] * len(self.edges)
        adj = coo_matrix((data, (rows, cols)), shape=(self.n_vertices, self.n_vertices))
        _, labels = connected_components(adj, directed=False)
        return labels

    def is_connected(self) -> bool:
        return self.n_components() == 1


def laplacian_from_graph(g: Graph) -> np.ndarray:
    """Graph Laplacian L = D - A."""
    a = g.adjacency()
    return np.diag(a.sum(axis=1)) - a


def squared_radius(m_psd) -> float:
    """Largest diagonal entry of the pseudoinverse of a PSD matrix."""
    return float(np.max(np.diag(pinv_psd(m_psd))))


def pd_laplacian(l) -> np.ndarray:
    """Strictly PD shift of a connected-graph Laplacian.

    Returns L + u u^T / R_L with u = 1/m, so L° 1 = 1 / (m R_L) and the
    squared radius of the result is exactly 2 R_L. This normalisation is
    the one under which the two comparison inequalities hold for every
    u in [-1, 1]^m:

        (u^T L° u) R_L°  <=  2 ((u^T L u) R_L + 1)
        (u^T L u) R_L    <=  (u^T L° u) R_L° / 2

    (a heavier shift, e.g. scaling u by sqrt(m), breaks both). The input
    must be the Laplacian of a connected graph: rank m-1 with L 1 = 0.
    Rank deficiency of 2 or more (a disconnected graph) is an error; the
    synth module's connectivity repair is the sanctioned way to feed
    this function.
    """
    l = symmetrize(l)
    m = l.shape[0]
    ones = np.ones(m)
    scale = max(np.abs(l).max(), 1.0)
    if np.abs(l @ ones).max() > 1e-8 * scale:
        raise ValueError("input is not a graph Laplacian: rows do not sum to zero")
    w, _ = eig_sym(l)
    thr = m * (2.0 ** -52) * max(float(w[-1]), 1.0)
    n_null = int(np.sum(w <= thr))
    if n_null != 1:
        raise ValueError(
            f"Laplacian has a null space of dimension {n_null}; "
            "the graph must be connected"
        )
    r_l = squared_radius(l)
    return l + np.outer(ones, ones) / (m * m * r_l)


@dataclass(frozen=True)
class SideEmbedding:
    """Per-identity embedding columns for one side of the matrix.

    factor is the m x m matrix sqrt(M^+) / sqrt(2 R_M); column i is the
    embedded half-vector for identity i, with squared norm
    M^+_{ii} / (2 R_M) <= 1/2.
    """

    factor: np.ndarray
    squared_radius: float

    def __post_init__(self):
        if not self.squared_radius > 0:
            raise ValueError("squared radius must be positive")

    @property
    def dim(self) -> int:
        return self.factor.shape[0]

    def column(self, i: int) -> np.ndarray:
        if not 0 <= i < self.dim:
            raise IndexError(f"identity {i} out of range for side of dim {self.dim}")
        return self.factor[:, i]


def embedding_from_pd(m_pd) -> SideEmbedding:
    """Embedding factor sqrt(M^+) / sqrt(2 R_M) for a PD side matrix."""
    pinv = pinv_psd(m_pd)
    r = float(np.max(np.diag(pinv)))
    if not r > 0:
        raise ValueError("side matrix pseudoinverse has no positive diagonal entry")
    factor = sqrt_psd(pinv) / np.sqrt(2.0 * r)
    return SideEmbedding(factor=factor, squared_radius=r)


def identity_embedding(dim: int) -> SideEmbedding:
    """Embedding for vacuous (identity) side information: B = I / sqrt(2)."""
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    return SideEmbedding(factor=np.eye(dim) / np.sqrt(2.0), squared_radius=1.0)


# ---------------------------------------------------------------------------
# kernels


def min_kernel_eval(x, t) -> float:
    """Product of coordinatewise minima; points must lie in [0, r]^d."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if x.shape != t.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {t.shape}")
    if (x < 0).any() or (t < 0).any():
        raise ValueError("min kernel points must have nonnegative coordinates")
    return float(np.prod(np.minimum(x, t)))


def box_transform(x, r: float):
    """Affine map s(x) = (r-1)/(2r) x + (r+1)/2 taking [-r,r]^d to [1,r]^d."""
    if not r >= 2:
        raise ValueError(f"domain radius must be >= 2, got {r}")
    x = np.asarray(x, dtype=float)
    if (np.abs(x) > r + 1e-12).any():
        raise ValueError(f"coordinate outside [-{r}, {r}]")
    return (r - 1.0) / (2.0 * r) * x + (r + 1.0) / 2.0


@dataclass(frozen=True)
class MinKernel:
    """Min kernel over raw points in [-r,r]^d.

    Evaluation applies the box transform into [1,r]^d first, then takes
    the product of coordinatewise minima. The domain supremum of K(x,x)
    is r^d, which serves as the default r_tilde for the inductive
    predictor.
    """

    radius: float
    dim: int

    def __post_init__(self):
        if not self.radius >= 2:
            raise ValueError("min kernel domain radius must be >= 2")
        if self.dim < 1:
            raise ValueError("min kernel dimension must be >= 1")

    def __call__(self, x, t) -> float:
        sx = box_transform(np.atleast_1d(x), self.radius)
        st = box_transform(np.atleast_1d(t), self.radius)
        return min_kernel_eval(sx, st)

    def default_r_tilde(self) -> float:
        return self.radius ** self.dim


@dataclass(frozen=True)
class LinearKernel:
    """Linear kernel <x, t> + epsilon * [x is the same point as t].

    The jitter makes Grams over distinct points strictly PD. Sameness is
    object identity, not value equality: the jitter lands on the Gram
    diagonal (the same point object presented twice) while two distinct
    points with coincidentally equal coordinates stay un-jittered. There
    is no finite domain supremum in general, so r_tilde must be supplied
    explicitly when this kernel feeds the inductive predictor.
    """

    epsilon: float

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError("linear kernel jitter must be positive")

    def __call__(self, x, t) -> float:
        same = float(x is t)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if x.shape != t.shape:
            raise ValueError(f"dimension mismatch: {x.shape} vs {t.shape}")
        return float(x @ t) + self.epsilon * same

    def default_r_tilde(self):
        return None


@dataclass(frozen=True)
class PrecomputedKernel:
    """Kernel given by a fixed Gram matrix; identities are integer indices."""

    gram: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gram", symmetrize(self.gram))

    def __call__(self, i, j) -> float:
        i, j = int(i), int(j)
        q = self.gram.shape[0]
        if not (0 <= i < q and 0 <= j < q):
            raise KeyError(f"identity ({i},{j}) unknown to precomputed Gram of size {q}")
        return float(self.gram[i, j])

    def default_r_tilde(self) -> float:
        return float(np.max(np.diag(self.gram)))


def gram_matrix(kernel, points) -> np.ndarray:
    """Gram matrix K[a,b] = kernel(points[a], points[b]), PSD-checked.

    A minimum eigenvalue below -tol * lambda_max (shared rank tolerance)
    means the kernel or the point list is invalid and raises.
    """
    q = len(points)
    if q == 0:
        raise ValueError("need at least one point")
    k = np.empty((q, q))
    for a in range(q):
        k[a, a] = kernel(points[a], points[a])
        for b in range(a + 1, q):
            k[a, b] = k[b, a] = kernel(points[a], points[b])
    k = symmetrize(k)
    w, _ = eig_sym(k)
    thr = q * (2.0 ** -52) * max(float(w[-1]), 0.0)
    if w[0] < -max(thr, 1e-8 * max(float(w[-1]), 1.0)):
        raise ValueError(f"Gram matrix is not PSD: min eigenvalue {w[0]:.3e}")
    return k


# ---------------------------------------------------------------------------
# boxes


@dataclass(frozen=True)
class BoxSeparation:
    """Pairwise box separation delta and the capped margin scale delta_star."""

    delta: float
    delta_star: float


def _box_pair_distance(lo1, hi1, lo2, hi2) -> float:
    # l-infinity distance between two axis-aligned boxes: the largest
    # per-dimension gap (0 where the projections overlap)
    gaps = np.maximum(np.maximum(lo2 - hi1, lo1 - hi2), 0.0)
    return float(gaps.max())


def box_separation(boxes) -> BoxSeparation:
    """Minimum pairwise l-infinity distance among disjoint boxes.

    Boxes are (a, b) corner pairs with a <= b coordinatewise, membership
    closed-interval. Overlapping (or touching) boxes raise. A single box
    has no pair distance: delta is +inf and delta_star falls to its cap
    of 2 by convention.
    """
    parsed = []
    for a, b in boxes:
        lo = np.atleast_1d(np.asarray(a, dtype=float))
        hi = np.atleast_1d(np.asarray(b, dtype=float))
        if lo.shape != hi.shape:
            raise ValueError("box corners must share a shape")
        if (lo > hi).any():
            raise ValueError("box corners must satisfy a <= b coordinatewise")
        parsed.append((lo, hi))
    if not parsed:
        raise ValueError("need at least one box")
    delta = np.inf
    for a in range(len(parsed)):
        for b in range(a + 1, len(parsed)):
            lo1, hi1 = parsed[a]
            lo2, hi2 = parsed[b]
            overlap = bool(((lo1 <= hi2) & (lo2 <= hi1)).all())
            if overlap:
                raise ValueError(f"boxes {a} and {b} overlap")
            delta = min(delta, _box_pair_distance(lo1, hi1, lo2, hi2))
    return BoxSeparation(delta=float(delta), delta_star=float(min(2.0, delta / 4.0)))


def delta_star_transformed(delta: float, r: float) -> float:
    """Tighter margin scale min(2, (r-1) delta / (2r)).

    The box transform contracts distances by (r-1)/(2r), so this is the
    separation cap in the transformed domain. For r >= 2 it dominates
    the plain min(2, delta/4), and bound checks use it as the stricter
    variant.
    """
    if not r >= 2:
        raise ValueError("domain radius must be >= 2")
    return float(min(2.0, (r - 1.0) * delta / (2.0 * r)))


# ---------------------------------------------------------------------------
# file formats


def write_graph(path, g: Graph):
    """Text edge list: first line the vertex count, then 'i j w' lines (0-based)."""
    with open(path, "w") as fh:
        fh.write(f"{g.n_vertices}\n")
        for i, j, w in g.edges:
            fh.write(f"{i} {j} {w!r}\n")


def read_graph(path) -> Graph:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"empty graph file {path}")
    n = int(lines[0])
    edges = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 3:
            raise ValueError(f"malformed edge line: {ln!r}")
        edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
    return Graph(n_vertices=n, edges=tuple(edges))


def write_points(path, points):
    """Points CSV: one point per row, coordinates as columns."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in pts:
            writer.writerow([repr(float(v)) for v in row])


def read_points(path) -> np.ndarray:
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if row:
                rows.append([float(v) for v in row])
    if not rows:
        raise ValueError(f"empty points file {path}")
    return np.array(rows)

"""Triangulations of polygonal 2D domains.

Structured meshes ``T_r`` of the square (-0.5, 0.5)^2, a plain-text mesh
format, and the non-obtuse (angle) condition on the P1 stiffness matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# 2^(2r+1) elements must fit a signed 32-bit index
MAX_LEVEL = 14
TOL_ANGLE = 1e-12


class MeshError(ValueError):
    """Invalid mesh data."""


class MeshFormatError(MeshError):
    """Malformed mesh file; ``lineno`` is 1-based (0 when not line specific)."""

    def __init__(self, message: str, lineno: int = 0):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}" if lineno else message)


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming simplicial mesh.

    ``nodes`` is (N, dim), ``elements`` is (M, dim+1) with positive
    orientation, ``boundary_mask`` flags the Dirichlet nodes.
    """

    nodes: np.ndarray
    elements: np.ndarray
    boundary_mask: np.ndarray
    dim: int = 2
    h_max: float = field(init=False)

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=float)
        elements = np.ascontiguousarray(self.elements, dtype=np.int64)
        mask = np.ascontiguousarray(self.boundary_mask, dtype=bool)
        for name, arr in (("nodes", nodes), ("elements", elements), ("boundary_mask", mask)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        _validate(self)
        object.__setattr__(self, "h_max", _max_diameter(nodes, elements))

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def free_nodes(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)

    def areas(self) -> np.ndarray:
        """Signed element volumes."""
        return signed_volumes(self.nodes, self.elements)

    def gradients(self) -> tuple[np.ndarray, np.ndarray]:
        """Constant hat-function gradients per element.

        Returns ``(grads, areas)`` where ``grads[e, a]`` is the gradient of the
        hat function of local vertex ``a`` on element ``e``.
        """
        if self.dim != 2:
            raise MeshError("only 2D meshes are supported by the assembly routines")
        return p1_gradients(self.nodes, self.elements)

    def __eq__(self, other):
        if not isinstance(other, Mesh):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.elements, other.elements)
            and np.array_equal(self.boundary_mask, other.boundary_mask)
        )

    __hash__ = None


def signed_volumes(nodes: np.ndarray, elements: np.ndarray) -> np.ndarray:
    verts = nodes[elements]
    edges = verts[:, 1:, :] - verts[:, :1, :]
    d = nodes.shape[1]
    return np.linalg.det(edges) / math.factorial(d)


def p1_gradients(nodes: np.ndarray, elements: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p = nodes[elements]
    x, y = p[..., 0], p[..., 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    if np.any(area <= 0):
        raise MeshError("degenerate or inverted element")
    grads = np.empty(elements.shape + (2,))
    # grad of lambda_a is the rotated opposite edge over twice the area
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        grads[:, a, 0] = (y[:, b] - y[:, c]) / (2 * area)
        grads[:, a, 1] = (x[:, c] - x[:, b]) / (2 * area)
    return grads, area


def _max_diameter(nodes, elements) -> float:
    if len(elements) == 0:
        return 0.0
    verts = nodes[elements]
    k = elements.shape[1]
    best = 0.0
    for a in range(k):
        for b in range(a + 1, k):
            best = max(best, float(np.max(np.linalg.norm(verts[:, a] - verts[:, b], axis=1))))
    return best


def _validate(mesh: Mesh) -> None:
    d = mesh.dim
    if d not in (2, 3):
        raise MeshError(f"unsupported dimension {d}")
    if mesh.nodes.ndim != 2 or mesh.nodes.shape[1] != d:
        raise MeshError(f"nodes must have shape (N, {d})")
    if mesh.elements.ndim != 2 or mesh.elements.shape[1] != d + 1:
        raise MeshError(f"elements must have shape (M, {d + 1})")
    if mesh.boundary_mask.shape != (mesh.nodes.shape[0],):
        raise MeshError("boundary_mask length differs from node count")
    if not np.all(np.isfinite(mesh.nodes)):
        raise MeshError("non-finite coordinate")
    n = mesh.nodes.shape[0]
    if mesh.elements.size:
        if mesh.elements.min() < 0 or mesh.elements.max() >= n:
            raise MeshError("index out of range")
    used = np.zeros(n, dtype=bool)
    used[mesh.elements.ravel()] = True
    if not used.all():
        raise MeshError(f"orphan node {int(np.flatnonzero(~used)[0])}")
    vol = signed_volumes(mesh.nodes, mesh.elements)
    if np.any(vol <= 0):
        raise MeshError(f"element {int(np.flatnonzero(vol <= 0)[0])} has non-positive volume")


def build_structured_mesh(r: int) -> Mesh:
    """Halved-squares triangulation of (-0.5, 0.5)^2 with edge length 2^-r.

    Every square is cut along its lower-left to upper-right diagonal.
    """
    if isinstance(r, bool) or not isinstance(r, (int, np.integer)):
        raise TypeError("r must be an integer")
    if r < 1:
        raise ValueError(f"refinement level must be >= 1, got {r}")
    if r > MAX_LEVEL:
        raise ValueError(f"refinement level {r} overflows index arithmetic (max {MAX_LEVEL})")
    n = 2**r
    coords = np.linspace(-0.5, 0.5, n + 1)
    xx, yy = np.meshgrid(coords, coords)
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ll = (j * (n + 1) + i).ravel()
    lr, ur, ul = ll + 1, ll + n + 2, ll + n + 1
    lower = np.column_stack([ll, lr, ur])
    upper = np.column_stack([ll, ur, ul])
    elements = np.empty((2 * n * n, 3), dtype=np.int64)
    elements[0::2] = lower
    elements[1::2] = upper

    boundary = np.max(np.abs(nodes), axis=1) == 0.5
    return Mesh(nodes=nodes, elements=elements, boundary_mask=boundary, dim=2)


def topological_boundary(mesh: Mesh) -> np.ndarray:
    """Nodes touching a facet that belongs to exactly one element."""
    k = mesh.dim + 1
    faces = []
    for skip in range(k):
        cols = [c for c in range(k) if c != skip]
        faces.append(mesh.elements[:, cols])
    faces = np.sort(np.vstack(faces), axis=1)
    uniq, counts = np.unique(faces, axis=0, return_counts=True)
    mask = np.zeros(mesh.n_nodes, dtype=bool)
    mask[uniq[counts == 1].ravel()] = True
    return mask


@dataclass(frozen=True)
class AngleReport:
    passed: bool
    worst_entry: float
    worst_pair: tuple[int, int] | None

    def __bool__(self):
        return self.passed


def check_angle_condition(mesh: Mesh, tol: float = TOL_ANGLE) -> AngleReport:
    """Check that every off-diagonal P1 stiffness entry is <= ``tol``."""
    from .fem import assemble_stiffness

    K = assemble_stiffness(mesh, 1).tocoo()
    off = K.row != K.col
    rows, cols, vals = K.row[off], K.col[off], K.data[off]
    if vals.size == 0:
        return AngleReport(True, -math.inf, None)
    idx = int(np.argmax(vals))
    worst = float(vals[idx])
    return AngleReport(worst <= tol, worst, (int(rows[idx]), int(cols[idx])))


def save_mesh(mesh: Mesh, path) -> None:
    lines = [f"{mesh.dim} {mesh.n_nodes} {mesh.n_elements}"]
    lines += [" ".join(repr(float(c)) for c in row) for row in mesh.nodes]
    lines += [" ".join(str(int(i)) for i in row) for row in mesh.elements]
    lines += ["1" if b else "0" for b in mesh.boundary_mask]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path) -> Mesh:
    text = Path(path).read_text().splitlines()
    if not text or not text[0].strip():
        raise MeshFormatError("malformed header", 1)
    header = text[0].split()
    try:
        dim, n_nodes, n_elem = (int(tok) for tok in header)
    except ValueError:
        raise MeshFormatError("malformed header", 1) from None
    if dim not in (2, 3) or n_nodes < 0 or n_elem < 0:
        raise MeshFormatError("malformed header", 1)
    expected = 1 + 2 * n_nodes + n_elem
    if len(text) < expected:
        raise MeshFormatError(f"truncated file: expected {expected} lines, found {len(text)}", len(text) + 1)

    nodes = np.empty((n_nodes, dim))
    for i in range(n_nodes):
        lineno = 2 + i
        toks = text[lineno - 1].split()
        if len(toks) != dim:
            raise MeshFormatError(f"expected {dim} coordinates", lineno)
        try:
            vals = [float(t) for t in toks]
        except ValueError:
            raise MeshFormatError("bad coordinate", lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise MeshFormatError("non-finite coordinate", lineno)
        nodes[i] = vals

    elements = np.empty((n_elem, dim + 1), dtype=np.int64)
    for e in range(n_elem):
        lineno = 2 + n_nodes + e
        toks = text[lineno - 1].split()
        if len(toks) != dim + 1:
            raise MeshFormatError(f"expected {dim + 1} node indices", lineno)
        try:
            idx = [int(t) for t in toks]
        except ValueError:
            raise MeshFormatError("bad node index", lineno) from None
        if any(i < 0 or i >= n_nodes for i in idx):
            raise MeshFormatError("index out of range", lineno)
        elements[e] = idx

    mask = np.empty(n_nodes, dtype=bool)
    for i in range(n_nodes):
        lineno = 2 + n_nodes + n_elem + i
        tok = text[lineno - 1].strip()
        if tok not in ("0", "1"):
            raise MeshFormatError("boundary flag must be 0 or 1", lineno)
        mask[i] = tok == "1"

    try:
        return Mesh(nodes=nodes, elements=elements, boundary_mask=mask, dim=dim)
    except MeshError as exc:
        raise MeshFormatError(str(exc)) from None

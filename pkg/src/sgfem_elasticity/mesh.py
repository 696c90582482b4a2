"""Uniform square meshes and the Q2 / P-1 / Q1 finite element spaces.

The domain is always D = (-1, 1)^2 split into ``2**(level-1)`` square
elements per side.  Nodes and elements are numbered lexicographically with
the x1 index running fastest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import InvalidArgumentError

EDGES = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class Mesh:
    """Uniform square-element mesh of (-1, 1)^2.

    Attributes
    ----------
    level : int
        Refinement level; the mesh has ``2**(level-1)`` elements per side.
    n : int
        Elements per side.
    h : float
        Element side length.
    nodes : ndarray, shape (nnodes, 2)
        Coordinates of the Q2 nodes (vertices, edge midpoints, centres).
    element_nodes : ndarray, shape (nel, 9)
        Global Q2 node ids of each element, local order ``3*b + c`` where
        ``c`` counts along x1 and ``b`` along x2.
    centroids : ndarray, shape (nel, 2)
    """

    level: int
    n: int
    h: float
    nodes: np.ndarray = field(repr=False)
    element_nodes: np.ndarray = field(repr=False)
    centroids: np.ndarray = field(repr=False)

    @property
    def n_elements(self) -> int:
        return self.n * self.n

    @property
    def nodes_per_side(self) -> int:
        return 2 * self.n + 1

    @property
    def n_nodes(self) -> int:
        return self.nodes_per_side ** 2

    @property
    def element_area(self) -> float:
        return self.h * self.h

    def vertex_ids(self) -> np.ndarray:
        """Q1 (vertex) numbering of each element's four corners.

        Corners are ordered (-,-), (+,-), (-,+), (+,+) and numbered on the
        ``(n+1) x (n+1)`` vertex grid.
        """
        n = self.n
        ex, ey = np.meshgrid(np.arange(n), np.arange(n))
        ex, ey = ex.ravel(), ey.ravel()
        base = ey * (n + 1) + ex
        return np.stack([base, base + 1, base + n + 1, base + n + 2], axis=1)


def build_mesh(level: int) -> Mesh:
    """Build the uniform mesh with ``2**(level-1)`` elements per side."""
    if int(level) != level or level < 2:
        raise InvalidArgumentError(f"level must be an integer >= 2, got {level!r}")
    level = int(level)
    n = 2 ** (level - 1)
    h = 2.0 / n
    m = 2 * n + 1
    t = np.linspace(-1.0, 1.0, m)
    x1, x2 = np.meshgrid(t, t)
    nodes = np.column_stack([x1.ravel(), x2.ravel()])

    ex, ey = np.meshgrid(np.arange(n), np.arange(n))
    ex, ey = ex.ravel(), ey.ravel()
    b, c = np.divmod(np.arange(9), 3)
    element_nodes = (2 * ey[:, None] + b[None, :]) * m + (2 * ex[:, None] + c[None, :])
    centroids = np.column_stack([-1.0 + (ex + 0.5) * h, -1.0 + (ey + 0.5) * h])
    return Mesh(level, n, h, nodes, element_nodes, centroids)


@dataclass(frozen=True)
class BoundaryPartition:
    """Split of the boundary edges into Dirichlet and Neumann parts.

    The default clamps the left, bottom and top edges and leaves the right
    edge traction free.  Dirichlet conditions are imposed on the closure of
    the Dirichlet edges, so the corners (1, -1) and (1, 1) are clamped.
    An empty tuple gives the pure traction problem (useful for patch tests;
    its stiffness matrix is singular).
    """

    dirichlet_edges: tuple = ("left", "bottom", "top")

    def __post_init__(self):
        bad = set(self.dirichlet_edges) - set(EDGES)
        if bad:
            raise InvalidArgumentError(f"unknown edge names {sorted(bad)}")

    @property
    def neumann_edges(self) -> tuple:
        return tuple(e for e in EDGES if e not in self.dirichlet_edges)

    def dirichlet_node_set(self, mesh: Mesh) -> np.ndarray:
        x1, x2 = mesh.nodes[:, 0], mesh.nodes[:, 1]
        on = {
            "left": np.isclose(x1, -1.0),
            "right": np.isclose(x1, 1.0),
            "bottom": np.isclose(x2, -1.0),
            "top": np.isclose(x2, 1.0),
        }
        mask = np.zeros(mesh.n_nodes, dtype=bool)
        for e in self.dirichlet_edges:
            mask |= on[e]
        return np.flatnonzero(mask)


@dataclass(frozen=True)
class FeSpaces:
    """Q2 displacement space and a P-1 or Q1 pressure space on a mesh.

    ``node_to_dof[i]`` is the scalar displacement dof of Q2 node ``i`` or -1
    for an eliminated Dirichlet node.  ``element_udofs`` and
    ``element_pdofs`` give the local-to-global maps per element.
    """

    mesh: Mesh
    boundary: BoundaryPartition
    pressure_family: str
    node_to_dof: np.ndarray = field(repr=False)
    free_nodes: np.ndarray = field(repr=False)
    element_udofs: np.ndarray = field(repr=False)
    element_pdofs: np.ndarray = field(repr=False)
    n_u: int = 0
    n_p: int = 0

    @property
    def dofs(self) -> int:
        """Deterministic unknowns of the three-field system, 2(n_u + n_p)."""
        return 2 * (self.n_u + self.n_p)


PRESSURE_FAMILIES = ("P-1", "Q1")


def build_spaces(mesh: Mesh, pressure_family: str = "P-1",
                 boundary: BoundaryPartition | None = None) -> FeSpaces:
    """Set up dof maps for Q2 displacements and the chosen pressure space.

    Dirichlet displacement nodes are removed from the index set (g = 0).
    """
    if pressure_family not in PRESSURE_FAMILIES:
        raise InvalidArgumentError(
            f"pressure_family must be one of {PRESSURE_FAMILIES}, got {pressure_family!r}")
    boundary = boundary or BoundaryPartition()
    dirichlet = boundary.dirichlet_node_set(mesh)
    free = np.ones(mesh.n_nodes, dtype=bool)
    free[dirichlet] = False
    free_nodes = np.flatnonzero(free)
    node_to_dof = -np.ones(mesh.n_nodes, dtype=np.int64)
    node_to_dof[free_nodes] = np.arange(free_nodes.size)
    element_udofs = node_to_dof[mesh.element_nodes]

    if pressure_family == "P-1":
        element_pdofs = np.arange(3 * mesh.n_elements).reshape(-1, 3)
        n_p = 3 * mesh.n_elements
    else:
        element_pdofs = mesh.vertex_ids()
        n_p = (mesh.n + 1) ** 2
    return FeSpaces(mesh, boundary, pressure_family, node_to_dof, free_nodes,
                    element_udofs, element_pdofs, int(free_nodes.size), int(n_p))


def gauss_rule(order: int):
    """Gauss-Legendre points and weights on [-1, 1]."""
    if order < 1:
        raise InvalidArgumentError(f"quadrature order must be >= 1, got {order}")
    return np.polynomial.legendre.leggauss(order)


def reference_rule(order: int):
    """Tensor Gauss rule on the reference square, x1 index fastest."""
    t, w = gauss_rule(order)
    xi, eta = np.meshgrid(t, t)
    wq = np.outer(w, w)
    return xi.ravel(), eta.ravel(), wq.ravel()


def quadrature_points(mesh: Mesh, order: int = 3):
    """Tensor Gauss rule mapped to every element.

    Returns
    -------
    points : ndarray, shape (nel, order**2, 2)
    weights : ndarray, shape (nel, order**2)
        Weights on each element sum to the element area.
    """
    xi, eta, w = reference_rule(order)
    half = 0.5 * mesh.h
    pts = np.empty((mesh.n_elements, xi.size, 2))
    pts[:, :, 0] = mesh.centroids[:, :1] + half * xi[None, :]
    pts[:, :, 1] = mesh.centroids[:, 1:] + half * eta[None, :]
    weights = np.broadcast_to(w * half * half, (mesh.n_elements, w.size)).copy()
    return pts, weights


# --- reference shape functions -------------------------------------------

def _lagrange2(t):
    return np.stack([0.5 * t * (t - 1.0), 1.0 - t * t, 0.5 * t * (t + 1.0)])


def _lagrange2_deriv(t):
    return np.stack([t - 0.5, -2.0 * t, t + 0.5])


def q2_shape(xi, eta):
    """Biquadratic shape values and reference derivatives.

    Returns arrays of shape (9, npts) for N, dN/dxi, dN/deta in local order
    ``3*b + c``.
    """
    xi, eta = np.asarray(xi, float), np.asarray(eta, float)
    lx, ly = _lagrange2(xi), _lagrange2(eta)
    dx, dy = _lagrange2_deriv(xi), _lagrange2_deriv(eta)
    N = (ly[:, None, :] * lx[None, :, :]).reshape(9, -1)
    Nxi = (ly[:, None, :] * dx[None, :, :]).reshape(9, -1)
    Neta = (dy[:, None, :] * lx[None, :, :]).reshape(9, -1)
    return N, Nxi, Neta


def q1_shape(xi, eta):
    """Bilinear shape values, corner order (-,-), (+,-), (-,+), (+,+)."""
    xi, eta = np.asarray(xi, float), np.asarray(eta, float)
    lx = np.stack([0.5 * (1 - xi), 0.5 * (1 + xi)])
    ly = np.stack([0.5 * (1 - eta), 0.5 * (1 + eta)])
    return (ly[:, None, :] * lx[None, :, :]).reshape(4, -1)


def pressure_shape(family: str, xi, eta):
    """Local pressure basis on the reference square.

    For P-1 the basis is {1, (x1-c1)/h, (x2-c2)/h}, which on the reference
    square reads {1, xi/2, eta/2}.
    """
    xi, eta = np.asarray(xi, float), np.asarray(eta, float)
    if family == "P-1":
        return np.stack([np.ones_like(xi), 0.5 * xi, 0.5 * eta])
    return q1_shape(xi, eta)

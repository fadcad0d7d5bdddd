"""Spacelike codimension-two surfaces: meshes, null normal frames, second
fundamental forms and quadrature.

Conventions
-----------
* ``L = e0 + en`` and ``Lbar = e0 - en`` with ``e0`` the future unit normal
  obtained from ``∂_t`` and ``en`` the spacelike unit normal on the side
  selected by the surface's orientation field, so ``g(L, Lbar) = -2``.
* ``H`` is the normal part of ``σ^{ab} D_a ∂_b`` (a sum, not an average); a
  round sphere of radius ρ in a Minkowski slice has ``g(H, Lbar) = 2/ρ``.
* ``chi_ab = g(D_a L, ∂_b)`` and ``chibar_ab = g(D_a Lbar, ∂_b)``; with these
  ``H = ½ tr(chibar) L + ½ tr(chi) Lbar``.
* ``(D_a Lbar)^⊥ = zeta_a Lbar`` (the L-component vanishes since Lbar is null).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import dual as ad
from .charts import (
    ANTI_DE_SITTER,
    DE_SITTER,
    MINKOWSKI,
    SpacetimeId,
    check_domain,
    christoffel,
    embed,
    inverse_metric,
    metric,
    sqrt_abs_det,
)
from .forms import EPS4, DEFAULT_L, minkowski_norm2


class DegenerateSurfaceError(ValueError):
    """The immersion is degenerate or not spacelike at some node."""

    def __init__(self, message: str, node: int | None = None):
        super().__init__(message)
        self.node = node


class BoundaryOffSupportError(ValueError):
    def __init__(self, node: int, distance: float):
        super().__init__(f"boundary node {node} is off the support surface by {distance:.3e}")
        self.node = node
        self.distance = distance


# -- support hypersurfaces ----------------------------------------------------------


@dataclass(frozen=True)
class SupportSurface:
    """Level set ``level(x) = target``; the support normal is grad(level)."""

    spacetime: SpacetimeId
    level: Callable = field(repr=False)
    target: float
    label: str
    l: float | None = None

    def residual(self, x) -> np.ndarray:
        return np.asarray(ad.primal(self.level(x))) - self.target

    def normal(self, x):
        """Support normal vector ``g^{-1} d(level)``."""
        dl = ad.derivatives(self.level, x)
        return ad.einsum("mn...,n...->m...", inverse_metric(self.spacetime, x), dl)

    @property
    def slice_radius(self) -> float:
        return slice_radius(self.spacetime, self.l)


def slice_radius(spacetime: SpacetimeId, l: float | None = None) -> float:
    """Coordinate radius of the support surface inside the ``t = 0`` slice."""
    spacetime = SpacetimeId.parse(spacetime)
    if spacetime is MINKOWSKI:
        return 1.0
    l = validate_l(spacetime, DEFAULT_L[spacetime] if l is None else l)
    if spacetime is ANTI_DE_SITTER:
        return float(np.sqrt((l - 1) / (l + 1)))
    return float(np.sqrt((1 - l) / (1 + l)))


def validate_l(spacetime: SpacetimeId, l: float) -> float:
    spacetime = SpacetimeId.parse(spacetime)
    l = float(l)
    if spacetime is ANTI_DE_SITTER and not l > 1.0:
        raise ValueError(f"AdS support parameter must satisfy l = cosh d > 1, got {l}")
    if spacetime is DE_SITTER and not 0.0 < l < 1.0:
        raise ValueError(f"dS support parameter must satisfy 0 < l = cos d < 1, got {l}")
    return l


def support_surface(spacetime: SpacetimeId, l: float | None = None) -> SupportSurface:
    """de Sitter sphere ⟨x,x⟩ = 1 (Minkowski) or the distance-d surface y^0 = l."""
    spacetime = SpacetimeId.parse(spacetime)
    if spacetime is MINKOWSKI:
        return SupportSurface(spacetime, minkowski_norm2, 1.0, "S^{2,1}: <x,x> = 1", None)
    l = validate_l(spacetime, DEFAULT_L[spacetime] if l is None else l)
    word = "cosh" if spacetime is ANTI_DE_SITTER else "cos"
    return SupportSurface(spacetime, lambda x: embed(spacetime, x)[0], l, f"y0 = {word} d = {l:.6g}", l)


# -- parametrized surfaces -----------------------------------------------------------


@dataclass(frozen=True)
class ParamSurface:
    """Analytic immersion ``u = (u1, u2) -> chart coordinates``.

    ``immersion`` is generic in the scalar type so exact parameter derivatives
    come from dual arithmetic.  When ``has_boundary`` is set, the edge
    ``u1 = u_range[0][1]`` is the surface boundary (polar parametrization with
    the pole at ``u1 = u_range[0][0]``).  ``orientation(u, x)`` returns a
    coordinate vector on the side ``en`` should point to.
    """

    name: str
    spacetime: SpacetimeId
    immersion: Callable = field(repr=False)
    u_range: tuple
    periodic_v: bool = True
    has_boundary: bool = False
    orientation: Callable | None = field(default=None, repr=False)
    support: SupportSurface | None = None
    axis: int = 3
    params: dict = field(default_factory=dict)
    velocity: Callable | None = field(default=None, repr=False)  # preferred initial flow direction

    def __call__(self, u):
        return self.immersion(u)


def _gl(n: int, a: float, b: float):
    z, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * z + 0.5 * (a + b), 0.5 * (b - a) * w


def _grid_sizes(surface: ParamSurface, order: int):
    return order, (2 * order if surface.periodic_v else order)


@dataclass
class BoundaryNodes:
    u: np.ndarray
    X: np.ndarray
    dX: np.ndarray
    ddX: np.ndarray
    tangent: np.ndarray
    conormal: np.ndarray
    weights: np.ndarray
    hint: np.ndarray


@dataclass
class SurfaceMesh:
    surface: ParamSurface
    order: int
    shape: tuple
    u: np.ndarray  # (2, N)
    X: np.ndarray  # (4, N)
    dX: np.ndarray  # (2, 4, N)
    ddX: np.ndarray  # (2, 2, 4, N)
    param_weights: np.ndarray
    weights: np.ndarray  # includes sqrt det sigma
    hint: np.ndarray
    boundary: BoundaryNodes | None = None

    @property
    def spacetime(self) -> SpacetimeId:
        return self.surface.spacetime

    @property
    def size(self) -> int:
        return self.X.shape[1]

    def nodes(self):
        """Per-node tuples (ChartPoint-like coords, tangent basis, weight)."""
        for k in range(self.size):
            yield self.X[:, k], self.dX[:, :, k], self.weights[k]


def _jets(f, U):
    X = np.asarray(f(U), dtype=float)
    dX = np.asarray(ad.derivatives(f, U), dtype=float)
    ddX = np.asarray(ad.derivatives(lambda v: ad.derivatives(f, v), U), dtype=float)
    return X, dX, ddX


def _hint(surface: ParamSurface, U, X):
    if surface.orientation is not None:
        return np.asarray(ad.primal(surface.orientation(U, X)), dtype=float)
    h = np.array(X, dtype=float)
    h[0] = 0.0
    return h


def build_mesh(surface: ParamSurface, order: int) -> SurfaceMesh:
    """Tensor-product Gauss-Legendre mesh (``order`` × ``2·order`` for angular v)."""
    if order < 2:
        raise ValueError("quadrature order must be >= 2")
    n1, n2 = _grid_sizes(surface, order)
    (a1, b1), (a2, b2) = surface.u_range
    z1, w1 = _gl(n1, a1, b1)
    z2, w2 = _gl(n2, a2, b2)
    U = np.stack(np.meshgrid(z1, z2, indexing="ij")).reshape(2, -1)
    pw = np.outer(w1, w2).reshape(-1)
    X, dX, ddX = _jets(surface.immersion, U)
    check_domain(surface.spacetime, X)
    g = np.asarray(metric(surface.spacetime, X))
    sig = np.einsum("amk,mnk,bnk->abk", dX, g, dX)
    det = sig[0, 0] * sig[1, 1] - sig[0, 1] * sig[1, 0]
    bad = np.flatnonzero(~(det > 1e-14 * (1 + np.abs(sig[0, 0] * sig[1, 1]))) | ~(sig[0, 0] > 0))
    if bad.size:
        raise DegenerateSurfaceError(
            f"{surface.name}: induced metric not positive definite at node {int(bad[0])}", int(bad[0])
        )
    mesh = SurfaceMesh(
        surface=surface,
        order=order,
        shape=(n1, n2),
        u=U,
        X=X,
        dX=dX,
        ddX=ddX,
        param_weights=pw,
        weights=pw * np.sqrt(det),
        hint=_hint(surface, U, X),
    )
    if surface.has_boundary:
        Ub = np.stack([np.full(n2, b1), z2])
        Xb, dXb, ddXb = _jets(surface.immersion, Ub)
        gb = np.asarray(metric(surface.spacetime, Xb))
        T = dXb[1]
        tt = np.einsum("mk,mnk,nk->k", T, gb, T)
        if np.any(tt <= 0):
            raise DegenerateSurfaceError(f"{surface.name}: degenerate boundary curve")
        R = dXb[0] - np.einsum("mk,mnk,nk->k", dXb[0], gb, T) / tt * T
        rr = np.einsum("mk,mnk,nk->k", R, gb, R)
        mesh.boundary = BoundaryNodes(
            u=Ub,
            X=Xb,
            dX=dXb,
            ddX=ddXb,
            tangent=T,
            conormal=R / np.sqrt(rr),
            weights=w2 * np.sqrt(tt),
            hint=_hint(surface, Ub, Xb),
        )
    return mesh


def integrate(mesh: SurfaceMesh, values) -> float:
    """Quadrature of node values over Σ (fixed summation order)."""
    return float(np.dot(mesh.weights, np.asarray(values, dtype=float)))


def integrate_boundary(mesh: SurfaceMesh, values) -> float:
    if mesh.boundary is None:
        raise ValueError("surface has no boundary")
    return float(np.dot(mesh.boundary.weights, np.asarray(values, dtype=float)))


def dump_mesh_csv(mesh: SurfaceMesh, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["u1", "u2", "x0", "x1", "x2", "x3", "weight"])
        for k in range(mesh.size):
            w.writerow([repr(float(v)) for v in (*mesh.u[:, k], *mesh.X[:, k], mesh.weights[k])])


# -- normal frames and fundamental forms ---------------------------------------------


def _pair(g, u, v):
    return ad.einsum("m...,mn...,n...->...", u, g, v)


def _frame(spacetime: SpacetimeId, x, t1, t2, hint):
    """(e0, en) normal to span(t1, t2); generic in the scalar type."""
    g = metric(spacetime, x)
    s11, s12, s22 = _pair(g, t1, t1), _pair(g, t1, t2), _pair(g, t2, t2)
    det = s11 * s22 - s12 * s12
    shape = np.shape(ad.primal(x[0]))
    dt = np.zeros((4,) + shape)
    dt[0] = 1.0
    a1, a2 = _pair(g, dt, t1), _pair(g, dt, t2)
    c1 = (s22 * a1 - s12 * a2) / det
    c2 = (s11 * a2 - s12 * a1) / det
    v = dt - c1 * t1 - c2 * t2
    e0 = v / ad.sqrt(-_pair(g, v, v))
    n_low = sqrt_abs_det(spacetime, x) * ad.einsum("mabc,a...,b...,c...->m...", EPS4, e0, t1, t2)
    n = ad.einsum("mn...,n...->m...", inverse_metric(spacetime, x), n_low)
    en = n / ad.sqrt(_pair(g, n, n))
    sign = ad.where_sign(_pair(g, en, hint))
    sign = np.where(sign == 0, 1.0, sign)
    return ad.stack([e0, sign * en])


@dataclass
class NormalFrame:
    e0: np.ndarray
    en: np.ndarray
    L: np.ndarray
    Lbar: np.ndarray

    def scaled(self, a: float) -> "NormalFrame":
        return replace(self, L=a * self.L, Lbar=self.Lbar / a)


@dataclass
class FundamentalForms:
    sigma: np.ndarray  # (2, 2, N)
    sigma_inv: np.ndarray
    chi: np.ndarray
    chibar: np.ndarray
    H: np.ndarray  # (4, N)
    II: np.ndarray  # (2, 2, 4, N) normal part of D_a ∂_b
    DL: np.ndarray  # (2, 4, N)
    DLbar: np.ndarray
    DLbar_perp: np.ndarray
    zeta: np.ndarray  # (2, N): (D_a Lbar)^⊥ = zeta_a Lbar


@dataclass
class SurfaceGeometry:
    """Frame and fundamental forms at a batch of surface nodes."""

    spacetime: SpacetimeId
    X: np.ndarray
    dX: np.ndarray
    g: np.ndarray
    frame: NormalFrame
    forms: FundamentalForms

    def pair(self, u, v) -> np.ndarray:
        return np.einsum("m...,mn...,n...->...", u, self.g, v)

    @property
    def H_Lbar(self) -> np.ndarray:
        return self.pair(self.forms.H, self.frame.Lbar)

    def shear(self) -> np.ndarray:
        """σ-norm of the trace-free part of chibar at each node."""
        f = self.forms
        tr = np.einsum("abk,abk->k", f.sigma_inv, f.chibar)
        tf = f.chibar - 0.5 * tr * f.sigma
        return np.sqrt(np.abs(np.einsum("ack,bdk,abk,cdk->k", f.sigma_inv, f.sigma_inv, tf, tf)))


def surface_geometry(spacetime: SpacetimeId, X, dX, ddX, hint, gauge: float = 1.0) -> SurfaceGeometry:
    """Null frame (scaled by ``gauge``) and fundamental forms from surface jets."""
    X = np.asarray(X, dtype=float)
    g = np.asarray(metric(spacetime, X))
    gam = np.asarray(christoffel(spacetime, X))
    fr = np.asarray(_frame(spacetime, X, dX[0], dX[1], hint))
    e0, en = fr[0], fr[1]
    dfr = []
    for a in range(2):

        def moved(s, a=a):
            return _frame(spacetime, X + s * dX[a], dX[0] + s * ddX[a, 0], dX[1] + s * ddX[a, 1], hint)

        dfr.append(np.asarray(ad.derivative(moved, 0.0, 1.0)))
    dfr = np.stack(dfr)  # (2, 2, 4, N): [a, (e0|en), m, k]
    conn = np.einsum("lmnk,amk->alnk", gam, dX)  # Γ^l_{mn} ∂_a x^m -> [a, l, n]
    De0 = dfr[:, 0] + np.einsum("alnk,nk->alk", conn, e0)
    Den = dfr[:, 1] + np.einsum("alnk,nk->alk", conn, en)
    L = gauge * (e0 + en)
    Lbar = (e0 - en) / gauge
    DL = gauge * (De0 + Den)
    DLbar = (De0 - Den) / gauge

    def pr(u, v):
        return np.einsum("m...,mn...,n...->...", u, g, v)

    sigma = np.einsum("amk,mnk,bnk->abk", dX, g, dX)
    det = sigma[0, 0] * sigma[1, 1] - sigma[0, 1] ** 2
    sigma_inv = np.stack([[sigma[1, 1], -sigma[0, 1]], [-sigma[1, 0], sigma[0, 0]]]) / det
    DD = ddX + np.einsum("lmnk,amk,bnk->ablk", gam, dX, dX)
    II = (
        -np.einsum("abk,mk->abmk", np.einsum("ablk,lmk,mk->abk", DD, g, e0), e0)
        + np.einsum("abk,mk->abmk", np.einsum("ablk,lmk,mk->abk", DD, g, en), en)
    )
    H = np.einsum("abk,abmk->mk", sigma_inv, II)
    chi = np.einsum("amk,mnk,bnk->abk", DL, g, dX)
    chibar = np.einsum("amk,mnk,bnk->abk", DLbar, g, dX)
    zeta = -0.5 * np.einsum("amk,mnk,nk->ak", DLbar, g, L)
    perp = np.einsum("ak,mk->amk", zeta, Lbar)
    forms = FundamentalForms(sigma, sigma_inv, chi, chibar, H, II, DL, DLbar, perp, zeta)
    return SurfaceGeometry(spacetime, X, np.asarray(dX), g, NormalFrame(e0, en, L, Lbar), forms)


def mesh_geometry(mesh: SurfaceMesh, gauge: float = 1.0) -> SurfaceGeometry:
    return surface_geometry(mesh.spacetime, mesh.X, mesh.dX, mesh.ddX, mesh.hint, gauge)


def boundary_geometry(mesh: SurfaceMesh, gauge: float = 1.0) -> SurfaceGeometry:
    b = mesh.boundary
    if b is None:
        raise ValueError("surface has no boundary")
    return surface_geometry(mesh.spacetime, b.X, b.dX, b.ddX, b.hint, gauge)


def normal_frame(mesh: SurfaceMesh, node: int | None = None) -> NormalFrame:
    fr = mesh_geometry(mesh).frame
    if node is None:
        return fr
    return NormalFrame(fr.e0[:, node], fr.en[:, node], fr.L[:, node], fr.Lbar[:, node])


def fundamental_forms(mesh: SurfaceMesh, gauge: float = 1.0) -> FundamentalForms:
    return mesh_geometry(mesh, gauge).forms


# -- free boundary ---------------------------------------------------------------------


def support_distance(mesh: SurfaceMesh, support: SupportSurface) -> np.ndarray:
    if mesh.boundary is None:
        raise ValueError("surface has no boundary")
    return np.abs(support.residual(mesh.boundary.X))


def free_boundary_residual(mesh: SurfaceMesh, support: SupportSurface, check: bool = True, tol: float = 1e-8) -> float:
    """Max normal-bundle component of the unit support normal at ∂Σ.

    Zero means the support normal is tangent to Σ (orthogonal contact).
    """
    dist = support_distance(mesh, support)
    if check and np.max(dist) >= tol:
        k = int(np.argmax(dist))
        raise BoundaryOffSupportError(k, float(dist[k]))
    geo = boundary_geometry(mesh)
    N = np.asarray(support.normal(mesh.boundary.X))
    nn = np.sqrt(np.abs(geo.pair(N, N)))
    a = geo.pair(N, geo.frame.e0) / nn
    b = geo.pair(N, geo.frame.en) / nn
    return float(np.max(np.sqrt(a * a + b * b)))


# -- grid surfaces with spectral derivatives ----------------------------------------------


def _diff_matrix(z: np.ndarray) -> np.ndarray:
    """Barycentric differentiation matrix for polynomial interpolation at ``z``."""
    n = len(z)
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    logw = -np.sum(np.log(np.abs(diff)), axis=1)
    sgn = np.prod(np.sign(diff), axis=1)
    w = sgn * np.exp(logw - logw.max())
    D = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    D[np.arange(n), np.arange(n)] = -D.sum(axis=1)
    return D


def _interp_row(z: np.ndarray, t: float) -> np.ndarray:
    """Row vector evaluating the interpolant through nodes ``z`` at ``t``."""
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    logw = -np.sum(np.log(np.abs(diff)), axis=1)
    sgn = np.prod(np.sign(diff), axis=1)
    w = sgn * np.exp(logw - logw.max())
    c = w / (t - z)
    return c / c.sum()


@dataclass
class SpectralGrid:
    """Tensor grid matching :func:`build_mesh`, with interpolation operators."""

    shape: tuple
    z1: np.ndarray
    z2: np.ndarray
    D1: np.ndarray
    D2: np.ndarray
    edge_row: np.ndarray  # evaluates u1-interpolant at the boundary edge
    param_weights: np.ndarray

    @classmethod
    def for_mesh(cls, mesh: SurfaceMesh) -> "SpectralGrid":
        n1, n2 = mesh.shape
        (a1, b1), (a2, b2) = mesh.surface.u_range
        z1, w1 = _gl(n1, a1, b1)
        z2, w2 = _gl(n2, a2, b2)
        return cls(mesh.shape, z1, z2, _diff_matrix(z1), _diff_matrix(z2), _interp_row(z1, b1), np.outer(w1, w2).reshape(-1))

    def _grid(self, F):
        return F.reshape(F.shape[:-1] + self.shape)

    def jets(self, X: np.ndarray):
        """First and second parameter derivatives of node values ``X`` (c, N)."""
        G = self._grid(X)
        d1 = np.einsum("ij,...jk->...ik", self.D1, G)
        d2 = np.einsum("kl,...jl->...jk", self.D2, G)
        d11 = np.einsum("ij,...jk->...ik", self.D1, d1)
        d12 = np.einsum("kl,...jl->...jk", self.D2, d1)
        d22 = np.einsum("kl,...jl->...jk", self.D2, d2)
        flat = lambda A: A.reshape(A.shape[: -2] + (-1,))
        dX = np.stack([flat(d1), flat(d2)])
        ddX = np.stack([np.stack([flat(d11), flat(d12)]), np.stack([flat(d12), flat(d22)])])
        return dX, ddX

    def to_edge(self, F: np.ndarray) -> np.ndarray:
        """Interpolate node values (..., N) to the boundary edge (..., n2)."""
        return np.einsum("j,...jk->...k", self.edge_row, self._grid(F))

"""Integral identities and inequalities for surfaces and CKY 2-forms.

Every "= 0" identity is judged against a quadrature-error proxy: the same
quantity evaluated at ``order`` and ``order + 8``.  The helpers here return
:class:`IdentityResult` records; pass/fail policy lives in the callers.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .charts import ANTI_DE_SITTER, MINKOWSKI, SpacetimeId, frame_vectors, metric
from .forms import DEFAULT_L, TwoFormField, composite, xi
from .surfaces import (
    DegenerateSurfaceError,
    ParamSurface,
    SupportSurface,
    SurfaceGeometry,
    SurfaceMesh,
    build_mesh,
    free_boundary_residual,
    integrate,
    mesh_geometry,
    support_surface,
    validate_l,
)

#: Dimension of the slice; Σ has dimension n - 1 = 2.
N_SLICE = 3

PROXY_FACTOR = 10.0
PROXY_FLOOR = 1e-10
ORDER_STEP = 8


class HalfSpaceWarning(UserWarning):
    """Σ leaves the half space ``x^i > 0`` assumed by the inequality."""


@dataclass
class IdentityResult:
    name: str
    lhs: float
    rhs: float
    residual: float
    quadrature_order: int
    convergence_estimate: float | None = None
    proxy: float | None = None
    details: dict = field(default_factory=dict)

    def tolerance(self, factor: float = PROXY_FACTOR, floor: float = PROXY_FLOOR) -> float:
        return max(factor * (self.proxy or 0.0), floor)


@dataclass(frozen=True)
class SliceVectorFieldSpec:
    spacetime: SpacetimeId
    i: int = 1
    l: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "spacetime", SpacetimeId.parse(self.spacetime))
        if self.i not in (1, 2, 3):
            raise ValueError(f"direction index must be 1, 2 or 3, got {self.i}")
        if self.spacetime is not MINKOWSKI:
            l = DEFAULT_L[self.spacetime] if self.l is None else self.l
            object.__setattr__(self, "l", validate_l(self.spacetime, l))


# -- helpers ---------------------------------------------------------------------------


def _closed_only(mesh: SurfaceMesh):
    if mesh.surface.has_boundary:
        raise ValueError(f"{mesh.surface.name} has a boundary; the classical formula needs a closed surface")


def _check_slice(mesh: SurfaceMesh, tol: float = 1e-12):
    if np.max(np.abs(mesh.X[0])) > tol or np.max(np.abs(mesh.dX[:, 0])) > tol:
        raise ValueError(f"{mesh.surface.name} is not contained in the slice t = 0")


def _with_order(surface: ParamSurface, order: int, fn):
    return fn(build_mesh(surface, order))


def convergence_study(surface: ParamSurface, order: int, fn, step: int = ORDER_STEP):
    """Evaluate ``fn(mesh)`` at ``order`` and ``order + step``.

    Returns ``(value_at_order, value_at_higher_order, proxy)`` where each value
    is an :class:`IdentityResult`; the proxy is the residual difference.
    """
    a = fn(build_mesh(surface, order))
    b = fn(build_mesh(surface, order + step))
    proxy = abs(a.residual - b.residual)
    a.proxy = proxy
    b.proxy = proxy
    if abs(a.residual) > 0 and abs(b.residual) > 0:
        a.convergence_estimate = b.convergence_estimate = math.log(abs(a.residual) / abs(b.residual)) / math.log(
            (order + step) / order
        )
    return a, b


def _principal(mesh: SurfaceMesh, geo: SurfaceGeometry):
    """Shape-operator invariants (σ1, σ2) with the sign making spheres positive."""
    f = geo.forms
    h = -np.einsum("abmk,mnk,nk->abk", f.II, geo.g, geo.frame.en)
    s1 = np.einsum("abk,abk->k", f.sigma_inv, h)
    det_h = h[0, 0] * h[1, 1] - h[0, 1] * h[1, 0]
    det_s = f.sigma[0, 0] * f.sigma[1, 1] - f.sigma[0, 1] ** 2
    return s1, det_h / det_s


# -- classical Minkowski formula ----------------------------------------------------


def classical_minkowski_residual(mesh: SurfaceMesh, k: int = 1) -> IdentityResult:
    """(n - k) ∫ σ_{k-1} dμ = k ∫ σ_k ⟨X, ν⟩ dμ for a closed surface in ℝ³."""
    if k not in (1, 2):
        raise ValueError("k must be 1 or 2")
    _closed_only(mesh)
    if mesh.spacetime is not MINKOWSKI:
        raise ValueError("the classical formula is stated for the flat slice")
    _check_slice(mesh)
    geo = mesh_geometry(mesh)
    s1, s2 = _principal(mesh, geo)
    support = np.einsum("mk,mk->k", mesh.X[1:], geo.frame.en[1:])
    sig_prev = np.ones(mesh.size) if k == 1 else s1
    sig_k = s1 if k == 1 else s2
    lhs = (N_SLICE - k) * integrate(mesh, sig_prev)
    rhs = k * integrate(mesh, sig_k * support)
    return IdentityResult(f"classical Minkowski k={k}", lhs, rhs, lhs - rhs, mesh.order)


def sigma1_integral(mesh: SurfaceMesh) -> float:
    s1, _ = _principal(mesh, mesh_geometry(mesh))
    return integrate(mesh, s1)


# -- spacetime Minkowski formula ------------------------------------------------------


def _pair_form(Qx, u, v):
    return np.einsum("mnk,mk,nk->k", Qx, u, v)


def minkowski_integrand(geo: SurfaceGeometry, Q: TwoFormField) -> np.ndarray:
    """(n-1)⟨ξ, Lbar⟩ + Q(H, Lbar) + σ^{ab} Q(∂_a, (D_b Lbar)^⊥) at each node."""
    X = geo.X
    Qx = np.asarray(Q(X))
    xi_x = np.asarray(xi(Q, X))
    f = geo.forms
    Lb = geo.frame.Lbar
    term1 = (N_SLICE - 1) * np.einsum("mk,mk->k", xi_x, Lb)
    term2 = _pair_form(Qx, f.H, Lb)
    term3 = np.einsum("abk,mnk,amk,bnk->k", f.sigma_inv, Qx, geo.dX, f.DLbar_perp)
    return term1 + term2 + term3


def _require_free_boundary(mesh: SurfaceMesh, support: SupportSurface | None, tol: float = 1e-6):
    if not mesh.surface.has_boundary:
        return None
    support = support or mesh.surface.support
    if support is None:
        raise ValueError(f"{mesh.surface.name} has a boundary but no support surface")
    res = free_boundary_residual(mesh, support)
    if res >= tol:
        raise ValueError(f"{mesh.surface.name} does not meet the support surface orthogonally (residual {res:.3e})")
    return res


def minkowski_formula_residual(
    mesh: SurfaceMesh,
    Q: TwoFormField,
    gauge: float = 1.0,
    check_boundary: bool = True,
) -> IdentityResult:
    """Value of the spacetime Minkowski integral (target 0).

    With ``check_boundary`` the free-boundary hypothesis is enforced; negative
    controls pass ``check_boundary=False``.
    """
    fb = _require_free_boundary(mesh, None) if check_boundary else None
    geo = mesh_geometry(mesh, gauge)
    val = integrate(mesh, minkowski_integrand(geo, Q))
    return IdentityResult(
        f"spacetime Minkowski formula [{mesh.surface.name}]", val, 0.0, val, mesh.order, details={"free_boundary": fb}
    )


# -- the functional 𝓕 ------------------------------------------------------------------


def functional_terms(geo: SurfaceGeometry, weights: np.ndarray, Q: TwoFormField):
    """Return ``((n-1)∫⟨ξ,Lbar⟩/⟨H,Lbar⟩, ½∫Q(L,Lbar))``."""
    hl = geo.H_Lbar
    tiny = 1e-12 * (1 + np.max(np.abs(hl)))
    bad = np.flatnonzero(np.abs(hl) <= tiny)
    if bad.size:
        raise DegenerateSurfaceError(f"<H, Lbar> vanishes at node {int(bad[0])}", int(bad[0]))
    X = geo.X
    xl = np.einsum("mk,mk->k", np.asarray(xi(Q, X)), geo.frame.Lbar)
    qll = _pair_form(np.asarray(Q(X)), geo.frame.L, geo.frame.Lbar)
    a = (N_SLICE - 1) * float(np.dot(weights, xl / hl))
    b = 0.5 * float(np.dot(weights, qll))
    return a, b


def functional_value(geo: SurfaceGeometry, weights: np.ndarray, Q: TwoFormField) -> float:
    a, b = functional_terms(geo, weights, Q)
    return a - b


def evaluate_F(mesh: SurfaceMesh, Q: TwoFormField, gauge: float = 1.0) -> float:
    """𝓕(Σ, [Lbar]) = (n-1)∫⟨ξ,Lbar⟩/⟨H,Lbar⟩ dμ - ½∫Q(L,Lbar) dμ."""
    return functional_value(mesh_geometry(mesh, gauge), mesh.weights, Q)


# -- slice reductions ----------------------------------------------------------------------


def slice_reduction_X(spec: SliceVectorFieldSpec, x) -> np.ndarray:
    """Euclidean components of X_{∂_i} at slice points ``x`` (shape (3, ...)).

    Minkowski: ⟨x, a⟩x - ½(|x|² + 1)a.
    AdS: (1 + l)[x^i x - ½(r² + (l-1)/(l+1)) a].
    dS: (1 + l)[x^i x - ½(r² + (1-l)/(1+l)) a].
    """
    x = np.asarray(x, dtype=float)
    st, i = spec.spacetime, spec.i
    a = np.zeros_like(x)
    a[i - 1] = 1.0
    r2 = np.sum(x * x, axis=0)
    xi_ = x[i - 1]
    if st is MINKOWSKI:
        return xi_ * x - 0.5 * (r2 + 1.0) * a
    l = spec.l
    if st is ANTI_DE_SITTER:
        c = (l - 1) / (l + 1)
    else:
        c = (1 - l) / (1 + l)
    return (1 + l) * (xi_ * x - 0.5 * (r2 + c) * a)


def slice_xi_Lbar(spacetime: SpacetimeId, x, i: int = 1) -> np.ndarray:
    """Closed-form ⟨ξ, Lbar⟩ on the slice: x^i, 2x^i/(1-r²) or 2x^i/(1+r²)."""
    spacetime = SpacetimeId.parse(spacetime)
    x = np.asarray(x, dtype=float)
    r2 = np.sum(x * x, axis=0)
    if spacetime is MINKOWSKI:
        return x[i - 1]
    if spacetime is ANTI_DE_SITTER:
        return 2 * x[i - 1] / (1 - r2)
    return 2 * x[i - 1] / (1 + r2)


def _slice_X_nu(geo: SurfaceGeometry, spec: SliceVectorFieldSpec) -> np.ndarray:
    Xs = slice_reduction_X(spec, geo.X[1:])
    V = np.concatenate([np.zeros((1, Xs.shape[1])), Xs])
    return geo.pair(V, geo.frame.en)


def slice_consistency(mesh: SurfaceMesh, Q: TwoFormField, spec: SliceVectorFieldSpec) -> dict:
    """Pointwise slice identities at every node of a slice surface.

    Returns max deviations of ⟨ξ,Lbar⟩ from its closed form, of Q(L,Lbar)
    from 2⟨X_{∂_i}, ν⟩, and of Q(L,Lbar) from 2Q(ν, e0).
    """
    _check_slice(mesh)
    geo = mesh_geometry(mesh)
    X = geo.X
    Qx = np.asarray(Q(X))
    xl = np.einsum("mk,mk->k", np.asarray(xi(Q, X)), geo.frame.Lbar)
    qll = _pair_form(Qx, geo.frame.L, geo.frame.Lbar)
    q_nu_e0 = _pair_form(Qx, geo.frame.en, geo.frame.e0)
    return {
        "xi_Lbar": float(np.max(np.abs(xl - slice_xi_Lbar(mesh.spacetime, X[1:], spec.i)))),
        "Q_LLbar_vs_X": float(np.max(np.abs(qll - 2 * _slice_X_nu(geo, spec)))),
        "Q_LLbar_vs_nu_e0": float(np.max(np.abs(qll - 2 * q_nu_e0))),
    }


# -- Heintz-Karcher ---------------------------------------------------------------------------


def heintz_karcher_gap(mesh: SurfaceMesh, spec: SliceVectorFieldSpec, check_boundary: bool = True) -> IdentityResult:
    """lhs = (n-1)∫⟨ξ,Lbar⟩/H dμ, rhs = ∫⟨X_{∂_i}, ν⟩ dμ, residual = lhs - rhs.

    Also records both candidate prefactors of the spacetime inequality,
    ``∫⟨ξ,Lbar⟩/⟨H,Lbar⟩ - c ∫Q(L,Lbar)`` with c = 1/(2(n-1)) and c = n/(2(n-1)),
    evaluated through the composite form itself.
    """
    if mesh.spacetime is not spec.spacetime:
        raise ValueError("mesh and spec live in different spacetimes")
    _check_slice(mesh)
    fb = _require_free_boundary(mesh, None) if check_boundary else None
    geo = mesh_geometry(mesh)
    H = geo.H_Lbar
    bad = np.flatnonzero(H <= 0)
    if bad.size:
        raise DegenerateSurfaceError(f"mean curvature not positive at node {int(bad[0])}", int(bad[0]))
    xs = mesh.X[spec.i]
    half_space = bool(np.all(xs > 0))
    if not half_space:
        warnings.warn(f"{mesh.surface.name} leaves the half space x^{spec.i} > 0", HalfSpaceWarning, stacklevel=2)
    lhs = (N_SLICE - 1) * integrate(mesh, slice_xi_Lbar(mesh.spacetime, mesh.X[1:], spec.i) / H)
    rhs = integrate(mesh, _slice_X_nu(geo, spec))

    Q = composite(spec.spacetime, spec.i, spec.l)
    xi_term = integrate(mesh, np.einsum("mk,mk->k", np.asarray(xi(Q, geo.X)), geo.frame.Lbar) / H)
    q_term = integrate(mesh, _pair_form(np.asarray(Q(geo.X)), geo.frame.L, geo.frame.Lbar))
    n = N_SLICE
    details = {
        "free_boundary": fb,
        "half_space": half_space,
        "prefactor_1/(2(n-1))": xi_term - q_term / (2 * (n - 1)),
        "prefactor_n/(2(n-1))": xi_term - n * q_term / (2 * (n - 1)),
    }
    return IdentityResult(f"Heintz-Karcher gap [{mesh.surface.name}]", lhs, rhs, lhs - rhs, mesh.order, details=details)


# -- boundary tangency ----------------------------------------------------------------------


def support_points(spacetime: SpacetimeId, l: float | None, n: int, seed: int = 0, t_max: float = 1.0) -> np.ndarray:
    """Seeded sample of ``n`` chart points on the support hypersurface."""
    spacetime = SpacetimeId.parse(spacetime)
    rng = np.random.default_rng(seed)
    t = rng.uniform(-t_max, t_max, n)
    w = rng.normal(size=(3, n))
    w /= np.linalg.norm(w, axis=0)
    if spacetime is MINKOWSKI:
        r = np.sqrt(1 + t * t)
    else:
        l = validate_l(spacetime, DEFAULT_L[spacetime] if l is None else l)
        if spacetime is ANTI_DE_SITTER:
            m = l / np.cos(t)
            r = np.sqrt((m - 1) / (m + 1))
        else:
            m = l / np.cosh(t)
            r = np.sqrt((1 - m) / (1 + m))
    return np.concatenate([t[None], r * w])


def q_boundary_tangency(
    spacetime: SpacetimeId,
    Q: TwoFormField,
    l: float | None = None,
    n_points: int = 200,
    seed: int = 0,
) -> float:
    """Max orthonormal-frame norm of ι_N Q over sampled support points.

    ``N`` is the unit support normal.  Since ``Q(N, N) = 0`` the contraction
    only sees directions tangent to the support surface.
    """
    spacetime = SpacetimeId.parse(spacetime)
    support = support_surface(spacetime, l)
    x = support_points(spacetime, support.l, n_points, seed)
    if np.max(np.abs(support.residual(x))) > 1e-10:
        raise RuntimeError("support sampling failed")
    N = np.asarray(support.normal(x))
    g = np.asarray(metric(spacetime, x))
    N = N / np.sqrt(np.abs(np.einsum("mk,mnk,nk->k", N, g, N)))
    contr = np.einsum("mk,mnk->nk", N, np.asarray(Q(x)))
    frame_comps = np.einsum("ank,nk->ak", np.asarray(frame_vectors(spacetime, x)), contr)
    return float(np.max(np.linalg.norm(frame_comps, axis=0)))


# -- CMC with free boundary ---------------------------------------------------------------------


@dataclass
class CmcCheck:
    mean_curvature_std: float
    normal_connection: float
    free_boundary: float | None

    def as_tuple(self):
        return self.mean_curvature_std, self.normal_connection, self.free_boundary


def cmc_free_boundary_check(mesh: SurfaceMesh, gauge: float = 1.0) -> CmcCheck:
    """(i) std of ⟨H, Lbar⟩; (ii) max σ-norm of ζ where (D_a Lbar)^⊥ = ζ_a Lbar;
    (iii) free-boundary residual (None for closed surfaces)."""
    geo = mesh_geometry(mesh, gauge)
    hl = geo.H_Lbar
    z = geo.forms.zeta
    zn = np.sqrt(np.abs(np.einsum("abk,ak,bk->k", geo.forms.sigma_inv, z, z)))
    fb = None
    if mesh.surface.has_boundary and mesh.surface.support is not None:
        fb = free_boundary_residual(mesh, mesh.surface.support, check=False)
    return CmcCheck(float(np.std(hl)), float(np.max(zn)), fb)

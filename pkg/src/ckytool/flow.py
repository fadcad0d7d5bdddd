"""Null flow ``∂F/∂s = φ Lbar`` along the incoming null hypersurface.

The state carries node positions together with the flow direction ``V``.
``V`` starts as the surface's Lbar and is then parallel transported along
its own geodesic (``dV/ds = -φ Γ(V, V)``), which keeps the initial affine
scaling of the generators.  Minkowski geodesics are straight lines, so with
``φ = 1`` every RK4 step is exact.  Derivatives along the evolving surface
come from spectral differentiation on the quadrature grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .charts import ChartDomainError, SpacetimeId, check_domain, christoffel, metric
from .forms import TwoFormField, xi
from .identities import functional_value
from .surfaces import (
    BoundaryOffSupportError,
    DegenerateSurfaceError,
    SpectralGrid,
    SupportSurface,
    SurfaceGeometry,
    SurfaceMesh,
    _frame,
    build_mesh,
    surface_geometry,
)

PHI_MODES = ("constant_one", "xi_over_H")


@dataclass(frozen=True)
class FlowConfig:
    phi_mode: str = "constant_one"
    ds: float = 1e-2
    max_steps: int = 200
    slice_tolerance: float = 1e-6
    t_slice: float = 0.0
    phi_scale: float = 1.0
    project_boundary: bool = True

    def __post_init__(self):
        if self.phi_mode not in PHI_MODES:
            raise ValueError(f"phi_mode must be one of {PHI_MODES}, got {self.phi_mode!r}")
        if not self.ds > 0:
            raise ValueError("ds must be positive")
        if not self.slice_tolerance > 0:
            raise ValueError("slice_tolerance must be positive")
        if self.max_steps < 0:
            raise ValueError("max_steps must be non-negative")
        if not self.phi_scale > 0:
            raise ValueError("phi_scale must be positive")


@dataclass
class FlowState:
    """Surface nodes on the quadrature grid plus tracked boundary nodes."""

    spacetime: SpacetimeId
    grid: SpectralGrid
    X: np.ndarray  # (4, N)
    V: np.ndarray  # (4, N)
    Xb: np.ndarray | None = None  # (4, n2)
    Vb: np.ndarray | None = None
    s: float = 0.0
    support: SupportSurface | None = None

    @property
    def has_boundary(self) -> bool:
        return self.Xb is not None


@dataclass
class FlowRecord:
    s: float
    F_value: float
    max_x0: float
    shear: float
    boundary_residual: float
    orthogonality: float
    lbar_orthogonality: float


@dataclass
class FlowTrace:
    records: list = field(default_factory=list)
    status: str = "running"
    message: str = ""
    final_state: FlowState | None = field(default=None, repr=False)

    @property
    def F(self) -> np.ndarray:
        return np.array([r.F_value for r in self.records])

    @property
    def s(self) -> np.ndarray:
        return np.array([r.s for r in self.records])

    def max_increase(self) -> float:
        """Largest step-to-step increase of 𝓕 (≤ 0 for a monotone trace)."""
        F = self.F
        return float(np.max(np.diff(F))) if len(F) > 1 else 0.0

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "F_value", "max_x0", "shear", "boundary_residual"])
            for r in self.records:
                w.writerow([repr(float(v)) for v in (r.s, r.F_value, r.max_x0, r.shear, r.boundary_residual)])


# -- state construction ------------------------------------------------------------------------


def initial_state(mesh: SurfaceMesh, gauge: float = 1.0) -> FlowState:
    """Flow state from a mesh; V is the surface's Lbar scaled by ``1/gauge``.

    Surfaces built by pushing a slice surface back along its null normal carry
    that normal as their preferred velocity, so the flow retraces it exactly.
    """
    surf = mesh.surface
    grid = SpectralGrid.for_mesh(mesh)
    if surf.velocity is not None:
        V = np.asarray(surf.velocity(mesh.u), dtype=float)
    else:
        fr = _frame(mesh.spacetime, mesh.X, mesh.dX[0], mesh.dX[1], mesh.hint)
        V = np.asarray(fr[0] - fr[1])
    Xb = Vb = None
    if surf.has_boundary:
        b = mesh.boundary
        Xb = b.X.copy()
        if surf.velocity is not None:
            Vb = np.asarray(surf.velocity(b.u), dtype=float)
        else:
            fr = _frame(mesh.spacetime, b.X, b.dX[0], b.dX[1], b.hint)
            Vb = np.asarray(fr[0] - fr[1])
    return FlowState(mesh.spacetime, grid, mesh.X.copy(), V / gauge, Xb, None if Vb is None else Vb / gauge, 0.0, surf.support)


def state_geometry(state: FlowState) -> tuple[SurfaceGeometry, np.ndarray]:
    """Geometry (frame with ``en`` facing ``-V``) and quadrature weights."""
    dX, ddX = state.grid.jets(state.X)
    geo = surface_geometry(state.spacetime, state.X, dX, ddX, -state.V)
    sig = geo.forms.sigma
    det = sig[0, 0] * sig[1, 1] - sig[0, 1] ** 2
    if np.any(det <= 0):
        k = int(np.flatnonzero(det <= 0)[0])
        raise DegenerateSurfaceError(f"flowed surface degenerates at node {k}", k)
    return geo, state.grid.param_weights * np.sqrt(det)


def state_F(state: FlowState, Q: TwoFormField) -> float:
    geo, w = state_geometry(state)
    return functional_value(geo, w, Q)


def shear_diagnostic(state: FlowState | SurfaceGeometry | SurfaceMesh) -> float:
    """Max over nodes of the σ-norm of the trace-free part of chibar."""
    if isinstance(state, FlowState):
        geo, _ = state_geometry(state)
    elif isinstance(state, SurfaceMesh):
        from .surfaces import mesh_geometry

        geo = mesh_geometry(state)
    else:
        geo = state
    return float(np.max(geo.shear()))


# -- stepping ---------------------------------------------------------------------------------


def _pair(g, u, v):
    return np.einsum("mk,mnk,nk->k", u, g, v)


def _phi(state: FlowState, X, V, config: FlowConfig, Q: TwoFormField | None):
    """φ at the interior nodes of the stage surface ``X``."""
    if config.phi_mode == "constant_one":
        return np.full(X.shape[1], config.phi_scale)
    if Q is None:
        raise ValueError("phi_mode xi_over_H needs the 2-form Q")
    geo, _ = state_geometry(replace(state, X=X, V=V))
    xl = np.einsum("mk,mk->k", np.asarray(xi(Q, X)), V)
    hl = geo.pair(geo.forms.H, V)
    if np.any(hl <= 0):
        k = int(np.flatnonzero(hl <= 0)[0])
        raise DegenerateSurfaceError(f"<H, Lbar> <= 0 at node {k}", k)
    return config.phi_scale * xl / hl


def _rhs(spacetime, X, V, phi):
    gam = np.asarray(christoffel(spacetime, X))
    acc = np.einsum("lmnk,mk,nk->lk", gam, V, V)
    return phi * V, -phi * acc


def _rk4(state: FlowState, h: float, config: FlowConfig, Q):
    """Classical RK4 on (X, V) for interior and boundary nodes together.

    Boundary nodes use φ interpolated from the interior stage field.
    """
    st = state.spacetime
    nb = 0 if state.Xb is None else state.Xb.shape[1]

    def f(Y, W):
        Xi, Vi = Y[:, : Y.shape[1] - nb], W[:, : W.shape[1] - nb]
        phi = _phi(state, Xi, Vi, config, Q)
        if nb:
            phi = np.concatenate([phi, state.grid.to_edge(phi)])
        return _rhs(st, Y, W, phi)

    Y = state.X if not nb else np.concatenate([state.X, state.Xb], axis=1)
    W = state.V if not nb else np.concatenate([state.V, state.Vb], axis=1)
    k1 = f(Y, W)
    k2 = f(Y + 0.5 * h * k1[0], W + 0.5 * h * k1[1])
    k3 = f(Y + 0.5 * h * k2[0], W + 0.5 * h * k2[1])
    k4 = f(Y + h * k3[0], W + h * k3[1])
    Yn = Y + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    Wn = W + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    n = state.X.shape[1]
    if not nb:
        return Yn, Wn, None, None
    return Yn[:, :n], Wn[:, :n], Yn[:, n:], Wn[:, n:]


def project_to_support(support: SupportSurface, X: np.ndarray, iters: int = 4) -> np.ndarray:
    """Newton steps along the support normal onto ``level = target``."""
    X = X.copy()
    g_of = lambda Y: np.asarray(metric(support.spacetime, Y))
    for _ in range(iters):
        res = support.residual(X)
        if np.max(np.abs(res)) < 1e-15:
            break
        N = np.asarray(support.normal(X))
        X = X - res / _pair(g_of(X), N, N) * N
    return X


def step_flow(state: FlowState, config: FlowConfig, Q: TwoFormField | None = None) -> FlowState:
    """One RK4 step of size ``config.ds``; boundary nodes are re-projected."""
    Xn, Vn, Xb, Vb = _rk4(state, config.ds, config, Q)
    for Y in (Xn,) + ((Xb,) if Xb is not None else ()):
        try:
            check_domain(state.spacetime, Y)
        except ChartDomainError as exc:
            raise DegenerateSurfaceError(f"flow left the chart domain: {exc}") from exc
    if Xb is not None and config.project_boundary and state.support is not None:
        Xb = project_to_support(state.support, Xb)
    return replace(state, X=Xn, V=Vn, Xb=Xb, Vb=Vb, s=state.s + config.ds)


# -- boundary diagnostics ---------------------------------------------------------------------


def boundary_residuals(state: FlowState) -> tuple[float, float, float]:
    """Boundary diagnostics at the tracked ∂Σ nodes.

    Returns the max distance from the support, the max normal-bundle
    component of the unit support normal N (full orthogonality) and the max
    of |g(N, Lbar)| (the part of the contact condition the flow preserves).
    """
    if not state.has_boundary or state.support is None:
        return 0.0, 0.0, 0.0
    sup = state.support
    dist = float(np.max(np.abs(sup.residual(state.Xb))))
    dX, _ = state.grid.jets(state.X)
    t1 = state.grid.to_edge(dX[0])
    t2 = np.einsum("ij,mj->mi", state.grid.D2, state.Xb)
    fr = np.asarray(_frame(state.spacetime, state.Xb, t1, t2, -state.Vb))
    g = np.asarray(metric(state.spacetime, state.Xb))
    N = np.asarray(sup.normal(state.Xb))
    N = N / np.sqrt(np.abs(_pair(g, N, N)))
    a, b = _pair(g, N, fr[0]), _pair(g, N, fr[1])
    lbar = _pair(g, N, state.Vb) / np.abs(_pair(g, fr[0], state.Vb))
    return dist, float(np.max(np.sqrt(a * a + b * b))), float(np.max(np.abs(lbar)))


def _record(state: FlowState, Q: TwoFormField) -> FlowRecord:
    geo, w = state_geometry(state)
    hl = geo.pair(geo.forms.H, state.V)
    if np.any(hl <= 0):
        k = int(np.flatnonzero(hl <= 0)[0])
        raise DegenerateSurfaceError(f"<H, Lbar> <= 0 at node {k} (s = {state.s:g})", k)
    F = functional_value(geo, w, Q)
    dist, orth, lorth = boundary_residuals(state)
    return FlowRecord(
        s=state.s,
        F_value=F,
        max_x0=float(np.max(np.abs(state.X[0]))),
        shear=float(np.max(geo.shear())),
        boundary_residual=dist,
        orthogonality=orth,
        lbar_orthogonality=lorth,
    )


def _at_slice(state: FlowState, config: FlowConfig) -> bool:
    return float(np.max(np.abs(state.X[0] - config.t_slice))) < config.slice_tolerance


def run_flow(initial: FlowState | SurfaceMesh, config: FlowConfig, Q: TwoFormField) -> FlowTrace:
    """Step until the slice is reached, a precondition fails or ``max_steps``."""
    state = initial_state(initial) if isinstance(initial, SurfaceMesh) else initial
    trace = FlowTrace()
    try:
        trace.records.append(_record(state, Q))
        for _ in range(config.max_steps):
            if _at_slice(state, config):
                break
            state = step_flow(state, config, Q)
            trace.records.append(_record(state, Q))
        trace.status = "reached_slice" if _at_slice(state, config) else "max_steps"
    except (DegenerateSurfaceError, BoundaryOffSupportError) as exc:
        trace.status = "geometry_error"
        trace.message = str(exc)
    trace.final_state = state
    return trace


def quadrature_proxy_F(surface, order: int, Q: TwoFormField, step: int = 8) -> float:
    """|𝓕(order) - 𝓕(order + step)| plus the spectral-vs-exact jet discrepancy."""
    from .identities import evaluate_F

    m1 = build_mesh(surface, order)
    m2 = build_mesh(surface, order + step)
    a = evaluate_F(m1, Q)
    b = evaluate_F(m2, Q)
    spectral = state_F(initial_state(m1), Q)
    return max(abs(a - b), abs(a - spectral))

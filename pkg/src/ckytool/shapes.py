"""Analytic test surfaces: spheres, ellipsoids, free-boundary caps and their
perturbations, graphs over a disk, and surfaces pushed along null normals."""

from __future__ import annotations

import math

import numpy as np

from . import dual as ad
from .charts import MINKOWSKI, SpacetimeId
from .surfaces import ParamSurface, _frame, slice_radius, support_surface

CAP_MODES = ("bump", "tilt", "ellipsoidal")


def _axes(axis: int):
    b1 = 1 + (axis % 3)
    b2 = 1 + (b1 % 3)
    return b1, b2


def _assemble(t, comps: dict):
    shape = ad._common_shape([t] + list(comps.values()))
    zero = np.zeros(shape)
    return ad.stack([t if t is not None else zero] + [comps.get(m, zero) for m in (1, 2, 3)])


def sphere(
    spacetime: SpacetimeId = MINKOWSKI,
    radius: float = 1.0,
    center=(0.0, 0.0, 0.0),
    t0: float = 0.0,
    time_wiggle: float = 0.0,
    inward: bool = False,
) -> ParamSurface:
    """Round coordinate sphere; ``time_wiggle`` tilts it out of the slice.

    ``inward`` points ``en`` inside, which makes ``<H, Lbar>`` negative.
    """
    spacetime = SpacetimeId.parse(spacetime)
    c = [float(v) for v in center]

    def imm(U):
        psi, phi = U[0], U[1]
        w = (ad.sin(psi) * ad.cos(phi), ad.sin(psi) * ad.sin(phi), ad.cos(psi))
        t = t0 + time_wiggle * w[0] * w[2] + 0.0 * psi
        return _assemble(t, {m + 1: c[m] + radius * w[m] for m in range(3)})

    def orient(U, X):
        h = np.array(X, dtype=float)
        h[0] = 0.0
        for m in range(3):
            h[m + 1] -= c[m]
        return -h if inward else h

    return ParamSurface(
        name=f"sphere(rho={radius:g})" + (" inward" if inward else ""),
        spacetime=spacetime,
        immersion=imm,
        u_range=((0.0, math.pi), (0.0, 2 * math.pi)),
        orientation=orient,
        params=dict(kind="sphere", radius=radius, center=c, t0=t0, time_wiggle=time_wiggle, inward=inward),
    )


def ellipsoid(
    spacetime: SpacetimeId = MINKOWSKI,
    axes=(1.0, 1.0, 0.5),
    center=(0.0, 0.0, 0.0),
    t0: float = 0.0,
) -> ParamSurface:
    spacetime = SpacetimeId.parse(spacetime)
    a = [float(v) for v in axes]
    c = [float(v) for v in center]

    def imm(U):
        psi, phi = U[0], U[1]
        w = (ad.sin(psi) * ad.cos(phi), ad.sin(psi) * ad.sin(phi), ad.cos(psi))
        return _assemble(t0 + 0.0 * psi, {m + 1: c[m] + a[m] * w[m] for m in range(3)})

    def orient(U, X):
        h = np.array(X, dtype=float)
        h[0] = 0.0
        for m in range(3):
            h[m + 1] -= c[m]
        return h

    return ParamSurface(
        name=f"ellipsoid{tuple(a)}",
        spacetime=spacetime,
        immersion=imm,
        u_range=((0.0, math.pi), (0.0, 2 * math.pi)),
        orientation=orient,
        params=dict(kind="ellipsoid", axes=a, center=c, t0=t0),
    )


def cap(
    spacetime: SpacetimeId = MINKOWSKI,
    radius: float = 0.75,
    axis: int = 3,
    l: float | None = None,
    shift: float = 0.0,
    bump: float = 0.0,
    mode: str = "bump",
    power: int = 3,
) -> ParamSurface:
    """Spherical cap meeting the support sphere of the ``t = 0`` slice orthogonally.

    The full sphere has radius ``radius`` and center on the ``axis`` at
    distance ``sqrt(R² + radius²)`` (R = coordinate radius of the support
    surface in the slice), which makes the contact orthogonal.  ``shift``
    moves the center along the axis (breaking the free-boundary condition).
    ``bump`` multiplies the radius by ``1 + bump (cos ψ - cos ψ*)^power h``
    where ψ is the polar angle from the pole nearest the origin; for
    ``power >= 2`` the perturbed surface agrees with the cap to first order
    along ∂Σ, so the contact stays orthogonal.
    """
    spacetime = SpacetimeId.parse(spacetime)
    if mode not in CAP_MODES:
        raise ValueError(f"unknown cap perturbation mode {mode!r}")
    R = slice_radius(spacetime, l)
    cdist = math.sqrt(R * R + radius * radius)
    cos_max = radius / cdist
    psi_max = math.acos(cos_max)
    b1, b2 = _axes(axis)
    center = cdist + shift

    def imm(U):
        psi, phi = U[0], U[1]
        cp, sp = ad.cos(psi), ad.sin(psi)
        wa, w1, w2 = -cp, sp * ad.cos(phi), sp * ad.sin(phi)
        rad = radius
        if bump:
            h = {"bump": 1.0, "tilt": w1, "ellipsoidal": w1 * w1}[mode]
            rad = radius * (1 + bump * (cp - cos_max) ** power * h)
        return _assemble(0.0 * psi, {axis: center + rad * wa, b1: rad * w1, b2: rad * w2})

    def orient(U, X):
        h = np.array(X, dtype=float)
        h[0] = 0.0
        h[axis] -= center
        return h

    support = support_surface(spacetime, l)
    return ParamSurface(
        name=f"cap(rho={radius:g}" + (f", shift={shift:g}" if shift else "") + (f", {mode}={bump:g}" if bump else "") + ")",
        spacetime=spacetime,
        immersion=imm,
        u_range=((0.0, psi_max), (0.0, 2 * math.pi)),
        has_boundary=True,
        orientation=orient,
        support=support,
        axis=axis,
        params=dict(kind="cap", radius=radius, axis=axis, l=support.l, shift=shift, bump=bump, mode=mode, power=power),
    )


def graph(
    spacetime: SpacetimeId = MINKOWSKI,
    disk_radius: float = 1.0,
    height=(0.0,) * 6,
    time=(0.0,) * 6,
    offset: float = 0.0,
    axis: int = 3,
) -> ParamSurface:
    """Graph ``x^axis = offset + h(p, q)``, ``t = τ(p, q)`` over a coordinate disk.

    ``h`` and ``τ`` are quadratic polynomials with coefficients
    ``(1, p, q, p², pq, q²)``.
    """
    spacetime = SpacetimeId.parse(spacetime)
    hc = [float(v) for v in height]
    tc = [float(v) for v in time]
    b1, b2 = _axes(axis)

    def poly(c, p, q):
        return c[0] + c[1] * p + c[2] * q + c[3] * p * p + c[4] * p * q + c[5] * q * q

    def imm(U):
        rho, phi = U[0], U[1]
        p, q = rho * ad.cos(phi), rho * ad.sin(phi)
        return _assemble(poly(tc, p, q), {b1: p, b2: q, axis: offset + poly(hc, p, q)})

    def orient(U, X):
        h = np.zeros_like(np.asarray(X, dtype=float))
        h[axis] = 1.0
        return h

    return ParamSurface(
        name="graph",
        spacetime=spacetime,
        immersion=imm,
        u_range=((0.0, disk_radius), (0.0, 2 * math.pi)),
        has_boundary=True,
        orientation=orient,
        support=support_surface(spacetime) if spacetime is MINKOWSKI else None,
        axis=axis,
        params=dict(kind="graph", disk_radius=disk_radius, height=hc, time=tc, offset=offset, axis=axis),
    )


def flat_disk(axis: int = 3) -> ParamSurface:
    """Unit equatorial disk of the Minkowski slice; meets S^{2,1} orthogonally."""
    return graph(MINKOWSKI, 1.0, axis=axis)


def random_graph(seed: int, scale: float = 0.15, spacetime: SpacetimeId = MINKOWSKI, disk_radius: float = 0.6) -> ParamSurface:
    rng = np.random.default_rng(seed)
    h = scale * rng.uniform(-1, 1, 6)
    t = 0.5 * scale * rng.uniform(-1, 1, 6)
    return graph(spacetime, disk_radius, tuple(h), tuple(t))


def _base_lbar(base: ParamSurface, U):
    X = base.immersion(U)
    dX = ad.derivatives(base.immersion, U)
    hint = base.orientation(ad.primal(U), np.asarray(ad.primal(X))) if base.orientation else None
    fr = _frame(base.spacetime, X, dX[0], dX[1], hint)
    return X, fr[0] - fr[1]


def null_shifted(base: ParamSurface, T: float) -> ParamSurface:
    """Push a Minkowski surface a parameter distance ``T`` along ``-Lbar``.

    The result lies on the same incoming null hypersurface as ``base``; the
    forward flow with unit speed reaches ``base`` after flow time ``T``.
    """
    if base.spacetime is not MINKOWSKI:
        raise ValueError("null_shifted uses straight null geodesics (Minkowski only)")

    def imm(U):
        X, lbar = _base_lbar(base, U)
        return X - T * lbar

    def orient(U, X):
        _, lbar = _base_lbar(base, np.asarray(U, dtype=float))
        return -np.asarray(lbar)

    return ParamSurface(
        name=f"{base.name} shifted by T={T:g}",
        spacetime=base.spacetime,
        immersion=imm,
        u_range=base.u_range,
        periodic_v=base.periodic_v,
        has_boundary=base.has_boundary,
        orientation=orient,
        support=base.support,
        axis=base.axis,
        params=dict(base.params, null_shift=T),
        velocity=lambda U: np.asarray(_base_lbar(base, np.asarray(U, dtype=float))[1]),
    )


def ellipsoidal_cap(spacetime: SpacetimeId = MINKOWSKI, radius: float = 0.75, bump: float = 0.4, l: float | None = None, axis: int = 3) -> ParamSurface:
    return cap(spacetime, radius, axis=axis, l=l, bump=bump, mode="ellipsoidal", power=3)


def cap_area(radius: float, l: float | None = None, spacetime: SpacetimeId = MINKOWSKI) -> float:
    """Euclidean area of the unperturbed Minkowski cap: 2πρ²(1 - cos ψ*)."""
    R = slice_radius(SpacetimeId.parse(spacetime), l)
    cos_max = radius / math.sqrt(R * R + radius * radius)
    return 2 * math.pi * radius * radius * (1 - cos_max)


def make_surface(kind: str, spacetime: SpacetimeId = MINKOWSKI, **params) -> ParamSurface:
    """Factory used by the CLI configuration."""
    kinds = {
        "sphere": sphere,
        "cap": cap,
        "ellipsoid": ellipsoid,
        "graph": graph,
        "ellipsoidal_cap": ellipsoidal_cap,
    }
    if kind not in kinds:
        raise ValueError(f"unknown surface kind {kind!r}; expected one of {sorted(kinds)}")
    shift_T = params.pop("null_shift", None)
    surf = kinds[kind](spacetime, **params)
    if shift_T:
        surf = null_shifted(surf, float(shift_T))
    return surf

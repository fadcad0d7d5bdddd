"""Chart geometry of Minkowski, de Sitter and anti-de Sitter spacetime.

Coordinates are ``(t, x^1, ..., x^m)`` with ``t = x^0``.  The curved
spacetimes use the conformally flat ball charts

    AdS:  g = -((1+r²)/(1-r²))² dt² + 4|dx|²/(1-r²)²
    dS:   g = -((1-r²)/(1+r²))² dt² + 4|dx|²/(1+r²)²

valid for ``r < 1``.  All field evaluators in this module are generic in the
scalar type: coordinates may be floats, arrays of shape ``(dim, *batch)`` or
:class:`~ckytool.dual.Dual` numbers, which is how metric derivatives are
obtained exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import dual as ad

DOMAIN_MARGIN = 1e-8


class SpacetimeId(str, enum.Enum):
    MINKOWSKI = "minkowski"
    DE_SITTER = "ds"
    ANTI_DE_SITTER = "ads"

    @classmethod
    def parse(cls, name: "str | SpacetimeId") -> "SpacetimeId":
        if isinstance(name, SpacetimeId):
            return name
        aliases = {
            "minkowski": cls.MINKOWSKI,
            "mink": cls.MINKOWSKI,
            "ds": cls.DE_SITTER,
            "desitter": cls.DE_SITTER,
            "de_sitter": cls.DE_SITTER,
            "ads": cls.ANTI_DE_SITTER,
            "antidesitter": cls.ANTI_DE_SITTER,
            "anti_de_sitter": cls.ANTI_DE_SITTER,
        }
        try:
            return aliases[str(name).lower()]
        except KeyError:
            raise ValueError(f"unknown spacetime {name!r}") from None

    @property
    def curvature(self) -> float:
        """Sectional curvature: 0, +1 (dS) or -1 (AdS)."""
        return {"minkowski": 0.0, "ds": 1.0, "ads": -1.0}[self.value]

    @property
    def label(self) -> str:
        return {"minkowski": "R^{3,1}", "ds": "S^{3,1}", "ads": "AdS^{3,1}"}[self.value]


MINKOWSKI = SpacetimeId.MINKOWSKI
DE_SITTER = SpacetimeId.DE_SITTER
ANTI_DE_SITTER = SpacetimeId.ANTI_DE_SITTER


class ChartDomainError(ValueError):
    """A point lies outside the chart (r >= 1 for the ball charts)."""

    def __init__(self, radius: float):
        super().__init__(f"point outside chart domain: r = {radius:.12g} >= {1 - DOMAIN_MARGIN}")
        self.radius = radius


class UnsupportedSpacetimeError(ValueError):
    pass


@dataclass(frozen=True)
class ChartPoint:
    coords: tuple
    spacetime: SpacetimeId

    def __post_init__(self):
        c = tuple(float(v) for v in self.coords)
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "spacetime", SpacetimeId.parse(self.spacetime))
        check_domain(self.spacetime, np.asarray(c))

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.coords)

    @property
    def r(self) -> float:
        return float(np.sqrt(sum(v * v for v in self.coords[1:])))


@dataclass(frozen=True)
class MetricAtPoint:
    g: np.ndarray
    g_inv: np.ndarray
    sqrt_det: float


@dataclass(frozen=True)
class ChristoffelAtPoint:
    gamma: np.ndarray  # gamma[l, m, n] = Γ^l_{mn}


@dataclass(frozen=True)
class FrameAtPoint:
    theta: np.ndarray  # theta[mu, a]: θ^mu = theta[mu, a] dx^a
    e: np.ndarray  # e[nu, a]: e_nu = e[nu, a] ∂_a
    omega: np.ndarray


@dataclass(frozen=True)
class AmbientPoint:
    y: np.ndarray


def check_domain(spacetime: SpacetimeId, x) -> None:
    spacetime = SpacetimeId.parse(spacetime)
    if spacetime is MINKOWSKI:
        return
    xs = np.asarray(ad.primal(x), dtype=float)
    r = np.sqrt(np.sum(xs[1:] ** 2, axis=0))
    rmax = float(np.max(r))
    if not np.isfinite(rmax) or rmax >= 1.0 - DOMAIN_MARGIN:
        raise ChartDomainError(rmax)


def _r2(x):
    r2 = x[1] * x[1]
    for i in range(2, len(x)):
        r2 = r2 + x[i] * x[i]
    return r2


def _diag(entries):
    n = len(entries)
    shape = ad._common_shape(entries)
    zero = np.zeros(shape)
    rows = [ad.stack([entries[i] if i == j else zero for j in range(n)]) for i in range(n)]
    return ad.stack(rows)


# -- metric ---------------------------------------------------------------------


def metric_diagonal(spacetime: SpacetimeId, x):
    """Diagonal entries ``g_00, g_11, ...`` (all three metrics are diagonal)."""
    spacetime = SpacetimeId.parse(spacetime)
    dim = len(x)
    if spacetime is MINKOWSKI:
        shape = np.shape(ad.primal(x[0]))
        return [-np.ones(shape)] + [np.ones(shape)] * (dim - 1)
    r2 = _r2(x)
    if spacetime is ANTI_DE_SITTER:
        lapse = (1 + r2) / (1 - r2)
        conf = 4 / ((1 - r2) * (1 - r2))
    elif spacetime is DE_SITTER:
        lapse = (1 - r2) / (1 + r2)
        conf = 4 / ((1 + r2) * (1 + r2))
    else:  # pragma: no cover - enum is exhaustive
        raise UnsupportedSpacetimeError(spacetime)
    return [-(lapse * lapse)] + [conf] * (dim - 1)


def metric(spacetime: SpacetimeId, x):
    return _diag(metric_diagonal(spacetime, x))


def inverse_metric(spacetime: SpacetimeId, x):
    return _diag([1 / d for d in metric_diagonal(spacetime, x)])


def sqrt_abs_det(spacetime: SpacetimeId, x):
    prod = None
    for d in metric_diagonal(spacetime, x):
        prod = d if prod is None else prod * d
    return ad.sqrt(-prod)


def metric_at(p: ChartPoint) -> MetricAtPoint:
    g = np.asarray(metric(p.spacetime, p.x))
    return MetricAtPoint(g=g, g_inv=np.linalg.inv(g), sqrt_det=float(np.sqrt(abs(np.linalg.det(g)))))


def metric_derivatives(spacetime: SpacetimeId, x):
    """``dg[l, m, n] = ∂_l g_{mn}`` by forward-mode arithmetic."""
    return ad.derivatives(lambda z: metric(spacetime, z), x)


def christoffel(spacetime: SpacetimeId, x):
    """``Γ[l, m, n] = Γ^l_{mn}`` of the Levi-Civita connection."""
    spacetime = SpacetimeId.parse(spacetime)
    if spacetime is MINKOWSKI:
        dim = len(x)
        return np.zeros((dim, dim, dim) + np.shape(ad.primal(x[0])))
    dg = metric_derivatives(spacetime, x)
    ginv = inverse_metric(spacetime, x)
    # lowered: Γ_{r m n} = ½(∂_m g_{rn} + ∂_n g_{rm} - ∂_r g_{mn})
    low = 0.5 * (ad.moveaxis(dg, 0, 1) + ad.moveaxis(ad.moveaxis(dg, 0, 1), 1, 2) - dg)
    return ad.einsum("lr...,rmn...->lmn...", ginv, low)


def christoffel_at(p: ChartPoint) -> ChristoffelAtPoint:
    return ChristoffelAtPoint(gamma=np.asarray(christoffel(p.spacetime, p.x)))


def riemann(spacetime: SpacetimeId, x):
    """Fully covariant ``R_{abcd}`` with ``R^a_{bcd} = ∂_c Γ^a_{db} - ...``."""
    gam = christoffel(spacetime, x)
    dgam = ad.derivatives(lambda z: christoffel(spacetime, z), x)  # [c, a, d, b]
    up = (
        ad.einsum("cadb...->abcd...", dgam)
        - ad.einsum("dacb...->abcd...", dgam)
        + ad.einsum("acl...,ldb...->abcd...", gam, gam)
        - ad.einsum("adl...,lcb...->abcd...", gam, gam)
    )
    return ad.einsum("ea...,abcd...->ebcd...", metric(spacetime, x), up)


def constant_curvature_riemann(spacetime: SpacetimeId, x):
    g = metric(spacetime, x)
    k = spacetime.curvature
    return k * (ad.einsum("ac...,bd...->abcd...", g, g) - ad.einsum("ad...,bc...->abcd...", g, g))


# -- frames ---------------------------------------------------------------------


def coframe(spacetime: SpacetimeId, x):
    """``theta[mu, a]`` with θ^mu = theta[mu, a] dx^a (orthonormal, diagonal)."""
    return _diag([ad.sqrt(abs_d) for abs_d in _abs_diag(spacetime, x)])


def frame_vectors(spacetime: SpacetimeId, x):
    """``e[nu, a]`` with e_nu = e[nu, a] ∂_a, dual to :func:`coframe`."""
    return _diag([1 / ad.sqrt(abs_d) for abs_d in _abs_diag(spacetime, x)])


def _abs_diag(spacetime, x):
    d = metric_diagonal(spacetime, x)
    return [-d[0]] + d[1:]


def radial_covector(spacetime: SpacetimeId, x):
    """ω = sqrt(g_rr) dr; zero at r = 0 where dr is undefined."""
    xs = np.asarray(ad.primal(x))
    r = np.sqrt(np.sum(xs[1:] ** 2, axis=0))
    safe = np.where(r > 0, r, 1.0)
    scale = ad.sqrt(_abs_diag(spacetime, x)[1])
    comps = [np.zeros(np.shape(r))] + [scale * x[i] / safe * (r > 0) for i in range(1, len(x))]
    return ad.stack(comps)


def frame_at(p: ChartPoint) -> FrameAtPoint:
    x = p.x
    return FrameAtPoint(
        theta=np.asarray(coframe(p.spacetime, x)),
        e=np.asarray(frame_vectors(p.spacetime, x)),
        omega=np.asarray(radial_covector(p.spacetime, x)),
    )


# -- ambient embedding ------------------------------------------------------------

AMBIENT_SIGNATURE = {
    ANTI_DE_SITTER: np.array([-1.0, 1.0, 1.0, 1.0, -1.0]),
    DE_SITTER: np.array([1.0, 1.0, 1.0, 1.0, -1.0]),
}
QUADRIC_VALUE = {ANTI_DE_SITTER: -1.0, DE_SITTER: 1.0}


def embed(spacetime: SpacetimeId, x):
    """Ambient coordinates ``y^0..y^{m+1}`` of a chart point (dS/AdS only)."""
    spacetime = SpacetimeId.parse(spacetime)
    if spacetime is MINKOWSKI:
        raise UnsupportedSpacetimeError("Minkowski space has no quadric embedding")
    r2 = _r2(x)
    t = x[0]
    if spacetime is ANTI_DE_SITTER:
        a = (1 + r2) / (1 - r2)
        ys = [a * ad.cos(t)] + [2 * x[i] / (1 - r2) for i in range(1, len(x))] + [a * ad.sin(t)]
    else:
        a = (1 - r2) / (1 + r2)
        ys = [a * ad.cosh(t)] + [2 * x[i] / (1 + r2) for i in range(1, len(x))] + [a * ad.sinh(t)]
    return ad.stack(ys)


def embed_point(p: ChartPoint) -> AmbientPoint:
    return AmbientPoint(y=np.asarray(embed(p.spacetime, p.x)))


def ambient_signature(spacetime: SpacetimeId, dim: int = 4) -> np.ndarray:
    """Diagonal of the flat ambient metric for a ``dim``-dimensional quadric."""
    spacetime = SpacetimeId.parse(spacetime)
    if spacetime is ANTI_DE_SITTER:
        return np.array([-1.0] + [1.0] * (dim - 1) + [-1.0])
    if spacetime is DE_SITTER:
        return np.array([1.0] * dim + [-1.0])
    raise UnsupportedSpacetimeError("Minkowski space has no quadric embedding")


def quadric_residual(spacetime: SpacetimeId, y) -> np.ndarray:
    spacetime = SpacetimeId.parse(spacetime)
    y = np.asarray(y)
    sig = ambient_signature(spacetime, y.shape[0] - 1)
    return np.einsum("i,i...->...", sig, y * y) - QUADRIC_VALUE[spacetime]


def ambient_differentials(spacetime: SpacetimeId, x):
    """``dy[mu, a] = ∂_a y^mu`` as chart covectors."""
    return ad.moveaxis(ad.derivatives(lambda z: embed(spacetime, z), x), 0, 1)


def static_potential_residual(p: ChartPoint, mu: int) -> float:
    """Max deviation of ∇ dy^mu from ±y^mu θ in the orthonormal frame.

    AdS: ∇_i dy = y θ^i, ∇_0 dy = -y θ^0.  dS: both signs flipped.
    """
    st = p.spacetime
    if st is MINKOWSKI:
        raise UnsupportedSpacetimeError("static potentials live on dS/AdS")
    x = p.x
    hess = np.asarray(hessian(lambda z: embed(st, z)[mu], st, x))
    y = float(np.asarray(embed(st, x))[mu])
    e = np.asarray(frame_vectors(st, x))
    theta = np.asarray(coframe(st, x))
    s = 1.0 if st is ANTI_DE_SITTER else -1.0
    worst = 0.0
    for i in range(len(x)):
        nab = e[i] @ hess
        sign = -s if i == 0 else s
        worst = max(worst, float(np.max(np.abs(nab - sign * y * theta[i]))))
    return worst


def hessian(f, spacetime: SpacetimeId, x):
    """Covariant Hessian ``∇_a ∇_b f`` of a scalar field."""
    df = ad.derivatives(f, x)
    ddf = ad.derivatives(lambda z: ad.derivatives(f, z), x)
    gam = christoffel(spacetime, x)
    return ddf - ad.einsum("lab...,l...->ab...", gam, df)


def sample_points(spacetime: SpacetimeId, n: int, seed: int = 0, r_max: float = 0.9, t_max: float = 1.0) -> np.ndarray:
    """Seeded chart points, shape (4, n); spatial part uniform in a ball of radius ``r_max``."""
    spacetime = SpacetimeId.parse(spacetime)
    rng = np.random.default_rng(seed)
    t = rng.uniform(-t_max, t_max, n)
    w = rng.normal(size=(3, n))
    w /= np.linalg.norm(w, axis=0)
    scale = 2.0 if spacetime is MINKOWSKI else r_max
    r = scale * rng.uniform(0.0, 1.0, n) ** (1 / 3)
    return np.concatenate([t[None], r * w])

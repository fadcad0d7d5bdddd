"""One- and two-form fields, covariant derivatives, divergence, Hodge star and
the conformal Killing-Yano (CKY) equation.

Index conventions
-----------------
* A two-form value is an antisymmetric array ``Q[m, n]`` of covariant chart
  components; fields store only the ``m < n`` entries.
* ``(α ∧ β)(X, Y) = α(X) β(Y) - α(Y) β(X)``.
* ``(div Q)_n = g^{ml} ∇_m Q_{ln}`` (contraction on the first slot).
* ``(*F)_{mn} = ½ sqrt|g| ε_{mnrs} F^{rs}`` with ``ε_{0123} = +1``.
* The associated one-form is ``ξ = div Q / (dim - 1)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import dual as ad
from .charts import (
    ANTI_DE_SITTER,
    DE_SITTER,
    MINKOWSKI,
    ChartPoint,
    SpacetimeId,
    ambient_differentials,
    check_domain,
    christoffel,
    coframe,
    embed,
    frame_vectors,
    inverse_metric,
    metric,
    sqrt_abs_det,
)

DEFAULT_L = {ANTI_DE_SITTER: float(np.cosh(1.0)), DE_SITTER: float(np.cos(0.5))}


def _pairs(dim):
    return [(m, n) for m in range(dim) for n in range(m + 1, dim)]


def assemble(upper, dim: int):
    """Antisymmetric matrix from its strictly-upper entries (row-major)."""
    shape = ad._common_shape(upper)
    zero = np.zeros(shape)
    lookup = {}
    for (m, n), v in zip(_pairs(dim), upper):
        lookup[(m, n)] = v
        lookup[(n, m)] = -v
    rows = [ad.stack([lookup.get((m, n), zero) for n in range(dim)]) for m in range(dim)]
    return ad.stack(rows)


def upper_entries(mat, dim: int):
    return [mat[m][n] for m, n in _pairs(dim)]


@dataclass(frozen=True)
class OneFormField:
    """Covector field; ``evaluator(x)`` returns components of shape (dim, ...)."""

    name: str
    spacetime: SpacetimeId
    evaluator: Callable = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "spacetime", SpacetimeId.parse(self.spacetime))

    def __call__(self, x):
        return self.evaluator(x)

    def __add__(self, other: "OneFormField") -> "OneFormField":
        return OneFormField(f"{self.name} + {other.name}", self.spacetime, lambda x: self(x) + other(x))

    def __sub__(self, other: "OneFormField") -> "OneFormField":
        return OneFormField(f"{self.name} - {other.name}", self.spacetime, lambda x: self(x) - other(x))

    def scaled(self, c) -> "OneFormField":
        return OneFormField(f"{c}*{self.name}", self.spacetime, lambda x: c * self(x))

    def times(self, f: Callable, label: str) -> "OneFormField":
        """Multiply by a scalar field ``f(x)``."""
        return OneFormField(f"{label}*{self.name}", self.spacetime, lambda x: f(x) * self(x))


@dataclass(frozen=True)
class TwoFormField:
    """Two-form field storing only its independent (upper-triangle) entries."""

    name: str
    spacetime: SpacetimeId
    upper: Callable = field(repr=False)  # x -> list of dim(dim-1)/2 entries

    def __post_init__(self):
        object.__setattr__(self, "spacetime", SpacetimeId.parse(self.spacetime))

    def __call__(self, x):
        return assemble(self.upper(x), len(x))

    def __add__(self, other: "TwoFormField") -> "TwoFormField":
        return TwoFormField(
            f"{self.name} + {other.name}",
            self.spacetime,
            lambda x: [a + b for a, b in zip(self.upper(x), other.upper(x))],
        )

    def __neg__(self) -> "TwoFormField":
        return TwoFormField(f"-({self.name})", self.spacetime, lambda x: [-a for a in self.upper(x)])

    def scaled(self, c, label: str | None = None) -> "TwoFormField":
        lab = label if label is not None else f"{c:g}"
        return TwoFormField(f"{lab}*({self.name})", self.spacetime, lambda x: [c * a for a in self.upper(x)])

    def times(self, f: Callable, label: str) -> "TwoFormField":
        return TwoFormField(
            f"{label}*({self.name})", self.spacetime, lambda x: [f(x) * a for a in self.upper(x)]
        )


def wedge(alpha: OneFormField, beta: OneFormField) -> TwoFormField:
    def upper(x):
        a, b = alpha(x), beta(x)
        return [a[m] * b[n] - a[n] * b[m] for m, n in _pairs(len(x))]

    return TwoFormField(f"{alpha.name}^{beta.name}", alpha.spacetime, upper)


# -- Hodge star -----------------------------------------------------------------


def _levi_civita(dim: int) -> np.ndarray:
    eps = np.zeros((dim,) * dim)
    for perm in itertools.permutations(range(dim)):
        inv = sum(1 for i in range(dim) for j in range(i + 1, dim) if perm[i] > perm[j])
        eps[perm] = -1.0 if inv % 2 else 1.0
    return eps


EPS4 = _levi_civita(4)


def hodge_matrix(F, spacetime: SpacetimeId, x):
    """Hodge dual of a two-form value in four dimensions."""
    spacetime = SpacetimeId.parse(spacetime)
    if len(x) != 4:
        raise ValueError("Hodge star of two-forms is implemented for dim = 4")
    ginv = inverse_metric(spacetime, x)
    fup = ad.einsum("ra...,sb...,ab...->rs...", ginv, ginv, F)
    return 0.5 * sqrt_abs_det(spacetime, x) * ad.einsum("mnrs,rs...->mn...", EPS4, fup)


def hodge_star_2form(F, p: ChartPoint) -> np.ndarray:
    F = np.asarray(F, dtype=float)
    if not np.allclose(F, -F.T, atol=0.0):
        raise ValueError("two-form components must be antisymmetric")
    return np.asarray(hodge_matrix(F, p.spacetime, p.x))


def hodge(Q: TwoFormField) -> TwoFormField:
    def upper(x):
        return upper_entries(hodge_matrix(Q(x), Q.spacetime, x), len(x))

    return TwoFormField(f"*({Q.name})", Q.spacetime, upper)


# -- covariant calculus -----------------------------------------------------------


def nabla_2form(Q: TwoFormField, x):
    """``N[l, m, n] = ∇_l Q_{mn}``."""
    st = Q.spacetime
    dq = ad.derivatives(Q, x)
    q = Q(x)
    if st is MINKOWSKI:
        return dq
    gam = christoffel(st, x)
    return dq - ad.einsum("rlm...,rn...->lmn...", gam, q) - ad.einsum("rln...,mr...->lmn...", gam, q)


def nabla_1form(alpha: OneFormField, x):
    """``N[l, n] = ∇_l α_n``."""
    da = ad.derivatives(alpha, x)
    if alpha.spacetime is MINKOWSKI:
        return da
    return da - ad.einsum("rln...,r...->ln...", christoffel(alpha.spacetime, x), alpha(x))


def covariant_derivative_2form(Q: TwoFormField, p: ChartPoint, X) -> np.ndarray:
    """``(∇_X Q)_{mn}`` at a single chart point."""
    _check(Q, p)
    nab = np.asarray(nabla_2form(Q, p.x))
    return np.einsum("l,lmn->mn", np.asarray(X, dtype=float), nab)


def divergence(Q: TwoFormField, x):
    ginv = inverse_metric(Q.spacetime, x)
    return ad.einsum("ml...,mln...->n...", ginv, nabla_2form(Q, x))


def divergence_2form(Q: TwoFormField, p: ChartPoint) -> np.ndarray:
    _check(Q, p)
    return np.asarray(divergence(Q, p.x))


def xi(Q: TwoFormField, x):
    return divergence(Q, x) / (len(x) - 1)


def associated_xi(Q: TwoFormField, p: ChartPoint) -> np.ndarray:
    _check(Q, p)
    return np.asarray(xi(Q, p.x))


def cky_defect(Q: TwoFormField, x):
    """Frame components of LHS - RHS of the CKY equation, shape (d, d, d, ...).

    ``D[a,b,c] = (∇_a Q)(e_b, e_c) + (∇_b Q)(e_a, e_c)
    - [2 η_ab ξ_c - η_ac ξ_b - η_bc ξ_a]``.
    """
    x = np.asarray(x, dtype=float)
    st = Q.spacetime
    dim = len(x)
    e = np.asarray(frame_vectors(st, x))
    nab = np.asarray(nabla_2form(Q, x))
    ginv = np.asarray(inverse_metric(st, x))
    div = np.einsum("ml...,mln...->n...", ginv, nab)
    xi_c = np.einsum("cn...,n...->c...", e, div / (dim - 1))
    t = np.einsum("al...,bm...,cn...,lmn...->abc...", e, e, e, nab)
    lhs = t + np.swapaxes(t, 0, 1)
    eta = np.diag([-1.0] + [1.0] * (dim - 1))
    rhs = (
        2 * np.einsum("ab,c...->abc...", eta, xi_c)
        - np.einsum("ac,b...->abc...", eta, xi_c)
        - np.einsum("bc,a...->abc...", eta, xi_c)
    )
    return lhs - rhs


def cky_residual_batch(Q: TwoFormField, x) -> np.ndarray:
    d = cky_defect(Q, x)
    return np.max(np.abs(d.reshape(-1, *d.shape[3:])), axis=0)


def cky_residual(Q: TwoFormField, p: ChartPoint) -> float:
    """Max over orthonormal frame triples of |LHS - RHS| of the CKY equation."""
    _check(Q, p)
    return float(cky_residual_batch(Q, p.x))


def _check(Q, p: ChartPoint):
    if Q.spacetime is not p.spacetime:
        raise ValueError(f"form lives on {Q.spacetime.value}, point on {p.spacetime.value}")


# -- field catalog ----------------------------------------------------------------


def coordinate_1form(spacetime: SpacetimeId, mu: int, sign: float = 1.0) -> OneFormField:
    spacetime = SpacetimeId.parse(spacetime)
    def ev(x):
        shape = np.shape(ad.primal(x[0]))
        comps = [np.zeros(shape) for _ in range(len(x))]
        comps[mu] = sign * np.ones(shape)
        return ad.stack(comps)

    return OneFormField(f"dx{mu}" if sign > 0 else f"-dx{mu}", spacetime, ev)


def _eta(dim):
    return np.array([-1.0] + [1.0] * (dim - 1))


def position_1form() -> OneFormField:
    """𝒟 = -x^0 dx^0 + Σ x^i dx^i (the metric dual of the position vector)."""

    def ev(x):
        eta = _eta(len(x))
        return ad.stack([eta[m] * x[m] for m in range(len(x))])

    return OneFormField("D", MINKOWSKI, ev)


def translation_1form(mu: int) -> OneFormField:
    """𝒯_mu = η_{mu mu} dx^mu."""
    f = coordinate_1form(MINKOWSKI, mu, -1.0 if mu == 0 else 1.0)
    return OneFormField(f"T{mu}", MINKOWSKI, f.evaluator)


def lorentz_1form(mu: int, nu: int) -> OneFormField:
    """ℒ_{mu nu} = x_mu 𝒯_nu - x_nu 𝒯_mu; ℒ_{0i} = -x^0 dx^i + x^i dx^0."""

    def ev(x):
        eta = _eta(len(x))
        shape = np.shape(ad.primal(x[0]))
        comps = [np.zeros(shape) for _ in range(len(x))]
        comps[nu] = eta[mu] * x[mu] * eta[nu]
        comps[mu] = comps[mu] - eta[nu] * x[nu] * eta[mu]
        return ad.stack(comps)

    return OneFormField(f"L{mu}{nu}", MINKOWSKI, ev)


def minkowski_norm2(x):
    """⟨𝒟, 𝒟⟩ = -(x^0)² + |x|²."""
    eta = _eta(len(x))
    out = eta[0] * x[0] * x[0]
    for m in range(1, len(x)):
        out = out + x[m] * x[m]
    return out


def ambient_1form(spacetime: SpacetimeId, mu: int) -> OneFormField:
    spacetime = SpacetimeId.parse(spacetime)
    def ev(x):
        return ambient_differentials(spacetime, x)[mu]

    return OneFormField(f"dy{mu}", spacetime, ev)


def ambient_function(spacetime: SpacetimeId, mu: int) -> Callable:
    return lambda x: embed(spacetime, x)[mu]


def minkowski_composite(i: int, constant: float = 1.0) -> TwoFormField:
    """𝒟 ∧ ℒ_{0i} + ½[c + ⟨𝒟,𝒟⟩] dx^0 ∧ dx^i.

    ``constant=1`` is the form whose contraction with the position vector
    vanishes on the de Sitter sphere; ``constant=0`` is the bare variant.
    """
    base = wedge(position_1form(), lorentz_1form(0, i))
    flat = wedge(coordinate_1form(MINKOWSKI, 0), coordinate_1form(MINKOWSKI, i))
    coef = flat.times(lambda x: 0.5 * (constant + minkowski_norm2(x)), f"1/2({constant:g}+<D,D>)")
    q = base + coef
    return TwoFormField(f"Q{i}[c={constant:g}]", MINKOWSKI, q.upper)


def _cyclic(i):
    j = 1 + (i % 3)
    k = 1 + (j % 3)
    return j, k


def ads_composite(i: int = 1, l: float | None = None) -> TwoFormField:
    """dy^i ∧ dy^4 + l *(dy^j ∧ dy^k) with (i, j, k) cyclic."""
    l = DEFAULT_L[ANTI_DE_SITTER] if l is None else float(l)
    j, k = _cyclic(i)
    st = ANTI_DE_SITTER
    q = wedge(ambient_1form(st, i), ambient_1form(st, 4)) + hodge(
        wedge(ambient_1form(st, j), ambient_1form(st, k))
    ).scaled(l)
    return TwoFormField(f"dy{i}^dy4 + {l:.6g}*(dy{j}^dy{k})", st, q.upper)


def ds_composite(i: int = 1, l: float | None = None) -> TwoFormField:
    """dy^4 ∧ dy^i + l *(dy^k ∧ dy^j) with (i, j, k) cyclic."""
    l = DEFAULT_L[DE_SITTER] if l is None else float(l)
    j, k = _cyclic(i)
    st = DE_SITTER
    q = wedge(ambient_1form(st, 4), ambient_1form(st, i)) + hodge(
        wedge(ambient_1form(st, k), ambient_1form(st, j))
    ).scaled(l)
    return TwoFormField(f"dy4^dy{i} + {l:.6g}*(dy{k}^dy{j})", st, q.upper)


def composite(spacetime: SpacetimeId, i: int = 1, l: float | None = None) -> TwoFormField:
    """The designated free-boundary form of each spacetime."""
    spacetime = SpacetimeId.parse(spacetime)
    if spacetime is MINKOWSKI:
        return minkowski_composite(i, 1.0)
    if spacetime is ANTI_DE_SITTER:
        return ads_composite(i, l)
    return ds_composite(i, l)


def composite_xi(spacetime: SpacetimeId, i: int = 1) -> OneFormField:
    """Closed-form associated one-form of :func:`composite`."""
    spacetime = SpacetimeId.parse(spacetime)
    if spacetime is MINKOWSKI:
        return lorentz_1form(0, i)
    return _killing_1form(spacetime, i, 4, 1.0)


def _killing_1form(spacetime, mu, nu, c):
    """c (y^mu dy^nu - y^nu dy^mu)."""

    def ev(x):
        y = embed(spacetime, x)
        dy = ambient_differentials(spacetime, x)
        return c * (y[mu] * dy[nu] - y[nu] * dy[mu])

    return OneFormField(f"{c:g}(y{mu}dy{nu}-y{nu}dy{mu})", spacetime, ev)


def zero_1form(spacetime: SpacetimeId) -> OneFormField:
    spacetime = SpacetimeId.parse(spacetime)
    return OneFormField("0", spacetime, lambda x: ad.stack([np.zeros(np.shape(ad.primal(x[0])))] * len(x)))


@dataclass(frozen=True)
class CkyCatalogEntry:
    name: str
    form: TwoFormField
    expected_xi: OneFormField | None
    spacetime: SpacetimeId


def catalog(spacetime: SpacetimeId, l: float | None = None, i: int = 1) -> list[CkyCatalogEntry]:
    """All listed CKY two-forms of ``spacetime`` plus the composite forms."""
    spacetime = SpacetimeId.parse(spacetime)
    out: list[CkyCatalogEntry] = []

    def add(form, xi_field, name=None):
        out.append(CkyCatalogEntry(name or form.name, form, xi_field, spacetime))

    if spacetime is MINKOWSKI:
        zero = zero_1form(spacetime)
        D = position_1form()
        for m, n in _pairs(4):
            add(wedge(translation_1form(m), translation_1form(n)), zero)
        for m in range(4):
            add(wedge(D, translation_1form(m)), translation_1form(m))
        for m in range(4):
            add(hodge(wedge(D, translation_1form(m))), zero)
        for m, n in _pairs(4):
            lor = wedge(D, lorentz_1form(m, n))
            tt = wedge(translation_1form(m), translation_1form(n))
            q = lor + tt.times(lambda x: -0.5 * minkowski_norm2(x), "-1/2<D,D>")
            add(q, lorentz_1form(m, n), f"D^L{m}{n} - 1/2<D,D>T{m}^T{n}")
        for k in (1, 2, 3):
            add(minkowski_composite(k, 1.0), lorentz_1form(0, k))
        return out

    sign = 1.0 if spacetime is ANTI_DE_SITTER else -1.0
    zero = zero_1form(spacetime)
    for m, n in _pairs(5):
        q = wedge(ambient_1form(spacetime, m), ambient_1form(spacetime, n))
        add(q, _killing_1form(spacetime, m, n, sign))
    for m, n in _pairs(5):
        q = hodge(wedge(ambient_1form(spacetime, m), ambient_1form(spacetime, n)))
        add(q, zero)
    for k in (1, 2, 3):
        add(composite(spacetime, k, l), composite_xi(spacetime, k))
    return out


# -- higher-dimensional anti-de Sitter check --------------------------------------


def higher_dim_ads_form(n: int, flip: bool = False) -> TwoFormField:
    """-e^1∧e^0 + Σ_{i≠1} y^i (x^1 e^i - x^i e^1) ∧ e^0 on the n-dim AdS ball chart."""
    sgn = -1.0 if flip else 1.0

    def upper(x):
        dim = len(x)
        th = coframe(ANTI_DE_SITTER, x)
        r2 = x[1] * x[1]
        for m in range(2, dim):
            r2 = r2 + x[m] * x[m]
        y = [None] + [2 * x[m] / (1 - r2) for m in range(1, dim)]
        # one-form coefficient multiplying ∧ e^0 (diagonal coframe: e^m = th[m][m] dx^m)
        coef = [np.zeros(np.shape(ad.primal(x[0])))] * dim
        coef = list(coef)
        coef[1] = -np.ones(np.shape(ad.primal(x[0]))) * 1.0
        for m in range(2, dim):
            coef[m] = coef[m] + sgn * y[m] * x[1]
            coef[1] = coef[1] - sgn * y[m] * x[m]
        # (c_m e^m) ∧ e^0 -> component (m, 0) = c_m th_m th_0, i.e. (0, m) entry = -c_m th_m th_0
        ent = {}
        for m in range(1, dim):
            ent[(0, m)] = -coef[m] * th[m][m] * th[0][0]
        return [ent.get((a, b), np.zeros(np.shape(ad.primal(x[0])))) for a, b in _pairs(dim)]

    return TwoFormField(f"AdS{n} dual analog" + (" (flipped)" if flip else ""), ANTI_DE_SITTER, upper)


def higher_dim_ads_dual_formula_check(n: int, points: np.ndarray, flip: bool = False) -> float:
    """Max CKY residual of the higher-dimensional analog at ``points`` (shape (n, k))."""
    if not 4 <= n <= 6:
        raise ValueError(f"unsupported dimension n={n}; expected 4 <= n <= 6")
    points = np.asarray(points, dtype=float)
    if points.shape[0] != n:
        raise ValueError(f"points must have leading dimension {n}")
    check_domain(ANTI_DE_SITTER, points)
    return float(np.max(cky_residual_batch(higher_dim_ads_form(n, flip), points)))


def metric_pairing(spacetime: SpacetimeId, x, u, v):
    return ad.einsum("m...,mn...,n...->...", u, metric(spacetime, x), v)


def slice_dual_expansion(spacetime: SpacetimeId, x) -> np.ndarray:
    """Closed-form frame expansion of the dual two-form used at ``t = 0``.

    AdS: ∗(dy²∧dy³) = -θ¹∧θ⁰ + Σ_{m=2,3} y^m (x¹θ^m - x^mθ¹)∧θ⁰.
    dS:  ∗(dy³∧dy²) = +θ¹∧θ⁰ + Σ_{m=2,3} y^m (x¹θ^m - x^mθ¹)∧θ⁰.
    Returns the covariant component matrix, shape (4, 4, ...).
    """
    spacetime = SpacetimeId.parse(spacetime)
    if spacetime is MINKOWSKI:
        raise ValueError("the expansion is stated for dS and AdS")
    x = np.asarray(x, dtype=float)
    th = np.asarray(coframe(spacetime, x))
    y = np.asarray(embed(spacetime, x))
    coef = np.zeros((4,) + x.shape[1:])
    coef[1] = -1.0 if spacetime is ANTI_DE_SITTER else 1.0
    for m in (2, 3):
        coef[m] += y[m] * x[1]
        coef[1] -= y[m] * x[m]
    one = np.einsum("m...,ma...->a...", coef, th)  # c_m θ^m as chart covector
    th0 = th[0]
    return np.einsum("a...,b...->ab...", one, th0) - np.einsum("a...,b...->ab...", th0, one)


def slice_dual_form(spacetime: SpacetimeId) -> TwoFormField:
    """The dual two-form whose ``t = 0`` expansion is :func:`slice_dual_expansion`."""
    spacetime = SpacetimeId.parse(spacetime)
    a, b = (2, 3) if spacetime is ANTI_DE_SITTER else (3, 2)
    return hodge(wedge(ambient_1form(spacetime, a), ambient_1form(spacetime, b)))

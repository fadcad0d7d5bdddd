"""Forward-mode derivative arithmetic with nestable, array-valued dual numbers.

A :class:`Dual` holds a primal part and one directional derivative part.
Either part may be a numpy array (so a single object carries a whole batch of
nodes) or another :class:`Dual` (for higher derivatives).  Every seed gets a
fresh integer tag; binary operations treat the operand with the larger tag as
the outer layer, which avoids perturbation confusion when derivative
operators are nested.
"""

from __future__ import annotations

import itertools

import numpy as np

__all__ = [
    "Dual",
    "seed",
    "derivative",
    "derivatives",
    "primal",
    "sqrt",
    "sin",
    "cos",
    "sinh",
    "cosh",
    "exp",
    "log",
    "stack",
    "einsum",
    "moveaxis",
    "where_sign",
]

_tags = itertools.count(1)


class Dual:
    """Number ``val + eps*ε`` with ``ε² = 0`` under the tag ``tag``."""

    __slots__ = ("val", "eps", "tag")
    __array_ufunc__ = None  # ndarray <op> Dual defers to the reflected Dual method

    def __init__(self, val, eps, tag: int):
        self.val = val
        self.eps = eps
        self.tag = tag

    # -- structure ---------------------------------------------------------
    @property
    def shape(self):
        return np.shape(primal(self))

    @property
    def ndim(self):
        return len(self.shape)

    def __len__(self):
        return self.shape[0]

    def __getitem__(self, idx):
        return Dual(_index(self.val, idx), _index(self.eps, idx), self.tag)

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def sum(self, axis=None):
        return Dual(_sum(self.val, axis), _sum(self.eps, axis), self.tag)

    def __repr__(self):
        return f"Dual(tag={self.tag}, val={self.val!r}, eps={self.eps!r})"

    # -- arithmetic --------------------------------------------------------
    def __neg__(self):
        return Dual(-self.val, -self.eps, self.tag)

    def __pos__(self):
        return self

    def __add__(self, other):
        t = _top(self, other)
        a, da = _split(self, t)
        b, db = _split(other, t)
        return Dual(a + b, da + db, t)

    __radd__ = __add__

    def __sub__(self, other):
        t = _top(self, other)
        a, da = _split(self, t)
        b, db = _split(other, t)
        return Dual(a - b, da - db, t)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        t = _top(self, other)
        a, da = _split(self, t)
        b, db = _split(other, t)
        return Dual(a * b, a * db + da * b, t)

    __rmul__ = __mul__

    def __truediv__(self, other):
        t = _top(self, other)
        a, da = _split(self, t)
        b, db = _split(other, t)
        q = a / b
        return Dual(q, (da - q * db) / b, t)

    def __rtruediv__(self, other):
        t = self.tag
        b, db = self.val, self.eps
        q = other / b
        return Dual(q, -q * db / b, t)

    def __pow__(self, n):
        if isinstance(n, Dual):
            return exp(n * log(self))
        if n == 0:
            return Dual(self.val**0, _zeros_like(self.eps), self.tag)
        if n == 2:
            return self * self
        return Dual(self.val**n, n * self.val ** (n - 1) * self.eps, self.tag)


def _index(x, idx):
    if np.ndim(x) == 0 and not isinstance(x, Dual):
        return x
    return x[idx]


def _sum(x, axis):
    if isinstance(x, Dual):
        return x.sum(axis)
    return np.sum(x, axis=axis)


def _top(*xs) -> int:
    return max(x.tag for x in xs if isinstance(x, Dual))


def _split(x, tag):
    if isinstance(x, Dual) and x.tag == tag:
        return x.val, x.eps
    return x, 0.0


def primal(x):
    """Strip every derivative layer."""
    while isinstance(x, Dual):
        x = x.val
    return x


def _zeros_like(x):
    return np.zeros(np.shape(primal(x)))


# -- seeding and extraction ---------------------------------------------------


def seed(x, direction):
    """Return ``x + ε·direction`` under a fresh tag."""
    return Dual(x, direction, next(_tags))


def _extract(y, tag):
    if isinstance(y, Dual):
        if y.tag == tag:
            return y.eps
        if y.tag > tag:
            raise RuntimeError("derivative tag escaped its scope")
    return _zeros_like(y)


def derivative(f, x, direction):
    """Directional derivative of ``f`` at ``x`` along ``direction``."""
    d = seed(x, direction)
    return _extract(f(d), d.tag)


def derivatives(f, x, ndir: int | None = None):
    """Stack ``∂f/∂x[k]`` along a new leading axis, for ``k < ndir``.

    ``x`` is indexed along its first axis (components); trailing axes are a
    node batch and are broadcast through.
    """
    shape = np.shape(primal(x))
    n = shape[0] if ndir is None else ndir
    out = []
    for k in range(n):
        e = np.zeros(shape)
        e[k] = 1.0
        out.append(derivative(f, x, e))
    return stack(out)


# -- elementary functions -----------------------------------------------------


def _unary(f, df):
    def fn(x):
        if isinstance(x, Dual):
            return Dual(fn(x.val), dfn(x.val) * x.eps, x.tag)
        return f(x)

    def dfn(x):
        return df(x, fn)

    return fn


sqrt = _unary(np.sqrt, lambda x, fn: 0.5 / fn(x))
exp = _unary(np.exp, lambda x, fn: fn(x))
log = _unary(np.log, lambda x, fn: 1.0 / x)
sin = _unary(np.sin, lambda x, fn: cos(x))
cos = _unary(np.cos, lambda x, fn: -sin(x))
sinh = _unary(np.sinh, lambda x, fn: cosh(x))
cosh = _unary(np.cosh, lambda x, fn: sinh(x))


def where_sign(x):
    """Sign of the primal part; locally constant, so carries no derivative."""
    return np.sign(primal(x))


# -- array helpers -------------------------------------------------------------


def stack(items, axis: int = 0):
    """``np.stack`` that understands Dual entries (mixed with constants)."""
    items = list(items)
    duals = [x for x in items if isinstance(x, Dual)]
    if not duals:
        return np.stack([np.broadcast_to(x, _common_shape(items)) for x in items], axis=axis)
    t = max(x.tag for x in duals)
    shape = _common_shape(items)
    vals, epss = [], []
    for x in items:
        v, e = _split(x, t)
        vals.append(_broadcast(v, shape))
        epss.append(_broadcast(e, shape))
    return Dual(stack(vals, axis), stack(epss, axis), t)


def _common_shape(items):
    return np.broadcast_shapes(*(np.shape(primal(x)) for x in items))


def _broadcast(x, shape):
    if isinstance(x, Dual):
        if np.shape(primal(x)) == shape:
            return x
        return Dual(_broadcast(x.val, shape), _broadcast(x.eps, shape), x.tag)
    return np.broadcast_to(x, shape)


def einsum(subscripts: str, *ops):
    """``np.einsum`` with the product rule applied layer by layer."""
    duals = [x for x in ops if isinstance(x, Dual)]
    if not duals:
        return np.einsum(subscripts, *ops, optimize=False)
    t = max(x.tag for x in duals)
    parts = [_split(x, t) for x in ops]
    vals = [p[0] for p in parts]
    val = einsum(subscripts, *vals)
    eps = None
    for i, (x, p) in enumerate(zip(ops, parts)):
        if isinstance(x, Dual) and x.tag == t:
            args = list(vals)
            args[i] = _broadcast(p[1], np.shape(primal(x)))
            term = einsum(subscripts, *args)
            eps = term if eps is None else eps + term
    return Dual(val, eps, t)


def moveaxis(x, src, dst):
    if isinstance(x, Dual):
        return Dual(moveaxis(x.val, src, dst), moveaxis(x.eps, src, dst), x.tag)
    return np.moveaxis(x, src, dst)


def is_finite(x) -> bool:
    return bool(np.all(np.isfinite(primal(x))))


def scalar(x) -> float:
    """Primal value of a 0-d quantity as a Python float."""
    return float(primal(x))


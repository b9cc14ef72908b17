"""Chebyshev interpolants of univariate functions on a closed interval.

Interpolation uses the extrema grid x_k = cos(k*pi/m) mapped affinely onto
[a, b].  Coefficients are stored in the plain-sum convention: the first and
last coefficients produced by the cosine-sum formula are halved once at
construction, so that p(x) = sum_j c_j T_j(s) interpolates every node with
no special casing at evaluation time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, InvalidIntervalError, NonConvergenceError

DEFAULT_DEGREE_CAP = 2 ** 16

# Rows of the coefficient matrix are built in blocks of this many degrees so
# that memory stays O(block * m) even near the degree cap.
_COEFF_BLOCK = 1024


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi] with lo < hi, both finite."""

    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise InvalidIntervalError(f"interval endpoints must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise InvalidIntervalError(f"interval requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def to_unit(self, x):
        """Affine map [lo, hi] -> [-1, 1]."""
        return (2.0 * np.asarray(x, dtype=float) - (self.lo + self.hi)) / self.width

    def from_unit(self, s):
        """Affine map [-1, 1] -> [lo, hi]."""
        return 0.5 * self.width * np.asarray(s, dtype=float) + 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class ChebProxy:
    """Truncated Chebyshev series standing in for a function on an interval.

    ``coeffs[j]`` multiplies T_j of the unit-interval variable; length is
    degree + 1 and is always at least 1.
    """

    interval: Interval
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if c.ndim != 1 or c.size < 1:
            raise ValueError("coeffs must be a nonempty 1-D sequence")
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x):
        return cheb_eval(self, x)


class ObjectiveFn:
    """A real objective on an interval that counts how often it is evaluated.

    The wrapped callable must accept scalars; vectorized callables are used
    as-is for array arguments.  The counter tallies evaluation points, which
    is the quantity the complexity checks care about.
    """

    def __init__(self, fn: Callable, domain: Interval):
        self.fn = fn
        self.domain = domain
        self.evaluations = 0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        self.evaluations += x.size
        if x.ndim == 0:
            return float(self.fn(float(x)))
        try:
            out = np.asarray(self.fn(x), dtype=float)
            if out.shape != x.shape:
                raise ValueError
        except Exception:
            out = np.array([self.fn(float(v)) for v in x])
        return out

    def reset_count(self):
        self.evaluations = 0


def cheb_nodes(m: int, interval: Interval) -> np.ndarray:
    """Extrema-grid nodes for degree ``m`` on ``interval``, in index order.

    node_k = (hi-lo)/2 * cos(k*pi/m) + (lo+hi)/2 for k = 0..m, so the nodes
    run from hi down to lo.
    """
    if not isinstance(interval, Interval):
        interval = Interval(*interval)
    if m < 1:
        raise ValueError(f"degree must be >= 1, got {m}")
    k = np.arange(m + 1)
    return interval.from_unit(np.cos(np.pi * k / m))


def cheb_coeffs(values: Sequence[float]) -> np.ndarray:
    """Chebyshev coefficients of the interpolant through extrema-grid values.

    ``values`` are f at cheb_nodes(m, .) in node order (m = len - 1).  The
    cosine-sum formula is applied directly (O(m^2), degrees stay moderate);
    the first and last outputs are halved so the stored coefficients are in
    the plain-sum convention.
    """
    f = np.asarray(values, dtype=float)
    if f.ndim != 1 or f.size < 2:
        raise ValueError("need at least 2 node values (degree >= 1)")
    m = f.size - 1
    c = np.empty(m + 1)
    inner = f[1:m]  # k = 1..m-1
    k = np.arange(1, m)
    for j0 in range(0, m + 1, _COEFF_BLOCK):
        j = np.arange(j0, min(j0 + _COEFF_BLOCK, m + 1))
        block = np.cos(np.pi * np.outer(j, k) / m) @ inner
        c[j] = (f[0] + f[m] * np.cos(j * np.pi)) / m + 2.0 * block / m
    c[0] *= 0.5
    c[m] *= 0.5
    return c


def cheb_eval(proxy: ChebProxy, x):
    """Evaluate a proxy by the backward (Clenshaw) recurrence.

    ``x`` may be a scalar or array inside the proxy interval; points within
    a small tolerance of the endpoints are clamped, anything further out
    raises DomainError.
    """
    iv = proxy.interval
    xs = np.asarray(x, dtype=float)
    scalar = xs.ndim == 0
    xs = np.atleast_1d(xs)
    tol = 1e-12 * max(1.0, abs(iv.lo), abs(iv.hi))
    if np.any(xs < iv.lo - tol) or np.any(xs > iv.hi + tol):
        bad = xs[(xs < iv.lo - tol) | (xs > iv.hi + tol)][0]
        raise DomainError(f"x={bad!r} outside interval [{iv.lo}, {iv.hi}]")
    s = np.clip(iv.to_unit(xs), -1.0, 1.0)

    c = proxy.coeffs
    if len(c) == 1:
        out = np.full_like(s, c[0])
    else:
        b1 = np.zeros_like(s)
        b2 = np.zeros_like(s)
        two_s = 2.0 * s
        for cj in c[:0:-1]:
            b1, b2 = cj + two_s * b1 - b2, b1
        out = c[0] + s * b1 - b2
    return float(out[0]) if scalar else out


def adaptive_interpolate(
    f,
    interval: Interval,
    eps1: float,
    degree_cap: int = DEFAULT_DEGREE_CAP,
) -> ChebProxy:
    """Interpolate ``f`` to tolerance ``eps1`` by doubling the degree.

    Starts at degree 2 and doubles until the residual max |f - p| over the
    fresh nodes of the doubled grid is at most eps1.  Values at reused nodes
    are cached across doublings (node k of the degree-m grid is node 2k of
    the degree-2m grid), so an accepted degree m costs exactly 2m+1 distinct
    evaluations.

    Raises NonConvergenceError (carrying the last residual) if the degree
    would exceed ``degree_cap``.
    """
    if not isinstance(interval, Interval):
        interval = Interval(*interval)
    if eps1 <= 0:
        raise ValueError(f"eps1 must be positive, got {eps1}")
    if not isinstance(f, ObjectiveFn):
        f = ObjectiveFn(f, interval)

    m = 2
    vals = f(cheb_nodes(m, interval))
    while True:
        coeffs = cheb_coeffs(vals)
        proxy = ChebProxy(interval, coeffs)
        fresh = cheb_nodes(2 * m, interval)[1::2]
        fresh_vals = f(fresh)
        resid = float(np.max(np.abs(fresh_vals - cheb_eval(proxy, fresh))))
        if resid <= eps1:
            return proxy
        if 2 * m > degree_cap:
            raise NonConvergenceError(
                f"degree cap {degree_cap} exceeded (last residual {resid:.3e} > eps1 {eps1:.3e})",
                residual=resid,
            )
        merged = np.empty(2 * m + 1)
        merged[0::2] = vals
        merged[1::2] = fresh_vals
        vals = merged
        m *= 2


def proxy_average(proxies: Sequence[ChebProxy]) -> ChebProxy:
    """Coefficient-wise mean after zero-padding to the longest proxy.

    All proxies must share one interval; this is the centralized reference
    the dissemination iterations converge to.
    """
    if not proxies:
        raise ValueError("need at least one proxy")
    iv = proxies[0].interval
    for p in proxies[1:]:
        if p.interval != iv:
            raise ValueError(f"mismatched intervals: {p.interval} vs {iv}")
    width = max(len(p.coeffs) for p in proxies)
    acc = np.zeros(width)
    for p in proxies:
        acc[: len(p.coeffs)] += p.coeffs
    return ChebProxy(iv, acc / len(proxies))


def pad_coeffs(vectors: Sequence[np.ndarray], width: int | None = None) -> np.ndarray:
    """Stack 1-D coefficient vectors into a zero-padded 2-D array."""
    vecs = [np.atleast_1d(np.asarray(v, dtype=float)) for v in vectors]
    if width is None:
        width = max(len(v) for v in vecs)
    out = np.zeros((len(vecs), width))
    for i, v in enumerate(vecs):
        out[i, : len(v)] = v
    return out

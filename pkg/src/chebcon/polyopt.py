"""Global minimization of Chebyshev proxies on their interval.

The minimizer enumerates stationary points (real colleague-matrix
eigenvalues of the derivative) together with the interval endpoints,
polishes candidates with a few Newton steps, and certifies the value gap
against a grid-plus-golden-section sweep of the proxy itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as npcheb

from .cheb import ChebProxy, cheb_eval

TRIM_REL = 1e-13          # leading coefficients below TRIM_REL * ||c||_inf are noise
ROOT_WINDOW = 1e-8        # eigenvalues within this of [-1, 1] count as roots
ROOT_DEDUP = 1e-10
_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class OptResult:
    """Estimated optimum of a proxy: value, minimizer, and certified gap."""

    f_e_star: float
    x_p_star: float
    certified_gap: float
    used_grid_fallback: bool = False


def _trimmed(coeffs: np.ndarray) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float)
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return c[:1]
    keep = np.nonzero(np.abs(c) > TRIM_REL * scale)[0]
    return c[: keep[-1] + 1] if keep.size else c[:1]


def cheb_derivative(proxy: ChebProxy) -> ChebProxy:
    """Derivative of a proxy in the Chebyshev basis.

    Backward recurrence d_{j-1} = d_{j+1} + 2j c_j on the stored
    coefficients, with the usual halving of d_0 and the chain-rule factor
    2/(hi - lo) for the interval map.  Degree drops by one; a constant
    differentiates to the zero polynomial.
    """
    c = proxy.coeffs
    n = len(c) - 1
    if n == 0:
        return ChebProxy(proxy.interval, np.zeros(1))
    d = np.zeros(n)
    for j in range(n - 1, -1, -1):
        d[j] = (d[j + 2] if j + 2 < n else 0.0) + 2.0 * (j + 1) * c[j + 1]
    d[0] *= 0.5
    return ChebProxy(proxy.interval, d * (2.0 / proxy.interval.width))


def cheb_roots(proxy: ChebProxy) -> np.ndarray:
    """Real roots of a proxy inside its interval, sorted ascending.

    Eigenvalues of the colleague matrix of the trimmed coefficients are
    filtered to (numerically) real values in [-1 - tau, 1 + tau], mapped to
    the interval, and deduplicated.  Raises ValueError for the identically
    zero polynomial, which has no isolated roots.
    """
    c = _trimmed(proxy.coeffs)
    if len(c) == 1:
        if c[0] == 0.0:
            raise ValueError("zero polynomial is identically zero on the interval")
        return np.empty(0)
    if len(c) == 2:
        unit = np.array([-c[0] / c[1]])
    else:
        eig = np.linalg.eigvals(npcheb.chebcompanion(c))
        unit = np.real(eig[np.abs(eig.imag) <= ROOT_WINDOW])
    unit = unit[(unit >= -1.0 - ROOT_WINDOW) & (unit <= 1.0 + ROOT_WINDOW)]
    unit = np.clip(np.sort(unit), -1.0, 1.0)
    if unit.size > 1:
        keep = np.concatenate([[True], np.diff(unit) > ROOT_DEDUP])
        unit = unit[keep]
    return proxy.interval.from_unit(unit)


def golden_section(fun, lo: float, hi: float, tol: float = 1e-12, max_iter: int = 200):
    """Golden-section minimization of ``fun`` on [lo, hi].

    Returns (x, fun(x)) once the bracket shrinks below ``tol`` (absolute).
    """
    a, b = float(lo), float(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fun(d)
    x = c if fc < fd else d
    fx = fc if fc < fd else fd
    return float(x), float(fx)


def _newton_polish(x0: float, dp: ChebProxy, ddp: ChebProxy, lo: float, hi: float, steps: int = 8) -> float:
    """A few damped Newton steps on p' from x0, clamped to [lo, hi]."""
    x = float(x0)
    best = x
    best_abs = abs(cheb_eval(dp, x))
    for _ in range(steps):
        g = cheb_eval(dp, x)
        h = cheb_eval(ddp, x)
        if h == 0.0:
            break
        step = g / h
        x = min(max(x - step, lo), hi)
        cur = abs(cheb_eval(dp, x))
        if cur < best_abs:
            best, best_abs = x, cur
        if abs(step) < 1e-15 * max(1.0, abs(x)):
            break
    return best


def minimize_proxy(proxy: ChebProxy, eps3: float) -> OptResult:
    """Minimize a proxy over its interval to value gap at most ``eps3``.

    Candidates are the endpoints plus the stationary points of the proxy;
    the best candidate value is then compared against a dense grid refined
    by golden section, and any better grid point is absorbed as a candidate,
    so the certified gap ends at numerical size.  If the eigenvalue solver
    fails, minimization falls back to the grid alone and flags it.
    """
    if eps3 <= 0:
        raise ValueError(f"eps3 must be positive, got {eps3}")
    iv = proxy.interval
    c = _trimmed(proxy.coeffs)
    if len(c) == 1:
        return OptResult(float(c[0]), iv.midpoint, 0.0)

    lo, hi = iv.lo, iv.hi
    dp = cheb_derivative(proxy)
    ddp = cheb_derivative(dp)
    fallback = False
    candidates = [lo, hi]
    try:
        stationary = cheb_roots(dp)
    except ValueError:
        stationary = np.empty(0)
    except np.linalg.LinAlgError:
        stationary = np.empty(0)
        fallback = True
    for x in stationary:
        candidates.append(_newton_polish(x, dp, ddp, lo, hi))

    # Verification sweep: grid fine enough to separate the proxy's basins,
    # then golden-section refinement inside the best cell.
    npts = max(2049, 16 * proxy.degree + 1)
    grid = np.linspace(lo, hi, npts)
    vals = cheb_eval(proxy, grid)
    k = int(np.argmin(vals))
    g_lo = grid[max(0, k - 1)]
    g_hi = grid[min(npts - 1, k + 1)]
    x_ref, v_ref = golden_section(lambda x: cheb_eval(proxy, x), g_lo, g_hi, tol=1e-13 * max(1.0, iv.width))
    if v_ref < min(cheb_eval(proxy, x) for x in candidates):
        candidates.append(x_ref)

    cand = np.unique(np.clip(np.asarray(candidates, dtype=float), lo, hi))
    cand_vals = np.array([cheb_eval(proxy, x) for x in cand])
    best = int(np.argmin(cand_vals))
    ties = np.nonzero(cand_vals == cand_vals[best])[0]
    best = int(ties[np.argmin(cand[ties])])  # smallest x among exact ties
    f_star = float(cand_vals[best])
    gap = max(0.0, f_star - min(v_ref, float(np.min(vals))))
    return OptResult(f_star, float(cand[best]), gap, used_grid_fallback=fallback)

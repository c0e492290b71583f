"""Inner-function diagnostics and the constructive generating families.

Diagnostics: radial modulus reports, torus means of log|g| with clamping
(trapezoid rule on the torus, spectrally accurate away from zero shells),
and a Jensen-formula oracle for finite Blaschke products.

Construction: the Schur-algorithm projector onto finite Blaschke products,
the one-factor corrector pinned to 1 - 2^-j at the origin with a prescribed
unimodular value at a boundary point, and generating elements
G = approximant * corrector normalized to take the value 1 at a pin point
of the distinguished boundary.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .automorphisms import MobiusFactor, normalize_angle
from .errors import (
    PinNotUnimodular,
    RadiusOnZeroModulus,
    RootFindFailure,
    SchurParameterOutOfDisk,
    ValidityError,
)
from .geometry import TorusPoint
from .holo import BlaschkeFactor, Constant, HoloFunction, Product

#: points per evaluation chunk when tensor grids get large
_CHUNK = 1 << 20

#: refuse tensor grids beyond this many points (roughly 400 MB at n = 3)
_MAX_GRID = 1 << 23


# ---------------------------------------------------------------------------
# torus grids and modulus diagnostics

def _torus_grid(dimension: int, q: int) -> np.ndarray:
    if q**dimension > _MAX_GRID:
        raise ValidityError(
            f"tensor grid of {q}^{dimension} points is beyond desk scale; "
            "lower the per-dimension resolution"
        )
    angles = 2.0 * np.pi * np.arange(q) / q
    circle = np.exp(1j * angles)
    mesh = np.meshgrid(*([circle] * dimension), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


@dataclass(frozen=True)
class RadialReport:
    """Worst-case deviation of |f| from 1 on shrinking torus shells."""

    radii: tuple
    deviations: tuple
    angles_per_dim: int


def radial_modulus_report(
    f: HoloFunction, radii, angles_per_dim: int = 256
) -> RadialReport:
    """max over the angle grid of |1 - |f(r zeta)|| for each radius."""
    radii = tuple(float(r) for r in radii)
    if any(not 0.0 < r < 1.0 for r in radii):
        raise ValidityError("radii must lie in (0, 1)")
    if any(b >= a for a, b in zip(radii[1:], radii)):
        raise ValidityError("radii must be strictly increasing")
    zeta = _torus_grid(f.dimension, angles_per_dim)
    deviations = []
    for r in radii:
        worst = 0.0
        for lo in range(0, zeta.shape[0], _CHUNK):
            vals = f.eval_grid(r * zeta[lo : lo + _CHUNK])
            worst = max(worst, float(np.max(np.abs(1.0 - np.abs(vals)))))
        deviations.append(worst)
    return RadialReport(
        radii=radii, deviations=tuple(deviations), angles_per_dim=angles_per_dim
    )


def good_inner_integral_detail(
    g: HoloFunction, r: float, quad_points: int = 512, clamp: float = 40.0
):
    """Torus mean of max(log|g(r zeta)|, -clamp) and the clamp count.

    Trapezoid rule on the torus: exact for trigonometric polynomials of
    degree < quad_points per variable, spectrally accurate for integrands
    analytic in a strip, i.e. whenever no zero of g sits near the sampled
    shell.
    """
    if not 0.0 < r < 1.0:
        raise ValidityError(f"radius {r} not in (0, 1)")
    if quad_points < 16:
        raise ValidityError("need at least 16 quadrature points per dimension")
    if clamp <= 0.0:
        raise ValidityError("clamp level must be positive")
    zeta = _torus_grid(g.dimension, quad_points)
    floor = math.exp(-clamp)
    total = 0.0
    clamped = 0
    for lo in range(0, zeta.shape[0], _CHUNK):
        mods = np.abs(g.eval_grid(r * zeta[lo : lo + _CHUNK]))
        small = mods <= floor
        clamped += int(np.count_nonzero(small))
        total += float(np.sum(np.log(np.maximum(mods, floor))))
    return total / zeta.shape[0], clamped


def good_inner_integral(
    g: HoloFunction, r: float, quad_points: int = 512, clamp: float = 40.0
) -> float:
    value, _ = good_inner_integral_detail(g, r, quad_points, clamp)
    return value


def jensen_oracle(zeros, value_at_0_modulus: float, r: float) -> float:
    """Circle mean of log|B| at radius r for a finite Blaschke product.

    Independent of any quadrature: log|B(0)| plus log(r/|z_k|) for each
    zero inside radius r. Implemented in the regrouped form
    sum_k min(log r, log|z_k|)-style so zeros at the origin are handled,
    which agrees with the direct formula whenever the latter is finite.
    """
    zeros = [complex(z) for z in zeros]
    moduli = [abs(z) for z in zeros]
    for m in moduli:
        if abs(m - r) < 1e-6:
            raise RadiusOnZeroModulus(
                f"radius {r:.17g} within 1e-6 of zero modulus {m:.17g}"
            )
    product = 1.0
    for m in moduli:
        product *= m
    if abs(product - value_at_0_modulus) > 1e-9 * max(1.0, abs(value_at_0_modulus)):
        raise ValidityError(
            "value_at_0_modulus disagrees with the product of zero moduli"
        )
    total = 0.0
    for m in moduli:
        total += math.log(r) if m < r else math.log(m)
    return total


@dataclass(frozen=True)
class GoodInnerReport:
    """Torus means of log|g| along a radius schedule, with clamp accounting."""

    radii: tuple
    values: tuple
    clamp_counts: tuple
    clamp_level: float
    quad_points: int
    tolerance: float
    passed: bool


#: tie tolerance for the nonincreasing check on |I(r)|
_TREND_SLACK = 1e-9


def good_inner_trend(
    g: HoloFunction,
    radii=(0.9, 0.99, 0.999),
    quad_points: int = 512,
    clamp: float = 40.0,
    tolerance: float = 0.02,
) -> GoodInnerReport:
    """Pass when |I(r_last)| < tolerance and |I(r)| is nonincreasing over
    the last three radii. Radii must stay off the zero-modulus shells of g
    by at least 1e-3 for the quadrature to be trustworthy."""
    radii = tuple(float(r) for r in radii)
    values, counts = [], []
    for r in radii:
        v, c = good_inner_integral_detail(g, r, quad_points, clamp)
        values.append(v)
        counts.append(c)
    tail = [abs(v) for v in values[-3:]]
    monotone = all(a + _TREND_SLACK >= b for a, b in zip(tail, tail[1:]))
    passed = monotone and abs(values[-1]) < tolerance
    return GoodInnerReport(
        radii=radii,
        values=tuple(values),
        clamp_counts=tuple(counts),
        clamp_level=float(clamp),
        quad_points=int(quad_points),
        tolerance=float(tolerance),
        passed=passed,
    )


# ---------------------------------------------------------------------------
# Schur projector

_SCHUR_BOUNDARY = 1.0 - 1e-12


def _series_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """Power-series quotient to the length of num; den[0] must be nonzero."""
    out = np.empty_like(num)
    for i in range(len(num)):
        acc = num[i]
        upper = min(i, len(den) - 1)
        if upper:
            acc = acc - np.dot(out[i - upper : i][::-1], den[1 : upper + 1])
        out[i] = acc / den[0]
    return out


def schur_parameters(coeffs, depth: int):
    """Run the Schur recursion gamma_k = f_k(0),
    f_{k+1} = (f_k - gamma_k) / (z (1 - conj(gamma_k) f_k)) in coefficient
    arithmetic. Raises SchurParameterOutOfDisk at the first parameter on the
    unit circle."""
    cur = np.asarray(coeffs, dtype=complex).copy()
    if depth < 1:
        raise ValidityError("depth must be >= 1")
    if len(cur) < depth + 1:
        raise ValidityError("need at least depth+1 coefficients")
    gammas = []
    for k in range(depth):
        gamma = complex(cur[0])
        if abs(gamma) >= _SCHUR_BOUNDARY:
            raise SchurParameterOutOfDisk(step=k, parameter=gamma)
        gammas.append(gamma)
        num = cur.copy()
        num[0] = 0.0
        den = -np.conjugate(gamma) * cur
        den[0] += 1.0
        cur = _series_div(num[1:], den[: len(num) - 1])
    return gammas


def _blaschke_from_zeros(zeros, unimodular: complex, dimension: int) -> HoloFunction:
    """u * prod (a_k - z)/(1 - conj(a_k) z) as a tree on coordinate 1, with
    the phase folded into the first factor."""
    phase = normalize_angle(cmath.phase(unimodular))
    factors = []
    for i, a in enumerate(zeros):
        theta = phase if i == 0 else 0.0
        factors.append(
            BlaschkeFactor(MobiusFactor(a, theta), coord=1, dimension=dimension)
        )
    if len(factors) == 1:
        return factors[0]
    return Product(tuple(factors))


def schur_project(coeffs, depth: int, tail_constant: complex = 1.0) -> HoloFunction:
    """Finite Blaschke product matching the first ``depth`` Taylor
    coefficients of the input ball function.

    The recursion is truncated at ``depth`` and the remainder replaced by
    the unimodular tail constant; reconstruction runs in exact polynomial
    arithmetic and the zeros are recovered from the numerator. For two ball
    functions sharing the first d coefficients, sup on |z| <= rho differs by
    at most 2 rho^d / (1 - rho).
    """
    eta = complex(tail_constant)
    if abs(abs(eta) - 1.0) > 1e-12:
        raise ValidityError("tail constant must be unimodular")
    eta /= abs(eta)
    gammas = schur_parameters(coeffs, depth)

    p = np.array([eta], dtype=complex)
    q = np.array([1.0], dtype=complex)
    for gamma in reversed(gammas):
        pz = np.concatenate([[0.0], p])
        p_new = pz.copy()
        p_new[: len(q)] += gamma * q
        q_new = np.conjugate(gamma) * pz
        q_new[: len(q)] += q
        p, q = p_new, q_new

    zeros = np.roots(p[::-1])
    if zeros.size and np.max(np.abs(zeros)) >= 1.0:
        worst = float(np.max(np.abs(zeros)))
        if worst >= 1.0 + 1e-9:
            raise ValidityError(f"reconstructed zero has modulus {worst:.17g}")
        zeros = np.where(
            np.abs(zeros) >= 1.0, zeros * (1.0 - 1e-15) / np.abs(zeros), zeros
        )
    order = np.lexsort((zeros.imag, zeros.real))
    zeros = zeros[order]

    # phase from a probe point kept away from every zero
    candidates = [0.0, 0.5, -0.5, 0.5j, -0.5j]
    w = max(
        candidates,
        key=lambda c: float(np.min(np.abs(zeros - c))) if zeros.size else 1.0,
    )
    num = np.polyval(p[::-1], w)
    den = np.polyval(q[::-1], w)
    ref = np.prod((zeros - w) / (1.0 - np.conjugate(zeros) * w)) if zeros.size else 1.0
    u = (num / den) / ref
    u /= abs(u)

    if not zeros.size:
        return Constant(complex(u), dimension=1)
    return _blaschke_from_zeros([complex(z) for z in zeros], complex(u), dimension=1)


def schur_project_adaptive(coeffs, depth: int, tail_constant: complex = 1.0):
    """schur_project, but when a Schur parameter reaches the circle at step
    k < depth (the input is a finite Blaschke product of degree k), restart
    with depth k and that parameter as the tail. Returns (tree, depth)."""
    try:
        return schur_project(coeffs, depth, tail_constant), depth
    except SchurParameterOutOfDisk as exc:
        eta = exc.parameter / abs(exc.parameter)
        if exc.step == 0:
            return Constant(eta, dimension=1), 0
        return schur_project(coeffs, exc.step, eta), exc.step


# ---------------------------------------------------------------------------
# correctors and generating elements

def _corrector_boundary_value(t: float, phi: float) -> complex:
    """psi_phi(1) = (t u - 1)/(u - t) with u = e^{i phi}; unimodular.

    Cancellation-free form: with eps = 1 - t and
    d = u - t = (eps - 2 sin^2(phi/2)) + i sin(phi), the numerator equals
    -u conj(d), so the value is -u conj(d)/d with full relative accuracy
    even when |d| is tiny (t near 1, phi near 0)."""
    eps = 1.0 - t
    d = complex(eps - 2.0 * math.sin(0.5 * phi) ** 2, math.sin(phi))
    u = cmath.exp(1j * phi)
    return -u * d.conjugate() / d


def _solve_corrector_phase(t: float, w: complex) -> float:
    """Solve psi_phi(1) = w by bisection on phi in [-pi, pi).

    The boundary-value map winds once around the circle, strictly decreasing
    in argument, so the residual d(phi) = wrap(arg psi_phi(1) - arg w) has
    exactly one genuine sign change (d_lo >= 0 >= d_hi) per period; the
    other sign change is the +-pi seam and is increasing. The scan is
    centered at phi = 0 where the map is steep, so bisection keeps full
    relative resolution there.
    """
    target = cmath.phase(w)

    def residual(phi: float) -> float:
        return normalize_angle(cmath.phase(_corrector_boundary_value(t, phi)) - target)

    cells = 64
    # one extra cell past +pi so a crossing at the scan seam is bracketed;
    # the map is 2pi-periodic in phi, so raw phi beyond pi is fine
    grid = [-math.pi + 2.0 * math.pi * k / cells for k in range(cells + 2)]
    vals = [residual(p) for p in grid]
    for p, d in zip(grid, vals):
        if d == 0.0:
            return p
    lo = hi = None
    for i in range(cells + 1):
        if vals[i] > 0.0 > vals[i + 1]:
            lo, hi = grid[i], grid[i + 1]
            break
    if lo is None:
        raise RootFindFailure("no decreasing sign change found for the phase solve")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        d = residual(mid)
        if d == 0.0:
            return mid
        if d > 0.0:
            lo = mid
        else:
            hi = mid
    phi = lo if abs(residual(lo)) <= abs(residual(hi)) else hi
    if abs(_corrector_boundary_value(t, phi) - w) > 1e-10:
        raise RootFindFailure(
            f"phase solve residual {abs(_corrector_boundary_value(t, phi) - w):.3e}"
        )
    return phi


def make_corrector(
    j: int, xi: complex, w: complex, dimension: int = 1
) -> HoloFunction:
    """One-variable inner corrector acting on coordinate 1.

    Returns Psi(z) = psi(conj(xi) z_1) where psi is the Moebius factor with
    psi(0) = 1 - 2^-j (real positive) and psi(1) = w; the rotation is folded
    into the factor so Psi is a single Blaschke node. Psi tends to 1
    uniformly on compacts as j grows: |psi(z) - 1| <= 2^-j (1+|z|)/(1-|z|).
    """
    if j < 1:
        raise ValidityError("corrector index must be >= 1")
    if j > 52:
        raise ValidityError("corrector index beyond float resolution")
    xi = complex(xi)
    w = complex(w)
    if abs(abs(xi) - 1.0) > 1e-12:
        raise ValidityError("pin coordinate must be unimodular")
    if abs(abs(w) - 1.0) > 1e-12:
        raise ValidityError("corrector target must be unimodular")
    w /= abs(w)
    t = 1.0 - math.ldexp(1.0, -j)
    phi = _solve_corrector_phase(t, w)
    a = t * cmath.exp(1j * phi)
    theta = normalize_angle(-phi - cmath.phase(xi))
    return BlaschkeFactor(
        MobiusFactor(alpha=a * xi, theta=theta), coord=1, dimension=dimension
    )


@dataclass(frozen=True)
class GeneratingElement:
    """A pinned family member: product of an inner closure-continuous
    approximant and a corrector, taking the value 1 at the pin point."""

    index: int
    pin: TorusPoint
    approximant: HoloFunction
    corrector: HoloFunction
    product: HoloFunction


def _pin_noise_bound(tree: HoloFunction, pin: TorusPoint) -> float:
    """Measurement noise of |tree(pin)| for a structurally inner tree.

    A pin coordinate stored in binary64 sits up to an ulp off the torus, and
    each Blaschke factor's modulus responds with sensitivity
    (1 - |alpha|^2)/|1 - conj(alpha) z|^2, which blows up for factors whose
    zero hugs the boundary near the pin. Mathematically |tree(pin)| = 1;
    this bound says how far the float evaluation may honestly stray.
    """
    from .holo import (
        BlaschkeFactor as _BF,
        Composed as _Co,
        Constant as _C,
        Coordinate as _X,
        Power as _P,
        Product as _Pr,
        flatten as _flatten,
    )

    eps = 2.3e-16
    if isinstance(tree, _Co):
        tree = _flatten(tree)

    def walk(node) -> float:
        if isinstance(node, (_C, _X)):
            return eps
        if isinstance(node, _BF):
            z = pin.coords[node.coord - 1]
            den = abs(1.0 - node.factor.alpha.conjugate() * z)
            return 4.0 * eps / max(den, eps)
        if isinstance(node, _Pr):
            return sum(walk(c) for c in node.children)
        if isinstance(node, _P):
            return node.exponent * walk(node.child)
        if isinstance(node, _Co):
            return walk(_flatten(node))
        return eps

    return walk(tree)


def make_generating_element(
    j: int, pin: TorusPoint, approximant: HoloFunction
) -> GeneratingElement:
    """Wrap an approximant that is unimodular at the pin.

    The corrector targets w = 1 / A(pin), so G = A * Psi satisfies
    G(pin) = 1 up to rounding; Psi(0) = 1 - 2^-j exactly up to float noise.
    Both guards are measurement-aware: the pin coordinates carry about one
    ulp of modulus error, amplified by near-boundary factors and by the
    corrector steepness 2^j.
    """
    from .holo import is_blaschke_type as _is_inner

    if approximant.dimension != pin.dimension:
        raise ValidityError("approximant and pin dimensions differ")
    value = approximant.eval(pin)
    tol = 1e-9
    if _is_inner(approximant):
        # |A(pin)| = 1 holds structurally; allow honest evaluation noise
        tol = max(tol, 16.0 * _pin_noise_bound(approximant, pin))
    if abs(abs(value) - 1.0) > tol:
        raise PinNotUnimodular(
            f"|A(pin)| = {abs(value):.17g} deviates from 1 beyond {tol:.3e}"
        )
    w = value.conjugate() / abs(value)
    w /= abs(w)
    corrector = make_corrector(j, pin.coords[0], w, approximant.dimension)
    element = GeneratingElement(
        index=j,
        pin=pin,
        approximant=approximant,
        corrector=corrector,
        product=Product((approximant, corrector)),
    )
    residual = abs(element.product.eval(pin) - 1.0)
    guard = max(1e-9, 32.0 * _pin_noise_bound(element.product, pin))
    if residual > guard:
        raise ValidityError(f"pin residual {residual:.3e} exceeds guard {guard:.3e}")
    return element

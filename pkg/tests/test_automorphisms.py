import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from innerorbit import (
    ExplicitSequence,
    GeneratedSequence,
    MobiusFactor,
    PolydiskAutomorphism,
    auto_compose,
    auto_eval,
    auto_inverse,
    mobius_compose,
    mobius_eval,
    mobius_inverse,
    normalize_angle,
    select_subsequence,
)
from innerorbit.errors import (
    EmptySelection,
    NoBoundaryConvergence,
    PoleHit,
    ValidityError,
)

from util import random_automorphism, random_boundary_points, random_interior_points


# ---------------------------------------------------------------------------
# Moebius factors

def test_mobius_eval_at_origin_and_zero():
    f = MobiusFactor(0.5, 0.0)
    assert mobius_eval(f, 0.0) == pytest.approx(0.5, abs=1e-15)
    assert mobius_eval(f, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert mobius_eval(f, 1.0) == pytest.approx(-1.0, abs=1e-15)


def test_mobius_rejects_unit_alpha():
    with pytest.raises(ValidityError):
        MobiusFactor(1.0, 0.0)


def test_mobius_pole_hit_outside_disk():
    f = MobiusFactor(0.5, 0.0)
    with pytest.raises(PoleHit):
        f(2.0 + 0j)


def test_mobius_inverse_rotation_case():
    inv = mobius_inverse(MobiusFactor(0.0, 0.0))
    assert inv.alpha == 0.0
    assert inv.theta == 0.0


def test_mobius_inverse_quarter_turn():
    # algebraic solve of w = sigma(z) for z gives alpha' = e^{i theta} alpha,
    # theta' = -theta; checked on a grid below
    inv = mobius_inverse(MobiusFactor(0.5, math.pi / 2))
    assert inv.alpha == pytest.approx(0.5j, abs=1e-15)
    assert inv.theta == pytest.approx(-math.pi / 2, abs=1e-15)


@pytest.mark.parametrize("alpha,theta", [(0.5, math.pi / 2), (0.5, 0.0),
                                         (0.3 - 0.2j, 1.7)])
def test_mobius_inverse_round_trip_on_grid(alpha, theta):
    f = MobiusFactor(alpha, theta)
    g = mobius_inverse(f)
    pts = 0.9 * np.exp(2j * np.pi * np.arange(100) / 100) * np.linspace(
        0.1, 1.0, 100
    )
    assert np.max(np.abs(g(f(pts)) - pts)) < 1e-12


def test_mobius_involution():
    f = MobiusFactor(0.5, 0.0)
    inv = mobius_inverse(f)
    assert inv.alpha == pytest.approx(0.5, abs=1e-15)
    assert inv.theta == 0.0


def test_boundary_preservation():
    rng = np.random.default_rng(3)
    pts = random_boundary_points(rng, 200, 1).ravel()
    for _ in range(5):
        f = MobiusFactor(
            0.8 * cmath.exp(1j * rng.uniform(-math.pi, math.pi)),
            rng.uniform(-math.pi, math.pi),
        )
        assert np.max(np.abs(np.abs(f(pts)) - 1.0)) < 1e-12


def test_rotated_numerator_conversion():
    # (alpha - lam z)/(1 - conj(alpha) lam z) in canonical clothes
    alpha, lam = 0.4 + 0.1j, cmath.exp(0.7j)
    f = MobiusFactor.from_rotated_numerator(alpha, lam)
    z = 0.35 - 0.2j
    direct = (alpha - lam * z) / (1 - alpha.conjugate() * lam * z)
    assert f(z) == pytest.approx(direct, abs=1e-14)


# ---------------------------------------------------------------------------
# automorphisms

def test_identity_normal_form_evaluates_to_z():
    phi = PolydiskAutomorphism.identity(2)
    out = auto_eval(phi, (0.3, -0.1j))
    assert out.coords[0] == pytest.approx(0.3, abs=1e-15)
    assert out.coords[1] == pytest.approx(-0.1j, abs=1e-15)


def test_pure_swap():
    phi = PolydiskAutomorphism(
        factors=(MobiusFactor(0.0, math.pi), MobiusFactor(0.0, math.pi)),
        perm=(1, 0),
    )
    out = auto_eval(phi, (0.1, 0.2j))
    assert out.coords[0] == pytest.approx(0.2j, abs=1e-15)
    assert out.coords[1] == pytest.approx(0.1, abs=1e-15)


def test_auto_eval_rational_oracle():
    # independent rational-arithmetic computation of (1/2 - 1/4)/(1 - 1/8)
    expected = Fraction(1, 2) - Fraction(1, 4)
    expected /= 1 - Fraction(1, 2) * Fraction(1, 4)
    assert expected == Fraction(2, 7)
    phi = PolydiskAutomorphism(factors=(MobiusFactor(0.5, 0.0),), perm=(0,))
    out = auto_eval(phi, (0.25,))
    assert out.coords[0] == pytest.approx(float(expected), abs=1e-15)


def test_auto_inverse_identity_is_identity():
    phi = PolydiskAutomorphism.identity(3)
    inv = auto_inverse(phi)
    assert inv.perm == phi.perm
    for f in inv.factors:
        assert f.alpha == 0.0
        assert f.theta == pytest.approx(math.pi, abs=1e-15)
    pts = np.array([[0.1, 0.2j, -0.3]])
    assert np.max(np.abs(inv.transform(phi.transform(pts)) - pts)) < 1e-14


def test_auto_inverse_single_factor():
    phi = PolydiskAutomorphism(factors=(MobiusFactor(0.5, math.pi / 2),), perm=(0,))
    inv = auto_inverse(phi)
    assert inv.factors[0].alpha == pytest.approx(0.5j, abs=1e-15)
    assert inv.factors[0].theta == pytest.approx(-math.pi / 2, abs=1e-15)


def test_auto_inverse_swap_round_trip():
    rng = np.random.default_rng(17)
    phi = random_automorphism(rng, 2)
    phi = PolydiskAutomorphism(factors=phi.factors, perm=(1, 0))
    inv = auto_inverse(phi)
    pts = random_interior_points(rng, 100, 2)
    assert np.max(np.abs(phi.transform(inv.transform(pts)) - pts)) < 1e-12
    assert np.max(np.abs(inv.transform(phi.transform(pts)) - pts)) < 1e-12


def test_compose_rotations_gives_identity_form():
    rot = MobiusFactor(0.0, math.pi)
    c = mobius_compose(rot, rot)
    assert c.alpha == 0.0
    assert c.theta == pytest.approx(math.pi, abs=1e-15)


def test_compose_involution_gives_identity_form():
    f = MobiusFactor(0.5, 0.0)
    c = mobius_compose(f, f)
    assert abs(c.alpha) < 1e-15
    assert c.theta == pytest.approx(math.pi, abs=1e-15)
    z = np.linspace(-0.7, 0.7, 41).astype(complex)
    assert np.max(np.abs(c(z) - f(f(z)))) < 1e-14


def test_compose_with_inverse_is_identity_on_grid():
    rng = np.random.default_rng(23)
    for n in (1, 2, 3):
        phi = random_automorphism(rng, n)
        comp = auto_compose(phi, auto_inverse(phi))
        pts = random_interior_points(rng, 50, n)
        assert np.max(np.abs(comp.transform(pts) - pts)) < 1e-12
        # identity normal form: trivial permutation, alpha = 0, theta = pi
        assert comp.perm == tuple(range(n))
        for f in comp.factors:
            assert abs(f.alpha) < 1e-13
            assert abs(abs(f.theta) - math.pi) < 1e-9


def test_group_laws_on_probes():
    rng = np.random.default_rng(29)
    for n in (1, 2, 3):
        for _ in range(10):
            phi = random_automorphism(rng, n)
            psi = random_automorphism(rng, n)
            chi = random_automorphism(rng, n)
            pts = random_interior_points(rng, 40, n)
            lhs = auto_compose(phi, psi).transform(pts)
            rhs = phi.transform(psi.transform(pts))
            assert np.max(np.abs(lhs - rhs)) < 1e-12
            a = auto_compose(auto_compose(phi, psi), chi).transform(pts)
            b = auto_compose(phi, auto_compose(psi, chi)).transform(pts)
            assert np.max(np.abs(a - b)) < 1e-12


def test_angle_normalization():
    assert normalize_angle(3 * math.pi) == pytest.approx(math.pi, abs=1e-15)
    assert normalize_angle(-math.pi) == pytest.approx(math.pi, abs=1e-15)
    assert normalize_angle(0.3) == pytest.approx(0.3, abs=1e-15)


# ---------------------------------------------------------------------------
# sequences and selection

def _constant_sequence(n=1, theta=0.0):
    return GeneratedSequence(
        direction=(1.0 + 0j,) * n,
        rate=1.0,
        theta_cycle=((theta,) * n,),
        perm_cycle=(tuple(range(n)),),
    )


def test_generated_sequence_matches_formula():
    seq = _constant_sequence()
    phi = seq.at(9)
    assert phi.factors[0].alpha == pytest.approx(1 - 1 / 10, abs=1e-15)


def test_select_constant_sequence():
    seq = _constant_sequence()
    sel = select_subsequence(seq, 64, math.pi / 16)
    assert sel.indices == tuple(range(1, 65))
    assert sel.permutation == (0,)
    assert sel.lam.coords[0] == pytest.approx(1.0, abs=1e-12)
    assert sel.gamma.coords[0] == pytest.approx(1.0, abs=1e-12)


def test_select_lambda_includes_angle():
    seq = GeneratedSequence((1.0 + 0j,), 1.0, ((0.5,),), ((0,),))
    sel = select_subsequence(seq, 64, math.pi / 16)
    assert sel.lam.coords[0] == pytest.approx(cmath.exp(0.5j), abs=1e-12)
    # the inverse maps collapse onto the bare direction, no phase
    assert sel.gamma.coords[0] == pytest.approx(1.0, abs=1e-12)


def test_select_alternating_permutations():
    # pigeonhole with a tie: identity is lexicographically smallest, and it
    # occupies the even indices
    seq = GeneratedSequence(
        (1.0 + 0j, 1.0 + 0j), 1.0, ((0.0, 0.0),), ((1, 0), (0, 1))
    )
    sel = select_subsequence(seq, 64, math.pi / 16)
    assert sel.permutation == (0, 1)
    assert sel.indices[:4] == (2, 4, 6, 8)
    assert sel.contains(100) and not sel.contains(101)
    assert sel.next_member(101) == 102


def test_select_no_boundary_convergence():
    autos = [
        PolydiskAutomorphism((MobiusFactor(0.5, 0.0),), (0,)) for _ in range(40)
    ]
    with pytest.raises(NoBoundaryConvergence):
        select_subsequence(ExplicitSequence(autos), 40, math.pi / 16)


def test_select_empty_when_nothing_repeats():
    rng = np.random.default_rng(31)
    autos = []
    perms = [(0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]
    for k, perm in enumerate(perms):
        factors = tuple(
            MobiusFactor((1 - 1e-3) * cmath.exp(0j), 0.0) for _ in range(3)
        )
        autos.append(PolydiskAutomorphism(factors, perm))
    del rng
    with pytest.raises(EmptySelection):
        select_subsequence(ExplicitSequence(autos), 6, math.pi / 16)


def test_selection_angle_deviation_within_tolerance():
    seq = GeneratedSequence((1.0 + 0j,), 1.0, ((0.1,), (0.11,), (0.9,)), ((0,),))
    tol = 0.05
    sel = select_subsequence(seq, 60, tol)
    for k in sel.indices:
        theta = seq.at(k).factors[0].theta
        assert abs(theta - sel.limit_angles[0]) <= tol

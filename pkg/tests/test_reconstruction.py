import math

import numpy as np
import pytest

from dgtime import (
    NormSpec,
    PartitionFamily,
    PiecewisePoly,
    TimePartition,
    bochner_norm,
    build_random,
    build_uniform,
    defect,
    defect_norm,
    dt_reconstruction_norm,
    estimate_CR,
    h3_jump_sum,
    inverse_trace_check,
    jump_functional,
    laplace_triplet,
    lift,
    random_poly,
    reconstruct,
    spectral_triplet,
    trace_constant,
    verify_derivative_identity,
)
from dgtime.errors import InvalidArgumentError
from dgtime.legendre import gauss_rule, legendre_values
from dgtime.reconstruction import defect_shape, interval_norm

FLAT1 = spectral_triplet(np.ones(1))
FLAT3 = spectral_triplet(np.ones(3))


def test_lift_moments_and_endpoint():
    # integrating the lifted jump over the interval recovers the jump,
    # and for degree 1 the value at the left endpoint is 4z/tau
    P = build_uniform(1.0, 4)
    z = np.array([2.0])
    L = lift(z, P, 1, 1)
    tau = P.steps[1]
    np.testing.assert_allclose(L.coeffs[:, 0], [z[0] / tau, -3.0 * z[0] / tau])
    # value at left endpoint x = -1: c0 - c1 = 4 z / tau
    left_val = L.coeffs[0, 0] - L.coeffs[1, 0]
    assert left_val == pytest.approx(4.0 * z[0] / tau, rel=1e-14)
    # zero moment against constants: tau * c0 = z
    assert tau * L.coeffs[0, 0] == pytest.approx(z[0], rel=1e-15)
    with pytest.raises(InvalidArgumentError):
        lift(z, P, 9, 1)


def test_lift_higher_moments_vanish():
    # against P_j for 1 <= j <= degree the lifted jump integrates to zero
    # once combined with the alternating endpoint weight; check the defining
    # weak property: int L(t) q(t) dt = z * q(t_{n-1}^+) for all q in P^ell
    rng = np.random.default_rng(13)
    P = build_random(1.0, 3, 5, 2.0)
    for ell in range(4):
        z = rng.uniform(-1, 1, size=2)
        n = 1
        L = lift(z, P, n, ell)
        tau = P.steps[n]
        w = tau / (2.0 * np.arange(ell + 1) + 1.0)
        for _ in range(5):
            q = rng.uniform(-1, 1, size=ell + 1)
            integral = np.einsum("i,i,ik->k", q, w, L.coeffs)
            qleft = float(q @ (-1.0) ** np.arange(ell + 1))
            np.testing.assert_allclose(integral, z * qleft, atol=1e-13)


def test_reconstruction_continuity_and_interpolation():
    rng = np.random.default_rng(19)
    for ell in range(5):
        for _ in range(20):
            P = build_random(1.0, int(rng.integers(2, 10)), int(rng.integers(0, 999)), 3.0)
            u = random_poly(rng, P, ell, 3)
            u0 = rng.uniform(-1, 1, size=3)
            Ru = reconstruct(u, u0)
            assert Ru.degree == ell + 1
            scale = 1.0 + np.abs(u.coeffs).max()
            # global continuity at interior nodes
            for n in range(1, P.num_intervals):
                gap = np.abs(Ru.left_value(n) - Ru.right_value(n)).max()
                assert gap <= 1e-13 * scale
            # left-limit interpolation at all nodes, initial value at t = 0
            err = np.abs(Ru.node_left_values() - u.node_left_values()).max()
            assert err <= 1e-13 * scale
            assert np.abs(Ru.right_value(0) - u0).max() <= 1e-13 * scale


def test_reconstruction_of_continuous_function_is_identity():
    # if u is already continuous with u(0) = u0 the reconstruction is u itself
    rng = np.random.default_rng(23)
    P = build_uniform(1.0, 4)
    ell = 2
    u = random_poly(rng, P, ell, 1)
    # enforce continuity by adjusting the constant mode interval by interval
    c = u.coeffs.copy()
    u0 = np.array([0.7])
    prev = u0.copy()
    for n in range(P.num_intervals):
        signs = (-1.0) ** np.arange(ell + 1)
        right = signs @ c[n]
        c[n, 0] += prev - right
        prev = np.ones(ell + 1) @ c[n]
    v = PiecewisePoly(P, c)
    Rv = reconstruct(v, u0)
    assert np.abs(Rv.coeffs[:, : ell + 1] - v.coeffs).max() <= 1e-13
    assert np.abs(Rv.coeffs[:, ell + 1]).max() <= 1e-13


def test_defect_shape_is_partition_independent():
    # the per-interval defect equals jump times a fixed reference polynomial
    rng = np.random.default_rng(29)
    for ell in range(4):
        shape = defect_shape(ell)
        # endpoint values: -1 at the left endpoint (kills the jump), 0 at right
        assert float(shape @ (-1.0) ** np.arange(ell + 2)) == pytest.approx(-1.0, abs=1e-14)
        assert float(shape.sum()) == pytest.approx(0.0, abs=1e-14)
        P = build_random(1.0, 4, int(rng.integers(0, 99)), 2.0)
        u = random_poly(rng, P, ell, 2)
        u0 = rng.uniform(-1, 1, size=2)
        d = defect(u, u0)
        jumps = u.jumps(u0)
        recon = shape[None, :, None] * jumps[:, None, :]
        np.testing.assert_allclose(d.coeffs, recon, atol=1e-14)


def test_defect_degree0_linear_profile():
    # ell = 0: (Ru - u)(t) = -(1 - (t - t_{n-1})/tau) * jump, so the sup over
    # the interval is the jump magnitude itself
    P = TimePartition(np.array([0.0, 0.25, 1.0]))
    c = np.zeros((2, 1, 1))
    c[0, 0, 0], c[1, 0, 0] = 1.0, 3.0
    u = PiecewisePoly(P, c)
    u0 = np.array([1.0])
    assert defect_norm(u, u0, math.inf, FLAT1) == pytest.approx(2.0, rel=1e-12)
    # and the jump functional for p = inf is also the largest jump
    assert jump_functional(u, u0, math.inf, FLAT1) == pytest.approx(2.0, rel=1e-14)


def test_jump_functional_weighted_and_h3():
    P = TimePartition(np.array([0.0, 0.5, 1.0]))
    c = np.zeros((2, 1, 1))
    c[0, 0, 0], c[1, 0, 0] = 2.0, 5.0
    u = PiecewisePoly(P, c)
    u0 = np.array([0.0])
    # jumps are 2 and 3 with taus 0.5 each
    assert jump_functional(u, u0, 2.0, FLAT1) == pytest.approx(
        math.sqrt(0.5 * 4 + 0.5 * 9), rel=1e-14
    )
    assert jump_functional(u, u0, 1.0, FLAT1) == pytest.approx(2.5, rel=1e-14)
    assert h3_jump_sum(u, u0, FLAT1) == pytest.approx(13.0, rel=1e-14)


def test_derivative_identity_random():
    rng = np.random.default_rng(31)
    for _ in range(50):
        P = build_random(1.0, int(rng.integers(1, 9)), int(rng.integers(0, 999)), 3.0)
        ell = int(rng.integers(0, 5))
        u = random_poly(rng, P, ell, 3)
        v = random_poly(rng, P, int(rng.integers(0, ell + 1)), 3)
        u0 = rng.uniform(-1, 1, size=3)
        assert verify_derivative_identity(u, u0, v, FLAT3) <= 1e-12


def test_derivative_identity_matrix_variant():
    rng = np.random.default_rng(37)
    A = rng.standard_normal((3, 3))
    M = A @ A.T + 3 * np.eye(3)
    from dgtime import matrix_triplet

    S = matrix_triplet(M, M + np.eye(3))
    for _ in range(20):
        P = build_random(1.0, 5, int(rng.integers(0, 999)), 2.0)
        u = random_poly(rng, P, 2, 3)
        v = random_poly(rng, P, 2, 3)
        u0 = rng.uniform(-1, 1, size=3)
        assert verify_derivative_identity(u, u0, v, S) <= 1e-12


def test_derivative_identity_validation():
    rng = np.random.default_rng(1)
    u = random_poly(rng, build_uniform(1.0, 2), 1, 3)
    v = random_poly(rng, build_uniform(1.0, 3), 1, 3)
    with pytest.raises(InvalidArgumentError):
        verify_derivative_identity(u, np.zeros(3), v, FLAT3)
    w = random_poly(rng, build_uniform(1.0, 2), 1, 2)
    with pytest.raises(InvalidArgumentError):
        verify_derivative_identity(u, np.zeros(3), w, FLAT3)


def test_dt_reconstruction_dual_norm_zero_for_continuous():
    # constant-in-time u with matching u0 has Ru constant, so dt Ru = 0
    P = build_uniform(1.0, 4)
    c = np.full((4, 1, 2), 1.5)
    u = PiecewisePoly(P, c)
    S = spectral_triplet(np.array([1.0, 2.0]))
    assert dt_reconstruction_norm(u, np.array([1.5, 1.5]), 2.0, S) <= 1e-14


def test_estimate_CR_exact_values():
    fam = PartitionFamily(kind="uniform", T=1.0, levels=(4, 8))
    # ell = 0, p = inf: the defect profile is linear with sup = jump, so the
    # ratio is exactly one
    assert estimate_CR(fam, 0, math.inf, trials=10, seed=0) == pytest.approx(
        1.0, abs=1e-12
    )
    with pytest.raises(InvalidArgumentError):
        estimate_CR(fam, 0, 2.0, trials=0)


def test_estimate_CR_partition_independent():
    # the observed constant depends only on (degree, p), not on the family
    fams = [
        PartitionFamily(kind="uniform", T=1.0, levels=(4, 8)),
        PartitionFamily(kind="geometric", T=1.0, levels=(8, 16), sigma=0.5),
        PartitionFamily(kind="random", T=1.0, levels=(4, 8), seed=3, ratio_cap=3.0),
    ]
    for ell in (0, 1, 2):
        for p in (1.0, 2.0, math.inf):
            vals = [estimate_CR(f, ell, p, trials=25, seed=7) for f in fams]
            spread = (max(vals) - min(vals)) / max(vals)
            assert spread <= 0.05, (ell, p, vals)


def test_estimate_CR_ratio_is_constant_per_trial():
    # defect/jump is a fixed number for every single trial, not just a sup
    rng = np.random.default_rng(41)
    for ell, p in ((0, 2.0), (1, 2.0), (2, 1.0)):
        ratios = []
        for _ in range(10):
            P = build_random(1.0, int(rng.integers(2, 9)), int(rng.integers(0, 999)), 2.0)
            u = random_poly(rng, P, ell, 1)
            u0 = rng.uniform(-1, 1, size=1)
            ratios.append(
                defect_norm(u, u0, p, FLAT1) / jump_functional(u, u0, p, FLAT1)
            )
        assert max(ratios) - min(ratios) <= 1e-10 * max(ratios)


def test_interval_norm_against_bochner():
    rng = np.random.default_rng(43)
    P = build_uniform(1.0, 1)
    u = random_poly(rng, P, 2, 2)
    S = spectral_triplet(np.array([1.0, 3.0]))
    for p in (1.0, 2.0, math.inf):
        a = interval_norm(u, 0, p, S, "X")
        b = bochner_norm(u, NormSpec(p, S, which="X", oversampling=4))
        assert a == pytest.approx(b, rel=1e-6)


def test_trace_constants_analytic():
    assert trace_constant(0, math.inf) == 1.0
    assert trace_constant(3, math.inf) == 1.0
    assert trace_constant(0, 2.0) == 1.0
    assert trace_constant(2, 2.0) == 3.0
    # p = 2, degree 0 sharpness: constant v on (0, tau) attains C = 1
    P = TimePartition(np.array([0.0, 0.3]))
    u = PiecewisePoly(P, np.full((1, 1, 1), 2.0))
    lhs = 2.0
    rhs = 0.3 ** (-0.5) * interval_norm(u, 0, 2.0, FLAT1, "X")
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_trace_constant_p2_sharp_for_degree1():
    # the extremal degree-1 polynomial attains |v(-1)| = 2 tau^(-1/2)||v||_L2
    # up to the endpoint normalization; verify C = 2 is not improvable by
    # random search and never violated
    rng = np.random.default_rng(47)
    C = trace_constant(1, 2.0)
    best = 0.0
    P = TimePartition(np.array([0.0, 1.0]))
    for _ in range(2000):
        u = random_poly(rng, P, 1, 1)
        val = abs(float(u.right_value(0)[0]))
        nrm = interval_norm(u, 0, 2.0, FLAT1, "X")
        if nrm > 1e-12:
            best = max(best, val / nrm)
    assert best <= C * (1 + 1e-10)
    assert best >= 0.9 * C


def test_inverse_trace_check_no_violations():
    rng = np.random.default_rng(53)
    S = spectral_triplet(np.array([1.0, 2.0, 5.0]))
    for p in (1.0, 2.0, math.inf):
        for _ in range(300):
            P = build_random(1.0, int(rng.integers(2, 8)), int(rng.integers(0, 9999)), 3.0)
            ell = int(rng.integers(0, 4))
            u = random_poly(rng, P, ell, 3)
            n = int(rng.integers(2, P.num_intervals + 1))
            lhs, rhs = inverse_trace_check(u, np.zeros(3), n, p, S)
            assert lhs <= rhs * (1 + 1e-12)
    with pytest.raises(InvalidArgumentError):
        inverse_trace_check(u, np.zeros(3), 1, 2.0, S)


def test_defect_vs_jump_scaling_linearity():
    # scaling u and u0 scales both sides of the defect estimate linearly
    rng = np.random.default_rng(59)
    P = build_random(1.0, 5, 11, 2.0)
    u = random_poly(rng, P, 2, 1)
    u0 = rng.uniform(-1, 1, size=1)
    d1 = defect_norm(u, u0, 2.0, FLAT1)
    d2 = defect_norm(u.scale(3.0), 3.0 * u0, 2.0, FLAT1)
    assert d2 == pytest.approx(3.0 * d1, rel=1e-12)

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from lcsmech.lcs import (
    Chart,
    InadmissiblePointError,
    LcsModel,
    PhasePoint,
    flat as flat_map,
    from_chart,
    hamiltonian_vf,
    hamiltonian_vf_of,
    lee_vf,
    local_data,
    local_vf,
    locally_hamiltonian_residual,
    omega_theta_at,
    phase_jacobian,
    sharp,
    to_chart,
    transition_scalar,
)

CANONICAL = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), np.zeros((2, 2))]])

# the Hamiltonian field of the punctured-plane model, solved by hand
PLANE_XH = (
    "p_x",
    "p_y",
    "(-y*p_x^2 + y*p_y^2 + 2*x*p_x*p_y)/(x^2 + y^2)",
    "(-x*p_x^2 + x*p_y^2 - 2*y*p_x*p_y)/(x^2 + y^2)",
)


def dense_xh(m, z):
    """Independent oracle: solve Mᵀ X = dh - hθ with a generic solver."""
    theta = np.concatenate([m.lee_at(z[: m.n]), np.zeros(m.n)])
    return np.linalg.solve(omega_theta_at(m, z).T, m.dh(z) - m.h(z) * theta)


def test_omega_canonical_where_a_vanishes(plane):
    assert_array_equal(omega_theta_at(plane, [1, 0, 0, 1]), CANONICAL)


def test_omega_dx_dy_coefficient(plane):
    w = omega_theta_at(plane, [1, 0, 1, 0])
    assert w[0, 1] == -2.0 and w[1, 0] == 2.0
    assert_array_equal(w[:, 2:], CANONICAL[:, 2:])


def test_omega_zero_lee_form(flat):
    for z in ([0.3, -2.0, 1.0, 5.0], [1, 1, 1, 1]):
        assert_array_equal(omega_theta_at(flat, z), CANONICAL)


def test_sharp_of_lee_form(plane):
    z = [1, 0, 0, 1]
    c = np.array([0, 2.0, 0, 0])
    x = sharp(plane, z, c)
    assert_allclose(x, [0, 0, 0, -2], atol=1e-15)
    assert_allclose(x, np.linalg.solve(omega_theta_at(plane, z).T, c), atol=1e-15)
    assert_allclose(flat_map(plane, z, x), c, atol=1e-15)


@pytest.mark.parametrize("p", [(0.0, 0.0), (1.0, -3.0), (2.5, 0.5)])
def test_lee_field(plane, p):
    assert_allclose(lee_vf(plane, [1, 0, *p]), [0, 0, 0, -2], atol=1e-15)


def test_lee_field_zero(flat):
    assert_array_equal(lee_vf(flat, [1, 2, 3, 4]), np.zeros(4))


@pytest.mark.parametrize(
    "z, expected", [([1, 0, 0, 1], [0, 1, 0, 1]), ([1, 0, 1, 0], [1, 0, 0, -1])]
)
def test_hamiltonian_field_points(plane, z, expected):
    z = np.array(z, dtype=float)
    assert_allclose(hamiltonian_vf(plane, z), expected, atol=1e-9)
    assert_allclose(dense_xh(plane, z), expected, atol=1e-9)


def test_unit_hamiltonian_is_minus_lee_field(plane_points, plane):
    for z in plane_points:
        assert_allclose(hamiltonian_vf_of(plane, "1", z), -lee_vf(plane, z), atol=1e-14)


def test_defining_residual_and_formula_equivalence(plane, line, flat):
    rng = np.random.default_rng(2)
    for m in (plane, line, flat):
        count = 0
        while count < 200:
            z = rng.uniform(-3, 3, 2 * m.n)
            if not m.admissible(z):
                continue
            count += 1
            x = hamiltonian_vf(m, z)
            theta = np.concatenate([m.lee_at(z[: m.n]), np.zeros(m.n)])
            rhs = m.dh(z) - m.h(z) * theta
            scale = 1 + np.max(np.abs(rhs)) + np.max(np.abs(x))
            assert np.max(np.abs(flat_map(m, z, x) - rhs)) < 1e-10 * scale
            alt = sharp(m, z, m.dh(z)) - m.h(z) * lee_vf(m, z)
            assert np.max(np.abs(x - alt)) < 1e-10 * scale


def test_block_inverse_against_dense_solve(plane_points, plane):
    for z in plane_points:
        w = omega_theta_at(plane, z)
        for c in np.eye(4):
            y = np.linalg.solve(w.T, c)
            assert np.max(np.abs(sharp(plane, z, c) - y)) < 1e-12 * (1 + np.max(np.abs(y)))


def test_hand_solved_field_matches(plane_points, plane):
    from lcsmech.expr import evaluate, parse

    exprs = [parse(s) for s in PLANE_XH]
    for z in plane_points:
        env = plane.env(z)
        assert_allclose(hamiltonian_vf(plane, z), [evaluate(e, env) for e in exprs], rtol=1e-12, atol=1e-12)


def test_locally_hamiltonian_residuals(plane, flat):
    assert locally_hamiltonian_residual(plane, PLANE_XH, [0.7, -1.2, 0.4, 2.0]) < 1e-8
    assert locally_hamiltonian_residual(flat, ("1", "0", "0", "0"), [0.1, 0.2, 0.3, 0.4]) == 0.0
    assert locally_hamiltonian_residual(flat, ("0", "0", "x", "0"), [0.5, 1.0, 0.0, 0.0]) == 0.0
    # ι_X Ω = -y dx is not closed
    assert locally_hamiltonian_residual(flat, ("0", "0", "y", "0"), [0.5, 1.0, 0.0, 0.0]) == pytest.approx(1.0)


def test_inadmissible_point(plane):
    with pytest.raises(InadmissiblePointError):
        hamiltonian_vf(plane, [0, 0, 1, 1])


def test_phase_point():
    pp = PhasePoint((1, 0), (0, 1))
    assert_array_equal(pp.array, [1, 0, 0, 1])
    assert PhasePoint.from_array([1, 2, 3, 4]) == PhasePoint((1, 2), (3, 4))
    with pytest.raises(ValueError):
        PhasePoint((1,), (1, 2))


def test_model_rejects_bad_names():
    with pytest.raises(ValueError):
        LcsModel(("x",), ("y",), "p_x^2")
    with pytest.raises(ValueError):
        LcsModel(("p_x",), ("0",), "1")
    with pytest.raises(ValueError):
        LcsModel(("x", "y"), ("0",), "1")


# charts ---------------------------------------------------------------------------


def test_to_chart_polar_example(plane):
    polar = plane.chart("polar")
    assert_allclose(to_chart(polar, plane, [1, 0, 0, 1]), [1, 0, 0, 1], atol=1e-15)


def test_polar_momenta_formula(plane_points, plane):
    polar = plane.chart("polar")
    for z in plane_points:
        x, y, px, py = z
        zn = to_chart(polar, plane, z)
        r, phi = math.hypot(x, y), math.atan2(y, x)
        expected = [r, phi, px * math.cos(phi) + py * math.sin(phi), x * py - y * px]
        assert_allclose(zn, expected, rtol=1e-12, atol=1e-12)
        assert_allclose(from_chart(polar, plane, zn), z, rtol=1e-12, atol=1e-12)


def test_phase_jacobian_finite_differences(plane):
    polar = plane.chart("polar")
    zn = np.array([1.3, 0.7, -0.4, 0.9])
    t = phase_jacobian(polar, plane, zn)
    h = 1e-6
    fd = np.column_stack(
        [(from_chart(polar, plane, zn + e) - from_chart(polar, plane, zn - e)) / (2 * h) for e in np.eye(4) * h]
    )
    assert_allclose(t, fd, atol=1e-8)


def test_local_data_polar_example(plane):
    ld = local_data(plane.chart("polar"), plane, [1, 0, 0, 1])
    assert ld.sigma == 0.0
    assert_allclose(ld.omega, CANONICAL, atol=1e-15)
    assert ld.h == pytest.approx(0.5)


def test_local_data_polar_formulas(plane):
    polar = plane.chart("polar")
    rng = np.random.default_rng(8)
    for _ in range(30):
        r, phi = rng.uniform(0.3, 3), rng.uniform(-3, 3)
        pr, pphi = rng.uniform(-2, 2, 2)
        ld = local_data(polar, plane, [r, phi, pr, pphi])
        block = CANONICAL.copy()
        block[0, 1], block[1, 0] = -2 * pr, 2 * pr
        assert_allclose(ld.omega_global, block, atol=1e-12)
        assert_allclose(ld.omega, math.exp(-2 * phi) * block, rtol=1e-12, atol=1e-12)
        h_loc = 0.5 * math.exp(-2 * phi) * (pr ** 2 + pphi ** 2 / r ** 2)
        assert ld.h == pytest.approx(h_loc, rel=1e-12)
        # local Hamilton equations in polar coordinates
        expected = [pr, pphi / r ** 2, pphi / r ** 2 * (2 * pr + pphi / r), -pr ** 2 + pphi ** 2 / r ** 2]
        assert_allclose(ld.X, expected, rtol=1e-10, atol=1e-10)


def test_local_field_glues_to_global(plane):
    for name in ("polar", "polar-upper", "polar-shifted"):
        c = plane.chart(name)
        z = np.array([0.6, 1.1, -0.7, 0.4])
        zn = to_chart(c, plane, z)
        ld = local_data(c, plane, zn)
        assert_allclose(ld.T @ ld.X, hamiltonian_vf(plane, z), atol=1e-12)


def test_local_data_symplectic_case(flat):
    c = flat.chart("identity")
    z = np.array([0.2, -0.5, 1.5, 0.1])
    ld = local_data(c, flat, z)
    assert_allclose(ld.omega, CANONICAL, atol=0)
    assert ld.h == flat.h(z)


def test_transition_scalars(plane):
    polar, upper, shifted = (plane.chart(n) for n in ("polar", "polar-upper", "polar-shifted"))
    assert transition_scalar(polar, polar, plane, [0.3, 0.4]) == 1.0
    assert transition_scalar(polar, upper, plane, [0.3, 0.4]) == pytest.approx(1.0)
    # lower half plane: the angles differ by 2π, σ by 4π
    assert transition_scalar(shifted, polar, plane, [0.3, -0.4]) == pytest.approx(math.exp(4 * math.pi))
    with pytest.raises(InadmissiblePointError):
        transition_scalar(polar, upper, plane, [0.3, -0.4])


def test_chart_domain_enforced(plane):
    with pytest.raises(InadmissiblePointError):
        to_chart(plane.chart("polar-upper"), plane, [1, -1, 0, 0])


def test_local_vf_identity_chart(line):
    c = line.chart("identity")
    z = np.array([0.3, 1.2])
    assert_allclose(local_data(c, line, z).T, np.eye(2))
    assert_allclose(local_vf(c, line, z), hamiltonian_vf(line, z), atol=1e-14)

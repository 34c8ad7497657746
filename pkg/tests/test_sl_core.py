import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from _oracles import dense_prufer_angle, dense_transfer_pwc, dense_transfer_smooth, random_pwc
from puretone.errors import DomainError
from puretone.profile import PiecewiseConstantProfile, SmoothPiece, SmoothProfile
from puretone.sl_core import (
    PruferState,
    angle_and_slope_at_ell,
    angle_at_ell,
    fundamental_matrix,
    jump_angle,
    jump_angle_dJ,
    jump_angle_dz,
    jump_radius_factor,
    prufer_advance,
    quarter_cos_sin,
    rotation,
    sample_sl_solution,
)

jumps = st.floats(min_value=1e-3, max_value=1e3)
angles = st.floats(min_value=-30.0, max_value=30.0)


# -- jump maps ------------------------------------------------------------------


def test_jump_angle_axis_identities():
    for J in (0.1, 0.5, 1.0, 2.0, 10.0):
        # h(J, m pi/2) = m pi/2 on every coordinate axis
        for m in range(-6, 7):
            assert abs(jump_angle(J, m * np.pi / 2) - m * np.pi / 2) < 1e-12
    # identity jump
    z = np.linspace(-7.0, 7.0, 101)
    assert_allclose(jump_angle(1.0, z), z, atol=1e-14)


def test_jump_angle_value():
    assert_allclose(jump_angle(2.0, np.pi / 4), np.arctan(2.0), rtol=1e-14)


@given(jumps, angles)
@settings(max_examples=300, deadline=None)
def test_jump_angle_quadrant_preservation(J, z):
    h = float(jump_angle(J, z))
    lo = np.floor(z / (np.pi / 2))
    # never crosses a multiple of pi/2
    assert lo * np.pi / 2 - 1e-9 <= h <= (lo + 1) * np.pi / 2 + 1e-9


@given(jumps, angles, st.floats(min_value=1e-4, max_value=0.3))
@settings(max_examples=200, deadline=None)
def test_jump_angle_monotone_in_z(J, z, dz):
    assert jump_angle(J, z + dz) > jump_angle(J, z) - 1e-12


def test_jump_angle_derivative_values():
    for J in (0.3, 2.5):
        assert_allclose(jump_angle_dz(J, 0.0), J, rtol=1e-14)
        assert_allclose(jump_angle_dz(J, np.pi / 2), 1.0 / J, rtol=1e-14)
        assert_allclose(jump_angle_dJ(J, np.pi / 2), 0.0, atol=1e-14)


def test_jump_angle_derivative_bounds(rng):
    J = rng.uniform(0.05, 20.0, 200)
    z = rng.uniform(-20.0, 20.0, 200)
    dz = jump_angle_dz(J, z)
    assert np.all(dz >= np.minimum(J, 1.0 / J) - 1e-12)
    assert np.all(dz <= np.maximum(J, 1.0 / J) + 1e-12)
    # sharp bound: t/(1 + J^2 t^2) peaks at t = 1/J with value 1/(2J)
    dJ = np.abs(jump_angle_dJ(J, z))
    assert np.all(dJ <= 1.0 / (2.0 * J) + 1e-12)
    for Jv in (0.3, 2.0, 7.0):
        peak = abs(jump_angle_dJ(Jv, np.arctan(1.0 / Jv)))
        assert_allclose(peak, 1.0 / (2.0 * Jv), rtol=1e-12)


def test_jump_angle_derivatives_match_fd(rng):
    h = 1e-5
    for _ in range(50):
        J = rng.uniform(0.2, 5.0)
        z = rng.uniform(-6.0, 6.0)
        fd_z = (jump_angle(J, z + h) - jump_angle(J, z - h)) / (2 * h)
        fd_J = (jump_angle(J + h, z) - jump_angle(J - h, z)) / (2 * h)
        assert abs(fd_z - jump_angle_dz(J, z)) < 1e-7
        assert abs(fd_J - jump_angle_dJ(J, z)) < 1e-7


def test_jump_radius_factor():
    assert_allclose(jump_radius_factor(4.0, 0.0), 0.5, rtol=1e-14)
    assert_allclose(jump_radius_factor(4.0, np.pi / 2), 2.0, rtol=1e-14)
    th = np.linspace(0.0, 2 * np.pi, 64)
    assert_allclose(jump_radius_factor(1.0, th), np.ones_like(th), rtol=1e-14)
    rho = jump_radius_factor(3.0, th)
    assert np.all(rho <= np.sqrt(3.0) + 1e-12)
    assert np.all(rho >= 1.0 / np.sqrt(3.0) - 1e-12)


def test_jump_domain_errors():
    with pytest.raises(DomainError):
        jump_angle(0.0, 1.0)
    with pytest.raises(DomainError):
        jump_angle(-1.0, 1.0)
    with pytest.raises(DomainError):
        jump_radius_factor(0.0, 1.0)


# -- Prüfer advance ----------------------------------------------------------------


def test_constant_piece_is_exact_rotation():
    st0 = PruferState(0.0, 1.0)
    out = prufer_advance(1.0, np.pi / 2, st0, x_span=(0.0, 1.0))
    assert out.theta == np.pi / 2 * 1.0  # exact arithmetic, no integration
    assert out.r == 1.0


def test_smooth_piece_matches_dense_reference(smooth_ramp):
    piece = smooth_ramp.pieces[0]
    out = prufer_advance(piece, 1.0, PruferState(0.0, 1.0))
    ref = dense_prufer_angle(piece, 1.0, 0.0, n=40_000)
    assert abs(out.theta - ref) < 1e-9


def test_zeta_positive_along_integration(smooth_ramp):
    piece = smooth_ramp.pieces[0]
    _, zeta = prufer_advance(piece, 2.0, PruferState(0.0, 1.0), zeta=0.0)
    assert zeta > 0.0


def test_prufer_state_round_trip():
    st0 = PruferState.from_solution(0.7, -0.3, 1.7)
    phi, psi = st0.solution(1.7)
    assert_allclose([phi, psi], [0.7, -0.3], rtol=1e-14)


def test_prufer_advance_misuse(smooth_ramp):
    with pytest.raises(DomainError):
        prufer_advance(1.0, 1.0, PruferState(0.0, 1.0))  # constant needs x_span
    with pytest.raises(DomainError):
        prufer_advance(-1.0, 1.0, PruferState(0.0, 1.0), x_span=(0.0, 1.0))
    with pytest.raises(DomainError):
        PruferState(0.0, r=0.0)


def test_step_underflow_raises(smooth_ramp):
    from puretone.errors import IntegrationError

    piece = smooth_ramp.pieces[0]
    with pytest.raises(IntegrationError):
        prufer_advance(piece, 5.0, PruferState(0.0, 1.0), tol=0.0)


# -- angle across the profile ---------------------------------------------------------


def test_angle_constant_profile():
    prof = PiecewiseConstantProfile([2.0], [3.0])
    for w in (0.3, 1.7):
        assert_allclose(angle_at_ell(prof, w), w * 6.0, rtol=1e-14)


def test_angle_two_level_closed_form(two_level):
    # theta(ell) = omega + h(1/2, omega/2); at omega ~ 1.231 it sits near pi/2
    val = angle_at_ell(two_level, 1.231)
    assert abs(val - np.pi / 2) < 1e-3
    w = 0.9
    assert_allclose(
        angle_at_ell(two_level, w),
        w + np.arctan(0.5 * np.tan(0.5 * w)),
        rtol=1e-14,
    )


def test_angle_monotone_in_omega(rng):
    for _ in range(20):
        prof = random_pwc(rng)
        w = np.sort(rng.uniform(0.05, 20.0, 8))
        th = angle_at_ell(prof, w)
        assert np.all(np.diff(th) > 0.0)


def test_angle_slope_matches_fd(two_level, smooth_jumpy):
    # h large enough that the adaptive integrator's evaluation noise
    # (~1e-9) does not dominate the difference quotient
    h = 1e-3
    for prof in (two_level, smooth_jumpy):
        for w in (0.8, 2.9):
            th, zeta = angle_and_slope_at_ell(prof, w)
            fd = (angle_at_ell(prof, w + h) - angle_at_ell(prof, w - h)) / (2 * h)
            assert abs(zeta - fd) < 1e-5
            assert zeta > 0.0


# -- fundamental matrices ----------------------------------------------------------


def test_single_level_is_pure_rotation():
    prof = PiecewiseConstantProfile([1.0], [1.0])
    for w in (0.37, 2.0, 11.3):
        assert_allclose(fundamental_matrix(prof, w), rotation(w), atol=1e-15)


def test_determinant_property(rng):
    for _ in range(300):
        prof = random_pwc(rng)
        w = rng.uniform(0.05, 30.0)
        psi = fundamental_matrix(prof, w)
        assert abs(np.linalg.det(psi) - 1.0) < 1e-12


def test_pwc_matches_dense_oracle(rng):
    for _ in range(20):
        prof = random_pwc(rng)
        for w in rng.uniform(0.1, 15.0, 3):
            psi = fundamental_matrix(prof, w)
            ref = dense_transfer_pwc(prof, w)
            assert np.max(np.abs(psi - ref)) < 1e-8


def test_matrix_power_equals_literal_loop(rng):
    prof = random_pwc(rng)
    w = 3.7
    assert_allclose(
        dense_transfer_pwc(prof, w, literal=True),
        dense_transfer_pwc(prof, w),
        atol=1e-13,
    )


def test_smooth_matches_dense_oracle(smooth_ramp, smooth_jumpy):
    for prof in (smooth_ramp, smooth_jumpy):
        for w in (0.7, 3.1):
            psi = fundamental_matrix(prof, w)
            ref = dense_transfer_smooth(prof, w, n_total=20_000)
            assert np.max(np.abs(psi - ref)) < 1e-8
            assert abs(np.linalg.det(psi) - 1.0) < 1e-12


def test_composition_consistency_pwc(two_level):
    # split the profile at an interior point of the first level
    left = PiecewiseConstantProfile([1.0], [0.3])
    right = PiecewiseConstantProfile([1.0, 2.0], [0.2, 0.5])
    for w in (0.9, 4.2):
        whole = fundamental_matrix(two_level, w)
        split = fundamental_matrix(right, w) @ fundamental_matrix(left, w)
        assert np.max(np.abs(whole - split)) < 1e-13


def test_composition_consistency_smooth():
    x = np.linspace(0.0, 1.0, 81)
    whole = SmoothProfile((SmoothPiece(x, 1.0 + x),))
    xl = np.linspace(0.0, 0.4, 41)
    xr = np.linspace(0.4, 1.0, 49)
    left = SmoothProfile((SmoothPiece(xl, 1.0 + xl),))
    right_piece = SmoothPiece(xr, 1.0 + xr)
    for w in (1.3, 5.2):
        whole_m = fundamental_matrix(whole, w)
        from puretone.sl_core import _smooth_piece_matrix

        split = _smooth_piece_matrix(right_piece, w) @ fundamental_matrix(left, w)
        assert np.max(np.abs(whole_m - split)) < 1e-8


def test_radius_jump_bounds(rng):
    # r+/r- within [min(sqrt J, 1/sqrt J), max(...)] at every jump
    for _ in range(100):
        J = rng.uniform(0.1, 10.0)
        th = rng.uniform(-8.0, 8.0)
        ratio = float(jump_radius_factor(J, th))
        lo, hi = sorted((np.sqrt(J), 1.0 / np.sqrt(J)))
        assert lo - 1e-12 <= ratio <= hi + 1e-12


def test_sample_solution_continuity(two_level, smooth_jumpy):
    # values at interior jumps are continuous; column matches Psi at ell
    for prof in (two_level, smooth_jumpy):
        x = np.linspace(0.0, 1.0, 257)
        vals = sample_sl_solution(prof, 2.3, (1.0, 0.0), x)
        assert np.all(np.isfinite(vals))
        psi = fundamental_matrix(prof, 2.3)
        assert_allclose(vals[:, -1], psi[:, 0], atol=1e-8)
        assert_allclose(vals[:, 0], [1.0, 0.0], atol=1e-14)
        # no visible discontinuity across the jump at grid resolution
        jump_idx = np.argmin(np.abs(x - 0.5)) if prof is two_level else np.argmin(np.abs(x - 0.4))
        step = np.abs(np.diff(vals, axis=1))
        assert step[:, jump_idx].max() < 10 * np.median(step.max(axis=0))


def test_prufer_reconstruction_satisfies_sl(smooth_ramp):
    # reconstruct (phi, psi) from the Prüfer variables on a dense grid and
    # check the first-order SL residual with 4th-order differences
    piece = smooth_ramp.pieces[0]
    omega = 3.0
    n = 801
    x = np.linspace(0.0, 1.0, n)
    state = PruferState.from_solution(1.0, 0.0, float(piece.sigma(0.0)))
    phi = np.empty(n)
    psi = np.empty(n)
    phi[0], psi[0] = 1.0, 0.0
    for i in range(1, n):
        state = prufer_advance(piece, omega, state, x_span=(x[i - 1], x[i]))
        phi[i], psi[i] = state.solution(float(piece.sigma(x[i])))
    h = x[1] - x[0]
    d = lambda f: (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
    sig = np.asarray(piece.sigma(x))
    r1 = np.max(np.abs(d(phi) + omega * psi[2:-2]))
    r2 = np.max(np.abs(d(psi) - omega * sig[2:-2] ** 2 * phi[2:-2]))
    assert max(r1, r2) < 1e-7


def test_quarter_table():
    for n in range(-3, 9):
        c, s = quarter_cos_sin(n)
        assert_allclose([c, s], [np.cos(n * np.pi / 2), np.sin(n * np.pi / 2)], atol=1e-15)

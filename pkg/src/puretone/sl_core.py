"""Sturm-Liouville engine: Prüfer angle/radius evolution and transfer matrices.

The first-order SL system for a mode of frequency omega,

    phi' = -omega * psi,      psi' = omega * sigma(x)**2 * phi,

is propagated across [0, ell] by its fundamental matrix Psi(x; omega) with
Psi(0) = I and det Psi = 1.  On intervals where sigma is C1 the solution is
represented in modified Prüfer variables

    phi = r * cos(theta) / sqrt(sigma),   psi = r * sqrt(sigma) * sin(theta),

with the scalar angle equation theta' = omega*sigma - (sigma'/2 sigma) sin 2*theta
and the radius quadrature log(r)' = (sigma'/2 sigma) cos 2*theta.  At a jump
of size J = sigma_-/sigma_+ continuity of (phi, psi) gives the angle map
theta_+ = h(J, theta_-) and radius factor rho(J, theta_-).

The angle h carries an explicit integer winding m = floor(z/pi + 1/2), so
theta is continuous and unbounded in omega; eigenfrequencies are the roots of
theta(ell, omega) = k*pi/2 with theta(0) = 0.

For piecewise constant profiles everything reduces to exact products of
rotations R(omega*theta_i) conjugated by the aspect matrices M(sigma_i); no
ODE integration is involved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IntegrationError
from .profile import PiecewiseConstantProfile, SmoothPiece, SmoothProfile

#: maximum |det(Psi) - 1| tolerated after any composition
PSI_DET_TOL = 1e-12

#: phase advance per fixed RK4 substep when sampling smooth SL solutions
_SUBSTEP_PHASE = 0.01

#: default local-error tolerance of the adaptive Prüfer integrator
PRUFER_TOL = 1e-11


# -- small 2x2 helpers ---------------------------------------------------------


def rotation(t) -> np.ndarray:
    c, s = np.cos(t), np.sin(t)
    return np.array([[c, -s], [s, c]])


def aspect_matrix(q) -> np.ndarray:
    """M(q) = diag(1/sqrt(q), sqrt(q)); M(q1*q2) = M(q1) M(q2)."""
    rq = np.sqrt(q)
    return np.array([[1.0 / rq, 0.0], [0.0, rq]])


def quarter_cos_sin(n: int):
    """Exact (cos, sin) of n*pi/2 for integer n."""
    return ((1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0))[n % 4]


# -- jump maps -----------------------------------------------------------------


def _check_jump(J):
    J = np.asarray(J, dtype=float)
    if np.any(J <= 0.0) or not np.all(np.isfinite(J)):
        raise DomainError("jump ratio J must be positive and finite")
    return J


def _split_winding(z):
    z = np.asarray(z, dtype=float)
    m = np.floor(z / np.pi + 0.5)
    return m, z - m * np.pi


def jump_angle(J, z):
    """h(J, z): post-jump Prüfer angle; same quadrant as z, fixes axes."""
    J = _check_jump(J)
    m, w = _split_winding(z)
    return m * np.pi + np.arctan2(J * np.sin(w), np.cos(w))


def jump_angle_dz(J, z):
    """dh/dz = J / (cos^2 w + J^2 sin^2 w) in [min(J,1/J), max(J,1/J)]."""
    J = _check_jump(J)
    _, w = _split_winding(z)
    c, s = np.cos(w), np.sin(w)
    return J / (c * c + J * J * s * s)


def jump_angle_dJ(J, z):
    """dh/dJ = sin w cos w / (cos^2 w + J^2 sin^2 w), zero on the axes."""
    J = _check_jump(J)
    _, w = _split_winding(z)
    c, s = np.cos(w), np.sin(w)
    return s * c / (c * c + J * J * s * s)


def jump_radius_factor(J, theta_minus):
    """rho(J, theta) = sqrt(cos^2/J + J sin^2), the radius jump factor."""
    J = _check_jump(J)
    c, s = np.cos(theta_minus), np.sin(theta_minus)
    return np.sqrt(c * c / J + J * s * s)


# -- Prüfer state and smooth-piece integration ---------------------------------


@dataclass(frozen=True)
class PruferState:
    theta: float
    r: float = 1.0

    def __post_init__(self):
        if not self.r > 0.0:
            raise DomainError("Prüfer radius must be positive")

    @classmethod
    def from_solution(cls, phi, psi, sigma):
        """Angle/radius of a (phi, psi) vector inside a medium of speed sigma."""
        theta = np.arctan2(psi / np.sqrt(sigma), phi * np.sqrt(sigma))
        r = np.sqrt(sigma * phi**2 + psi**2 / sigma)
        return cls(float(theta), float(r))

    def solution(self, sigma):
        """Back to (phi, psi)."""
        return (
            self.r * np.cos(self.theta) / np.sqrt(sigma),
            self.r * np.sqrt(sigma) * np.sin(self.theta),
        )


def _rk4_step(f, x, y, h):
    k1 = f(x, y)
    k2 = f(x + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(x + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(x + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_adaptive(f, x0, x1, y0, tol, h_floor):
    """Step-doubling RK4 with Richardson acceptance; local error target `tol`."""
    span = x1 - x0
    if span <= 0.0:
        return np.asarray(y0, dtype=float)
    x = x0
    y = np.asarray(y0, dtype=float)
    h = span / 16.0
    while x < x1 - 1e-15 * max(1.0, abs(x1)):
        h = min(h, x1 - x)
        big = _rk4_step(f, x, y, h)
        mid = _rk4_step(f, x, y, 0.5 * h)
        two = _rk4_step(f, x + 0.5 * h, mid, 0.5 * h)
        err = float(np.max(np.abs(big - two))) / 15.0
        if err <= tol or h <= h_floor:
            if err > tol and h <= h_floor:
                raise IntegrationError(
                    f"step underflow at x={x:.6g} (h={h:.3g}, err={err:.3g})"
                )
            x += h
            y = two + (two - big) / 15.0
            h *= min(4.0, 0.9 * (tol / err) ** 0.2 if err > 0.0 else 4.0)
        else:
            h = max(h * max(0.1, 0.9 * (tol / err) ** 0.2), h_floor)
    return y


def prufer_advance(piece, omega, state: PruferState, x_span=None, tol=PRUFER_TOL,
                   zeta=None):
    """Advance (theta, r) across one C1 piece.

    `piece` is a SmoothPiece, or a constant sigma (float) with `x_span`
    giving (x0, x1).  For constant sigma the update is the exact rotation
    theta += omega*sigma*dx with r unchanged.  When `zeta` (= d theta/d omega)
    is given, it is advanced alongside and the result is (state, zeta).
    """
    if isinstance(piece, SmoothPiece):
        x0, x1 = (piece.x0, piece.x1) if x_span is None else x_span
        sig, dsig = piece.sigma, piece.dsigma
    else:
        if x_span is None:
            raise DomainError("constant-sigma advance needs an explicit x_span")
        x0, x1 = x_span
        sigma = float(piece)
        if sigma <= 0.0:
            raise DomainError("sigma must be positive")
        dx = x1 - x0
        new = PruferState(state.theta + omega * sigma * dx, state.r)
        if zeta is None:
            return new
        return new, zeta + sigma * dx

    track_zeta = zeta is not None

    def rhs(x, y):
        s = float(sig(x))
        ds = float(dsig(x))
        half = 0.5 * ds / s
        theta = y[0]
        out = np.empty_like(y)
        out[0] = omega * s - half * np.sin(2.0 * theta)
        out[1] = half * np.cos(2.0 * theta)
        if track_zeta:
            out[2] = s - (ds / s) * np.cos(2.0 * theta) * y[2]
        return out

    y0 = [state.theta, np.log(state.r)] + ([zeta] if track_zeta else [])
    h_floor = 1e-9 * max(x1 - x0, 1.0)
    y = _rk4_adaptive(rhs, x0, x1, np.array(y0, dtype=float), tol, h_floor)
    new = PruferState(float(y[0]), float(np.exp(y[1])))
    if track_zeta:
        return new, float(y[2])
    return new


# -- angle across the whole profile ---------------------------------------------


def _pwc_angle_chain(jumps, angles, omega, theta0=0.0, with_slope=False):
    """theta(ell) for a pwc profile; vectorized over omega (and batch axes).

    `jumps` has shape (..., N-1) and `angles` shape (..., N); omega broadcasts
    against the batch shape.  Returns theta or (theta, d theta/d omega).
    """
    omega = np.asarray(omega, dtype=float)
    z = np.broadcast_to(np.asarray(theta0, dtype=float), omega.shape).astype(float)
    dz = np.zeros_like(z)
    n = angles.shape[-1]
    for i in range(n):
        z = z + omega * angles[..., i]
        if with_slope:
            dz = dz + angles[..., i]
        if i < n - 1:
            if with_slope:
                dz = jump_angle_dz(jumps[..., i], z) * dz
            z = jump_angle(jumps[..., i], z)
    if with_slope:
        return z, dz
    return z


def angle_at_ell(profile, omega, theta0=0.0):
    """Prüfer angle theta(ell, omega) with initial angle theta0 at x = 0.

    Strictly increasing in omega.  For piecewise constant profiles this is
    the exact rotation/jump chain and accepts vector omega; smooth pieces
    are integrated adaptively.
    """
    if isinstance(profile, PiecewiseConstantProfile):
        return _pwc_angle_chain(profile.jumps, profile.angles, omega, theta0)
    omega_arr = np.asarray(omega, dtype=float)
    scalar = omega_arr.ndim == 0
    out = np.array(
        [_smooth_angle(profile, float(w), theta0, with_slope=False) for w in np.atleast_1d(omega_arr)]
    )
    return float(out[0]) if scalar else out


def angle_and_slope_at_ell(profile, omega, theta0=0.0):
    """(theta(ell), d theta(ell)/d omega); the slope is positive."""
    if isinstance(profile, PiecewiseConstantProfile):
        return _pwc_angle_chain(profile.jumps, profile.angles, omega, theta0, with_slope=True)
    omega_arr = np.asarray(omega, dtype=float)
    scalar = omega_arr.ndim == 0
    pairs = [_smooth_angle(profile, float(w), theta0, with_slope=True) for w in np.atleast_1d(omega_arr)]
    th = np.array([p[0] for p in pairs])
    ze = np.array([p[1] for p in pairs])
    if scalar:
        return float(th[0]), float(ze[0])
    return th, ze


def _smooth_angle(profile: SmoothProfile, omega, theta0, with_slope):
    state = PruferState(float(theta0), 1.0)
    zeta = 0.0 if with_slope else None
    jumps = profile.jumps
    for i, piece in enumerate(profile.pieces):
        if with_slope:
            state, zeta = prufer_advance(piece, omega, state, zeta=zeta)
        else:
            state = prufer_advance(piece, omega, state)
        if i < len(jumps):
            if with_slope:
                zeta = float(jump_angle_dz(jumps[i], state.theta)) * zeta
            state = PruferState(
                float(jump_angle(jumps[i], state.theta)),
                state.r * float(jump_radius_factor(jumps[i], state.theta)),
            )
    if with_slope:
        return state.theta, zeta
    return state.theta


# -- fundamental (transfer) matrices --------------------------------------------


def _pwc_piece_matrix(sigma, omega, dx):
    """M(sigma) R(omega sigma dx) M(1/sigma), the exact constant-sigma transfer."""
    return aspect_matrix(sigma) @ rotation(omega * sigma * dx) @ aspect_matrix(1.0 / sigma)


def _smooth_piece_matrix(piece: SmoothPiece, omega, tol=PRUFER_TOL):
    """Transfer matrix of one smooth piece from two independent Prüfer runs.

    Columns start from (phi, psi) = (1, 0) and (0, 1); det Psi = 1 holds
    analytically (the Wronskian), so the assembled matrix is projected back
    onto det = 1 to remove integration drift.
    """
    s0 = float(piece.sigma(piece.x0))
    s1 = float(piece.sigma(piece.x1))
    cols = []
    for phi0, psi0 in ((1.0, 0.0), (0.0, 1.0)):
        st = PruferState.from_solution(phi0, psi0, s0)
        st = prufer_advance(piece, omega, st, tol=tol)
        cols.append(st.solution(s1))
    psi_mat = np.array(cols).T
    det = psi_mat[0, 0] * psi_mat[1, 1] - psi_mat[0, 1] * psi_mat[1, 0]
    return psi_mat / np.sqrt(det)


def fundamental_matrix(profile, omega) -> np.ndarray:
    """Psi(ell; omega) with Psi(0) = I and det = 1.

    Continuity of (phi, psi) makes the jump transfer the identity, so the
    full matrix is just the ordered product of per-piece matrices.
    """
    omega = float(omega)
    psi_mat = np.eye(2)
    if isinstance(profile, PiecewiseConstantProfile):
        for sigma, width in zip(profile.sigma_levels, profile.widths):
            psi_mat = _pwc_piece_matrix(sigma, omega, width) @ psi_mat
    else:
        for piece in profile.pieces:
            psi_mat = _smooth_piece_matrix(piece, omega) @ psi_mat
    return psi_mat


def sample_sl_solution(profile, omega, v0, x_grid) -> np.ndarray:
    """Propagate the SL vector v0 = (phi, psi)(0) to every point of x_grid.

    Returns an array of shape (2, len(x_grid)).  x_grid must be sorted and
    inside [0, ell]; values at interior jumps are continuous so either side
    gives the same answer.
    """
    x_grid = np.asarray(x_grid, dtype=float)
    out = np.empty((2, x_grid.size))
    v = np.asarray(v0, dtype=float)
    edges = profile.edges
    omega = float(omega)

    if isinstance(profile, PiecewiseConstantProfile):
        pieces = list(zip(profile.sigma_levels, edges[:-1], edges[1:]))
        for i, (sigma, x0, x1) in enumerate(pieces):
            last = i == len(pieces) - 1
            sel = (x_grid >= x0 - 1e-14) & ((x_grid <= x1 + 1e-14) if last else (x_grid < x1))
            if np.any(sel):
                rq = np.sqrt(sigma)
                w = np.array([v[0] * rq, v[1] / rq])  # M(1/sigma) v
                ang = omega * sigma * (x_grid[sel] - x0)
                c, s = np.cos(ang), np.sin(ang)
                out[0, sel] = (c * w[0] - s * w[1]) / rq
                out[1, sel] = (s * w[0] + c * w[1]) * rq
            v = _pwc_piece_matrix(sigma, omega, x1 - x0) @ v
        return out

    for i, piece in enumerate(profile.pieces):
        last = i == profile.n_pieces - 1
        x0, x1 = piece.x0, piece.x1
        sel = (x_grid >= x0 - 1e-14) & ((x_grid <= x1 + 1e-14) if last else (x_grid < x1))
        targets = np.concatenate((x_grid[sel], [x1]))
        smax = float(np.max(piece.sigma_samples))
        h_max = _SUBSTEP_PHASE / max(omega * smax, 1e-30)

        def rhs(x, y):
            s2 = float(piece.sigma(x)) ** 2
            return np.array([-omega * y[1], omega * s2 * y[0]])

        x_cur = x0
        vals = []
        for xt in targets:
            n_sub = max(1, int(np.ceil((xt - x_cur) / h_max)))
            h = (xt - x_cur) / n_sub
            for _ in range(n_sub):
                v = _rk4_step(rhs, x_cur, v, h)
                x_cur += h
            x_cur = xt
            vals.append(v.copy())
        if np.any(sel):
            out[:, sel] = np.array(vals[:-1]).T
        v = vals[-1]
    return out

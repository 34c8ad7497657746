"""Entropy / wavespeed profiles on [0, ell].

Two concrete kinds:

* :class:`PiecewiseConstantProfile` : N constant levels sigma_1..sigma_N of
  widths L_1..L_N.  All Sturm-Liouville transfer algebra is exact here.
* :class:`SmoothProfile` : piecewise-C1 sigma(x) given per piece as sampled
  arrays with monotone cubic (PCHIP) interpolation, jumps allowed at the
  interior breakpoints.

A profile may carry an equation of state and ambient pressure, in which case
it supports the nonlinear machinery; sigma alone is enough for the linear
(SL) machinery.  Both kinds serialize to the same JSON schema with a "kind"
discriminator, see :func:`profile_to_dict`.

The even 2*ell-periodic extension implied by the tiling construction is never
stored here; only the fundamental interval [0, ell] is represented.  Jumps
exactly at x = 0 or x = ell are not representable, which matches the
continuity required of the extension at those points.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import PchipInterpolator

from .eos import GammaLawEos
from .errors import DomainError

#: relative tolerance for checking sum(L_i) == ell
ELL_RTOL = 1e-12


def _as_positive_array(values, name):
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError(f"{name} must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError(f"{name} must be finite and positive")
    return arr


@dataclass(frozen=True)
class PiecewiseConstantProfile:
    """N wavespeed levels sigma_i on consecutive intervals of width L_i."""

    sigma_levels: np.ndarray
    widths: np.ndarray
    pbar: Optional[float] = None
    eos: Optional[GammaLawEos] = None

    def __post_init__(self):
        sig = _as_positive_array(self.sigma_levels, "sigma_levels")
        wid = _as_positive_array(self.widths, "widths")
        if sig.shape != wid.shape:
            raise DomainError("sigma_levels and widths must have equal length")
        if self.pbar is not None and not self.pbar > 0.0:
            raise DomainError("pbar must be positive")
        object.__setattr__(self, "sigma_levels", sig)
        object.__setattr__(self, "widths", wid)

    @property
    def n_levels(self) -> int:
        return self.sigma_levels.size

    @property
    def ell(self) -> float:
        return float(np.sum(self.widths))

    @property
    def edges(self) -> np.ndarray:
        """Interval edges x_0 = 0 < x_1 < ... < x_N = ell."""
        return np.concatenate(([0.0], np.cumsum(self.widths)))

    @property
    def jumps(self) -> np.ndarray:
        """J_i = sigma_i / sigma_{i+1} at the N-1 interior interfaces."""
        return self.sigma_levels[:-1] / self.sigma_levels[1:]

    @property
    def angles(self) -> np.ndarray:
        """Evolution angles theta_i = sigma_i * L_i."""
        return self.sigma_levels * self.widths

    @property
    def sigma_max(self) -> float:
        return float(np.max(self.sigma_levels))

    def sigma_at(self, x):
        """sigma(x), taking the right limit at interior edges."""
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.edges, x, side="right") - 1, 0, self.n_levels - 1)
        return self.sigma_levels[idx]

    def entropy_factors(self) -> np.ndarray:
        """Per-level entropy factors A_i (requires eos and pbar)."""
        eos, pbar = self.require_eos()
        return eos.factor_from_sigma(pbar, self.sigma_levels)

    def require_eos(self):
        if self.eos is None or self.pbar is None:
            raise DomainError("profile carries no equation of state / ambient pressure")
        return self.eos, self.pbar

    def with_eos(self, eos: GammaLawEos, pbar: float) -> "PiecewiseConstantProfile":
        return PiecewiseConstantProfile(self.sigma_levels, self.widths, pbar=pbar, eos=eos)


@dataclass(frozen=True)
class JumpAngleParams:
    """(J, Theta) parameterization of a piecewise constant profile.

    J_i = sigma_i / sigma_{i+1} are the N-1 interface jumps and
    theta_i = sigma_i * L_i the N evolution angles; together with sigma_1
    these determine the profile exactly.
    """

    jumps: np.ndarray
    angles: np.ndarray

    def __post_init__(self):
        ang = _as_positive_array(self.angles, "angles")
        if np.size(self.jumps) == 0:
            jmp = np.empty(0, dtype=float)
        else:
            jmp = _as_positive_array(self.jumps, "jumps")
        if jmp.size != ang.size - 1:
            raise DomainError("need exactly one angle more than jumps")
        object.__setattr__(self, "jumps", jmp)
        object.__setattr__(self, "angles", ang)


def from_jump_angles(jumps, angles, sigma_1=1.0, pbar=None, eos=None) -> PiecewiseConstantProfile:
    """Profile from (J, Theta): sigma_{i+1} = sigma_i / J_i, L_i = theta_i / sigma_i."""
    params = JumpAngleParams(np.asarray(jumps, dtype=float).reshape(-1), angles)
    if not sigma_1 > 0.0:
        raise DomainError("sigma_1 must be positive")
    sigma = sigma_1 * np.concatenate(([1.0], np.cumprod(1.0 / params.jumps)))
    widths = params.angles / sigma
    return PiecewiseConstantProfile(sigma, widths, pbar=pbar, eos=eos)


def to_jump_angles(profile: PiecewiseConstantProfile) -> JumpAngleParams:
    return JumpAngleParams(profile.jumps, profile.angles)


class SmoothPiece:
    """One C1 piece of a smooth profile: sigma sampled on an x grid."""

    def __init__(self, x, sigma):
        x = np.asarray(x, dtype=float)
        sigma = _as_positive_array(sigma, "sigma samples")
        if x.ndim != 1 or x.size < 2:
            raise DomainError("a smooth piece needs at least two x samples")
        if x.size != sigma.size:
            raise DomainError("x and sigma sample arrays must have equal length")
        if np.any(np.diff(x) <= 0.0):
            raise DomainError("x samples must be strictly increasing")
        self.x = x
        self.sigma_samples = sigma
        self._interp = PchipInterpolator(x, sigma, extrapolate=True)
        self._dinterp = self._interp.derivative()

    @property
    def x0(self) -> float:
        return float(self.x[0])

    @property
    def x1(self) -> float:
        return float(self.x[-1])

    def sigma(self, x):
        return self._interp(x)

    def dsigma(self, x):
        return self._dinterp(x)

    def __eq__(self, other):
        return (
            isinstance(other, SmoothPiece)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.sigma_samples, other.sigma_samples)
        )


@dataclass(frozen=True)
class SmoothProfile:
    """Piecewise C1 profile: contiguous smooth pieces with jumps in between."""

    pieces: tuple
    pbar: Optional[float] = None
    eos: Optional[GammaLawEos] = None

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise DomainError("profile needs at least one piece")
        if abs(pieces[0].x0) > 0.0:
            raise DomainError("first piece must start at x = 0")
        for left, right in zip(pieces[:-1], pieces[1:]):
            if abs(left.x1 - right.x0) > ELL_RTOL * max(1.0, abs(left.x1)):
                raise DomainError("pieces must cover [0, ell] contiguously")
        if self.pbar is not None and not self.pbar > 0.0:
            raise DomainError("pbar must be positive")
        object.__setattr__(self, "pieces", pieces)

    @property
    def n_pieces(self) -> int:
        return len(self.pieces)

    @property
    def ell(self) -> float:
        return self.pieces[-1].x1

    @property
    def edges(self) -> np.ndarray:
        return np.array([p.x0 for p in self.pieces] + [self.ell])

    @property
    def jumps(self) -> np.ndarray:
        """J_i = sigma(x_i-) / sigma(x_i+) at interior breakpoints."""
        return np.array(
            [
                left.sigma_samples[-1] / right.sigma_samples[0]
                for left, right in zip(self.pieces[:-1], self.pieces[1:])
            ]
        )

    @property
    def sigma_max(self) -> float:
        return float(max(np.max(p.sigma_samples) for p in self.pieces))

    def log_sigma_variation(self) -> float:
        """Total variation of log sigma inside the pieces (PCHIP is monotone
        between samples, so the sample-based sum is exact for the interpolant)."""
        return float(
            sum(np.sum(np.abs(np.diff(np.log(p.sigma_samples)))) for p in self.pieces)
        )

    def sigma_at(self, x):
        x = np.asarray(x, dtype=float)
        edges = self.edges
        idx = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, self.n_pieces - 1)
        out = np.empty_like(np.atleast_1d(x), dtype=float)
        flat_idx = np.atleast_1d(idx)
        flat_x = np.atleast_1d(x)
        for i, piece in enumerate(self.pieces):
            mask = flat_idx == i
            if np.any(mask):
                out[mask] = piece.sigma(flat_x[mask])
        return out if x.ndim else float(out[0])

    def require_eos(self):
        if self.eos is None or self.pbar is None:
            raise DomainError("profile carries no equation of state / ambient pressure")
        return self.eos, self.pbar

    def with_eos(self, eos: GammaLawEos, pbar: float) -> "SmoothProfile":
        return SmoothProfile(self.pieces, pbar=pbar, eos=eos)


def constant_profile(sigma, ell, pbar=None, eos=None) -> PiecewiseConstantProfile:
    """Single-level profile, the completely resonant baseline."""
    return PiecewiseConstantProfile([sigma], [ell], pbar=pbar, eos=eos)


def reversed_profile(profile):
    """The profile traversed backwards: sigma_rev(x) = sigma(ell - x).

    Time reflection conjugates forward evolution with evolution through the
    reversed profile, which is what the x-reflection of the tile construction
    uses (the extended entropy is even).
    """
    if isinstance(profile, PiecewiseConstantProfile):
        return PiecewiseConstantProfile(
            profile.sigma_levels[::-1].copy(),
            profile.widths[::-1].copy(),
            pbar=profile.pbar,
            eos=profile.eos,
        )
    ell = profile.ell
    pieces = tuple(
        SmoothPiece((ell - p.x[::-1]), p.sigma_samples[::-1].copy())
        for p in reversed(profile.pieces)
    )
    return SmoothProfile(pieces, pbar=profile.pbar, eos=profile.eos)


# -- quadrature --------------------------------------------------------------


def _adaptive_simpson(f, a, b, tol):
    """Classic adaptive composite Simpson on [a, b]."""

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        if depth > 48 or abs(left + right - whole) < 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) + recurse(
            m, b, fm, frm, fb, right, 0.5 * tol, depth + 1
        )

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    whole = simpson(fa, fm, fb, a, b)
    return recurse(a, b, fa, fm, fb, whole, tol, 0)


def sigma_integral(profile, tol=1e-10) -> float:
    """integral of sigma over [0, ell]; equals sum(theta_i) for pwc profiles."""
    if isinstance(profile, PiecewiseConstantProfile):
        return float(np.sum(profile.angles))
    total = 0.0
    for piece in profile.pieces:
        total += _adaptive_simpson(lambda x: float(piece.sigma(x)), piece.x0, piece.x1, tol)
    return total


# -- serialization ------------------------------------------------------------


def profile_to_dict(profile) -> dict:
    """JSON-ready description; numbers are plain decimal doubles."""
    doc = {"ell": profile.ell}
    if profile.pbar is not None:
        doc["pbar"] = profile.pbar
    if profile.eos is not None:
        doc["eos"] = {"gamma": profile.eos.gamma, "k_ref": profile.eos.k_ref}
    if isinstance(profile, PiecewiseConstantProfile):
        doc["kind"] = "pwc"
        doc["levels"] = [
            {"sigma": float(s), "L": float(w)}
            for s, w in zip(profile.sigma_levels, profile.widths)
        ]
    elif isinstance(profile, SmoothProfile):
        doc["kind"] = "smooth"
        doc["pieces"] = [
            {"x": [float(v) for v in p.x], "sigma": [float(v) for v in p.sigma_samples]}
            for p in profile.pieces
        ]
    else:
        raise DomainError(f"unknown profile type {type(profile)!r}")
    return doc


def profile_from_dict(doc: dict):
    kind = doc.get("kind")
    pbar = doc.get("pbar")
    eos = None
    if "eos" in doc:
        eos = GammaLawEos(gamma=doc["eos"]["gamma"], k_ref=doc["eos"].get("k_ref", 1.0))
    if kind == "pwc":
        widths = np.array([lv["L"] for lv in doc["levels"]], dtype=float)
        sigma = np.empty(widths.size)
        for i, lv in enumerate(doc["levels"]):
            if "sigma" in lv:
                sigma[i] = lv["sigma"]
            elif "A" in lv:
                if eos is None or pbar is None:
                    raise DomainError("entropy-factor levels need eos and pbar in the file")
                sigma[i] = eos.sigma_from_factor(pbar, lv["A"])
            else:
                raise DomainError("each level needs 'sigma' or 'A'")
        profile = PiecewiseConstantProfile(sigma, widths, pbar=pbar, eos=eos)
    elif kind == "smooth":
        pieces = tuple(SmoothPiece(p["x"], p["sigma"]) for p in doc["pieces"])
        profile = SmoothProfile(pieces, pbar=pbar, eos=eos)
    else:
        raise DomainError(f"unknown profile kind {kind!r}")
    if "ell" in doc:
        ell = float(doc["ell"])
        if abs(profile.ell - ell) > ELL_RTOL * max(1.0, abs(ell)) * 1e3:
            raise DomainError(f"declared ell={ell} does not match pieces (got {profile.ell})")
    return profile


def save_profile(profile, path):
    with open(path, "w") as fh:
        json.dump(profile_to_dict(profile), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_profile(path):
    with open(path) as fh:
        return profile_from_dict(json.load(fh))


def profile_hash(profile) -> str:
    """Stable content hash used in run manifests."""
    blob = json.dumps(profile_to_dict(profile), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()

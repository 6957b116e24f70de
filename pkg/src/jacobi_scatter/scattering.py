"""Wronskians, transmission and reflection coefficients, resolvent and edge resonances.

Conventions (fixed by the free operator, where ``T = 1`` and ``R = 0``)::

    W(z)   = W(phi_+(z), phi_-(z))
    W_+(z) = W(phi_-(z), phi_+(1/z)),   W_-(z) = W(phi_+(z), phi_-(1/z))
    T(z)   = (1/z - z) / (2 W(z))
    R_+(z) = W_+(z) / W(z),             R_-(z) = -W_-(z) / W(z)

with the discrete Wronskian ``W(f, g)(n) = a(n-1) (f(n-1) g(n) - g(n-1) f(n))``
evaluated at ``n = 1``.  These are the signs for which the scattering relations
``T phi_+- = R_-+ phi_-+ + phi_-+(1/z)`` hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import comb

from .fourier import FourierSeries, circle_grid, derivative_series
from .jost import jost_kernel, jost_values
from .lattice import JacobiOperator, WindowedKernel

__all__ = [
    "ScatteringData",
    "ResonanceReport",
    "PoleError",
    "wronskian",
    "wronskian_pm",
    "wronskian_series",
    "transmission",
    "reflection",
    "scattering_matrix",
    "scattering_relation_residual",
    "edge_gamma",
    "edge_limit",
    "detect_resonances",
    "resolvent_kernel",
]


class PoleError(ValueError):
    """Raised when the Wronskian vanishes at the requested spectral parameter."""


def _wr(op: JacobiOperator, f, g, site: int):
    """Discrete Wronskian of two solutions given as arrays over sites site-1, site."""
    return op.a(site - 1) * (f[..., 0] * g[..., 1] - g[..., 0] * f[..., 1])


def wronskian(op: JacobiOperator, z, site: int = 1):
    """``W(z) = W(phi_+, phi_-)`` evaluated at the given site (default ``n = 1``)."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("the Wronskian is not defined at z = 0")
    p = jost_values(op, 1, z, site - 1, site)
    m = jost_values(op, -1, z, site - 1, site)
    w = _wr(op, p, m, site)
    return w if w.ndim else complex(w)


def wronskian_pm(op: JacobiOperator, z, site: int = 1):
    """``(W_+(z), W_-(z))`` for ``|z| = 1``."""
    z = np.asarray(z, dtype=complex)
    zi = 1.0 / z
    p, m = jost_values(op, 1, z, site - 1, site), jost_values(op, -1, z, site - 1, site)
    pi, mi = jost_values(op, 1, zi, site - 1, site), jost_values(op, -1, zi, site - 1, site)
    return _wr(op, m, pi, site), _wr(op, p, mi, site)


def _reflect(f: FourierSeries) -> FourierSeries:
    """Series of ``f(1/z)``."""
    return FourierSeries(f.coefficients[::-1], -(f.stop - 1))


def wronskian_series(op: JacobiOperator) -> dict:
    """``W``, ``W_+`` and ``W_-`` as exact Laurent polynomials in ``z``."""
    pp = {n: jost_kernel(op, 1, n).series() for n in (0, 1)}
    mm = {n: jost_kernel(op, -1, n).series() for n in (0, 1)}
    a0 = op.a(0)
    W = a0 * (pp[0] * mm[1] - mm[0] * pp[1])
    Wp = a0 * (mm[0] * _reflect(pp[1]) - _reflect(pp[0]) * mm[1])
    Wm = a0 * (pp[0] * _reflect(mm[1]) - _reflect(mm[0]) * pp[1])
    return {"W": W.trimmed(), "W_plus": Wp.trimmed(), "W_minus": Wm.trimmed()}


def transmission(op: JacobiOperator, z):
    """``T(z)`` straight from the Wronskian; ``z`` must avoid zeros of ``W``."""
    z = np.asarray(z, dtype=complex)
    return (1.0 / z - z) / (2.0 * wronskian(op, z))


def reflection(op: JacobiOperator, z):
    """``(R_+(z), R_-(z))`` straight from the Wronskians, ``|z| = 1``."""
    W = wronskian(op, z)
    Wp, Wm = wronskian_pm(op, z)
    return Wp / W, -Wm / W


def edge_gamma(op: JacobiOperator, z_hat: int, window: int | None = None):
    """Least-squares ratio of ``phi_+(z_hat, .)`` to ``phi_-(z_hat, .)``.

    Returns ``(gamma, residual)`` where the residual is
    ``max |phi_+ - gamma phi_-| / max |phi_+|`` over the window.
    """
    if window is None:
        window = op.support_radius + 5
    p = jost_values(op, 1, complex(z_hat), -window, window)
    m = jost_values(op, -1, complex(z_hat), -window, window)
    denom = np.sum(m * m)
    gamma = np.sum(p * m) / denom
    resid = float(np.max(np.abs(p - gamma * m)) / np.max(np.abs(p)))
    return complex(gamma), resid


def _resonance_flags(op, W_edge: dict, W_scale: float, tol: float) -> dict:
    return {zh: bool(abs(w) < tol * W_scale) for zh, w in W_edge.items()}


def _exact_edge_values(series: dict, z_hat: int) -> tuple:
    """Limits of ``T``, ``R_+``, ``R_-`` at a resonant edge via ``W'(z_hat)``."""
    dW = complex(derivative_series(series["W"], 1)(z_hat))
    dWp = complex(derivative_series(series["W_plus"], 1)(z_hat))
    dWm = complex(derivative_series(series["W_minus"], 1)(z_hat))
    # d/dz (1/z - z) = -2 at z = +-1
    return -1.0 / dW, dWp / dW, -dWm / dW


@dataclass(frozen=True)
class ScatteringData:
    theta: np.ndarray
    W: np.ndarray
    W_plus: np.ndarray
    W_minus: np.ndarray
    T: np.ndarray
    R_plus: np.ndarray
    R_minus: np.ndarray
    resonance_flags: dict
    gamma: dict = field(default_factory=dict)

    @property
    def z(self) -> np.ndarray:
        return np.exp(1j * self.theta)

    @property
    def grid_size(self) -> int:
        return self.theta.size

    def edge_index(self, z_hat: int) -> int:
        return self.grid_size // 2 if z_hat == 1 else 0

    def unitarity_residual(self) -> tuple[np.ndarray, np.ndarray]:
        """``|T|^2 + |R_+-|^2 - 1`` on the grid."""
        t2 = np.abs(self.T) ** 2
        return t2 + np.abs(self.R_plus) ** 2 - 1.0, t2 + np.abs(self.R_minus) ** 2 - 1.0


def scattering_matrix(op: JacobiOperator, M: int = 512, tol: float = 1e-8) -> ScatteringData:
    """Sample ``T`` and ``R_+-`` on the uniform grid of ``M`` angles in ``[-pi, pi)``.

    At the two grid points with ``sin(theta) = 0`` a non-resonant edge gives
    ``T = 0`` directly; at a resonant edge, where both numerator and
    denominator vanish, the continuous extension is taken from the exact
    Laurent polynomials of the Wronskians (``T(z_hat) = -1/W'(z_hat)``).
    """
    if M < 64 or M % 2:
        raise ValueError(f"grid size must be even and at least 64, got {M}")
    theta = circle_grid(M)
    z = np.exp(1j * theta)
    # exact +-1 at the edges keeps the real structure there
    z[0], z[M // 2] = -1.0, 1.0
    W = wronskian(op, z)
    Wp, Wm = wronskian_pm(op, z)
    edges = {1: M // 2, -1: 0}
    flags = _resonance_flags(op, {zh: W[i] for zh, i in edges.items()}, np.max(np.abs(W)), tol)
    regular = np.ones(M, dtype=bool)
    for zh, i in edges.items():
        if flags[zh]:
            regular[i] = False
    T = np.empty(M, dtype=complex)
    Rp = np.empty(M, dtype=complex)
    Rm = np.empty(M, dtype=complex)
    T[regular] = (1.0 / z[regular] - z[regular]) / (2.0 * W[regular])
    Rp[regular] = Wp[regular] / W[regular]
    Rm[regular] = -Wm[regular] / W[regular]
    for zh, i in edges.items():
        if not flags[zh]:
            T[i] = 0.0
            continue
        series = wronskian_series(op)
        T[i], Rp[i], Rm[i] = _exact_edge_values(series, zh)
    gamma = {zh: edge_gamma(op, zh)[0].real for zh in edges if flags[zh]}
    return ScatteringData(theta, W, Wp, Wm, T, Rp, Rm, flags, gamma)


def scattering_relation_residual(
    op: JacobiOperator,
    M: int = 512,
    window: int = 10,
    data: ScatteringData | None = None,
    relative: bool = False,
) -> float:
    """Largest ``|T phi_+-(z,n) - R_-+ phi_-+(z,n) - phi_-+(1/z,n)|`` over grid and window.

    With ``relative=True`` each grid point is divided by ``max(1, |phi|)``
    there, the attainable float64 scale when ``T`` is tiny and the Jost
    solutions are correspondingly large.
    """
    if data is None:
        data = scattering_matrix(op, M)
    z = data.z.copy()
    z[0], z[data.grid_size // 2] = -1.0, 1.0
    p = jost_values(op, 1, z, -window, window)
    m = jost_values(op, -1, z, -window, window)
    pi = jost_values(op, 1, 1.0 / z, -window, window)
    mi = jost_values(op, -1, 1.0 / z, -window, window)
    T = data.T[:, None]
    r_plus = T * p - data.R_minus[:, None] * m - mi
    r_minus = T * m - data.R_plus[:, None] * p - pi
    if relative:
        size = np.maximum(1.0, np.max(np.abs(np.concatenate([p, m, pi, mi], axis=1)), axis=1))
        r_plus, r_minus = r_plus / size[:, None], r_minus / size[:, None]
    return float(max(np.max(np.abs(r_plus)), np.max(np.abs(r_minus))))


def edge_limit(f, z_hat: int, step: float = 2 * np.pi / 4096, points: int = 8):
    """One-sided polynomial extrapolation of ``f(exp(i theta))`` to ``theta = arg z_hat``.

    ``f`` is evaluated at ``theta_hat + j*step`` for ``j = 1..points`` (last
    axis of its output); the
    Lagrange weights at 0 for the nodes ``1..p`` are ``(-1)^(j+1) C(p, j)``.
    """
    j = np.arange(1, points + 1)
    theta0 = 0.0 if z_hat == 1 else np.pi
    vals = np.asarray(f(np.exp(1j * (theta0 + j * step))))
    w = (-1.0) ** (j + 1) * comb(points, j)
    return np.tensordot(vals, w, axes=(-1, 0))


@dataclass(frozen=True)
class ResonanceReport:
    z_hat: int
    is_resonant: bool
    wronskian_value: complex
    gamma: float | None
    gamma_imag: float | None
    proportionality_residual: float | None
    limits: dict
    identity_residuals: dict
    flagged: bool = False

    @property
    def max_identity_residual(self) -> float:
        return max(self.identity_residuals.values())


def detect_resonances(
    op: JacobiOperator,
    tol: float = 1e-8,
    M: int = 512,
    window: int | None = None,
    step: float | None = None,
) -> dict:
    """Classify the band edges ``z_hat = +-1`` and check the edge identities.

    A resonance is declared when ``|W(z_hat)| < tol * max|W|`` (maximum over
    an ``M``-point grid).  The limiting values of ``T`` and ``R_+-`` are
    obtained by extrapolation along the circle and compared with
    ``T = 2 gamma/(1 + gamma^2)``, ``R_+- = +-(1 - gamma^2)/(1 + gamma^2)`` in the
    resonant case and with ``T = 0``, ``R_+- = -1`` otherwise.

    The default extrapolation step is ``2 pi/4096`` at a resonant edge, where
    ``T`` is a 0/0 quotient and a short step loses digits, and ``1e-6`` at a
    non-resonant edge, where a nearby zero of ``W`` would spoil a long step.
    """
    if window is None:
        window = op.support_radius + 5
    scale = float(np.max(np.abs(wronskian(op, np.exp(1j * circle_grid(M))))))

    def coefficients(z):
        R_plus, R_minus = reflection(op, z)
        return np.stack([transmission(op, z), R_plus, R_minus])

    reports = {}
    for zh in (1, -1):
        w = wronskian(op, complex(zh))
        resonant = abs(w) < tol * scale
        h = step if step is not None else (2 * np.pi / 4096 if resonant else 1e-6)
        T, Rp, Rm = (complex(v) for v in edge_limit(coefficients, zh, h))
        limits = {"T": T, "R_plus": Rp, "R_minus": Rm}
        p = jost_values(op, 1, complex(zh), -window, window)
        m = jost_values(op, -1, complex(zh), -window, window)
        if resonant:
            gamma, prop = edge_gamma(op, zh, window)
            g = gamma.real
            expect = (2 * g / (1 + g * g), (1 - g * g) / (1 + g * g), -(1 - g * g) / (1 + g * g))
            flagged = prop > 1e-8 or not math.isfinite(g)
            gamma_out, gamma_imag = g, abs(gamma.imag)
        else:
            gamma_out = gamma_imag = prop = None
            expect = (0.0, -1.0, -1.0)
            flagged = False
        size = max(np.max(np.abs(p)), np.max(np.abs(m)))
        rel = {
            "scattering_plus": float(np.max(np.abs(T * p - Rm * m - m)) / size),
            "scattering_minus": float(np.max(np.abs(T * m - Rp * p - p)) / size),
        }
        residuals = {
            "T": abs(T - expect[0]),
            "R_plus": abs(Rp - expect[1]),
            "R_minus": abs(Rm - expect[2]),
            **rel,
        }
        reports[zh] = ResonanceReport(
            zh, bool(resonant), complex(w), gamma_out, gamma_imag, prop, limits, residuals, flagged
        )
    return reports


def resolvent_kernel(
    op: JacobiOperator, z: complex, window: int, tol: float = 1e-12
) -> WindowedKernel:
    """Kernel of ``(H - (z + 1/z)/2)^(-1)`` for ``0 < |z| < 1``.

    ``[R(z)](n, k) = phi_+(z, max(n,k)) phi_-(z, min(n,k)) / W(phi_-, phi_+)``;
    note ``W(phi_-, phi_+) = -W(z)``.
    """
    z = complex(z)
    if not 0 < abs(z) < 1:
        raise ValueError("the resolvent kernel needs 0 < |z| < 1")
    W = wronskian(op, z)
    if abs(W) < tol:
        raise PoleError(f"W({z}) = {W} vanishes: z is an eigenvalue parameter")
    p = jost_values(op, 1, z, -window, window)
    m = jost_values(op, -1, z, -window, window)
    n = np.arange(-window, window + 1)
    hi = np.maximum.outer(n, n) + window
    lo = np.minimum.outer(n, n) + window
    return WindowedKernel(float("nan"), window, -p[hi] * m[lo] / W)

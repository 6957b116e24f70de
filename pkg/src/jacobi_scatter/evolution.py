"""Time evolution ``exp(-itH)`` on the absolutely continuous subspace.

Two independent engines compute the propagator kernel on an observation
window: exact diagonalisation of a large finite section (ground truth) and
the oscillatory integral over the unit circle built from Jost solutions and
the transmission coefficient.  The module also provides the resonance
projectors, the leading large-time term, special-function checks, van der
Corput constants and power-law fits of norm decay.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special
from scipy.linalg import eigh_tridiagonal
from scipy.stats import linregress

from .fourier import FourierSeries, circle_grid
from .jost import jost_values
from .lattice import JacobiOperator, NormKind, WindowedKernel, kernel_norm, truncate_bands
from .scattering import edge_gamma, scattering_matrix, wronskian_series

__all__ = [
    "TruncationError",
    "NotResonantError",
    "QuadratureError",
    "QuadratureWarning",
    "oscillatory_quadrature",
    "PropagatorRequest",
    "localization_margin",
    "default_truncation",
    "SpectralDecomposition",
    "spectral_decomposition",
    "propagator_spectral",
    "propagator_oscillatory",
    "propagator",
    "ProjectorKernel",
    "resonance_projector",
    "leading_term",
    "SpecialFunctionCheck",
    "bessel_struve_leading",
    "struve_y0_difference",
    "VdcReport",
    "vdc_bound_check",
    "DecayFit",
    "fit_power_law",
    "window_policy",
    "decay_fit",
    "num_threads",
]

MARGIN = 20
BAND_TOL = 1e-9
Q_MIN, Q_MAX = 64, 2**16


class TruncationError(ValueError):
    """Raised when the finite section is too small for the requested time."""


class NotResonantError(ValueError):
    """Raised when a projector is requested at a non-resonant band edge."""


class QuadratureWarning(RuntimeWarning):
    """Issued when the circle quadrature reaches its size cap before settling."""


class QuadratureError(RuntimeError):
    """Raised when the circle quadrature does not settle under grid doubling."""

    def __init__(self, message: str, kernel: WindowedKernel | None = None):
        super().__init__(message)
        self.kernel = kernel


def num_threads() -> int:
    """Worker cap from ``JS_NUM_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("JS_NUM_THREADS", "1")))
    except ValueError:
        return 1


def required_truncation(N_obs: int, t: float) -> int:
    return N_obs + math.ceil(abs(t)) + MARGIN


def localization_margin(op: JacobiOperator, tol: float = 1e-12) -> int:
    """Sites needed for every eigenvector to decay below ``tol``.

    Eigenvalues correspond to zeros ``z`` of the Wronskian inside the unit
    disk and their eigenvectors decay like ``|z|^|n|``.  An eigenvalue close
    to the band edge has a long tail which a short finite section clips,
    corrupting the band part of the propagator.
    """
    W = wronskian_series(op)["W"]
    if W.coefficients.size < 2:
        return 0
    roots = np.roots(W.coefficients[::-1])
    inside = np.abs(roots)[np.abs(roots) < 1.0 - 1e-12]
    if inside.size == 0:
        return 0
    return math.ceil(math.log(tol) / math.log(float(np.max(inside))))


def default_truncation(op: JacobiOperator, N_obs: int, t: float) -> int:
    """``N_obs + ceil(|t|) + 20``, widened to hold every eigenvector tail."""
    return max(
        required_truncation(N_obs, t), N_obs + localization_margin(op), op.support_radius
    )


@dataclass(frozen=True)
class PropagatorRequest:
    """Parameters of one propagator evaluation.

    ``N_trunc`` must be at least ``N_obs + ceil(|t|) + 20`` for the spectral
    method; by default it is also widened by :func:`localization_margin`.
    ``Q`` is the starting quadrature size of the oscillatory method.
    """

    op: JacobiOperator
    t: float
    N_obs: int
    method: str = "spectral"
    Q: int | None = None
    N_trunc: int | None = None

    def __post_init__(self):
        if self.method not in ("spectral", "oscillatory"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.N_obs < 0:
            raise ValueError("N_obs must be nonnegative")
        if self.method == "spectral":
            need = max(required_truncation(self.N_obs, self.t), self.op.support_radius)
            if self.N_trunc is None:
                object.__setattr__(self, "N_trunc", default_truncation(self.op, self.N_obs, self.t))
            elif self.N_trunc < need:
                raise TruncationError(
                    f"N_trunc={self.N_trunc} is below N_obs + ceil(t) + {MARGIN} = {need}"
                )


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenpairs of the finite section on ``[-N, N]`` with the band filter applied."""

    N: int
    eigenvalues: np.ndarray
    vectors: np.ndarray
    retained: np.ndarray

    @property
    def retained_count(self) -> int:
        return int(np.count_nonzero(self.retained))

    @property
    def side(self) -> int:
        return 2 * self.N + 1

    def kernel(self, t: float, N_obs: int) -> WindowedKernel:
        """``sum_j exp(-it lambda_j) psi_j(n) psi_j(k)`` over retained pairs."""
        if N_obs > self.N:
            raise TruncationError(f"window {N_obs} exceeds the truncation {self.N}")
        rows = slice(self.N - N_obs, self.N + N_obs + 1)
        V = self.vectors[rows][:, self.retained]
        lam = self.eigenvalues[self.retained]
        re = (V * np.cos(t * lam)) @ V.T
        im = (V * np.sin(t * lam)) @ V.T
        return WindowedKernel(float(t), N_obs, re - 1j * im)


def spectral_decomposition(op: JacobiOperator, N: int, band_tol: float = BAND_TOL):
    d, e = truncate_bands(op, N)
    lam, vec = eigh_tridiagonal(d, e)
    keep = np.abs(lam) <= 1.0 + band_tol
    return SpectralDecomposition(N, lam, vec, keep)


def propagator_spectral(
    req: PropagatorRequest, decomposition: SpectralDecomposition | None = None
) -> WindowedKernel:
    """Propagator kernel from the eigen-decomposition of the finite section.

    A precomputed ``decomposition`` may be passed when it is at least as
    large as ``req.N_trunc``.
    """
    if req.method != "spectral":
        raise ValueError("request is not for the spectral method")
    if decomposition is None:
        decomposition = spectral_decomposition(req.op, req.N_trunc)
    elif decomposition.N < req.N_trunc:
        raise TruncationError(
            f"decomposition on [-{decomposition.N}, {decomposition.N}] is smaller than "
            f"N_trunc={req.N_trunc}"
        )
    return decomposition.kernel(req.t, req.N_obs)


def _oscillatory_sum(op: JacobiOperator, t: float, N: int, Q: int) -> np.ndarray:
    theta = circle_grid(Q)
    z = np.exp(1j * theta)
    z[0], z[Q // 2] = -1.0, 1.0
    T = scattering_matrix(op, Q).T
    p = jost_values(op, 1, z, -N, N)
    m = jost_values(op, -1, z, -N, N)
    w = np.exp(-1j * t * np.cos(theta)) * T / Q
    A = p.T @ (w[:, None] * m)
    # A[n, k] pairs phi_+(n) with phi_-(k); the kernel uses n = max, k = min
    n = np.arange(2 * N + 1)
    return A[np.maximum.outer(n, n), np.minimum.outer(n, n)]


def oscillatory_quadrature(
    req: PropagatorRequest, tol: float = 1e-9, q_max: int = Q_MAX
) -> tuple[WindowedKernel, int, float]:
    """Trapezoid rule with doubling; returns ``(kernel, Q, last_change)``."""
    Q = max(Q_MIN, req.Q or Q_MIN)
    prev = _oscillatory_sum(req.op, req.t, req.N_obs, Q)
    change = math.inf
    while Q < q_max:
        Q *= 2
        cur = _oscillatory_sum(req.op, req.t, req.N_obs, Q)
        change = float(np.max(np.abs(cur - prev)))
        prev = cur
        if change < tol:
            break
    return WindowedKernel(float(req.t), req.N_obs, prev), Q, change


def propagator_oscillatory(
    req: PropagatorRequest, tol: float = 1e-9, q_max: int = Q_MAX, strict: bool = False
) -> WindowedKernel:
    """Propagator kernel from the circle integral with transmission coefficient.

    ``K(n, k) = (1/2pi) int exp(-it cos theta) phi_+(max) phi_-(min) T dtheta``
    by the trapezoid rule, doubling the grid until the entrywise change is
    below ``tol`` or ``Q`` reaches ``q_max``.  Reaching the cap issues a
    :class:`QuadratureWarning` (or raises :class:`QuadratureError` when
    ``strict``); the finest kernel is returned.
    """
    K, Q, change = oscillatory_quadrature(req, tol, q_max)
    if change >= tol:
        msg = f"circle quadrature change {change:.2e} at Q={Q} is above {tol:g}"
        if strict:
            raise QuadratureError(msg, K)
        warnings.warn(msg, QuadratureWarning, stacklevel=2)
    return K


def propagator(req: PropagatorRequest) -> WindowedKernel:
    if req.method == "spectral":
        return propagator_spectral(req)
    return propagator_oscillatory(req)


@dataclass(frozen=True)
class ProjectorKernel:
    """Rank-one edge projector ``P(n, k) = phi(n) phi(k)`` on a window.

    ``residual`` is the largest deviation from ``phi_+(n) phi_-(k) T(z_hat)``.
    """

    z_hat: int
    window: int
    entries: np.ndarray
    residual: float
    gamma: float
    c_plus: float
    edge_solution: np.ndarray = field(repr=False, default=None)

    def as_kernel(self, t: float = float("nan")) -> WindowedKernel:
        return WindowedKernel(t, self.window, self.entries.astype(complex))


def resonance_projector(
    op: JacobiOperator, z_hat: int, window: int = 10, tol: float = 1e-8, M: int = 512
) -> ProjectorKernel:
    """Projector onto the bounded edge solution at a resonant ``z_hat``.

    The edge solution is ``c_+ phi_+(z_hat, .)`` with ``c_+^2 = 2/(1 + gamma^2)``,
    which gives ``|phi(n)|^2 + |phi(-n)|^2 -> 2``.  The second formula uses the
    transmission coefficient at the edge.
    """
    if z_hat not in (1, -1):
        raise ValueError("z_hat must be +1 or -1")
    data = scattering_matrix(op, M, tol)
    if not data.resonance_flags[z_hat]:
        raise NotResonantError(f"z_hat = {z_hat:+d} is not a resonance of this operator")
    gamma, _ = edge_gamma(op, z_hat, max(window, op.support_radius + 5))
    g = gamma.real
    c_plus = math.sqrt(2.0 / (1.0 + g * g))
    p = jost_values(op, 1, complex(z_hat), -window, window).real
    m = jost_values(op, -1, complex(z_hat), -window, window).real
    phi = c_plus * p
    P = np.outer(phi, phi)
    T_edge = data.T[data.edge_index(z_hat)]
    dual = np.outer(p, m) * T_edge
    residual = float(np.max(np.abs(P - dual)))
    return ProjectorKernel(z_hat, window, P, residual, g, c_plus, phi)


def _edge_projectors(op, window, tol=1e-8):
    out = {}
    flags = scattering_matrix(op, 512, tol).resonance_flags
    for zh in (1, -1):
        out[zh] = resonance_projector(op, zh, window, tol).entries if flags[zh] else None
    return out


def leading_term(
    op: JacobiOperator, t: float, window: int, projectors: dict | None = None
) -> WindowedKernel:
    """``exp(-it)/sqrt(-2 pi i t) P_1 + exp(it)/sqrt(2 pi i t) P_-1`` (principal roots).

    Non-resonant edges contribute nothing.  ``projectors`` maps ``+-1`` to
    projector entries (or ``None``) on the same window, to avoid recomputation.
    """
    if t <= 0:
        raise ValueError("the leading term is defined for t > 0")
    if projectors is None:
        projectors = _edge_projectors(op, window)
    root = math.sqrt(2 * math.pi * t)
    coef = {
        1: np.exp(-1j * t) / (root * np.exp(-1j * math.pi / 4)),
        -1: np.exp(1j * t) / (root * np.exp(1j * math.pi / 4)),
    }
    side = 2 * window + 1
    out = np.zeros((side, side), dtype=complex)
    for zh, P in projectors.items():
        if P is not None:
            out += coef[zh] * P
    return WindowedKernel(float(t), window, out)


@dataclass(frozen=True)
class SpecialFunctionCheck:
    t: float
    lhs: complex
    rhs: complex
    bracket: complex

    @property
    def difference(self) -> float:
        return abs(self.lhs - self.rhs)


def _half_period_integral(t: float) -> complex:
    """``(1/2pi) int_{-pi/2}^{pi/2} exp(-it cos theta) dtheta`` by Gauss-Legendre panels."""
    panels = max(4, math.ceil(t / 2))
    x, w = np.polynomial.legendre.leggauss(24)
    edges = np.linspace(-np.pi / 2, np.pi / 2, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    theta = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return complex(np.sum(weights * np.exp(-1j * t * np.cos(theta))) / (2 * np.pi))


def bessel_struve_leading(t: float) -> SpecialFunctionCheck:
    """Compare ``(J0(t) - i H0(t))/2`` with the half-period integral.

    ``bracket`` is the integral minus ``1/(i pi t)`` (``nan`` at ``t = 0``).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    lhs = 0.5 * (special.j0(t) - 1j * special.struve(0, t))
    rhs = _half_period_integral(t)
    bracket = rhs - 1.0 / (1j * math.pi * t) if t > 0 else complex("nan")
    return SpecialFunctionCheck(float(t), complex(lhs), rhs, bracket)


def struve_y0_difference(t: float, method: str = "special") -> float:
    """``H0(t) - Y0(t) - 2/(pi t)``.

    ``method="special"`` uses library special functions, ``"integral"`` the
    representation ``H0 - Y0 = (2/pi) int_0^inf exp(-tu)/sqrt(1 + u^2) du``.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if method == "special":
        diff = special.struve(0, t) - special.y0(t)
    elif method == "integral":
        val, _ = integrate.quad(
            lambda u: np.exp(-t * u) * (1.0 / np.sqrt(1.0 + u * u) - 1.0),
            0.0,
            np.inf,
            epsabs=1e-15,
            epsrel=1e-12,
            limit=200,
        )
        # the subtracted 1 integrates to 1/t, i.e. exactly the 2/(pi t) term
        return float(2.0 / math.pi * val)
    else:
        raise ValueError(f"unknown method {method!r}")
    return float(diff - 2.0 / (math.pi * t))


@dataclass(frozen=True)
class VdcReport:
    """Empirical van der Corput constants ``|I(t)| (m_j t)^(1/j) / ||f||``."""

    j: int
    interval: tuple
    m_j: float
    f_norm: float
    t: np.ndarray
    integrals: np.ndarray
    ratios: np.ndarray
    growth_slope: float
    bounded: bool

    @property
    def constant(self) -> float:
        return float(np.max(self.ratios)) if self.ratios.size else 0.0


def _theta_derivative(v: FourierSeries, j: int) -> FourierSeries:
    return FourierSeries(v.coefficients * (1j * v.indices) ** j, v.start)


def _real_on(v: FourierSeries, theta) -> np.ndarray:
    return np.real(v(np.exp(1j * np.asarray(theta))))


def vdc_bound_check(
    phase: FourierSeries,
    amplitude: FourierSeries,
    j: int,
    interval: tuple,
    t_grid,
    min_derivative: float = 1e-8,
    growth_tol: float = 0.05,
) -> VdcReport:
    """Measure ``sup_t |int_a^b exp(it v) f dtheta| (m_j t)^(1/j) / ||f||``.

    ``phase`` and ``amplitude`` are trigonometric polynomials in ``z = exp(i theta)``;
    the phase must be real on the circle.  The check counts as bounded when
    the log-log growth slope of the ratios is at most ``growth_tol``.
    """
    if j < 1:
        raise ValueError("j must be a positive integer")
    a, b = map(float, interval)
    fine = np.linspace(a, b, 8193)
    m_j = float(np.min(np.abs(_real_on(_theta_derivative(phase, j), fine))))
    if m_j < min_derivative:
        raise ValueError(f"|v^({j})| drops to {m_j:.3g} on the interval; hypothesis violated")
    speed = float(np.max(np.abs(_real_on(_theta_derivative(phase, 1), fine))))
    f_norm = amplitude.wiener_norm
    t = np.asarray(t_grid, dtype=float)
    x, w = np.polynomial.legendre.leggauss(16)
    integrals = np.empty(t.size, dtype=complex)
    for i, ti in enumerate(t):
        # each panel spans at most about half an oscillation
        panels = max(8, math.ceil((b - a) * (ti * speed + 1.0) / math.pi))
        edges = np.linspace(a, b, panels + 1)
        half = np.diff(edges) / 2
        mid = (edges[:-1] + edges[1:]) / 2
        theta = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        vals = np.exp(1j * ti * _real_on(phase, theta)) * amplitude(np.exp(1j * theta))
        integrals[i] = np.sum(weights * vals)
    if f_norm == 0.0:
        ratios = np.zeros(t.size)
    else:
        ratios = np.abs(integrals) * (m_j * t) ** (1.0 / j) / f_norm
    if np.all(ratios > 0) and t.size >= 2:
        slope = float(linregress(np.log(t), np.log(ratios)).slope)
    else:
        slope = 0.0
    return VdcReport(
        j, (a, b), m_j, f_norm, t, integrals, ratios, slope, bool(slope <= growth_tol)
    )


@dataclass(frozen=True)
class DecayFit:
    """Least-squares power law ``norm ~ C t^exponent``.

    ``raw_norms`` are the norms before subtraction of the leading term (equal
    to ``norms`` when nothing is subtracted).
    """

    norm_kind: str
    t: np.ndarray
    norms: np.ndarray
    exponent: float
    stderr: float
    subtract_leading: bool
    raw_norms: np.ndarray | None = None
    windows: np.ndarray | None = None
    spot_check_error: float | None = None
    spot_check_passed: bool | None = None


def fit_power_law(t, y) -> tuple[float, float, float]:
    """Return ``(exponent, stderr, prefactor)`` of a log-log least-squares fit."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 2 or np.any(t <= 0) or np.any(y <= 0):
        raise ValueError("need at least two positive samples")
    r = linregress(np.log(t), np.log(y))
    return float(r.slope), float(r.stderr), float(np.exp(r.intercept))


def window_policy(kind: NormKind | str) -> Callable[[float], int]:
    """Default observation half-width as a function of ``t``.

    The unweighted sup norm is attained near ``|n - k| ~ t``, so the window
    grows with ``t`` to cover that region plus its Airy layer.  Weighted norms
    are evaluated on a fixed window of half-width 10 around the origin.
    """
    if isinstance(kind, str):
        kind = NormKind.parse(kind)
    if kind.kind == "sup":
        return lambda t: math.ceil(t / 2 + 3 * t ** (1 / 3)) + 5
    return lambda t: 10


def decay_fit(
    op: JacobiOperator,
    norm: NormKind | str,
    t_grid,
    subtract_leading: bool = False,
    window: int | Callable[[float], int] | None = None,
    spot_check: bool = False,
    spot_window: int = 10,
    spot_tol: float = 1e-6,
    workers: int | None = None,
) -> DecayFit:
    """Fit the decay exponent of ``||exp(-itH) P_ac (- leading term)||``.

    One finite section, sized for the largest ``t``, serves every time
    point.  With ``spot_check`` the spectral kernel at the largest ``t`` is
    compared with the oscillatory one on ``spot_window``.
    """
    kind = NormKind.parse(norm) if isinstance(norm, str) else norm
    t = np.asarray(sorted(float(x) for x in t_grid))
    if t.size < 2 or t[0] <= 0:
        raise ValueError("need at least two positive times")
    if window is None:
        policy = window_policy(kind)
    elif callable(window):
        policy = window
    else:
        policy = lambda _t, w=int(window): w
    windows = np.array([policy(x) for x in t], dtype=int)
    N = max(default_truncation(op, int(w), x) for w, x in zip(windows, t))
    dec = spectral_decomposition(op, N)
    proj_window = int(windows.max())
    projectors = _edge_projectors(op, proj_window) if subtract_leading else None

    def one(i):
        w = int(windows[i])
        K = dec.kernel(t[i], w)
        raw = kernel_norm(K, kind)
        if not subtract_leading:
            return raw, raw
        trimmed = {
            zh: None if P is None else P[proj_window - w : proj_window + w + 1,
                                         proj_window - w : proj_window + w + 1]
            for zh, P in projectors.items()
        }
        L = leading_term(op, t[i], w, trimmed)
        return kernel_norm(K - L, kind), raw

    workers = workers or num_threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(t.size)))
    else:
        results = [one(i) for i in range(t.size)]
    norms = np.array([r[0] for r in results])
    raw = np.array([r[1] for r in results])
    exponent, stderr, _ = fit_power_law(t, norms)

    err = passed = None
    if spot_check:
        sw = min(spot_window, N)
        req = PropagatorRequest(op, t[-1], sw, "oscillatory")
        osc = propagator_oscillatory(req)
        err = float(np.max(np.abs(dec.kernel(t[-1], sw).entries - osc.entries)))
        passed = err < spot_tol
    return DecayFit(
        str(kind), t, norms, exponent, stderr, subtract_leading, raw, windows, err, passed
    )

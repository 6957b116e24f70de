"""Jost solutions, transformation kernels and the edge auxiliary functions.

For a compactly supported perturbation the Jost solutions are exactly free
beyond the support, ``phi_+(z, n) = z^n`` for ``n > N0`` and
``phi_-(z, n) = z^-n`` for ``n <= -N0``, so both are obtained without any
approximation by running the three-term recurrence into the perturbed region.

The recursion is carried out on the normalised solutions
``phit_+-(z, n) = phi_+-(z, n) z^(-+n)``, which obey

    phit_+(n-1) = ((1 + z^2)/2 - b(n) z) phit_+(n) - a(n) z^2 phit_+(n+1)) / a(n-1)
    phit_-(n+1) = ((1 + z^2)/2 - b(n) z) phit_-(n) - a(n-1) z^2 phit_-(n-1)) / a(n)

The same recursion applied to coefficient arrays gives the polynomials
``phit_+-(., n)``, i.e. the transformation kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fourier import FourierSeries, circle_grid, divided_difference, unit_powers
from .lattice import JacobiOperator

__all__ = [
    "JostSolution",
    "TransformationKernel",
    "KernelBoundReport",
    "ResonanceAuxiliary",
    "jost_values",
    "jost_solution",
    "jost_kernel",
    "verify_kernel_bound",
    "resonance_auxiliary",
    "divided_difference",
]

_SIGN = {"+": 1, "-": -1, 1: 1, -1: -1}


def _side(side) -> int:
    try:
        return _SIGN[side]
    except KeyError:
        raise ValueError(f"side must be '+' or '-', got {side!r}") from None


def jost_values(op: JacobiOperator, side, z, n_min: int, n_max: int, normalized=False):
    """Jost solution ``phi_side(z, n)`` for ``n_min <= n <= n_max``.

    ``z`` may be an array; the result has shape ``z.shape + (n_max - n_min + 1,)``.
    With ``normalized=True`` the values of ``phit = phi z^(-+n)`` are returned.
    """
    s = _side(side)
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise ValueError("the Jost solution is not defined at z = 0")
    if n_max < n_min:
        raise ValueError("empty window")
    N0 = op.support_radius
    # two seed sites at each end inside the free region
    lo = min(n_min, -N0) - 1
    hi = max(n_max, N0 + 1) + 1
    sites = np.arange(lo, hi + 1)
    a = op.a(np.arange(lo - 1, hi + 1))  # a[i] = a(lo - 1 + i)
    b = op.b(sites)
    phit = np.empty(z.shape + (sites.size,), dtype=complex)
    sym = 0.5 * (1.0 + z * z)
    z2 = z * z
    # exactly 1 in the free region, recursion only through the support
    if s == 1:
        free = N0 + 1 - lo
        phit[..., free:] = 1.0
        for i in range(free, 0, -1):
            # i is the index of site n, fill n - 1
            n_a = i + 1  # index of a(n) in the shifted array
            phit[..., i - 1] = (
                (sym - b[i] * z) * phit[..., i] - a[n_a] * z2 * phit[..., i + 1]
            ) / a[n_a - 1]
    else:
        free = -N0 - lo
        phit[..., : free + 1] = 1.0
        for i in range(free, sites.size - 1):
            n_a = i + 1
            phit[..., i + 1] = (
                (sym - b[i] * z) * phit[..., i] - a[n_a - 1] * z2 * phit[..., i - 1]
            ) / a[n_a]
    phit = phit[..., n_min - lo : n_max - lo + 1]
    if normalized:
        return phit
    n = np.arange(n_min, n_max + 1)
    return phit * z[..., None] ** (s * n)


@dataclass(frozen=True)
class JostSolution:
    side: int
    z: complex
    window: int
    values: np.ndarray
    normalized_values: np.ndarray

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.window, self.window + 1)

    def __getitem__(self, n: int) -> complex:
        return self.values[n + self.window]

    def residual(self, op: JacobiOperator) -> float:
        """Largest relative three-term residual over the interior of the window."""
        n = self.sites[1:-1]
        lam = 0.5 * (self.z + 1.0 / self.z)
        v = self.values
        r = op.a(n - 1) * v[:-2] + op.b(n) * v[1:-1] + op.a(n) * v[2:] - lam * v[1:-1]
        scale = np.maximum.reduce([np.abs(v[:-2]), np.abs(v[1:-1]), np.abs(v[2:])])
        scale = np.where(scale > 0, scale, 1.0)
        return float(np.max(np.abs(r) / scale)) if r.size else 0.0


def jost_solution(op: JacobiOperator, side, z: complex, window: int) -> JostSolution:
    s = _side(side)
    if not 0 < abs(z) <= 1 + 1e-12:
        raise ValueError("Jost solutions are computed for 0 < |z| <= 1")
    if window < op.support_radius:
        raise ValueError("window must cover the support of the perturbation")
    z = complex(z)
    phit = jost_values(op, s, z, -window, window, normalized=True)
    n = np.arange(-window, window + 1)
    return JostSolution(s, z, window, phit * z ** (s * n), phit)


@dataclass(frozen=True)
class TransformationKernel:
    """``K_side(n, n + side*j) = shifted[j]``, the coefficients of ``phit_side(., n)``."""

    side: int
    n: int
    shifted: np.ndarray

    @property
    def ells(self) -> np.ndarray:
        return self.n + self.side * np.arange(self.shifted.size)

    @property
    def coefficients(self) -> np.ndarray:
        """``K_side(n, l)`` in the order of :attr:`ells`."""
        return self.shifted

    def K(self, ell: int) -> float:
        j = self.side * (ell - self.n)
        if 0 <= j < self.shifted.size:
            return float(self.shifted[j])
        return 0.0

    def normalized_series(self) -> FourierSeries:
        """``phit_side(z, n)`` as a polynomial in ``z``."""
        return FourierSeries(self.shifted, 0)

    def series(self) -> FourierSeries:
        """``phi_side(z, n)`` as a Laurent polynomial in ``z``."""
        return FourierSeries(self.shifted, self.side * self.n)

    def __call__(self, z):
        return self.series()(z)


def _kernel_polynomials(op: JacobiOperator, s: int, n_min: int, n_max: int) -> dict:
    N0 = op.support_radius
    lo = min(n_min, -N0 - 1)
    hi = max(n_max, N0 + 1)
    one = np.array([1.0])
    polys = {}
    sym = np.array([0.5, 0.0, 0.5])  # (1 + z^2)/2
    if s == 1:
        polys[hi + 1] = one
        polys[hi] = one
        for n in range(hi, lo, -1):
            step = sym - op.b(n) * np.array([0.0, 1.0, 0.0])
            prev = np.convolve(step, polys[n])
            nxt = np.concatenate([[0.0, 0.0], polys[n + 1]]) * op.a(n)
            size = max(prev.size, nxt.size)
            polys[n - 1] = (
                np.pad(prev, (0, size - prev.size)) - np.pad(nxt, (0, size - nxt.size))
            ) / op.a(n - 1)
    else:
        polys[lo - 1] = one
        polys[lo] = one
        for n in range(lo, hi):
            step = sym - op.b(n) * np.array([0.0, 1.0, 0.0])
            cur = np.convolve(step, polys[n])
            prv = np.concatenate([[0.0, 0.0], polys[n - 1]]) * op.a(n - 1)
            size = max(cur.size, prv.size)
            polys[n + 1] = (
                np.pad(cur, (0, size - cur.size)) - np.pad(prv, (0, size - prv.size))
            ) / op.a(n)
    return polys


def _trim(c: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(c != 0.0)
    return c[: nz[-1] + 1] if nz.size else np.zeros(1)


def jost_kernel(op: JacobiOperator, side, n: int) -> TransformationKernel:
    """Transformation kernel ``K_side(n, .)`` by exact polynomial recursion."""
    s = _side(side)
    polys = _kernel_polynomials(op, s, n, n)
    return TransformationKernel(s, n, _trim(polys[n]))


def jost_kernels(op: JacobiOperator, side, n_min: int, n_max: int) -> dict:
    """Kernels for every ``n`` in ``[n_min, n_max]`` from a single recursion."""
    s = _side(side)
    polys = _kernel_polynomials(op, s, n_min, n_max)
    return {n: TransformationKernel(s, n, _trim(polys[n])) for n in range(n_min, n_max + 1)}


def _tail_sums(op: JacobiOperator, s: int, lo: int, hi: int):
    """``q(k) = sum_{m=k}^{s*inf} (|a(m)-1/2| + |b(m)|)`` as a callable."""
    sites = np.arange(lo, hi + 1)
    vals = op.perturbation_size(sites)
    if s == 1:
        cum = np.cumsum(vals[::-1])[::-1]
    else:
        cum = np.cumsum(vals)

    def q(k):
        k = np.asarray(k)
        idx = np.clip(k - lo, 0, sites.size - 1)
        out = cum[idx]
        if s == 1:
            return np.where(k > hi, 0.0, np.where(k < lo, cum[0], out))
        return np.where(k < lo, 0.0, np.where(k > hi, cum[-1], out))

    return q


@dataclass(frozen=True)
class KernelBoundReport:
    """Empirical constants ``C_side(n)`` of the transformation-kernel bound.

    ``ratios[n]`` is the largest ``|K(n, l)| / bound(n, l)`` over all ``l``;
    an entry is infinite when the kernel is nonzero where the bound vanishes.
    """

    side: int
    ratios: dict
    violations: dict

    @property
    def uniform_constant(self) -> float:
        """Largest ``C(n)`` over the scanned ``n`` with ``side*n >= -1``."""
        vals = [c for n, c in self.ratios.items() if self.side * n >= -1]
        return max(vals) if vals else 0.0

    @property
    def satisfied(self) -> bool:
        return math.isfinite(self.uniform_constant)


def verify_kernel_bound(
    op: JacobiOperator, side, n_range, rel_zero: float = 1e-13
) -> KernelBoundReport:
    """Scan ``|K(n, l)| <= C(n) (delta(n,l) + (1 - delta) sum_{k >= floor((n+l)/2)} q(k))``.

    The sum runs towards ``side * infinity``.  Kernel entries below
    ``rel_zero`` (relative to the largest entry) count as zero so that 0/0 is
    reported as satisfied.
    """
    s = _side(side)
    n_range = list(n_range)
    kernels = jost_kernels(op, s, min(n_range), max(n_range))
    N0 = op.support_radius
    q = _tail_sums(op, s, -N0 - 1, N0 + 1)
    ratios, violations = {}, {}
    for n in n_range:
        kern = kernels[n]
        ells = kern.ells
        vals = np.abs(kern.shifted)
        scale = max(1.0, float(np.max(vals)))
        bound = q(np.floor_divide(n + ells, 2))
        bound = np.where(ells == n, 1.0, bound)
        zero = vals <= rel_zero * scale
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(zero, 0.0, vals / bound)
        r = np.where(~zero & (bound == 0), np.inf, r)
        ratios[n] = float(np.max(r)) if r.size else 0.0
        bad = ells[np.isinf(r)]
        if bad.size:
            violations[n] = [int(l) for l in bad]
    return KernelBoundReport(s, ratios, violations)


@dataclass(frozen=True)
class ResonanceAuxiliary:
    """Edge data ``h_side``, ``Psit_side`` and the majorant ``eta_side``.

    ``h`` and ``eta`` map the index ``m`` (``side*m >= 0``) to their values,
    with ``eta(m) = sum_{n >= floor((m+1)/2)} (|a(n)-1/2| + |b(n)|)`` summed
    towards ``side*infinity``.  ``bound_constant`` is the smallest ``C`` with
    ``|h(m)| <= C eta(m)`` over all indices except the first one,
    ``m = (1 + side)/2``.  That index carries a Kronecker term which does not
    decay with the perturbation (``h = +-1`` for the free operator), so its
    value is kept separately in ``boundary``.
    """

    z_hat: int
    side: int
    h: dict
    psi_series: FourierSeries
    eta: dict
    bound_constant: float
    boundary: dict
    factorization_residual: float

    def zeta(self, z):
        return (z - self.z_hat) / z

    def breve_wronskian(self, op: JacobiOperator, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        phi = jost_values(op, self.side, z, 0, 1)
        edge = jost_values(op, self.side, complex(self.z_hat), 0, 1)
        return phi[..., 1] * edge[0] - phi[..., 0] * edge[1]


def resonance_auxiliary(
    op: JacobiOperator, side, z_hat: int, grid_size: int = 512
) -> ResonanceAuxiliary:
    s = _side(side)
    if z_hat not in (1, -1):
        raise ValueError("z_hat must be +1 or -1")
    k0, k1 = jost_kernel(op, s, 0), jost_kernel(op, s, 1)
    edge = jost_values(op, s, complex(z_hat), 0, 1)
    phi0, phi1 = edge[0].real, edge[1].real
    # ells reachable by either kernel, ordered towards side*infinity
    if s == 1:
        ells = np.arange(0, max(k0.ells[-1], k1.ells[-1]) + 1)
    else:
        ells = np.arange(1, min(k0.ells[-1], k1.ells[-1]) - 1, -1)
    K0 = np.array([k0.K(l) for l in ells])
    K1 = np.array([k1.K(l) for l in ells])
    zl = unit_powers(z_hat, ells).real
    # Phi^(k)(m) = sum_{l=m}^{side*inf} K(k,l) z_hat^l, summed from the far end
    Phi0 = np.cumsum((K0 * zl)[::-1])[::-1]
    Phi1 = np.cumsum((K1 * zl)[::-1])[::-1]
    h_all = Phi1 * phi0 - Phi0 * phi1
    first = 1 if s == 1 else 0
    keep = s * ells >= s * first
    h = {int(l): float(v) for l, v in zip(ells[keep], h_all[keep])}
    if not h:
        h = {first: 0.0}
    # Psit(z) = sum_l h(l) (z_hat z)^(s l): coefficient of z^(s l) is h(l) z_hat^l
    coeffs = {s * l: v * unit_powers(z_hat, [l])[0] for l, v in h.items()}
    psi = FourierSeries.from_dict(coeffs)

    N0 = op.support_radius
    q = _tail_sums(op, s, -N0 - 1, N0 + 1)
    # floor((m+1)/2) on both sides; see the class docstring
    eta = {m: float(q(np.floor_divide(m + 1, 2))) for m in h}
    ratio, boundary = 0.0, {first: h.get(first, 0.0)}
    for m, v in h.items():
        if m == first or abs(v) <= 1e-13:
            continue
        ratio = max(ratio, abs(v) / eta[m]) if eta[m] > 0 else math.inf

    z = np.exp(1j * circle_grid(grid_size))
    aux = ResonanceAuxiliary(z_hat, s, h, psi, eta, ratio, boundary, 0.0)
    resid = np.max(np.abs(aux.breve_wronskian(op, z) - aux.zeta(z) * psi(z)))
    return ResonanceAuxiliary(z_hat, s, h, psi, eta, ratio, boundary, float(resid))

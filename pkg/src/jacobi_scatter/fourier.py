"""Functions on the unit circle and their Fourier (Laurent) coefficients.

A :class:`FourierSeries` is a finite Laurent series ``sum_m c(m) z^m`` stored as
a coefficient array plus the index of its first entry.  Series obtained by
sampling remember the grid size ``M`` so that aliasing can be monitored through
``tail_fraction``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CircleFunction",
    "FourierSeries",
    "circle_grid",
    "sample",
    "fourier_coefficients",
    "derivative_series",
    "divided_difference",
    "unit_powers",
]


def circle_grid(M: int) -> np.ndarray:
    """Uniform angles ``theta_j = -pi + 2 pi j / M``, ``j = 0..M-1``."""
    return -np.pi + 2.0 * np.pi * np.arange(M) / M


@dataclass(frozen=True)
class CircleFunction:
    """Samples of a function at ``exp(i theta)`` on the uniform grid of size M."""

    samples: np.ndarray

    @property
    def grid_size(self) -> int:
        return self.samples.shape[-1]

    @property
    def theta(self) -> np.ndarray:
        return circle_grid(self.grid_size)

    @property
    def z(self) -> np.ndarray:
        return np.exp(1j * self.theta)


def sample(f, M: int) -> CircleFunction:
    """Evaluate a callable of ``z`` on the size-``M`` circle grid."""
    z = np.exp(1j * circle_grid(M))
    return CircleFunction(np.asarray(f(z), dtype=complex))


@dataclass(frozen=True)
class FourierSeries:
    """Finite Laurent series with coefficients ``coefficients[i]`` at ``z^(start+i)``."""

    coefficients: np.ndarray
    start: int = 0
    grid_size: int | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "coefficients", np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        )

    @classmethod
    def from_dict(cls, coeffs: dict, grid_size=None) -> "FourierSeries":
        if not coeffs:
            return cls(np.zeros(1), 0, grid_size)
        lo, hi = min(coeffs), max(coeffs)
        c = np.zeros(hi - lo + 1, dtype=complex)
        for m, v in coeffs.items():
            c[m - lo] = v
        return cls(c, lo, grid_size)

    @property
    def stop(self) -> int:
        return self.start + self.coefficients.size

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.start, self.stop)

    def coefficient(self, m: int) -> complex:
        i = m - self.start
        if 0 <= i < self.coefficients.size:
            return complex(self.coefficients[i])
        return 0j

    def as_dict(self, cutoff: float = 0.0) -> dict:
        return {
            int(m): complex(c)
            for m, c in zip(self.indices, self.coefficients)
            if abs(c) > cutoff
        }

    @property
    def wiener_norm(self) -> float:
        return float(np.sum(np.abs(self.coefficients)))

    @property
    def tail_fraction(self) -> float:
        """Share of the Wiener norm carried by ``|m| > M/4``.

        For series without a grid the cut is a quarter of the stored span.
        """
        total = self.wiener_norm
        if total == 0.0:
            return 0.0
        M = self.grid_size if self.grid_size else max(self.coefficients.size, 4)
        tail = np.abs(self.coefficients)[np.abs(self.indices) > M // 4]
        return float(min(1.0, np.sum(tail) / total))

    def __call__(self, z):
        """Evaluate at ``z`` (scalar or array, ``z != 0`` if negative powers occur)."""
        z = np.asarray(z, dtype=complex)
        # Horner in z, then multiply by z**start
        acc = np.zeros_like(z)
        for c in self.coefficients[::-1]:
            acc = acc * z + c
        return acc * z ** self.start if self.start else acc

    def on_grid(self, M: int) -> CircleFunction:
        return sample(self, M)

    def trimmed(self, tol: float = 0.0) -> "FourierSeries":
        nz = np.flatnonzero(np.abs(self.coefficients) > tol)
        if nz.size == 0:
            return FourierSeries(np.zeros(1), 0, self.grid_size)
        return FourierSeries(
            self.coefficients[nz[0] : nz[-1] + 1], self.start + int(nz[0]), self.grid_size
        )

    def shifted(self, k: int) -> "FourierSeries":
        """Multiply by ``z^k``."""
        return FourierSeries(self.coefficients, self.start + k, self.grid_size)

    def __add__(self, other):
        if not isinstance(other, FourierSeries):
            other = FourierSeries([other], 0)
        lo = min(self.start, other.start)
        hi = max(self.stop, other.stop)
        c = np.zeros(hi - lo, dtype=complex)
        c[self.start - lo : self.stop - lo] += self.coefficients
        c[other.start - lo : other.stop - lo] += other.coefficients
        return FourierSeries(c, lo, self.grid_size or other.grid_size)

    __radd__ = __add__

    def __neg__(self):
        return FourierSeries(-self.coefficients, self.start, self.grid_size)

    def __sub__(self, other):
        return self + (-other if isinstance(other, FourierSeries) else -other)

    def __mul__(self, other):
        if isinstance(other, FourierSeries):
            return FourierSeries(
                np.convolve(self.coefficients, other.coefficients),
                self.start + other.start,
                self.grid_size or other.grid_size,
            )
        return FourierSeries(self.coefficients * other, self.start, self.grid_size)

    __rmul__ = __mul__


def fourier_coefficients(samples: CircleFunction | np.ndarray) -> FourierSeries:
    """Coefficients ``c(m)``, ``-M/2 <= m < M/2``, of the sampled function.

    Normalised so that samples of ``z^m`` give ``c(m) = 1``.  The grid must be
    the uniform one of :func:`circle_grid` with ``M`` a power of two.
    """
    if isinstance(samples, CircleFunction):
        samples = samples.samples
    f = np.asarray(samples, dtype=complex)
    if f.ndim != 1:
        raise ValueError("expected a one-dimensional array of samples")
    M = f.size
    if M < 2 or M & (M - 1):
        raise ValueError(f"grid size must be a power of two, got {M}")
    # theta_j = -pi + 2 pi j/M, so exp(-i m theta_j) = (-1)^m exp(-2 pi i m j/M)
    c = np.fft.fft(f) / M
    m = np.fft.fftfreq(M, 1.0 / M).astype(int)
    c = c * np.where(m % 2, -1.0, 1.0)
    order = np.argsort(m)
    return FourierSeries(c[order], int(m[order][0]), M)


def derivative_series(f: FourierSeries, l: int) -> FourierSeries:
    """Series of the ``l``-th derivative in ``z``."""
    if l < 0:
        raise ValueError("derivative order must be nonnegative")
    if l == 0:
        return f
    m = f.indices
    factor = np.ones(m.size)
    for j in range(l):
        factor = factor * (m - j)
    return FourierSeries(f.coefficients * factor, f.start - l, f.grid_size)


def unit_powers(w: complex, m) -> np.ndarray:
    """``w**m`` for integer ``m`` and ``|w| = 1``; exact for ``w = +-1``."""
    m = np.asarray(m, dtype=int)
    if w == 1:
        return np.ones(m.shape, dtype=complex)
    if w == -1:
        return np.where(m % 2, -1.0, 1.0).astype(complex)
    return np.exp(1j * np.angle(w) * m)


def divided_difference(f: FourierSeries, z_hat: complex) -> FourierSeries:
    """Series of ``(f(z) - f(z_hat)) / (z - z_hat)`` for ``|z_hat| = 1``.

    Uses ``(z^l - w^l)/(z - w) = sum_{k<l} z^k w^(l-1-k)`` for ``l > 0`` and the
    mirrored identity for negative powers, so the coefficient of ``z^j`` is
    ``sum_{l>j} c(l) w^(l-1-j)`` for ``j >= 0`` and
    ``-sum_{l<=j} c(l) w^(l-1-j)`` for ``j < 0``.
    """
    w = complex(z_hat)
    if not np.isclose(abs(w), 1.0):
        raise ValueError("z_hat must lie on the unit circle")
    lo, hi = min(f.start, 0), max(f.stop, 1)
    m = np.arange(lo, hi)
    c = np.zeros(m.size, dtype=complex)
    c[f.start - lo : f.stop - lo] = f.coefficients
    scaled = c * unit_powers(w, m)
    j = np.arange(lo, hi - 1)
    out = np.empty(j.size, dtype=complex)
    # tail sums right to left: sum_{l > j} c(l) w^l
    tails = np.concatenate([np.cumsum(scaled[::-1])[::-1], [0.0]])
    heads = np.cumsum(scaled)
    nonneg = j >= 0
    out[nonneg] = tails[j[nonneg] - lo + 1]
    out[~nonneg] = -heads[j[~nonneg] - lo]
    out *= unit_powers(w, -1 - j)
    return FourierSeries(out, lo, f.grid_size)

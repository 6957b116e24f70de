"""Jacobi operators on the integer lattice with compactly supported perturbations.

The background is the free operator ``a(n) = 1/2``, ``b(n) = 0``.  Every
operator stores only the sites where it deviates from the background, so all
sums over the perturbation are finite and exact.

Sequences on a window are plain numpy arrays.  Unless stated otherwise a
window of half-width ``N`` covers the sites ``-N, ..., N`` and entry ``i``
belongs to site ``i - N``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "JacobiOperator",
    "MomentReport",
    "WindowedKernel",
    "NormKind",
    "OperatorSpecError",
    "WindowTooSmallError",
    "apply",
    "moment_norm",
    "truncate",
    "truncate_bands",
    "kernel_norm",
    "load_operator",
    "operator_from_dict",
    "operator_to_dict",
]


class OperatorSpecError(ValueError):
    """Raised for malformed or inconsistent operator specifications."""


class WindowTooSmallError(ValueError):
    """Raised when a sequence does not cover the sites an operation needs."""


def _freeze(pairs, name):
    out = {}
    for n, v in dict(pairs).items():
        if int(n) != n:
            raise OperatorSpecError(f"{name}: lattice index {n!r} is not an integer")
        out[int(n)] = float(v)
    return tuple(sorted(out.items()))


@dataclass(frozen=True)
class JacobiOperator:
    """Free Jacobi operator plus a finite perturbation.

    Parameters
    ----------
    a_pert, b_pert : mapping or sequence of (n, value) pairs
        Off-diagonal and diagonal coefficients at the sites where they differ
        from the background.  Entries equal to the background are dropped.
    support_radius : int, optional
        ``N0`` such that the operator is free for ``|n| > N0``.  Inferred as
        the smallest valid value when omitted.
    """

    a_pert: tuple = ()
    b_pert: tuple = ()
    support_radius: int | None = None
    _a: dict = field(init=False, repr=False, compare=False)
    _b: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = {n: v for n, v in _freeze(self.a_pert, "a") if v != 0.5}
        b = {n: v for n, v in _freeze(self.b_pert, "b") if v != 0.0}
        for n, v in a.items():
            if not (v > 0 and math.isfinite(v)):
                raise OperatorSpecError(f"a({n}) = {v} must be positive and finite")
        for n, v in b.items():
            if not math.isfinite(v):
                raise OperatorSpecError(f"b({n}) = {v} must be finite")
        needed = max((abs(n) for n in (*a, *b)), default=0)
        radius = needed if self.support_radius is None else int(self.support_radius)
        if radius < needed:
            raise OperatorSpecError(
                f"support radius {radius} clips the perturbation (needs {needed})"
            )
        object.__setattr__(self, "a_pert", tuple(sorted(a.items())))
        object.__setattr__(self, "b_pert", tuple(sorted(b.items())))
        object.__setattr__(self, "support_radius", radius)
        object.__setattr__(self, "_a", a)
        object.__setattr__(self, "_b", b)

    @classmethod
    def free(cls) -> "JacobiOperator":
        return cls()

    @property
    def is_free(self) -> bool:
        return not self._a and not self._b

    def a(self, n):
        """Off-diagonal coefficient(s); accepts an int or an integer array."""
        if np.isscalar(n):
            return self._a.get(int(n), 0.5)
        n = np.asarray(n)
        return np.array([self._a.get(int(k), 0.5) for k in n.ravel()]).reshape(n.shape)

    def b(self, n):
        """Diagonal coefficient(s); accepts an int or an integer array."""
        if np.isscalar(n):
            return self._b.get(int(n), 0.0)
        n = np.asarray(n)
        return np.array([self._b.get(int(k), 0.0) for k in n.ravel()]).reshape(n.shape)

    def perturbation_size(self, n):
        """``|a(n) - 1/2| + |b(n)|`` at the site(s) ``n``."""
        return np.abs(self.a(n) - 0.5) + np.abs(self.b(n))

    def perturbed_sites(self) -> list[int]:
        return sorted(set(self._a) | set(self._b))


@dataclass(frozen=True)
class MomentReport:
    sigma: float
    norm: float
    satisfied: bool


@dataclass(frozen=True)
class WindowedKernel:
    """Dense kernel ``K(n, k)`` for ``n, k`` in ``[-window, window]``."""

    t: float
    window: int
    entries: np.ndarray

    def __post_init__(self):
        side = 2 * self.window + 1
        if self.entries.shape != (side, side):
            raise ValueError(
                f"kernel entries have shape {self.entries.shape}, expected {(side, side)}"
            )

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.window, self.window + 1)

    def __getitem__(self, nk):
        n, k = nk
        return self.entries[n + self.window, k + self.window]

    def restrict(self, window: int) -> "WindowedKernel":
        if window > self.window:
            raise WindowTooSmallError(f"cannot restrict window {self.window} to {window}")
        s = slice(self.window - window, self.window + window + 1)
        return WindowedKernel(self.t, window, self.entries[s, s])

    def __sub__(self, other: "WindowedKernel") -> "WindowedKernel":
        if other.window != self.window:
            raise ValueError("kernels live on different windows")
        return WindowedKernel(self.t, self.window, self.entries - other.entries)


def apply(op: JacobiOperator, u, start: int | None = None) -> np.ndarray:
    """Apply ``H`` to a finite sequence.

    ``u[i]`` is the value at site ``start + i``; by default ``u`` is taken to
    be centred at the origin.  The result lives on the inner window, one site
    shorter at each end, because the boundary sites lack a neighbour.
    """
    u = np.asarray(u)
    if u.ndim != 1 or u.size < 3:
        raise WindowTooSmallError("need at least one interior site plus both neighbours")
    if start is None:
        if u.size % 2 == 0:
            raise WindowTooSmallError("a centred window must have odd length")
        start = -(u.size // 2)
    inner = np.arange(start + 1, start + u.size - 1)
    return (
        op.a(inner - 1) * u[:-2]
        + op.b(inner) * u[1:-1]
        + op.a(inner) * u[2:]
    )


def moment_norm(op: JacobiOperator, sigma: float, bound: float = math.inf) -> MomentReport:
    """Weighted ``l^1_sigma`` norm of ``|a - 1/2| + |b|``.

    A compact perturbation has every moment finite; ``satisfied`` compares the
    norm against an optional finite ``bound``.
    """
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    sites = np.array(op.perturbed_sites(), dtype=int)
    if sites.size == 0:
        total = 0.0
    else:
        total = float(np.sum((1.0 + np.abs(sites)) ** sigma * op.perturbation_size(sites)))
    return MomentReport(float(sigma), total, bool(total < bound))


def truncate_bands(op: JacobiOperator, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal and off-diagonal of the Dirichlet finite section on ``[-N, N]``."""
    if N < op.support_radius:
        raise ValueError(
            f"truncation N={N} is smaller than the support radius {op.support_radius}"
        )
    sites = np.arange(-N, N + 1)
    return op.b(sites).astype(float), op.a(sites[:-1]).astype(float)


def truncate(op: JacobiOperator, N: int) -> np.ndarray:
    """Dense symmetric tridiagonal matrix of side ``2N + 1``."""
    d, e = truncate_bands(op, N)
    return np.diag(d) + np.diag(e, 1) + np.diag(e, -1)


_NORM_RE = re.compile(r"^(sup|wsup|w2)(?::?([0-9.eE+-]+))?$")


@dataclass(frozen=True)
class NormKind:
    """Operator norm evaluated on a windowed kernel.

    ``sup`` is the l^1 -> l^inf norm, ``wsup`` the l^1_sigma -> l^inf_{-sigma}
    norm and ``w2`` the l^2_sigma -> l^2_{-sigma} norm.
    """

    kind: str
    sigma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("sup", "wsup", "w2"):
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")

    @classmethod
    def parse(cls, text: str) -> "NormKind":
        """Parse ``sup``, ``wsup2``, ``wsup:1.5`` or ``w2:0.6``."""
        m = _NORM_RE.match(text.strip())
        if not m:
            raise ValueError(f"cannot parse norm kind {text!r}")
        kind, sigma = m.group(1), m.group(2)
        if kind == "sup":
            if sigma is not None:
                raise ValueError("the sup norm takes no weight")
            return cls("sup")
        if sigma is None:
            raise ValueError(f"norm kind {kind!r} needs a weight, e.g. {kind}:2")
        return cls(kind, float(sigma))

    def __str__(self):
        return "sup" if self.kind == "sup" else f"{self.kind}:{self.sigma:g}"


def kernel_norm(K: WindowedKernel, kind: NormKind | str) -> float:
    if isinstance(kind, str):
        kind = NormKind.parse(kind)
    if kind.kind == "sup":
        return float(np.max(np.abs(K.entries)))
    w = (1.0 + np.abs(K.sites)) ** (-kind.sigma)
    weighted = w[:, None] * K.entries * w[None, :]
    if kind.kind == "wsup":
        return float(np.max(np.abs(weighted)))
    return float(np.linalg.norm(weighted, 2))


def operator_from_dict(spec: dict) -> JacobiOperator:
    """Build an operator from ``{"support": N0, "a": [[n, v], ...], "b": [...]}``."""
    if not isinstance(spec, dict):
        raise OperatorSpecError("operator spec must be a JSON object")
    unknown = set(spec) - {"support", "a", "b"}
    if unknown:
        raise OperatorSpecError(f"unknown operator keys: {sorted(unknown)}")
    pairs = {}
    for key in ("a", "b"):
        entries = spec.get(key, [])
        try:
            pairs[key] = [(n, v) for n, v in entries]
        except (TypeError, ValueError) as exc:
            raise OperatorSpecError(f"'{key}' must be a list of [n, value] pairs") from exc
        if len({n for n, _ in pairs[key]}) != len(pairs[key]):
            raise OperatorSpecError(f"'{key}' lists a site twice")
    support = spec.get("support")
    if support is not None and (not isinstance(support, int) or support < 0):
        raise OperatorSpecError("'support' must be a nonnegative integer")
    return JacobiOperator(pairs["a"], pairs["b"], support)


def operator_to_dict(op: JacobiOperator) -> dict:
    return {
        "support": op.support_radius,
        "a": [[n, v] for n, v in op.a_pert],
        "b": [[n, v] for n, v in op.b_pert],
    }


def load_operator(path: str | Path) -> JacobiOperator:
    try:
        spec = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise OperatorSpecError(f"{path}: {exc}") from exc
    return operator_from_dict(spec)

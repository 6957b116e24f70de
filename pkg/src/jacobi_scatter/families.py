"""Reproducible operator families used by tests, the acceptance suite and the CLI."""

from __future__ import annotations

import numpy as np
from scipy.optimize import bisect

from .lattice import JacobiOperator
from .scattering import wronskian

__all__ = ["single_site", "random_compact", "random_family", "tune_resonance", "test_operators"]


def single_site(b: float = 0.0, a: float = 0.5, site: int = 0) -> JacobiOperator:
    return JacobiOperator({site: a}, {site: b})


def random_compact(
    rng: np.random.Generator, max_support: int = 7, amplitude: float = 0.4
) -> JacobiOperator:
    """Random perturbation of every site in ``[-N0, N0]`` with ``N0 <= max_support``.

    ``|a(n) - 1/2|`` and ``|b(n)|`` are drawn uniformly from ``[0, amplitude]``
    with random signs, so ``a(n) > 0`` as long as ``amplitude < 1/2``.
    """
    if not 0 <= amplitude < 0.5:
        raise ValueError("amplitude must lie in [0, 1/2) to keep a(n) positive")
    N0 = int(rng.integers(1, max_support + 1))
    sites = range(-N0, N0 + 1)
    a = {n: 0.5 + amplitude * rng.uniform(-1.0, 1.0) for n in sites}
    b = {n: amplitude * rng.uniform(-1.0, 1.0) for n in sites}
    return JacobiOperator(a, b, N0)


def random_family(seed: int = 2016, count: int = 10, **kwargs) -> list[JacobiOperator]:
    rng = np.random.default_rng(seed)
    return [random_compact(rng, **kwargs) for _ in range(count)]


def tune_resonance(
    b0: float = 0.25, z_hat: int = 1, bracket=(-2.0, 0.0), xtol: float = 1e-15
) -> JacobiOperator:
    """Operator ``b(0) = b0``, ``b(1) = beta`` with ``beta`` bisected so ``W(z_hat) = 0``."""

    def w_edge(beta):
        return wronskian(JacobiOperator({}, {0: b0, 1: beta}), complex(z_hat)).real

    beta = bisect(w_edge, *bracket, xtol=xtol, rtol=4 * np.finfo(float).eps, maxiter=200)
    return JacobiOperator({}, {0: b0, 1: beta})


def test_operators(seed: int = 2016) -> dict:
    """Named operator set: free, three single-site and ten random compact ones."""
    ops = {
        "free": JacobiOperator(),
        "site_b0.5": single_site(b=0.5),
        "site_b-0.3": single_site(b=-0.3),
        "site_a0.7": single_site(a=0.7),
    }
    for i, op in enumerate(random_family(seed)):
        ops[f"random_{i}"] = op
    return ops

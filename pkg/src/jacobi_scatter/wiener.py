"""Empirical membership in the Wiener algebra of absolutely summable Fourier series.

A quantity is declared ``summable`` at derivative order ``l`` when the share
of its Wiener norm carried by the outer quarter of the spectrum does not grow
under grid doubling and is below ``1e-4`` on the largest grid.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .fourier import (
    FourierSeries,
    circle_grid,
    derivative_series,
    divided_difference,
    fourier_coefficients,
)
from .jost import jost_values, resonance_auxiliary
from .lattice import JacobiOperator
from .scattering import scattering_matrix

__all__ = [
    "MembershipRow",
    "MembershipReport",
    "membership_report",
    "quantity_series",
    "verdict",
    "reports_to_rows",
    "reports_to_json",
    "wiener_inverse_check",
    "submultiplicativity_gap",
]

TAIL_THRESHOLD = 1e-4
# tails below this are rounding noise and count as non-increasing
TAIL_FLOOR = 1e-12


@dataclass(frozen=True)
class MembershipRow:
    quantity: str
    l: int
    M: int
    wiener_norm: float
    tail_fraction: float
    verdict: str


@dataclass(frozen=True)
class MembershipReport:
    """Wiener norms and tails of one quantity and its derivatives on several grids.

    ``norms[l][i]`` and ``tails[l][i]`` belong to ``grids[i]``.
    """

    quantity: str
    grids: tuple
    norms: dict
    tails: dict
    verdicts: dict

    @property
    def l_max(self) -> int:
        return max(self.norms)

    @property
    def all_summable(self) -> bool:
        return all(v == "summable" for v in self.verdicts.values())

    def rows(self) -> list[MembershipRow]:
        return [
            MembershipRow(self.quantity, l, M, self.norms[l][i], self.tails[l][i], self.verdicts[l])
            for l in sorted(self.norms)
            for i, M in enumerate(self.grids)
        ]


def verdict(tails, threshold: float = TAIL_THRESHOLD, floor: float = TAIL_FLOOR) -> str:
    """``summable`` if the tails never grow under doubling and end below ``threshold``."""
    tails = np.asarray(tails, dtype=float)
    if not np.all(np.isfinite(tails)):
        return "inconclusive"
    clipped = np.maximum(tails, floor)
    monotone = bool(np.all(np.diff(clipped) <= 0.0))
    return "summable" if monotone and tails[-1] < threshold else "inconclusive"


# coefficients this far below max(1, largest one) are FFT rounding noise
NOISE = 1e-14


def _sampled(values: np.ndarray) -> FourierSeries:
    """Coefficients of the samples with rounding-level entries set to zero.

    Without this, exact polynomials such as ``T = 1`` acquire derivative
    series made purely of amplified noise whose tail share is meaningless.
    The scale is at least 1 so that an identically vanishing quantity, such
    as ``R = 0`` for the free operator, is recognised as zero.
    """
    f = fourier_coefficients(np.asarray(values, dtype=complex))
    c = f.coefficients.copy()
    c[np.abs(c) <= NOISE * max(1.0, np.max(np.abs(c)))] = 0.0
    return FourierSeries(c, f.start, f.grid_size)


def quantity_series(op: JacobiOperator, M: int, sites=(0, 1, 5), edges=(1, -1)) -> dict:
    """Fourier series of every monitored quantity sampled on the ``M``-point grid.

    Keys are quantity names; divided differences at ``z_hat`` carry the suffix
    ``/dd(+1)`` or ``/dd(-1)``.
    """
    z = np.exp(1j * circle_grid(M))
    z[0], z[M // 2] = -1.0, 1.0
    data = scattering_matrix(op, M)
    base = {"T": _sampled(data.T), "R_plus": _sampled(data.R_plus), "R_minus": _sampled(data.R_minus)}
    for s, name in ((1, "phit_plus"), (-1, "phit_minus")):
        vals = jost_values(op, s, z, min(sites), max(sites), normalized=True)
        for n in sites:
            base[f"{name}(n={n})"] = _sampled(vals[:, n - min(sites)])
    for zh in edges:
        for s, name in ((1, "Psit_plus"), (-1, "Psit_minus")):
            aux = resonance_auxiliary(op, s, zh)
            base[f"{name}[{zh:+d}]"] = _sampled(aux.psi_series(z))
    out = dict(base)
    for name, f in base.items():
        for zh in edges:
            out[f"{name}/dd({zh:+d})"] = divided_difference(f, zh)
    return out


def membership_report(
    op: JacobiOperator,
    l_max: int = 2,
    grids=(256, 512, 1024),
    sites=(0, 1, 5),
    moment_order: int | None = None,
) -> list[MembershipReport]:
    """Membership reports for all monitored quantities.

    Derivative orders run to ``l_max`` for the quantities themselves and to
    ``l_max - 1`` for divided differences.  Orders beyond ``moment_order``
    (when given) are reported with an ``inconclusive`` verdict, since the
    hypotheses then give no membership claim.
    """
    grids = tuple(sorted(int(M) for M in grids))
    if len(grids) < 2:
        raise ValueError("need at least two grid sizes to judge tail decay")
    per_grid = [quantity_series(op, M, sites) for M in grids]
    reports = []
    for name in per_grid[0]:
        top = l_max - 1 if "/dd(" in name else l_max
        norms, tails, verdicts = {}, {}, {}
        for l in range(top + 1):
            series = [derivative_series(q[name], l) for q in per_grid]
            norms[l] = [s.wiener_norm for s in series]
            tails[l] = [s.tail_fraction for s in series]
            verdicts[l] = verdict(tails[l])
            if moment_order is not None and l > moment_order:
                verdicts[l] = "inconclusive"
        reports.append(MembershipReport(name, grids, norms, tails, verdicts))
    return reports


def reports_to_rows(reports) -> list[dict]:
    return [asdict(r) for rep in reports for r in rep.rows()]


def reports_to_json(reports) -> str:
    return json.dumps(reports_to_rows(reports), indent=1, sort_keys=True)


def wiener_inverse_check(f: FourierSeries, M: int = 1024) -> tuple[float, float]:
    """Wiener norm of ``1/f`` against the Neumann-series bound ``1/(1 - ||f - 1||)``.

    Returns ``(norm_of_inverse, bound)``; the bound is ``inf`` unless
    ``||f - 1|| < 1``.
    """
    dist = (f - 1.0).wiener_norm
    inv = fourier_coefficients(1.0 / f.on_grid(M).samples)
    bound = 1.0 / (1.0 - dist) if dist < 1.0 else np.inf
    return inv.wiener_norm, bound


def submultiplicativity_gap(f: FourierSeries, g: FourierSeries) -> float:
    """``||fg|| - ||f|| ||g||``, nonpositive up to rounding."""
    return (f * g).wiener_norm - f.wiener_norm * g.wiener_norm

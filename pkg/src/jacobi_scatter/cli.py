"""Command-line front end.

Every command reads an optional JSON config, lets flags override it, writes
plain CSV/JSON into ``--out`` and exits with 0 on success, 1 when a
numerical tolerance is missed and 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import warnings
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .evolution import (
    NotResonantError,
    PropagatorRequest,
    decay_fit,
    propagator_oscillatory,
    propagator_spectral,
    resonance_projector,
    vdc_bound_check,
)
from .families import random_compact, single_site, tune_resonance
from .fourier import FourierSeries
from .lattice import (
    JacobiOperator,
    NormKind,
    OperatorSpecError,
    load_operator,
    operator_from_dict,
    operator_to_dict,
)
from .scattering import detect_resonances, scattering_matrix, scattering_relation_residual
from .wiener import membership_report, reports_to_rows

EXIT_OK, EXIT_TOL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    """Raised for unusable configuration files or flag combinations."""


@dataclass
class ExperimentConfig:
    """Serializable description of one run.

    The operator comes from exactly one of ``operator`` (inline spec),
    ``operator_file``, ``random`` (``{"seed", "max_support", "amplitude"}``)
    or ``family`` (``free``, ``tuned`` or ``site:B`` for a single diagonal
    entry); the default is the free operator.
    """

    operator: dict | None = None
    operator_file: str | None = None
    random: dict | None = None
    family: str | None = None
    grid: int = 512
    grids: list = field(default_factory=lambda: [256, 512, 1024])
    l_max: int = 2
    moment_order: int | None = None
    tol: float | None = None
    tmin: float = 50.0
    tmax: float = 800.0
    tpoints: int = 10
    norm: str = "sup"
    subtract_leading: bool = False
    window: int | None = None
    spot_check: bool = False
    plot: bool = False

    @classmethod
    def from_dict(cls, data: dict, base: Path | None = None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**data)
        if cfg.operator_file and base is not None and not Path(cfg.operator_file).is_absolute():
            cfg.operator_file = str(base / cfg.operator_file)
        cfg.validate()
        return cfg

    def validate(self):
        sources = [s for s in ("operator", "operator_file", "random", "family") if getattr(self, s)]
        if len(sources) > 1:
            raise ConfigError(f"operator given more than once: {sources}")
        if self.grid < 64 or self.grid % 2:
            raise ConfigError("grid must be even and at least 64")
        if len(self.grids) < 2 or any(int(M) & (int(M) - 1) for M in self.grids):
            raise ConfigError("grids must list at least two powers of two")
        if self.l_max < 0:
            raise ConfigError("l_max must be nonnegative")
        if not 0 < self.tmin < self.tmax or self.tpoints < 2:
            raise ConfigError("need 0 < tmin < tmax and tpoints >= 2")
        try:
            NormKind.parse(self.norm)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def build_operator(self) -> JacobiOperator:
        if self.operator is not None:
            return operator_from_dict(self.operator)
        if self.operator_file:
            try:
                return load_operator(self.operator_file)
            except OSError as exc:
                raise ConfigError(f"cannot read operator file: {exc}") from exc
        if self.random is not None:
            opts = dict(self.random)
            seed = opts.pop("seed", 0)
            try:
                return random_compact(np.random.default_rng(seed), **opts)
            except TypeError as exc:
                raise ConfigError(f"bad random operator options: {exc}") from exc
        if self.family:
            if self.family == "free":
                return JacobiOperator()
            if self.family == "tuned":
                return tune_resonance()
            if self.family.startswith("site:"):
                try:
                    return single_site(float(self.family[5:]))
                except ValueError as exc:
                    raise ConfigError(f"bad family {self.family!r}") from exc
            raise ConfigError(f"unknown family {self.family!r}")
        return JacobiOperator()

    def t_grid(self) -> np.ndarray:
        return np.geomspace(self.tmin, self.tmax, self.tpoints)


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1, sort_keys=True) + "\n")


def _complex(z: complex) -> list:
    return [float(z.real), float(z.imag)]


def _write_csv(path: Path, header: list, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_num(v) for v in row])


def cmd_scatter(cfg: ExperimentConfig, out: Path) -> int:
    op = cfg.build_operator()
    tol = cfg.tol if cfg.tol is not None else 1e-10
    data = scattering_matrix(op, cfg.grid)
    up, um = data.unitarity_residual()
    _write_csv(
        out / "scattering.csv",
        ["theta", "T_re", "T_im", "Rp_re", "Rp_im", "Rm_re", "Rm_im", "unitarity_plus", "unitarity_minus"],
        zip(data.theta, data.T.real, data.T.imag, data.R_plus.real, data.R_plus.imag,
            data.R_minus.real, data.R_minus.imag, up, um),
    )
    reports = detect_resonances(op, M=cfg.grid)
    relation = scattering_relation_residual(op, cfg.grid, data=data)
    unitarity = float(max(np.max(np.abs(up)), np.max(np.abs(um))))
    summary = {
        "operator": operator_to_dict(op),
        "grid": cfg.grid,
        "unitarity_max": unitarity,
        "relation_residual": relation,
        "edges": {
            f"{zh:+d}": {
                "resonant": r.is_resonant,
                "wronskian": _complex(r.wronskian_value),
                "gamma": r.gamma,
                "limits": {k: _complex(v) for k, v in r.limits.items()},
                "identity_residuals": r.identity_residuals,
            }
            for zh, r in reports.items()
        },
    }
    _write_json(out / "resonances.json", summary)
    print(f"unitarity {unitarity:.3e}  relation {relation:.3e}  "
          f"resonant +1:{reports[1].is_resonant} -1:{reports[-1].is_resonant}")
    return EXIT_OK if unitarity < tol and relation < tol else EXIT_TOL


def cmd_wiener(cfg: ExperimentConfig, out: Path) -> int:
    op = cfg.build_operator()
    reports = membership_report(op, cfg.l_max, cfg.grids, moment_order=cfg.moment_order)
    rows = reports_to_rows(reports)
    _write_json(out / "membership.json", rows)
    n_ok = sum(r["verdict"] == "summable" for r in rows)
    print(f"{n_ok}/{len(rows)} rows summable")
    return EXIT_OK


_GNUPLOT = """set logscale xy
set xlabel 't'
set ylabel 'norm'
set datafile separator ','
set key top right
plot 'decay.csv' using 1:2 skip 1 with linespoints title 'norm', \\
     'decay.csv' using 1:3 skip 1 with linespoints title 'after subtraction', \\
     {prefactor!r}*x**({exponent!r}) title 'fit'
"""


def cmd_evolve(cfg: ExperimentConfig, out: Path) -> int:
    op = cfg.build_operator()
    tol = cfg.tol if cfg.tol is not None else 1e-6
    t = cfg.t_grid()
    fit = decay_fit(
        op, cfg.norm, t, cfg.subtract_leading, window=cfg.window, spot_check=cfg.spot_check,
        spot_tol=tol,
    )
    _write_csv(out / "decay.csv", ["t", "norm", "norm_after_subtraction"],
               zip(fit.t, fit.raw_norms, fit.norms))
    prefactor = float(np.exp(np.mean(np.log(fit.norms)) - fit.exponent * np.mean(np.log(fit.t))))
    summary = {
        "operator": operator_to_dict(op),
        "norm": fit.norm_kind,
        "subtract_leading": fit.subtract_leading,
        "exponent": fit.exponent,
        "stderr": fit.stderr,
        "prefactor": prefactor,
        "t": [float(x) for x in fit.t],
        "windows": [int(w) for w in fit.windows],
        "spot_check_error": fit.spot_check_error,
    }
    _write_json(out / "fit.json", summary)
    if cfg.plot:
        (out / "decay.gp").write_text(_GNUPLOT.format(prefactor=prefactor, exponent=fit.exponent))
    status = EXIT_OK
    if cfg.spot_check:
        rows = []
        for ti in (t[0], t[len(t) // 2], t[-1]):
            w = 10
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                osc = propagator_oscillatory(PropagatorRequest(op, float(ti), w, "oscillatory"))
            spec = propagator_spectral(PropagatorRequest(op, float(ti), w))
            rows.append((ti, w, float(np.max(np.abs(spec.entries - osc.entries)))))
        _write_csv(out / "agreement.csv", ["t", "window", "max_abs_difference"], rows)
        if max(r[2] for r in rows) >= tol:
            status = EXIT_TOL
    print(f"exponent {fit.exponent:.4f} +- {fit.stderr:.4f} ({fit.norm_kind}"
          f"{', leading term subtracted' if fit.subtract_leading else ''})")
    return status


def cmd_projectors(cfg: ExperimentConfig, out: Path) -> int:
    op = cfg.build_operator()
    tol = cfg.tol if cfg.tol is not None else 1e-8
    window = cfg.window if cfg.window is not None else 10
    result, status = {}, EXIT_OK
    for zh in (1, -1):
        try:
            P = resonance_projector(op, zh, window)
        except NotResonantError:
            result[f"{zh:+d}"] = {"resonant": False}
            continue
        result[f"{zh:+d}"] = {
            "resonant": True,
            "gamma": P.gamma,
            "c_plus": P.c_plus,
            "residual": P.residual,
            "window": window,
            "edge_solution": [float(x) for x in P.edge_solution],
        }
        if P.residual >= tol:
            status = EXIT_TOL
    _write_json(out / "projectors.json", result)
    print(", ".join(f"{k}: {'resonant' if v['resonant'] else 'not resonant'}" for k, v in result.items()))
    return status


def cmd_vdc(cfg: ExperimentConfig, out: Path) -> int:
    phase = FourierSeries([-0.5, 0.0, -0.5], -1)  # -cos(theta)
    one = FourierSeries([1.0])
    t = np.geomspace(1.0, 1e4, 17)
    result, status = {}, EXIT_OK
    for j, interval in ((2, (-math.pi / 4, math.pi / 4)), (3, (math.pi / 4, math.pi / 2))):
        r = vdc_bound_check(phase, one, j, interval, t)
        result[f"C{j}"] = {
            "interval": list(r.interval),
            "m_j": r.m_j,
            "constant": r.constant,
            "growth_slope": r.growth_slope,
            "bounded": r.bounded,
            "t": [float(x) for x in r.t],
            "ratios": [float(x) for x in r.ratios],
        }
        if not r.bounded:
            status = EXIT_TOL
    _write_json(out / "vdc.json", result)
    print(", ".join(f"{k} = {v['constant']:.3f}" for k, v in result.items()))
    return status


COMMANDS = {
    "scatter": cmd_scatter,
    "wiener": cmd_wiener,
    "evolve": cmd_evolve,
    "projectors": cmd_projectors,
    "vdc": cmd_vdc,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="jacobi-scatter",
        description="Scattering data and dispersive decay for Jacobi operators.",
    )
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", type=Path, help="JSON experiment config")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--grid", type=int, help="circle grid size M")
    p.add_argument("--tmin", type=float)
    p.add_argument("--tmax", type=float)
    p.add_argument("--tpoints", type=int)
    p.add_argument("--norm", help="sup, wsup2 or w2:SIGMA")
    p.add_argument("--subtract-leading", action="store_true", default=None)
    p.add_argument("--tol", type=float)
    return p


def load_config(args) -> ExperimentConfig:
    data, base = {}, None
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from exc
        base = args.config.parent
    overrides = {
        "grid": args.grid,
        "tmin": args.tmin,
        "tmax": args.tmax,
        "tpoints": args.tpoints,
        "norm": args.norm,
        "subtract_leading": args.subtract_leading,
        "tol": args.tol,
    }
    if isinstance(data, dict):
        data = {**data, **{k: v for k, v in overrides.items() if v is not None}}
    if args.grid is not None and isinstance(data, dict) and "grids" not in data:
        data["grids"] = [args.grid // 4, args.grid // 2, args.grid]
    try:
        return ExperimentConfig.from_dict(data, base)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        args.out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out)
    except (ConfigError, OperatorSpecError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

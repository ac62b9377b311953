"""``fluxtune`` command: derive, validate, schedule, spectrum, couplings, noise."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

from .. import __version__, hilbert, noise, perturb
from ..errors import FluxtuneError, ParameterError
from ..params import DerivedScales, FluxPoint, derive_scales, validate_params
from ..schedule import Schedule, build_schedule, f_grid, solve_fprime
from .config import ConfigError, RunConfig, config_hash, load_config
from .table import FORMATS, ResultTable, _atomic_write, emit

__all__ = ["SUBCOMMANDS", "run", "main", "worker_count"]

SUBCOMMANDS = ("derive", "validate", "schedule", "spectrum", "couplings", "noise")


def worker_count() -> int:
    """Worker threads: FLUXTUNE_THREADS if set, else the CPU count."""
    raw = os.environ.get("FLUXTUNE_THREADS")
    if raw is None or raw.strip() == "":
        return max(1, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise ParameterError("FLUXTUNE_THREADS", f"expected a positive integer, got {raw!r}") from None
    if n < 1:
        raise ParameterError("FLUXTUNE_THREADS", f"expected a positive integer, got {raw!r}")
    return n


def _pmap(fn, items, workers: int) -> list:
    """Map preserving input order."""
    items = list(items)
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _provenance(cfg: RunConfig, subcommand: str) -> dict:
    return {
        "tool": "fluxtune",
        "version": __version__,
        "subcommand": subcommand,
        "config_hash": config_hash(cfg),
        "engine": cfg.engine,
        "variant": cfg.variant,
        "form": cfg.form,
        "constants": cfg.device.constants,
    }


def _basis(cfg: RunConfig) -> hilbert.BasisSpec:
    return hilbert.build_basis(cfg.truncation.n_fock, cfg.truncation.n_charge)


def _schedule(cfg: RunConfig, s: DerivedScales, workers: int) -> Schedule:
    g = cfg.f_grid
    tol = cfg.tolerances
    return build_schedule(
        s,
        f_grid(g.start, g.stop, g.points),
        cfg.target,
        engine=cfg.engine,
        variant=cfg.variant,
        basis=_basis(cfg),
        form=cfg.form,
        workers=workers,
        regime_thresholds=(tol.regime_negligible, tol.regime_ultrastrong),
    )


def _derive(cfg, s, workers):
    cols = (
        "ec_ghz", "ej_ghz", "eb_ghz", "lambda", "lambda_sq", "lr_prime_nh", "omega0_ghz",
        "omegar_ghz", "omegar_prime_ghz", "omegaj_ghz", "cavity_ghz", "c0_pf", "inductance_bound_uh",
    )
    row = (
        s.ec, s.ej, s.eb, s.lam, s.lam2, s.lr_prime_nH, s.omega0_ghz, s.omegar_ghz,
        s.omegar_prime_ghz, s.omegaJ_ghz, s.cavity_ghz, s.c0_pF, s.inductance_bound_uH,
    )
    return cols, [row], None


def _validate(cfg, s, workers):
    t = cfg.tolerances
    rep = validate_params(s, margin=t.validation_margin, lambda_max=t.lambda_max, ls_nH=t.ls_nH)
    cols = ("check", "value", "limit", "passed", "bound_uh")
    rows = [(c.name, float(c.value), float(c.limit), bool(c.passed), rep.bound_uH) for c in rep.checks]
    return cols, rows, None


def _schedule_cmd(cfg, s, workers):
    sch = _schedule(cfg, s, workers)
    cols = (
        "f", "f_prime", "delta", "delta_e_exact", "delta_e_pert", "g", "g0", "gz", "g_over_wc", "regime",
    )
    rows = [
        (r.f, r.f_prime, r.delta, r.delta_e_exact, r.delta_e_pert, r.g, r.g0, r.gz, r.g_over_wc, r.regime)
        for r in sch.rows
    ]
    return cols, rows, None


def _spectrum(cfg, s, workers):
    sch = _schedule(cfg, s, workers)
    basis = _basis(cfg)

    def job(r):
        sp = hilbert.diagonalize_atom(s, r.flux, basis, cfg.form, n_levels=5)
        pl = perturb.energies(s, r.flux, cfg.variant)
        return (r.f, r.f_prime, *map(float, sp.energies), *map(float, sp.parities),
                pl.e_g, pl.e_e, pl.e_2)

    cols = ("f", "f_prime", *(f"level_{k}" for k in range(5)), *(f"parity_{k}" for k in range(5)),
            "e_g_pert", "e_e_pert", "e_2_pert")
    return cols, _pmap(job, sch.rows, workers), None


def _couplings(cfg, s, workers):
    sch = _schedule(cfg, s, workers)
    cols = (
        "f", "f_prime", "g_exact", "g_pert", "g0_exact", "g0_pert", "gz_exact", "gz_pert",
        "gx_exact", "g_over_wc_exact", "g_over_wc_pert",
    )
    rows = [
        (r.f, r.f_prime, r.g, r.g_pert, r.g0, r.g0_pert, r.gz, r.gz_pert, r.gx, r.g_over_wc,
         r.g_pert / s.cavity_ghz)
        for r in sch.rows
    ]
    return cols, rows, None


NOISE_COLUMNS = (
    "f", "f_prime", "t1_flux_s", "t1_flux_numeric_s", "tphi_flux_s", "tphi_flux_numeric_s",
    "tphi_flux_fd_converged", "tphi_ic_s", "tphi_charge_s", "tphi_charge_numeric_s",
    "charge_guard_closed", "charge_guard_numeric", "charge_fd_converged",
    "e2_minus_ee_closed_ghz", "e2_minus_ee_numeric_ghz",
)


def _noise(cfg, s, workers):
    sch = _schedule(cfg, s, workers)
    env = cfg.noise_env()
    basis = _basis(cfg)

    def job(r):
        flux = r.flux
        lv = hilbert.atom_levels(s, flux, basis, cfg.form)
        fd = noise.flux_dephasing(s, flux, env, "numeric", basis)
        cc = noise.charge_dephasing(s, flux, env, "closed", cfg.variant)
        cn = noise.charge_dephasing(s, flux, env, "numeric", basis=basis, levels=lv)
        row = (
            r.f,
            r.f_prime,
            noise.t1_flux(s, flux, env, "closed", cfg.variant),
            noise.t1_flux(s, flux, env, "numeric", basis=basis, levels=lv),
            noise.tphi_flux(s, flux, env, "closed"),
            fd.seconds,
            fd.converged,
            noise.tphi_ic(s, sch.target, env),
            cc.seconds,
            cn.seconds,
            cc.degenerate,
            cn.degenerate,
            cn.converged,
            cc.e2_minus_ee,
            cn.e2_minus_ee,
        )
        return row, cc, cn

    out = _pmap(job, sch.rows, workers)
    report = noise.charge_target_report(
        [r.f for r in sch.rows], [o[1] for o in out], [o[2] for o in out]
    )
    f_ref = report["target_f_over_pi"] * math.pi
    try:
        fp = solve_fprime(s, f_ref, cfg.target, cfg.engine, cfg.variant, basis, cfg.form)
        report["at_target_f"] = noise.charge_point_diagnostics(
            s, FluxPoint(f_ref, fp), env, cfg.variant, basis
        )
    except FluxtuneError as exc:
        report["at_target_f"] = {"error": str(exc)}
    return NOISE_COLUMNS, [o[0] for o in out], report


_HANDLERS = {
    "derive": _derive,
    "validate": _validate,
    "schedule": _schedule_cmd,
    "spectrum": _spectrum,
    "couplings": _couplings,
    "noise": _noise,
}


def run(subcommand: str, cfg: RunConfig, workers: int = 1) -> tuple[ResultTable, dict | None]:
    """Execute a subcommand; returns the table and, for ``noise``, the charge-target report."""
    if subcommand not in _HANDLERS:
        raise ParameterError("subcommand", f"expected one of {SUBCOMMANDS}, got {subcommand!r}")
    s = derive_scales(cfg.device_params())
    cols, rows, report = _HANDLERS[subcommand](cfg, s, workers)
    table = ResultTable(tuple(cols), tuple(tuple(r) for r in rows), _provenance(cfg, subcommand))
    return table, report


def _apply_overrides(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    upd: dict = {}
    if args.engine is not None:
        upd["engine"] = args.engine
    trunc = {}
    if args.nb is not None:
        trunc["n_fock"] = args.nb
    if args.ncharge is not None:
        trunc["n_charge"] = args.ncharge
    data = cfg.model_dump(mode="json")
    data.update(upd)
    data["truncation"].update(trunc)
    from .config import parse_config

    return parse_config(json.dumps(data))


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fluxtune",
        description="Spectrum, tunable coupling and decoherence of a two-SQUID artificial atom.",
    )
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", required=True, help="JSON config file, or - for stdin")
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.add_argument("--engine", choices=("exact", "perturbative"), default=None)
    p.add_argument("--nb", type=int, default=None, help="oscillator cutoff N_b")
    p.add_argument("--ncharge", type=int, default=None, help="charge cutoff M")
    return p


def _error_json(exc: BaseException) -> str:
    doc: dict = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ConfigError):
        doc["problems"] = exc.problems
    field = getattr(exc, "field", None)
    if field is not None:
        doc["field"] = field
    path = getattr(exc, "path", None)
    if path is not None:
        doc["path"] = path
    return json.dumps(doc, sort_keys=True)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        table, report = run(args.subcommand, cfg, worker_count())
        emit(table, args.format, args.out)
        if report is not None:
            text = json.dumps({"charge_target_report": report}, indent=2, sort_keys=True) + "\n"
            if args.out and args.out != "-":
                _atomic_write(args.out + ".report.json", text)
            else:
                sys.stderr.write(text)
    except (FluxtuneError, ValueError) as exc:
        sys.stderr.write(_error_json(exc) + "\n")
        return 2 if isinstance(exc, (ConfigError, ParameterError)) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

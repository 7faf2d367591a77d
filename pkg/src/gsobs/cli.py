"""Command-line front end.

Each subcommand reads a JSON config, writes CSV/JSON reports into ``--out``
and exits with 0 (success), 2 (config or domain error), 3 (singular
Gramian), 4 (unreliable truncation) or 5 (internal error).  Outputs are
deterministic given the config and seed: floats in CSV use 17 significant
digits, JSON keys are sorted, nothing time-dependent is recorded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .constants import (GSParams, general_up_constant, lebeau_robbiano_schedule, nsv_constants,
                        observability_cost_bound, shubin_indices, specific_up_constant)
from .errors import (DomainError, GSObsError, OverlapViolation, SingularGramianError,
                     TruncationUnreliableError)
from .geometry import (DensityModel, RegionModel, ThicknessProbe, build_cover, classify_balls,
                       coverage_fraction, domain_grid, thickness_estimate, verify_overlap)
from .hermite import HermiteExpansion
from .observability import (build_galerkin, cost_vs_bound_sweep, default_t_grid,
                            dissipation_exponent_fit, spectral_constant_empirical,
                            sqrt_envelope_fit)
from .sequences import (INFINITE, DoubleSequence, SequenceModel, WeightModel, bang_degree,
                        check_hypotheses, denjoy_carleman_diagnostic, gamma_Gamma, log_Gamma)

EXIT_OK, EXIT_DOMAIN, EXIT_SINGULAR, EXIT_TRUNCATION, EXIT_INTERNAL = 0, 2, 3, 4, 5
DEFAULT_SEED = 0


class ConfigError(DomainError):
    """Malformed or incomplete configuration."""


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    v = float(v)
    if math.isinf(v):
        return "INF" if v > 0 else "-INF"
    if math.isnan(v):
        return "NAN"
    return format(v, ".17g")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isinf(v):
            return "INF" if v > 0 else "-INF"
        if math.isnan(v):
            return "NAN"
        return v
    return obj


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, obj):
    atomic_write(path, json.dumps(_jsonable(obj), sort_keys=True, indent=2) + "\n")


def write_csv(path: Path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    atomic_write(path, buf.getvalue())


def _need(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"config is missing required key {key!r}")
    return cfg[key]


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_seq_analyze(cfg: dict, out: Path, seed: int) -> dict:
    P = int(cfg.get("P", 50))
    if "weight" in cfg:
        w = WeightModel.from_dict(cfg["weight"])
        m = SequenceModel.from_weight(w)
        report = check_hypotheses(w, float(cfg.get("s", 1.0)), P)
    else:
        m = SequenceModel.from_dict(_need(cfg, "sequence"))
        report = denjoy_carleman_diagnostic(m, P)
    rows = []
    for t in cfg.get("t_grid", [1.0]):
        for r in cfg.get("r_grid", [1.0]):
            n = bang_degree(m, float(t), float(r))
            rows.append((float(t), float(r), "INF" if n == INFINITE else int(n)))
    write_csv(out / "bang.csv", ["t", "r", "bang"], rows)
    summary = {"qa_report": report.to_dict(), "sequence": m.to_dict()}
    gP = P if m.max_index is None else min(P, m.max_index - 1)
    if report.is_log_convex and gP >= 1:
        summary["gamma_M"] = gamma_Gamma(m, gP)[0]
        summary["log_Gamma_M"] = log_Gamma(m, gP)
    write_json(out / "qa_report.json", summary)
    return summary


def _probe(cfg: dict, seed: int) -> ThicknessProbe:
    p = dict(cfg.get("probe", {}))
    centers = p.pop("centers", None)
    return ThicknessProbe(centers=None if centers is None else np.asarray(centers, dtype=float),
                          lo=float(p.get("lo", -5.0)), hi=float(p.get("hi", 5.0)),
                          count=int(p.get("count", 11)), samples=int(p.get("samples", 10_000)),
                          seed=seed, method=p.get("method", "auto"))


def cmd_thickness(cfg: dict, out: Path, seed: int) -> dict:
    omega = RegionModel.from_dict(_need(cfg, "region"))
    rho = DensityModel.from_dict(cfg.get("density", {"kind": "constant", "params": {"m": 1.0}}))
    rep = thickness_estimate(omega, rho, _probe(cfg, seed))
    d = omega.dim
    rows = [tuple(c) + (r, e) for c, r, e in zip(rep.centers, rep.ratios, rep.std_errors)]
    write_csv(out / "thickness.csv", [f"x{i + 1}" for i in range(d)] + ["ratio", "std_error"], rows)
    summary = {"gamma_hat": rep.gamma_hat, "std_error": rep.std_error, "method": rep.method,
               "samples_per_ball": rep.samples, "label": rep.label,
               "worst_center": rep.centers[rep.worst_index]}
    write_json(out / "thickness.json", summary)
    return summary


def _cover_from(cfg: dict):
    rho = DensityModel.from_dict(cfg.get("density", {"kind": "constant", "params": {"m": 1.0}}))
    dom = _need(cfg, "domain")
    d = int(cfg.get("d", len(np.atleast_1d(dom["lo"]))))
    cover = build_cover(rho, dom["lo"], dom["hi"], d, cfg.get("grid_step"))
    return rho, cover, d


def cmd_cover(cfg: dict, out: Path, seed: int) -> dict:
    rho, cover, d = _cover_from(cfg)
    atomic_write(out / "cover.csv", cover.to_csv())
    summary = {"n_balls": len(cover), "overlap_bound": cover.overlap_bound,
               "lipschitz_L": cover.lipschitz_L, "grid_step": cover.grid_step}
    if len(cover):
        refine = int(cfg.get("verify_refine", 10))
        fine = domain_grid(cover.domain[0], cover.domain[1], cover.grid_step / refine)
        summary["coverage_fraction"] = coverage_fraction(cover, fine)
        try:
            res = verify_overlap(cover, fine)
            summary["max_multiplicity"] = res.max_multiplicity
        except OverlapViolation as exc:
            summary["max_multiplicity"] = exc.multiplicity
            summary["overlap_witness"] = exc.witness
            write_json(out / "cover.json", summary)
            raise
    write_json(out / "cover.json", summary)
    return summary


def _expansion(cfg: dict, seed: int) -> HermiteExpansion:
    spec = _need(cfg, "expansion")
    if "csv" in spec:
        return HermiteExpansion.from_csv(Path(spec["csv"]).read_text())
    d, N = int(spec.get("d", 1)), int(_need(spec, "N"))
    if "alpha" in spec:
        return HermiteExpansion.basis(d, N, spec["alpha"])
    return HermiteExpansion.random(d, N, np.random.default_rng(seed))


def cmd_classify_balls(cfg: dict, out: Path, seed: int) -> dict:
    f = _expansion(cfg, seed)
    rho, cover, d = _cover_from(cfg)
    nseq = DoubleSequence.from_dict(cfg.get("N_seq", {"kind": "constant"}))
    cl = classify_balls(f, cover, float(cfg.get("eps", 1.0)), nseq, int(cfg.get("P", 6)), rho=rho)
    atomic_write(out / "classification.csv", cl.to_csv())
    summary = {"n_good": len(cl.good), "n_bad": len(cl.bad), "K0": cl.K0, "cutoff_P": cl.cutoff,
               "vacuous": cl.vacuous, "label_scope": cl.label_scope, "bad_mass": cl.bad_mass()}
    write_json(out / "classify.json", summary)
    return summary


def _constant_entry(entry: dict) -> dict:
    name = _need(entry, "name")
    if name == "nsv":
        m = SequenceModel.from_dict(_need(entry, "sequence"))
        return nsv_constants(m, float(entry.get("t", 1.0)), float(entry.get("gamma", 1.0)),
                             int(entry.get("d", 1)), float(_need(entry, "diam"))).to_dict()
    if name == "general_up":
        nseq = DoubleSequence.from_dict(_need(entry, "N_seq"))
        rho = DensityModel.from_dict(entry.get("density", {"kind": "constant", "params": {"m": 1.0}}))
        return general_up_constant(nseq, rho, float(entry.get("gamma", 1.0)), int(entry.get("d", 1)),
                                   float(_need(entry, "eps")), float(entry.get("K", 1.0)),
                                   float(entry.get("K_prime", 1.0)), float(entry.get("r", 1.0))).to_dict()
    if name == "specific_up":
        g = GSParams(**_need(entry, "params"))
        return specific_up_constant(g, float(_need(entry, "eps")), float(entry.get("K", 1.0))).to_dict()
    if name == "shubin":
        si = shubin_indices(int(_need(entry, "m")), int(_need(entry, "k")), float(_need(entry, "s")))
        return {"name": "shubin_indices", "nu": si.nu, "mu": si.mu, "delta_star": si.delta_star,
                "note": si.note}
    if name == "observability_cost":
        g = GSParams(**_need(entry, "params"))
        return observability_cost_bound(g, float(_need(entry, "T")), float(entry.get("K", 1.0))).to_dict()
    if name == "lebeau_robbiano":
        sch = lebeau_robbiano_schedule(float(_need(entry, "T")), float(_need(entry, "q")),
                                       float(entry.get("K_prime", 1.0)), float(_need(entry, "r1")),
                                       float(_need(entry, "s")), entry.get("n_terms"))
        return {"name": "lebeau_robbiano_schedule", "q_min": sch.q_min, "terms": len(sch.tau),
                "sum_tau": sch.total, "residual": sch.residual,
                "log_final_constant": sch.log_final_constant}
    raise ConfigError(f"unknown constant calculator {name!r}")


def cmd_constants(cfg: dict, out: Path, seed: int) -> dict:
    entries = _need(cfg, "constants")
    reports = [_constant_entry(e) for e in entries]
    summary = {"reports": reports}
    write_json(out / "constants.json", summary)
    return summary


def cmd_spectral_constant(cfg: dict, out: Path, seed: int) -> dict:
    omega = RegionModel.from_dict(_need(cfg, "region"))
    d = int(cfg.get("d", omega.dim))
    if d != omega.dim:
        raise DomainError(f"region dimension {omega.dim} does not match d = {d}")
    Ns = [int(n) for n in cfg.get("N_values", [int(cfg.get("N", 8))])]
    rows = []
    for N in Ns:
        sc = spectral_constant_empirical(omega, d, N)
        rows.append((N, sc.C_N, sc.lambda_min))
    write_csv(out / "spectral.csv", ["N", "C_N", "lambda_min"], rows)
    summary = {"rows": len(rows)}
    if len(rows) >= 2:
        env = sqrt_envelope_fit([r[0] for r in rows], [math.log(r[1]) for r in rows])
        summary.update({"kappa": env.kappa, "c": env.c, "max_residual": float(env.residuals.max())})
    write_json(out / "spectral.json", summary)
    return summary


SWEEP_COLUMNS = ["T", "N", "nt", "C_T_empirical", "C_T_stability_delta", "log_bound_fitted",
                 "K_fitted", "margin"]


def cmd_obs_sweep(cfg: dict, out: Path, seed: int) -> dict:
    region = RegionModel.from_dict(_need(cfg, "region"))
    res = cost_vs_bound_sweep(
        int(cfg.get("m", 1)), int(cfg.get("k", 1)), float(cfg.get("s", 1.0)), int(_need(cfg, "d")),
        int(_need(cfg, "N")), region, _need(cfg, "T_grid"), nt=int(cfg.get("nt", 32)),
        mu=float(cfg.get("mu", 0.5)), nu=float(cfg.get("nu", 0.5)), delta=float(cfg.get("delta", 0.0)),
        r1=cfg.get("r1"), truncation_check=bool(cfg.get("truncation_check", False)))
    rows = [(r.T, r.N, r.nt, r.C_T, r.delta, r.log_bound, r.K, r.margin) for r in res.rows]
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
    summary = {
        "fitted_constants": {"K": res.K, "r1": res.r1},
        "exponent": res.exponent,
        "min_margin": None if res.K is None else min(r.margin for r in res.rows),
        "truncation_delta": res.truncation_delta,
        "citations": ["K exp(K / T^(2 r1/(1 - mu - delta nu)))"],
        "notes": res.notes,
    }
    write_json(out / "sweep.json", summary)
    return summary


def cmd_dissipation_fit(cfg: dict, out: Path, seed: int) -> dict:
    d, N = int(cfg.get("d", 1)), int(_need(cfg, "N"))
    G = build_galerkin(int(cfg.get("m", 1)), int(cfg.get("k", 1)), d, N)
    orders = cfg.get("orders") or [[[0] * d, [0] * d], [[1] + [0] * (d - 1), [0] * d],
                                   [[0] * d, [1] + [0] * (d - 1)], [[2] + [0] * (d - 1), [0] * d]]
    tg = cfg.get("t_grid") or default_t_grid(N).tolist()
    fit = dissipation_exponent_fit(G, float(cfg.get("s", 1.0)), orders, tg)
    rows = [(";".join(map(str, a)), ";".join(map(str, b)), t, y) for a, b, t, y in fit.samples]
    write_csv(out / "dissipation.csv", ["alpha", "beta", "t", "log_norm"], rows)
    summary = {"C": fit.C, "r1": fit.r1, "r2": fit.r2}
    write_json(out / "dissipation.json", summary)
    return summary


COMMANDS = {
    "seq-analyze": cmd_seq_analyze,
    "thickness": cmd_thickness,
    "cover": cmd_cover,
    "classify-balls": cmd_classify_balls,
    "constants": cmd_constants,
    "spectral-constant": cmd_spectral_constant,
    "obs-sweep": cmd_obs_sweep,
    "dissipation-fit": cmd_dissipation_fit,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gsobs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gsobs {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, required=True, help="JSON config file")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=int, default=None, help="64-bit seed (overrides config)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (recorded)")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, SingularGramianError):
        return EXIT_SINGULAR
    if isinstance(exc, TruncationUnreliableError):
        return EXIT_TRUNCATION
    if isinstance(exc, (DomainError, OverlapViolation, KeyError, TypeError, ValueError,
                        json.JSONDecodeError, FileNotFoundError)):
        return EXIT_DOMAIN
    return EXIT_INTERNAL


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out: Path = args.out
    try:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
        seed = args.seed if args.seed is not None else int(cfg.get("seed", DEFAULT_SEED))
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        summary = COMMANDS[args.command](cfg, out, seed)
        effective = dict(cfg, seed=seed)
        write_json(out / "run.json", {"command": args.command, "config": effective, "seed": seed,
                                      "threads": args.threads, "version": __version__,
                                      "status": "ok", "summary": summary})
        return EXIT_OK
    except Exception as exc:  # noqa: BLE001 - every failure becomes an exit code
        code = _exit_code(exc)
        payload = {"command": args.command, "exit_code": code, "error": type(exc).__name__,
                   "message": str(exc)}
        if isinstance(exc, GSObsError) and getattr(exc, "witness", None) is not None:
            payload["witness"] = exc.witness
        try:
            write_json(out / "error.json", payload)
        except OSError:
            pass
        print(f"gsobs {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return code


def main():
    sys.exit(run())

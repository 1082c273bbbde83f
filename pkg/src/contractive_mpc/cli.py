"""Command-line entry point: ``contractive-mpc <command> [--config F] [--seed S] [--out-dir D]``.

Exit codes: 0 success, 2 configuration error, 3 infeasible problem or failed
verification, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np
import pydantic

from .config import ExperimentConfig, load_config
from .costs import QuadStageCost, QuadTerminalCost
from .errors import (DareDivergenceError, DegenerateTerminalSetError, IllPosedError,
                     InfeasibleError, NumericOverflowError)
from .mpc import MpcConfig, MpcCosts, run_closed_loop
from .osvf import CERTIFY_TOL, ClfCertificate, TerminalSet, osvf_matrix, verify_clf
from .synthesis import (BmiOptions, dare_residual, firstorder_qmin, grid_of, lqr_gain, max_level_in_box,
                        region_sweep, size_terminal_alpha, solve_dare, synth_terminal_bmi)
from .systems import BoxSet, linearize

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_NUMERIC = 0, 2, 3, 4


class CommandFailed(Exception):
    """A command ran but its result is infeasible or unverified."""


def _clean(obj):
    """Make numpy values JSON-safe; non-finite floats become ``null``."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def load_schema(name: str) -> dict:
    return json.loads(resources.files(__package__).joinpath("schemas", f"{name}.json").read_text())


def write_json(path: Path, payload: dict, schema: Optional[str] = None) -> dict:
    payload = _clean(payload)
    if schema is not None:
        jsonschema.validate(payload, load_schema(schema))
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return payload


class _Setup:
    """Objects shared by the system-level commands."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.sys = cfg.system.build()
        self.lin = linearize(self.sys, np.zeros(self.sys.n), np.zeros(self.sys.m))
        self.Q = np.array(cfg.weights.Q, dtype=float)
        self.R = np.array(cfg.weights.R, dtype=float)
        self.X = cfg.constraints.X()
        self.U = cfg.constraints.U()
        self.X_or_free = self.X if self.X is not None else BoxSet.symmetric([np.inf] * self.sys.n)


def certify(setup: _Setup, P, alpha: Optional[float], n_samples: int, seed: int) -> tuple[ClfCertificate, Optional[float]]:
    """Build the OSVF of ``P`` and run the sampled CLF check on ``Omega(alpha)``.

    ``alpha=None`` sizes the level first (needs a state box); when no level
    passes sizing, the largest set inside the box is checked instead so that
    a certificate with its failing witness is still produced.
    """
    o = osvf_matrix(setup.lin, setup.Q, setup.R, P)
    w = np.linalg.eigvalsh(o.M_P)
    if w[0] <= CERTIFY_TOL:
        return ClfCertificate(float(w[0]), float(w[-1]), float("nan"), 0, False,
                              reason="M_P is not positive definite"), None
    if alpha is None:
        if setup.X is None:
            raise ValueError("a state box or an explicit verify.alpha is required")
        try:
            alpha = size_terminal_alpha(setup.sys, o.M_P, setup.X, setup.U, o.K_os)
        except DegenerateTerminalSetError:
            alpha = max_level_in_box(o.M_P, setup.X)
    cert = verify_clf(setup.sys, o, TerminalSet(o.M_P, alpha), setup.X_or_free, setup.U,
                      n_samples=n_samples, seed=seed)
    return cert, alpha


def cmd_dare(cfg: ExperimentConfig, out: Path, seed: int) -> dict:
    s = _Setup(cfg)
    P = solve_dare(s.lin, s.Q, s.R)
    res = dare_residual(s.lin, s.Q, s.R, P)
    return write_json(out / "dare.json", {"P": P, "K": lqr_gain(s.lin, s.R, P),
                                          "residual_inf": float(np.max(np.abs(res)))})


def cmd_region1d(cfg: ExperimentConfig, out: Path, seed: int) -> dict:
    rc = cfg.region
    q = grid_of(*rc.q_range, rc.step)
    p = grid_of(*rc.p_range, rc.step)
    cases = []
    with open(out / "region1d.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["a", "b", "q", "r", "p", "proposed", "conventional"])
        for a in rc.a_values:
            for r in rc.r_values:
                sw = region_sweep(a, rc.b, r, q, p)
                for i, qi in enumerate(q):
                    for j, pj in enumerate(p):
                        w.writerow([a, rc.b, qi, r, pj, int(sw.proposed[i, j]), int(sw.conventional[i, j])])
                bnd = sw.boundary()
                cases.append({
                    "a": a, "b": rc.b, "r": r, "points": int(sw.proposed.size),
                    "proposed": int(sw.proposed.sum()), "conventional": int(sw.conventional.sum()),
                    "overlap": sw.overlap, "q_min": float(firstorder_qmin(a, rc.b, r)),
                    "max_boundary_gap": max((abs(b["p_sup_grid"] - b["p_star"]) for b in bnd), default=None),
                    "boundary": bnd,
                })
    return write_json(out / "region1d_summary.json", {"step": rc.step, "cases": cases}, "region_summary")


def cmd_synth(cfg: ExperimentConfig, out: Path, seed: int) -> dict:
    s = _Setup(cfg)
    sc = cfg.synth
    cand = synth_terminal_bmi(s.lin, s.Q, s.R, BmiOptions(sc.margin, sc.p_scale, sc.max_rounds, sc.max_iter))
    payload = cand.to_json()
    write_json(out / "synth.json", payload, "synthesis")
    if not cand.feasible:
        write_json(out / "synth_diagnostics.json", cand.diagnostics)
        raise CommandFailed(f"BMI synthesis infeasible (min_eig={cand.min_eig:.3g})")
    cert, alpha = certify(s, cand.P, cfg.verify.alpha, cfg.verify.n_samples, seed)
    write_json(out / "certificate.json", cert.to_json(), "certificate")
    payload = {**payload, "alpha": alpha, "clf_certificate": cert.to_json()}
    write_json(out / "synth.json", payload, "synthesis")
    if not cert.verified:
        raise CommandFailed(f"CLF verification failed: {cert.reason}")
    return payload


def cmd_verify(cfg: ExperimentConfig, out: Path, seed: int) -> dict:
    if cfg.weights.P is None:
        raise ValueError("verify needs weights.P")
    s = _Setup(cfg)
    cert, alpha = certify(s, np.array(cfg.weights.P, dtype=float), cfg.verify.alpha,
                          cfg.verify.n_samples, seed)
    payload = write_json(out / "certificate.json", cert.to_json(), "certificate")
    if not cert.verified:
        raise CommandFailed(f"CLF verification failed: {cert.reason}")
    return {**payload, "alpha": alpha}


def cmd_cartspring(cfg: ExperimentConfig, out: Path, seed: int) -> dict:
    s = _Setup(cfg)
    mc = cfg.mpc
    settings = cfg.optim.settings(seed)
    P_conv = solve_dare(s.lin, s.Q, s.R)
    K_conv = lqr_gain(s.lin, s.R, P_conv)
    sc = cfg.synth
    cand = synth_terminal_bmi(s.lin, s.Q, s.R, BmiOptions(sc.margin, sc.p_scale, sc.max_rounds, sc.max_iter))
    P_prop = np.array(mc.proposed_P, dtype=float) if mc.proposed_P is not None else cand.P
    o = osvf_matrix(s.lin, s.Q, s.R, P_prop)
    if s.X is None and (mc.alpha_proposed is None or mc.alpha_conventional is None):
        raise ValueError("alpha sizing needs a state box")
    a_prop = mc.alpha_proposed if mc.alpha_proposed is not None else \
        size_terminal_alpha(s.sys, o.M_P, s.X, s.U, o.K_os)
    a_conv = mc.alpha_conventional if mc.alpha_conventional is not None else \
        size_terminal_alpha(s.sys, P_conv, s.X, s.U, K_conv)
    stage = QuadStageCost(s.Q, s.R)
    runs = {}
    for mode, P, shape, gain, alpha in (("contractive", P_prop, o.M_P, o.K_os, a_prop),
                                        ("conventional", P_conv, P_conv, K_conv, a_conv)):
        conf = MpcConfig(mc.N, alpha, s.U, s.X, mc.delta, mc.eps_term, mode, settings)
        res = run_closed_loop(s.sys, MpcCosts(stage, QuadTerminalCost(P), shape, gain), conf,
                              mc.x0, mc.T_steps)
        (out / f"cartspring_{mode}.csv").write_text(res.to_csv(), encoding="utf-8")
        runs[mode] = write_json(out / f"cartspring_{mode}.json", res.summary(), "closed_loop_summary")
    comparison = {
        "P_conventional": P_conv, "P_proposed": P_prop, "synthesized": cand.to_json(),
        "alpha_conventional": a_conv, "alpha_proposed": a_prop,
        "J_run_proposed": runs["contractive"]["J_run"],
        "J_run_conventional": runs["conventional"]["J_run"],
        "proposed_lower": runs["contractive"]["J_run"] < runs["conventional"]["J_run"],
        "runs": runs,
    }
    return write_json(out / "cartspring_comparison.json", comparison)


COMMANDS = {
    "region1d": (cmd_region1d, "first-order stability-region maps"),
    "cartspring": (cmd_cartspring, "cart-spring closed-loop comparison"),
    "synth": (cmd_synth, "BMI terminal weight synthesis and CLF check"),
    "verify": (cmd_verify, "CLF certificate for a given terminal weight"),
    "dare": (cmd_dare, "Riccati terminal weight of the origin linearisation"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contractive-mpc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="TOML or JSON experiment configuration")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        p.add_argument("--out-dir", default=".", help="directory for output files")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fn = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config)
        seed = cfg.seed if args.seed is None else args.seed
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        fn(cfg, out, seed)
    except (NumericOverflowError, DareDivergenceError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (pydantic.ValidationError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CommandFailed, InfeasibleError, DegenerateTerminalSetError, IllPosedError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

"""Command-line interface: ``sarlab {sweep,verify,circuit,optics,experiment}``.

Exit codes are 0 on success, 1 when a verification check fails and 2 on a
usage error.  Output goes to ``--output`` when given, otherwise to
``$SARLAB_OUTPUT_DIR/<command>.<ext>`` when that variable is set, otherwise
to stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analytics, oracle
from .canonical import CanonicalPair
from .circuits import instrument_to_dict, simulate_qubit_retrieval
from .figures import FIGURES, SweepConfig, sweep_figures
from .linalg import OPT_TOL
from .optics import angle_table, compile_angles

OUTPUT_ENV = "SARLAB_OUTPUT_DIR"
INJECTED_ERROR = 1e-3


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    n_values: tuple[int, ...]
    alphas: tuple[float, ...] | None
    alpha_points: int
    beta_points: int
    figures: tuple[int, ...]
    which: int
    seed: int | None
    shots: int
    noise_tags: tuple[str, ...]
    output: str | None
    fmt: str
    inject_error: bool = False
    lemmas: bool = False

    def alpha_grid(self, n: int) -> list[float]:
        """Explicit alphas, or ``alpha_points`` values evenly spaced in (0, pi/4n]."""
        if self.alphas is not None:
            return list(self.alphas)
        top = np.pi / (4 * n)
        return [float(a) for a in np.linspace(top / self.alpha_points, top, self.alpha_points)]


def _int_list(text: str) -> tuple[int, ...]:
    try:
        vals = tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sarlab", description="Optimal storage and retrieval of an unknown unitary "
                                   "drawn from a known pair.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, n_default="1", alpha_points=20, fmt="json"):
        p.add_argument("--n", type=_int_list, default=_int_list(n_default),
                       help="comma-separated n values")
        g = p.add_mutually_exclusive_group()
        g.add_argument("--alpha", type=float, action="append",
                       help="alpha in radians (repeatable)")
        g.add_argument("--alpha-frac", type=float, action="append",
                       help="alpha as a fraction k of pi/(4n) (repeatable)")
        p.add_argument("--alpha-points", type=int, default=alpha_points)
        p.add_argument("--output", help="output file")
        p.add_argument("--format", dest="fmt", choices=("csv", "json"), default=fmt)

    p = sub.add_parser("sweep", help="tabulate figure data")
    common(p, "1,2,3", 21, "csv")
    p.add_argument("--figure", type=int, action="append", choices=FIGURES)
    p.add_argument("--beta-points", type=int, default=21)
    p.add_argument("--shots", type=int, default=0)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise", type=_str_list, default=("ideal", "cnot0.929"))

    p = sub.add_parser("verify", help="compare closed forms against brute-force oracles")
    common(p, "1,2,3,4,5", 20, "json")
    p.add_argument("--lemmas", action="store_true", help="also run the randomized lemma battery")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inject-error", action="store_true",
                   help=f"shift alpha by {INJECTED_ERROR} in the closed forms (negative control)")

    p = sub.add_parser("circuit", help="dump the retrieval instrument as JSON")
    common(p, "1", 1, "json")
    p.add_argument("--which", type=int, choices=(0, 1), default=0)

    p = sub.add_parser("optics", help="compile POVM wave-plate angles")
    common(p, "1", 10, "csv")

    p = sub.add_parser("experiment", help="virtual tomography experiment")
    common(p, "1,2,3", 5, "csv")
    p.add_argument("--shots", type=int, default=0)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise", type=_str_list, default=("ideal", "cnot0.929"))
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    if any(n < 1 for n in args.n):
        raise UsageError("n values must be positive")
    if args.alpha_points < 1:
        raise UsageError("--alpha-points must be positive")
    if args.alpha_frac is not None and len(args.n) > 1:
        raise UsageError("--alpha-frac needs a single --n")
    alphas = None
    if args.alpha is not None:
        alphas = tuple(args.alpha)
    elif args.alpha_frac is not None:
        alphas = tuple(k * np.pi / (4 * args.n[0]) for k in args.alpha_frac)
    if alphas is not None:
        for n in args.n:
            for a in alphas:
                if not 0 < a or 4 * n * a > np.pi + 1e-12:
                    raise UsageError(f"alpha={a} outside (0, pi/{4 * n}] for n={n}")
    shots = getattr(args, "shots", 0)
    seed = getattr(args, "seed", None)
    if shots < 0 or 0 < shots < 100:
        raise UsageError("--shots must be 0 or at least 100")
    if shots and seed is None:
        raise UsageError("--seed is required when --shots > 0")
    beta_points = getattr(args, "beta_points", 1)
    if beta_points < 1:
        raise UsageError("--beta-points must be positive")
    return RunConfig(
        command=args.command, n_values=tuple(args.n), alphas=alphas,
        alpha_points=args.alpha_points, beta_points=beta_points,
        figures=tuple(getattr(args, "figure", None) or FIGURES), which=getattr(args, "which", 0),
        seed=seed, shots=shots, noise_tags=tuple(getattr(args, "noise", ())),
        output=args.output, fmt=args.fmt, inject_error=getattr(args, "inject_error", False),
        lemmas=getattr(args, "lemmas", False))


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _table_text(table, fmt: str) -> str:
    if fmt == "csv":
        return table.to_csv()
    return _dumps([{k: v for k, v in vars(r).items()} for r in table.rows])


def cmd_sweep(cfg: RunConfig) -> tuple[str, int]:
    if cfg.alphas is not None:
        raise UsageError("sweep uses --alpha-points, not explicit alphas")
    try:
        sc = SweepConfig(cfg.figures, cfg.n_values, cfg.alpha_points, cfg.beta_points,
                         cfg.shots, cfg.seed, cfg.noise_tags or ("ideal",))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return _table_text(sweep_figures(sc), cfg.fmt), 0


def verification_report(cfg: RunConfig) -> dict:
    shift = INJECTED_ERROR if cfg.inject_error else 0.0
    results = []
    for n in cfg.n_values:
        for a in cfg.alpha_grid(n):
            # shift inwards so the corrupted point stays in the domain
            a_bad = a + shift if 4 * n * (a + shift) <= np.pi else a - shift
            checks = (
                ("F_e", analytics.deterministic_fidelity(n, a_bad),
                 oracle.brute_force_deterministic(n, a)),
                ("P_succ", analytics.success_probability(n, a_bad)[0],
                 oracle.brute_force_unambiguous(n, a)),
            )
            for quantity, exact, brute in checks:
                res = abs(exact - brute)
                results.append({"point": {"n": n, "alpha": a, "quantity": quantity},
                                "analytic": exact, "oracle": brute, "residual": res,
                                "pass": bool(res <= OPT_TOL)})
    report = {
        "tolerance": OPT_TOL,
        "injected_error": shift,
        "results": results,
        "max_residual": max((r["residual"] for r in results), default=0.0),
    }
    ok = all(r["pass"] for r in results)
    if cfg.lemmas:
        lem = oracle.lemma_battery(seed=cfg.seed or 0)
        report["lemmas"] = json.loads(json.dumps(lem, default=_json_default))
        ok = ok and all(bool(v["pass"]) for v in lem.values())
    report["pass"] = ok
    return report


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o))


def cmd_verify(cfg: RunConfig) -> tuple[str, int]:
    report = verification_report(cfg)
    return _dumps(report), 0 if report["pass"] else 1


def cmd_circuit(cfg: RunConfig) -> tuple[str, int]:
    dumps = []
    for n in cfg.n_values:
        for a in cfg.alpha_grid(n):
            dumps.append(instrument_to_dict(
                simulate_qubit_retrieval(CanonicalPair.from_alpha(n, a), cfg.which)))
    return _dumps(dumps[0] if len(dumps) == 1 else dumps), 0


def cmd_optics(cfg: RunConfig) -> tuple[str, int]:
    comps = [compile_angles(n, a) for n in cfg.n_values for a in cfg.alpha_grid(n)]
    if cfg.fmt == "csv":
        return angle_table(comps), 0
    return _dumps([{"n": c.n, "alpha": c.alpha, "B": c.B, "Gamma": c.Gamma, "Delta": c.Delta,
                    "mode": c.mode, "residual_norm": c.residual_norm} for c in comps]), 0


def cmd_experiment(cfg: RunConfig) -> tuple[str, int]:
    if cfg.alphas is not None:
        raise UsageError("experiment uses --alpha-points, not explicit alphas")
    try:
        sc = SweepConfig((8,), cfg.n_values, cfg.alpha_points, 1, cfg.shots,
                         cfg.seed, cfg.noise_tags or ("ideal",))
        table = sweep_figures(sc)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return _table_text(table, cfg.fmt), 0


COMMANDS = {"sweep": cmd_sweep, "verify": cmd_verify, "circuit": cmd_circuit,
            "optics": cmd_optics, "experiment": cmd_experiment}


def _destination(cfg: RunConfig) -> Path | None:
    if cfg.output:
        return Path(cfg.output)
    root = os.environ.get(OUTPUT_ENV)
    if root:
        return Path(root) / f"{cfg.command}.{cfg.fmt}"
    return None


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        text, code = COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        parser.error(f"{args.command}: {exc}")
    dest = _destination(cfg)
    if dest is None:
        sys.stdout.write(text)
    else:
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.write_text(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

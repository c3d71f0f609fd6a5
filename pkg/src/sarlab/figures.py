"""Tabulated data behind the success-probability and fidelity figures.

Figure ids:

* ``4``: success probability against alpha for each n, with the
  fully-unknown-unitary and phase-gate baselines, the measure-and-prepare
  (USD) curve and the regime-transition markers;
* ``6``: deterministic fidelity over the (alpha, beta) plane;
* ``7``: success probability over the (alpha, beta) plane;
* ``8``: simulated experiment, success probability and conditional
  process fidelity against alpha for both arms and each noise model.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import analytics
from .canonical import CanonicalPair
from .experiment import NoiseModel, estimate, measure_and_prepare_arm, run_virtual_experiment

SWEEP_COLUMNS = ("figure_id", "n", "alpha", "beta", "quantity", "value",
                 "stderr_low", "stderr_high", "arm", "noise_tag")
FIGURES = (4, 6, 7, 8)


@dataclass(frozen=True)
class SweepRow:
    figure_id: int
    n: int | None
    alpha: float
    beta: float
    quantity: str
    value: float
    stderr_low: float | None = None
    stderr_high: float | None = None
    arm: str = "optimal"
    noise_tag: str = "ideal"


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".12g")


@dataclass
class SweepTable:
    rows: list[SweepRow] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def select(self, **kw) -> list[SweepRow]:
        return [r for r in self.rows if all(getattr(r, k) == v for k, v in kw.items())]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(getattr(r, c)) for c in SWEEP_COLUMNS])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "SweepTable":
        rows = []
        for rec in csv.DictReader(io.StringIO(text)):
            opt = lambda s: float(s) if s != "" else None  # noqa: E731
            rows.append(SweepRow(
                int(rec["figure_id"]), int(rec["n"]) if rec["n"] else None,
                float(rec["alpha"]), float(rec["beta"]), rec["quantity"], float(rec["value"]),
                opt(rec["stderr_low"]), opt(rec["stderr_high"]), rec["arm"], rec["noise_tag"]))
        return cls(rows)


@dataclass(frozen=True)
class SweepConfig:
    figures: tuple[int, ...] = FIGURES
    n_values: tuple[int, ...] = (1, 2, 3)
    alpha_points: int = 21
    beta_points: int = 21
    shots: int = 0
    seed: int | None = 0
    noise_tags: tuple[str, ...] = ("ideal", "cnot0.929")
    bootstrap: int = 200

    def __post_init__(self):
        bad = set(self.figures) - set(FIGURES)
        if bad:
            raise ValueError(f"unknown figure ids {sorted(bad)}")
        if any(n < 1 for n in self.n_values):
            raise ValueError("n values must be positive")
        if self.alpha_points < 2 and 8 not in self.figures:
            raise ValueError("need at least two alpha points")
        if self.alpha_points < 1 or self.beta_points < 1:
            raise ValueError("grid sizes must be positive")
        if self.shots and self.seed is None:
            raise ValueError("a seed is required when shots > 0")


def _fig4(cfg: SweepConfig) -> list[SweepRow]:
    rows = []
    for n in cfg.n_values:
        base_g = analytics.group_baseline(2, n)
        base_p = analytics.group_baseline(2, n, phase_gate=True)
        for a in np.linspace(0, np.pi / (4 * n), cfg.alpha_points):
            a = float(a)
            b = 2 * n * a
            rows.append(SweepRow(4, n, a, b, "P_succ", analytics.success_probability(n, a)[0]))
            rows.append(SweepRow(4, n, a, b, "P_succ", analytics.usd_success(n, a),
                                 arm="measure_and_prepare"))
            rows.append(SweepRow(4, n, a, b, "P_succ", base_g, arm="group_general"))
            rows.append(SweepRow(4, n, a, b, "P_succ", base_p, arm="group_phase"))
        c = analytics.chi(n)
        rows.append(SweepRow(4, n, c, 2 * n * c, "transition",
                             analytics.success_probability(n, c)[0]))
    return rows


def _plane(cfg: SweepConfig, fig: int) -> list[SweepRow]:
    rows = []
    for a in np.linspace(0, np.pi / 4, cfg.alpha_points):
        for b in np.linspace(0, np.pi / 2, cfg.beta_points):
            a, b = float(a), float(b)
            if fig == 6:
                rows.append(SweepRow(6, None, a, b, "F_e", analytics.processor_fidelity(a, b)))
            else:
                rows.append(SweepRow(7, None, a, b, "P_succ", analytics.processor_success(a, b)))
    return rows


def _fig8(cfg: SweepConfig) -> list[SweepRow]:
    rows = []
    point = 0
    for n in cfg.n_values:
        top = np.pi / (4 * n)
        base = analytics.group_baseline(2, n, phase_gate=True)
        for a in np.linspace(top / cfg.alpha_points, top, cfg.alpha_points):
            a = float(a)
            b = 2 * n * a
            p = CanonicalPair.from_alpha(n, a)
            rows.append(SweepRow(8, n, a, b, "P_succ", base, arm="group_phase"))
            for tag in cfg.noise_tags:
                noise = NoiseModel.from_tag(tag)
                seed = None if cfg.seed is None else cfg.seed + point
                point += 1
                t = run_virtual_experiment(p, noise, cfg.shots, seed)
                r = estimate(t, cfg.bootstrap, seed)
                m = measure_and_prepare_arm(p, noise, cfg.shots, seed, cfg.bootstrap)
                for rep in (r, m):
                    rows.append(SweepRow(8, n, a, b, "P_succ", rep.P_succ_hat,
                                         rep.P_succ_hat - rep.P_succ_stderr,
                                         rep.P_succ_hat + rep.P_succ_stderr, rep.arm, tag))
                    rows.append(SweepRow(8, n, a, b, "F_exp", rep.F_exp, rep.F_interval[0],
                                         rep.F_interval[1], rep.arm, tag))
    return rows


def sweep_figures(cfg: SweepConfig | None = None) -> SweepTable:
    cfg = cfg or SweepConfig()
    table = SweepTable()
    for fig in cfg.figures:
        if fig == 4:
            table.rows += _fig4(cfg)
        elif fig in (6, 7):
            table.rows += _plane(cfg, fig)
        else:
            table.rows += _fig8(cfg)
    return table

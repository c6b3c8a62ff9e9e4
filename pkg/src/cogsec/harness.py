"""Experiment runner: sweeps, paired trials, CSV/JSON outputs, CDFs, oracle suite and replay."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, baselines, model, sca_robust
from .baselines import SchemeId
from .model import SystemConfig, generate_channels

log = logging.getLogger(__name__)

PERFECT = {SchemeId.PROPOSED, SchemeId.NO_JN, SchemeId.PARTIAL_ZF, SchemeId.EQUAL_SPLIT}
ROBUST = {SchemeId.ROBUST, SchemeId.NON_ROBUST}
TRIAL_COLUMNS = ["experiment", "scheme", "sweep_value", "trial", "status", "phi_bits", "iterations",
                 "init_iterations"]
SUMMARY_COLUMNS = ["experiment", "scheme", "sweep_value", "mean", "stderr", "ok", "infeasible", "failure",
                   "low_count"]
MIN_OK_FOR_MEAN = 10

_PS = list(range(0, 22, 3))
_RBAR = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
_P3 = ["Proposed", "NoJN", "PartialZF"]

# id -> (sweep parameter, grid, schemes, base overrides)
EXPERIMENTS = {
    "fig2_convergence": ("N", [6, 8, 10], ["Proposed", "Robust"], {"P_s_dBm": 15, "R_bar": 2.0}),
    "fig3_power_sweep": ("P_s_dBm", _PS, _P3, {"R_bar": 2.0}),
    "fig4_antenna_sweep": ("N", [6, 7, 8, 9, 10, 11, 12], _P3, {"P_s_dBm": 10, "R_bar": 2.0}),
    "fig5a_qos_sweep": ("R_bar", _RBAR, _P3, {"P_s_dBm": 10}),
    "fig5b_power_split": ("R_bar", _RBAR, ["Proposed", "EqualPowerSplit"], {"P_s_dBm": 20}),
    "fig6_robust_power_sweep": ("P_s_dBm", _PS, ["Robust", "NonRobust"], {"R_bar": 1.0}),
    "fig7_cdf": ("P_s_dBm", [20], ["Robust", "NonRobust", "Proposed", "NoJN"], {"R_bar": 1.0}),
}


@dataclass
class ExperimentSpec:
    experiment: str
    grid: list
    schemes: list
    trials: int = 100
    seed: int = 0
    out_dir: str = "results"
    sweep: str = ""
    base: dict = field(default_factory=dict)
    backend: str = "clarabel"
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if not self.grid:
            raise ValueError("sweep grid must be nonempty")
        if self.trials < 1:
            raise ValueError("trial count must be >= 1")
        if not self.sweep:
            self.sweep = EXPERIMENTS[self.experiment][0]
        self.schemes = [SchemeId.parse(s).value for s in self.schemes]
        SystemConfig.from_dict(self.base)  # validate early

    @classmethod
    def default(cls, experiment: str, **overrides) -> "ExperimentSpec":
        if experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {experiment!r}; choose from {sorted(EXPERIMENTS)}")
        sweep, grid, schemes, base = EXPERIMENTS[experiment]
        kw = dict(experiment=experiment, grid=list(grid), schemes=list(schemes), sweep=sweep, base=dict(base))
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)

    def config_at(self, value) -> SystemConfig:
        d = dict(self.base)
        d[self.sweep] = value
        if self.sweep in ("N", "G", "L", "K_p"):
            d[self.sweep] = int(value)
        return SystemConfig.from_dict(d)


@dataclass
class TrialRecord:
    experiment: str
    scheme: str
    sweep_value: float
    trial: int
    status: str  # ok | infeasible | failure
    phi_bits: float | None
    iterations: int
    init_iterations: int
    wall_ms: float = 0.0
    trace: list = field(default_factory=list)

    def __post_init__(self):
        if (self.phi_bits is not None) != (self.status == "ok"):
            raise ValueError("phi_bits is present exactly when status is ok")

    def row(self) -> list:
        phi = "" if self.phi_bits is None else f"{self.phi_bits:.12g}"
        return [self.experiment, self.scheme, _fmt(self.sweep_value), self.trial, self.status, phi,
                self.iterations, self.init_iterations]


def _fmt(v) -> str:
    return f"{float(v):.12g}"


def trial_seed(master: int, experiment: str, sweep_index: int, trial: int) -> int:
    """Deterministic 63-bit seed shared by every scheme of one (sweep point, trial)."""
    h = hashlib.blake2b(f"{master}|{experiment}|{sweep_index}|{trial}".encode(), digest_size=8)
    return int.from_bytes(h.digest(), "little") >> 1


# ----------------------------------------------------------------------
# per-trial execution


def _record(spec, scheme, value, trial, sol, wall, phi=None):
    status = "ok" if sol.ok else ("infeasible" if sol.status == "infeasible" else "failure")
    if status == "ok" and phi is None:
        phi = max(0.0, float(sol.phi))
    return TrialRecord(spec.experiment, scheme, float(value), trial, status, phi if status == "ok" else None,
                       sol.trace.iterations, sol.trace.init_iterations, wall * 1e3,
                       [float(p) for p in sol.trace.phis])


def run_trial(spec: ExperimentSpec, sweep_index: int, trial: int) -> list[TrialRecord]:
    """All requested schemes on one shared channel realisation."""
    value = spec.grid[sweep_index]
    config = spec.config_at(value).with_(seed=trial_seed(spec.seed, spec.experiment, sweep_index, trial))
    ch = generate_channels(config, trial)
    wanted = [SchemeId.parse(s) for s in spec.schemes]
    out = {}
    sols = {}
    for sid in wanted:
        if sid in PERFECT and sid != SchemeId.PROPOSED:
            t0 = time.perf_counter()
            sols[sid] = baselines.PERFECT_RUNNERS[sid](ch, config, spec.backend)
            out[sid] = _record(spec, sid.value, value, trial, sols[sid], time.perf_counter() - t0)
    if SchemeId.PROPOSED in wanted:
        t0 = time.perf_counter()
        sol = baselines.proposed_best_of(ch, config, list(sols.values()), spec.backend)
        out[SchemeId.PROPOSED] = _record(spec, SchemeId.PROPOSED.value, value, trial, sol, time.perf_counter() - t0)
    for sid in wanted:
        if sid in ROBUST:
            t0 = time.perf_counter()
            sol = baselines.ROBUST_RUNNERS[sid](ch, config, spec.backend)
            score = sca_robust.scored_secrecy(ch, sol, config) if sol.ok else None
            out[sid] = _record(spec, sid.value, value, trial, sol, time.perf_counter() - t0, score)
    return [out[s] for s in wanted]


def _run_job(args):
    spec, si, t = args
    return run_trial(spec, si, t)


# ----------------------------------------------------------------------
# outputs


def _sort_key(r: TrialRecord):
    return (r.scheme, r.sweep_value, r.trial)


def trials_csv(records: list[TrialRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRIAL_COLUMNS)
    for r in sorted(records, key=_sort_key):
        w.writerow(r.row())
    return buf.getvalue()


def summarize(records: list[TrialRecord]) -> list[dict]:
    """Mean and standard error over ok trials per (scheme, sweep value); order independent."""
    groups: dict = {}
    for r in sorted(records, key=_sort_key):
        groups.setdefault((r.experiment, r.scheme, r.sweep_value), []).append(r)
    rows = []
    for (exp, scheme, value), rs in sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][2])):
        phis = np.array([r.phi_bits for r in rs if r.status == "ok"], dtype=float)
        n = phis.size
        mean = float(np.mean(phis)) if n else float("nan")
        se = float(np.std(phis, ddof=1) / np.sqrt(n)) if n > 1 else float("nan")
        rows.append({"experiment": exp, "scheme": scheme, "sweep_value": value, "mean": mean, "stderr": se,
                     "ok": n, "infeasible": sum(r.status == "infeasible" for r in rs),
                     "failure": sum(r.status == "failure" for r in rs), "low_count": int(n < MIN_OK_FOR_MEAN)})
    return rows


def summary_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in rows:
        w.writerow([r["experiment"], r["scheme"], _fmt(r["sweep_value"]), f"{r['mean']:.12g}",
                    f"{r['stderr']:.12g}", r["ok"], r["infeasible"], r["failure"], r["low_count"]])
    return buf.getvalue()


def compute_cdf(records: list[TrialRecord], scheme: str, sweep_value) -> list[tuple[float, float]]:
    """Empirical CDF ``(rate, fraction of ok trials with phi <= rate)`` at the distinct rates."""
    vals = np.sort([r.phi_bits for r in records
                    if r.scheme == scheme and r.status == "ok" and np.isclose(r.sweep_value, float(sweep_value))])
    if vals.size == 0:
        return []
    uniq, counts = np.unique(vals, return_counts=True)
    return [(float(u), float(c) / vals.size) for u, c in zip(uniq, np.cumsum(counts))]


def manifest(spec: ExperimentSpec) -> dict:
    seeds = {f"{si}:{t}": trial_seed(spec.seed, spec.experiment, si, t)
             for si in range(len(spec.grid)) for t in range(spec.trials)}
    import clarabel
    import scipy
    return {
        "tool": "cogsec", "version": __version__,
        "spec": {k: v for k, v in asdict(spec).items() if k not in ("out_dir", "workers")},
        "configs": {_fmt(v): spec.config_at(v).to_dict() for v in spec.grid},
        "trial_seeds": seeds,
        "libraries": {"numpy": np.__version__, "scipy": scipy.__version__, "clarabel": clarabel.__version__},
    }


def _write(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: list
    summary: list
    out_dir: Path

    @property
    def any_failure(self) -> bool:
        return any(r.status == "failure" for r in self.records)


def run_experiment(spec: ExperimentSpec, write: bool = True) -> ExperimentResult:
    """Run the (sweep x trial x scheme) grid and write trials/summary/manifest/timings."""
    out = Path(spec.out_dir)
    jobs = [(spec, si, t) for si in range(len(spec.grid)) for t in range(spec.trials)]
    records: list[TrialRecord] = []
    partial = None
    if write:
        out.mkdir(parents=True, exist_ok=True)
        _write(out / "manifest.json", json.dumps(manifest(spec), indent=2, sort_keys=True))
        partial = open(out / "trials.partial.csv", "w", newline="")
        pw = csv.writer(partial, lineterminator="\n")
        pw.writerow(TRIAL_COLUMNS)

    def sink(recs):
        records.extend(recs)
        if partial is not None:
            for r in recs:
                pw.writerow(r.row())
            partial.flush()

    try:
        if spec.workers > 1:
            with ProcessPoolExecutor(spec.workers) as pool:
                for recs in pool.map(_run_job, jobs):
                    sink(recs)
        else:
            for job in jobs:
                sink(_run_job(job))
                log.info("%s: sweep %s trial %d done", spec.experiment, job[1], job[2])
    finally:
        if partial is not None:
            partial.close()
    rows = summarize(records)
    if write:
        _write(out / "trials.csv", trials_csv(records))
        _write(out / "summary.csv", summary_csv(rows))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment", "scheme", "sweep_value", "trial", "wall_ms"])
        for r in sorted(records, key=_sort_key):
            w.writerow([r.experiment, r.scheme, _fmt(r.sweep_value), r.trial, f"{r.wall_ms:.3f}"])
        _write(out / "timings.csv", buf.getvalue())
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment", "scheme", "sweep_value", "trial", "iteration", "phi"])
        for r in sorted(records, key=_sort_key):
            for i, p in enumerate(r.trace):
                w.writerow([r.experiment, r.scheme, _fmt(r.sweep_value), r.trial, i, f"{p:.12g}"])
        _write(out / "traces.csv", buf.getvalue())
        if spec.experiment == "fig7_cdf":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["scheme", "sweep_value", "rate", "cdf"])
            for s in spec.schemes:
                for v in spec.grid:
                    for rate, frac in compute_cdf(records, s, v):
                        w.writerow([s, _fmt(v), f"{rate:.12g}", f"{frac:.12g}"])
            _write(out / "cdf.csv", buf.getvalue())
        (out / "trials.partial.csv").unlink(missing_ok=True)
    return ExperimentResult(spec, records, rows, out)


def spec_from_manifest(path) -> ExperimentSpec:
    data = json.loads(Path(path).read_text())
    return ExperimentSpec(**data["spec"])


def replay(manifest_path, out_dir=None, workers: int = 1) -> tuple[ExperimentResult, bool | None]:
    """Re-run a manifest; returns the result and whether trials.csv matches the original (None if absent)."""
    manifest_path = Path(manifest_path)
    spec = spec_from_manifest(manifest_path)
    spec.out_dir = str(out_dir or manifest_path.parent / "replay")
    spec.workers = workers
    res = run_experiment(spec)
    original = manifest_path.parent / "trials.csv"
    same = None
    if original.exists():
        same = original.read_bytes() == (Path(spec.out_dir) / "trials.csv").read_bytes()
    return res, same


# ----------------------------------------------------------------------
# oracle suite


@dataclass
class Check:
    name: str
    passed: bool
    margin: float
    detail: str = ""

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: margin={self.margin:.3g} {self.detail}".rstrip()


def verify_suite(config: SystemConfig | None = None, instances: int = 5, points: int = 200,
                 samples: int = 20000, seed: int = 0) -> list[Check]:
    """Registered oracles of the surrogate, conic and chance-bound layers, each with its margin."""
    from . import conic, robust_bounds as rbd, surrogates as su

    config = config or SystemConfig()
    rng = np.random.default_rng(seed)
    checks = []

    # surrogate tightness and bound direction
    worst_tight, worst_dir = 0.0, np.inf
    for i in range(instances):
        ch = generate_channels(config.with_(seed=seed), i)
        for cov in (False, True):
            bf = model.random_beamformer(rng, ch.N, ch.G, config.P_s)
            if cov:
                bf = model.RobustBeamformer(w=bf.w, U_tilde=bf.covariance())
            ep = su.ExpansionPoint.at(ch, bf)
            U_n = bf.U_tilde if cov else bf.U
            for s in su.all_surrogates(ch, ep):
                worst_tight = max(worst_tight, abs(s.evaluate(bf.w, U_n) - su.true_log_sinr(ch, s, bf.w, U_n)))
                for _ in range(points // 10):
                    b2 = model.random_beamformer(rng, ch.N, ch.G, config.P_s)
                    U2 = b2.covariance() if cov else b2.U
                    gap = su.true_log_sinr(ch, s, b2.w, U2) - s.evaluate(b2.w, U2)
                    worst_dir = min(worst_dir, gap if s.sense == "lower" else -gap)
    checks.append(Check("surrogate tightness", worst_tight <= 1e-9, 1e-9 - worst_tight))
    checks.append(Check("surrogate bound direction", worst_dir >= -1e-9, worst_dir))

    # conic backends agree on a small Hermitian SDP
    A = model.crandn(rng, 4, 4)
    A = A @ A.conj().T
    vals = []
    for backend in ("clarabel", "scs"):
        prog = conic.ConicProgram("lmax")
        t = prog.variable((), "t")
        prog.add_hermitian_psd(conic.CAffine(t * np.eye(4), conic.Affine.const(np.zeros((4, 4)))) - A, "tI-A")
        prog.minimize(t)
        res = conic.solve(prog, backend)
        vals.append(res.objective)
    lam = float(np.linalg.eigvalsh(A)[-1])
    err = max(abs(v - lam) for v in vals)
    checks.append(Check("conic lambda_max (clarabel, scs)", err <= 1e-4 * max(1, lam), 1e-4 * max(1, lam) - err))

    # chance bounds
    ch = generate_channels(config.with_(seed=seed), 0)
    p = rbd.ChanceBoundParams.from_config(config, ch)
    grid = np.logspace(-3, 3, 400)
    xs = rbd.xi_tilde(grid, p)
    mono = float(np.min(-np.diff(xs)))
    checks.append(Check("xi_tilde strictly decreasing", mono > 0, mono))
    rb, aux = sca_robust.starting_point(ch, config, p)
    beta0 = aux.beta if aux.beta is not None else rbd.beta_for_floor(config.P_s / (2 * config.N), p)
    eq = abs(rbd.xi_tilde(beta0, p) - np.linalg.eigvalsh(rb.U_tilde)[0])
    checks.append(Check("beta0 root of xi_tilde = lambda_min", eq <= 1e-8, 1e-8 - eq))
    se = 3 * np.sqrt(config.eps_tilde * (1 - config.eps_tilde) / samples)
    mc = rbd.mc_primary_chance(rb, p, beta0, samples, seed=rng)
    checks.append(Check("primary chance bound holds (MC)", mc >= config.eps_tilde - se, mc - (config.eps_tilde - se),
                        f"mc={mc:.4f}"))
    for g in range(ch.G):
        eps = config.eps_g[g]
        se_g = 3 * np.sqrt(eps * (1 - eps) / samples)
        mc = rbd.mc_secondary_chance(rb, p, g, aux.phi_g[g], samples, seed=rng)
        checks.append(Check(f"secondary chance bound holds (MC, group {g})", mc >= eps - se_g,
                            mc - (eps - se_g), f"mc={mc:.4f}"))

    worst = np.inf
    for _ in range(1000):
        x = model.crandn(rng, config.N)
        F = np.outer(x, x.conj())
        B = model.crandn(rng, config.N, config.N)
        B = B + B.conj().T
        lo, rlo = rbd.trace_eig_lower(F, B)
        hi, rhi = rbd.trace_eig_upper(F, B)
        worst = min(worst, lo - rlo, rhi - hi)
    checks.append(Check("trace-eigenvalue inequalities", worst >= -1e-10, worst))
    return checks

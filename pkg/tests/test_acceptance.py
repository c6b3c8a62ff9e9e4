"""Acceptance suite: one test (and one printed pass/fail line) per criterion.

Desk scale throughout: 100 trials, N = 8, G = 2, two receivers and two
eavesdroppers per group, two PRs and two primary Eves, P_p = 20 dBm, unit
noise.  Shared runs are computed once per session.  Expect roughly half an
hour on one core; the desk robust sweep dominates.
"""
import numpy as np
import pytest
from scipy.stats import binomtest

from cogsec import baselines as bl, harness, robust_bounds as rbd, sca_perfect as sp, sca_robust as sr
from cogsec.model import SystemConfig, generate_channels, sample_ball
from cogsec.sca_perfect import active_primary

import toy_oracle
from checks import audit_surrogates, report, strong_channels

TRIALS = 100
MC_SAMPLES = 20000
STRONG_CFG = SystemConfig(P_s=10 ** 1.8, R_bar=(1.0, 1.0))

pytestmark = pytest.mark.acceptance


def _finite(trace):
    t = np.asarray(trace, dtype=float)
    return t[np.isfinite(t)]


def _violations(traces, tol=1e-6):
    return sum(int(np.sum(np.diff(_finite(t)) < -tol)) for t in traces)


# ----------------------------------------------------------------------
# shared runs


@pytest.fixture(scope="session")
def fig2():
    spec = harness.ExperimentSpec.default("fig2_convergence", grid=[8], schemes=["Proposed"], trials=TRIALS)
    return harness.run_experiment(spec, write=False).records


@pytest.fixture(scope="session")
def fig3():
    spec = harness.ExperimentSpec.default("fig3_power_sweep", grid=[6, 18], trials=TRIALS)
    res = harness.run_experiment(spec, write=False)
    return res.records, res.summary


@pytest.fixture(scope="session")
def desk_robust():
    """Robust and NonRobust at P_s = 18 dBm, R_bar = 1 on the harness's paired channels."""
    spec = harness.ExperimentSpec.default("fig6_robust_power_sweep", grid=[18], trials=TRIALS)
    si = 0
    cfg0 = spec.config_at(18)
    out = []
    for t in range(TRIALS):
        cfg = cfg0.with_(seed=harness.trial_seed(spec.seed, spec.experiment, si, t))
        ch = generate_channels(cfg, t)
        rob = bl.run_robust(ch, cfg)
        non = bl.run_non_robust(ch, cfg)
        out.append((cfg, ch, rob, non, sr.scored_secrecy(ch, rob, cfg), sr.scored_secrecy(ch, non, cfg)))
    return out


@pytest.fixture(scope="session")
def zero_target_robust():
    cfg = SystemConfig(P_s=10 ** 1.8, R_bar=(0.0, 0.0))
    out = []
    for t in range(TRIALS):
        ch = generate_channels(cfg, t)
        out.append((cfg, ch, sr.robust_run(ch, cfg)))
    return out


@pytest.fixture(scope="session")
def strong_robust():
    out = []
    for t in range(TRIALS):
        ch = strong_channels(STRONG_CFG, t)
        out.append((STRONG_CFG, ch, sr.robust_run(ch, STRONG_CFG)))
    return out


def _robust_solutions(*groups):
    for group in groups:
        for cfg, ch, sol in group:
            if sol.ok:
                yield cfg, ch, sol


# ----------------------------------------------------------------------
# criteria


def test_criterion_01_monotone(fig2, fig3, desk_robust, zero_target_robust, strong_robust):
    perf = [r.trace for r in fig2 + fig3[0] if r.status == "ok"]
    v1 = _violations(perf)
    desk = [(c, ch, s) for c, ch, s, *_ in desk_robust] + [(c, ch, n) for c, ch, _, n, *_ in desk_robust]
    rob = [s.trace.phis for _, _, s in _robust_solutions(desk, zero_target_robust, strong_robust)]
    v2 = _violations(rob)
    desk_ok = sum(s.ok for _, _, s in desk)
    ok = v1 == 0 and v2 == 0 and len(rob) > 0
    assert report(1, "monotone SCA traces", ok,
                  f"Algorithm 1: {len(perf)} traces, {v1} violations; Algorithm 2: {len(rob)} traces "
                  f"({desk_ok}/{len(desk)} desk R_bar=1 runs feasible, R_bar=0 and strong-PR runs added), "
                  f"{v2} violations")


def test_criterion_02_convergence_speed(fig2):
    ok = [r for r in fig2 if r.status == "ok"]
    hits = 0
    for r in ok:
        t = _finite(r.trace)
        final = t[-1]
        at10 = t[10] if t.size > 10 else final
        hits += at10 >= final - 0.1 * abs(final)
    frac = hits / max(len(ok), 1)
    assert report(2, "phi at n=10 within 90 % of converged", len(ok) > 0 and frac >= 0.8,
                  f"{hits}/{len(ok)} feasible trials ({frac:.0%}, need >= 80 %)")


def test_criterion_03_init_cost(fig2):
    ok = [r for r in fig2 if r.status == "ok"]
    fast = sum(r.init_iterations <= 3 for r in ok)
    frac = fast / max(len(ok), 1)
    worst = max((r.init_iterations for r in ok), default=0)
    assert report(3, "feasibility phase within 3 iterations", len(ok) > 0 and frac >= 0.9,
                  f"{fast}/{len(ok)} feasible trials ({frac:.0%}, need >= 90 %), max {worst}")


def test_criterion_04_scheme_ordering(fig3):
    records, summary = fig3
    by = {(r.scheme, r.sweep_value, r.trial): r for r in records}
    pairs, bad = 0, 0
    for (s, v, t), r in by.items():
        if s != "Proposed":
            continue
        others = [by[(o, v, t)] for o in ("NoJN", "PartialZF")]
        if r.status != "ok" or any(o.status != "ok" for o in others):
            continue
        pairs += 1
        bad += any(r.phi_bits < o.phi_bits - 1e-4 for o in others)
    mean = {(row["scheme"], row["sweep_value"]): row["mean"] for row in summary}
    low = mean[("NoJN", 6.0)] - mean[("PartialZF", 6.0)]
    high = mean[("PartialZF", 18.0)] - mean[("NoJN", 18.0)]
    ok = bad == 0 and pairs > 0 and low > 0 and high > 0
    assert report(4, "Proposed dominance and NoJN/PartialZF crossover", ok,
                  f"dominance violated in {bad}/{pairs} all-feasible trials; "
                  f"NoJN-PartialZF at 6 dBm = {low:+.4f} (need > 0); PartialZF-NoJN at 18 dBm = {high:+.4f} "
                  f"(need > 0); means Proposed/NoJN/PartialZF at 18 dBm = {mean[('Proposed', 18.0)]:.4f}/"
                  f"{mean[('NoJN', 18.0)]:.4f}/{mean[('PartialZF', 18.0)]:.4f}")


def test_criterion_05_zf_threshold():
    bad6 = sum(bl.zf_bases(generate_channels(SystemConfig(N=6), t)).feasible for t in range(TRIALS))
    bad7 = sum(not bl.zf_bases(generate_channels(SystemConfig(N=7), t)).feasible for t in range(TRIALS))
    assert report(5, "zero-forcing threshold", bad6 == 0 and bad7 == 0,
                  f"N=6 feasible in {bad6}/{TRIALS} (need 0), N=7 infeasible in {bad7}/{TRIALS} (need 0)")


def test_criterion_06_chance_validity(desk_robust, zero_target_robust, strong_robust):
    floor = 0.99 - 0.003
    desk = [(c, ch, s) for c, ch, s, *_ in desk_robust] + [(c, ch, n) for c, ch, _, n, *_ in desk_robust]
    n_sol, prim_bad, sec_bad, neg = 0, 0, 0, 0
    worst_p, worst_s = 1.0, 1.0
    for cfg, ch, sol in _robust_solutions(desk, zero_target_robust, strong_robust):
        n_sol += 1
        seed = [ch.trial_index, n_sol]
        if active_primary(cfg):
            mc = rbd.mc_primary_chance(sol.bf, sol.params, sol.aux.beta, MC_SAMPLES, seed=seed)
            worst_p = min(worst_p, mc)
            prim_bad += mc < floor
        for g in range(ch.G):
            neg += sol.aux.phi_g[g] < 0
            mc = rbd.mc_secondary_chance(sol.bf, sol.params, g, float(sol.aux.phi_g[g]), MC_SAMPLES,
                                         seed=seed + [g])
            worst_s = min(worst_s, mc)
            sec_bad += mc < floor
    ok = n_sol > 0 and prim_bad == 0 and sec_bad == 0
    assert report(6, "Monte Carlo chance checks at robust solutions", ok,
                  f"{n_sol} solutions; primary violations {prim_bad} (worst {worst_p:.4f}), "
                  f"secondary violations {sec_bad} (worst {worst_s:.4f}; {neg} groups with phi_g < 0 by round-off "
                  f"score 0); floor {floor}")


def test_criterion_07_ball_samples(desk_robust, strong_robust):
    rng = np.random.default_rng(7)
    desk = [(c, ch, s) for c, ch, s, *_ in desk_robust]
    n_sol, bad, worst = 0, 0, np.inf
    for cfg, ch, sol in _robust_solutions(desk, strong_robust):
        n_sol += 1
        for i, l in enumerate(active_primary(cfg)):
            f = ch.f_hat_l[l] + sample_ball(rng, ch.N, float(ch.delta[l]), 1000)
            margin = sr.achieved_pr_sinr(ch, sol.bf, l, f) - (sol.aux.alpha[i] - 1e-6)
            bad += int(np.sum(margin < 0))
            worst = min(worst, float(np.min(margin)))
    assert report(7, "robust PR SINR over the error ball", n_sol > 0 and bad == 0,
                  f"{n_sol} solutions x {len(active_primary(STRONG_CFG))} PRs x 1000 samples; "
                  f"{bad} violations; worst margin {worst:.3g}")


def test_criterion_08_non_robust_degradation(desk_robust):
    rob = np.array([r[4] for r in desk_robust])
    non = np.array([r[5] for r in desk_robust])
    wins, losses = int(np.sum(rob > non)), int(np.sum(rob < non))
    p = binomtest(wins, wins + losses, alternative="greater").pvalue if wins + losses else 1.0
    feas_r = sum(r[2].ok for r in desk_robust)
    feas_n = sum(r[3].ok for r in desk_robust)
    ok = rob.mean() > non.mean() and p < 0.05
    assert report(8, "Robust beats NonRobust at 18 dBm", ok,
                  f"mean scored {rob.mean():.4f} vs {non.mean():.4f}; wins {wins}, losses {losses}, "
                  f"ties {len(rob) - wins - losses}, sign-test p = {p:.3g}; feasible Robust {feas_r}/{len(rob)}, "
                  f"NonRobust {feas_n}/{len(rob)}")


def test_criterion_09_surrogates():
    a = audit_surrogates(SystemConfig(), instances=20, points=1000, seed=0)
    ok = a.tightness <= 1e-9 and a.direction >= 0 and a.gradient <= 1e-4
    assert report(9, "surrogate tightness, direction and tangency", ok,
                  f"tightness {a.tightness:.2e} (<= 1e-9), min margin {a.direction:.2e} over {a.points} points "
                  f"(>= 0), gradient rel. error {a.gradient:.2e} (<= 1e-4)")


def test_criterion_10_toy_oracle():
    cfg = toy_oracle.toy_config()
    bad, notes = 0, []
    for t in range(10):
        ch = generate_channels(cfg, t)
        sol = sp.run(ch, cfg)
        ref = toy_oracle.reference_value(ch, cfg)
        if not ref["feasible"] and not sol.ok:
            notes.append(f"t{t}: both infeasible")
            continue
        if ref["feasible"] != sol.ok:
            bad += 1
            notes.append(f"t{t}: feasibility differs (oracle {ref['feasible']}, SCA {sol.ok})")
            continue
        gap = ref["refined"] - sol.phi
        bad += abs(gap) > 0.05
        notes.append(f"t{t}: oracle-SCA {gap:+.4f} ({'local' if gap > 1e-3 else 'global'})")
    assert report(10, "toy instance against dense grid", bad == 0,
                  f"{bad}/10 trials outside 0.05; " + "; ".join(notes))


def test_criterion_11_replay(tmp_path):
    spec = harness.ExperimentSpec.default("fig7_cdf", trials=2, out_dir=str(tmp_path / "orig"))
    harness.run_experiment(spec)
    _, same = harness.replay(tmp_path / "orig" / "manifest.json", tmp_path / "again")
    assert report(11, "replay determinism", same is True,
                  f"trials.csv byte-identical = {same} (fig7 mixed run, schemes {', '.join(spec.schemes)})")

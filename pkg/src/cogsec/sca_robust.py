"""Robust design for imperfect PR channels and passive eavesdroppers.

The PR channels are only known up to a ball of radius ``delta_l`` around
the estimate; eavesdropper channels are unknown and handled through the
closed-form chance bounds of :mod:`cogsec.robust_bounds`.  The jamming is
described by its covariance ``U~``.  Every iteration solves a
semidefinite program whose constraints are inner approximations of the
robust problem, tight at the current expansion data.

Primary block (only present when some PR has a positive target)::

    ln(1+a_n) + 1 - q_l >= (z + Rbar_l) ln2,  q_l (1 + alpha_l) >= 1 + a_n
    ln(1+b_n) + (beta - b_n)/(1 + b_n) <= z ln2
    sum_g mu_lg + mu~_l + s_l <= 2 P|h_l|^2/a_n - P|h_l|^2 alpha_l / a_n^2
    S-procedure LMIs for mu_lg, mu~_l
    v (1 + a (beta - b_n)) >= exp(-a b_n)                      (v plays eta^2)
    (v/c - 1) P_p <= 2 r_n r - r_n^2,  beta theta >= r^2
    U~ >= theta I

Secondary block::

    F_mg(w, U~) >= (phi + t_g) ln2
    ln(1+p_n) + (phi_g - p_n)/(1 + p_n) <= t_g ln2
    ||w_g||^2 / phi_g <= xi_g + sum_{i!=g} (2 Re{w_i,n^H w_i} - ||w_i,n||^2) + vartheta
    U~ >= vartheta I
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import model
from .conic import (Affine, CAffine, ConicProgram, add_lambda_min_floor, add_quadratic_over_linear,
                    add_sum_squares_le, build_lmi_C_l_tilde, build_lmi_C_lg, concat, real_inner, solve)
from .model import LN2, ChannelSet, RobustBeamformer, SystemConfig
from .robust_bounds import ChanceBoundParams, beta_for_floor, xi_g, xi_tilde
from .sca_perfect import IterationTrace, active_primary
from .surrogates import ExpansionPoint, add_surrogate_bound, build_F_mg

BETA_MIN = 1e-6


@dataclass
class RobustAux:
    """Auxiliary variables of the robust problem at one point."""

    phi_g: np.ndarray
    t: np.ndarray
    vartheta: float
    alpha: np.ndarray | None = None  # per active PR, ordered as ``active_primary``
    beta: float | None = None
    theta: float | None = None
    eta: float | None = None
    z: float | None = None
    mu: np.ndarray | None = None
    mu_tilde: np.ndarray | None = None
    omega: np.ndarray | None = None
    omega_tilde: np.ndarray | None = None
    phi: float = float("nan")

    @property
    def v(self) -> float | None:
        return None if self.eta is None else self.eta ** 2


@dataclass
class RobustSolution:
    status: str  # ok | infeasible | failure
    bf: RobustBeamformer | None
    aux: RobustAux | None
    phi: float
    trace: IterationTrace
    params: ChanceBoundParams | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


# ----------------------------------------------------------------------
# closed-form pieces at a fixed beamformer


def worst_case_interference(ch: ChannelSet, rb: RobustBeamformer, l: int) -> float:
    """Upper bound on the PR-l interference-plus-noise over the error ball (triangle inequality)."""
    f = ch.f_hat_l[l]
    d = ch.delta[l]
    total = 0.0
    for g in range(rb.w.shape[0]):
        total += (abs(f.conj() @ rb.w[g]) + d * np.linalg.norm(rb.w[g])) ** 2
    evals, evecs = np.linalg.eigh(rb.U_tilde)
    root = (evecs * np.sqrt(np.clip(evals, 0, None))) @ evecs.conj().T
    total += (np.linalg.norm(root @ f) + d * np.sqrt(max(evals[-1], 0.0))) ** 2
    return float(total + ch.s2_pr[l])


def secondary_bound_phi(rb: RobustBeamformer, p: ChanceBoundParams, g: int, vartheta: float) -> float:
    """Smallest ``phi_g`` meeting the secondary chance bound with equality."""
    w = rb.w
    others = sum(np.linalg.norm(w[i]) ** 2 for i in range(w.shape[0]) if i != g)
    return float(np.linalg.norm(w[g]) ** 2 / (xi_g(p, g) + others + vartheta))


def achieved_pr_sinr(ch: ChannelSet, rb: RobustBeamformer, l: int, f: np.ndarray) -> np.ndarray:
    """PR-l SINR for each row of ``f`` taken as the true ST->PR channel."""
    f = np.atleast_2d(f)
    interf = (np.abs(f.conj() @ rb.w.T) ** 2).sum(axis=1) + rb.jam_quad(f) + ch.s2_pr[l]
    return ch.P_p * abs(ch.h_l[l]) ** 2 / interf


def primary_criterion(aux: RobustAux, config: SystemConfig) -> float:
    act = active_primary(config)
    if not act:
        return float("inf")
    return float(min(np.log2(1 + aux.alpha[i]) - aux.z - config.R_bar[l] for i, l in enumerate(act)))


def secondary_guarantee(ch: ChannelSet, rb: RobustBeamformer, aux: RobustAux) -> float:
    """``min_g,m log2(1 + Gamma_sr) - log2(1 + phi_g)`` evaluated directly."""
    vals = []
    for g in range(ch.G):
        r = np.log2(1 + model.sinr_sr_all(ch, rb, g))
        vals.append(np.min(r) - np.log2(1 + aux.phi_g[g]))
    return float(min(vals))


def starting_point(ch: ChannelSet, config: SystemConfig, p: ChanceBoundParams,
                   rng: np.random.Generator | None = None) -> tuple[RobustBeamformer, RobustAux]:
    """Random ``w`` at half power, ``U~ = P_s/(2N) I`` and consistent auxiliaries."""
    if rng is None:
        rng = np.random.default_rng([ch.seed & 0xFFFFFFFFFFFFFFFF, ch.trial_index, 1])
    N, G = ch.N, ch.G
    w = model.crandn(rng, G, N)
    w *= np.sqrt(config.P_s / 2) / np.linalg.norm(w)
    rb = RobustBeamformer(w=w, U_tilde=(config.P_s / (2 * N)) * np.eye(N, dtype=complex))
    return rb, derive_aux(ch, rb, config, p)


def scalar_start(ch: ChannelSet, config: SystemConfig, p: ChanceBoundParams,
                 rng: np.random.Generator | None = None, n_theta: int = 60) -> tuple[RobustBeamformer, RobustAux]:
    """Grid search over isotropic jamming ``theta I`` and the power of a fixed random ``w``.

    Used when the feasibility phase stalls from the default start: the
    primary criterion is cheap in closed form along this family.  Among
    primary-feasible candidates the one with the most information power is
    kept, otherwise the one with the best criterion.
    """
    if rng is None:
        rng = np.random.default_rng([ch.seed & 0xFFFFFFFFFFFFFFFF, ch.trial_index, 2])
    N, G = ch.N, ch.G
    d = model.crandn(rng, G, N)
    d /= np.linalg.norm(d)
    best, best_key = None, None
    for frac in (0.5, 0.1, 1e-2, 1e-3, 1e-4):
        pw = frac * config.P_s
        for th in np.logspace(-4, np.log10((config.P_s - pw) / N), n_theta):
            rb = RobustBeamformer(w=d * np.sqrt(pw), U_tilde=th * np.eye(N, dtype=complex))
            aux = derive_aux(ch, rb, config, p)
            crit = primary_criterion(aux, config)
            key = (crit >= 0, pw if crit >= 0 else crit)
            if best_key is None or key > best_key:
                best, best_key = (rb, aux), key
    return best


def derive_aux(ch: ChannelSet, rb: RobustBeamformer, config: SystemConfig, p: ChanceBoundParams,
               primary: RobustAux | None = None) -> RobustAux:
    """Auxiliaries tight at ``rb``: theta = lambda_min, beta from the floor, alpha from the worst case."""
    lam = float(max(np.linalg.eigvalsh(rb.U_tilde)[0], 0.0))
    phi_g = np.array([secondary_bound_phi(rb, p, g, lam) for g in range(ch.G)])
    aux = RobustAux(phi_g=phi_g, t=np.log2(1 + phi_g), vartheta=lam)
    act = active_primary(config)
    if not act:
        return aux
    if primary is not None:
        aux.alpha, aux.beta, aux.theta, aux.eta, aux.z = (primary.alpha, primary.beta, primary.theta,
                                                          primary.eta, primary.z)
        return aux
    beta = beta_for_floor(lam, p) if lam > 0 else 1e6
    aux.theta = lam
    aux.beta = beta
    aux.eta = float(np.exp(-beta * p.a / 2))
    aux.z = float(np.log2(1 + beta))
    aux.alpha = np.array([ch.P_p * abs(ch.h_l[l]) ** 2 / worst_case_interference(ch, rb, l) for l in act])
    return aux


# ----------------------------------------------------------------------
# program assembly


def _add_primary_block(prog, ch, config, p, aux_n, w, Ut, tau=None):
    act = active_primary(config)
    G = ch.G
    z = prog.variable((), "z")
    alpha = prog.variable(len(act), "alpha")
    q = prog.variable(len(act), "q")
    beta = prog.variable((), "beta")
    mu = prog.variable((len(act), G), "mu")
    mu_t = prog.variable(len(act), "mu~")
    om = prog.variable((len(act), G), "omega")
    om_t = prog.variable(len(act), "omega~")
    theta = prog.variable((), "theta")
    v = prog.variable((), "v")
    prog.add_nonneg(concat([om.flatten(), om_t, theta, alpha, beta - BETA_MIN]), "primary:bounds")
    for i, l in enumerate(act):
        a_n = float(aux_n.alpha[i])
        target = z + config.R_bar[l] if tau is None else z + config.R_bar[l] + tau
        prog.add_nonneg(np.log1p(a_n) + 1.0 - q[i] - target * LN2, f"alpha_rate[{l}]")
        prog.add_rsoc(q[i], (alpha[i] + 1.0) * 0.5, Affine.const([np.sqrt(1.0 + a_n)]), f"alpha_q[{l}]")
        ph = ch.P_p * abs(ch.h_l[l]) ** 2
        prog.add_nonneg(2 * ph / a_n - alpha[i] * (ph / a_n ** 2) - mu[i].sum() - mu_t[i] - ch.s2_pr[l],
                        f"budget[{l}]")
        for g in range(G):
            build_lmi_C_lg(prog, w[g], mu[i, g], om[i, g], ch.f_hat_l[l], float(ch.delta[l]), f"C[{l},{g}]")
        build_lmi_C_l_tilde(prog, Ut, mu_t[i], om_t[i], ch.f_hat_l[l], float(ch.delta[l]), f"C~[{l}]")
    b_n = float(aux_n.beta)
    prog.add_nonneg(z * LN2 - np.log1p(b_n) - (beta - b_n) / (1.0 + b_n), "beta_rate")
    a = p.a
    prog.add_rsoc(v, (1.0 + (beta - b_n) * a) * 0.5, Affine.const([np.exp(-a * b_n / 2)]), "eta")
    # beta * theta >= r^2 is a rotated cone; only r^2 is linearised, so moves along the hyperbola are free
    r = prog.variable((), "r")
    r_n = float(np.sqrt(max(b_n * float(aux_n.theta), 0.0)))
    prog.add_rsoc(beta * 0.5, theta, r.reshape(1), "bilinear")
    prog.add_nonneg(r * (2 * r_n) - r_n ** 2 - (v * (1.0 / p.c_tilde) - 1.0) * p.P_p, "bilinear:tangent")
    add_lambda_min_floor(prog, Ut, theta, "U>=theta")
    return {"z": z, "alpha": alpha, "q": q, "beta": beta, "mu": mu, "mu~": mu_t, "omega": om,
            "omega~": om_t, "theta": theta, "v": v}


def _add_power(prog, w, Ut, config):
    tr = real_inner(np.eye(Ut.shape[0]), Ut)
    add_sum_squares_le(prog, w.real_parts(), config.P_s - tr, "power")


def build_robust_subproblem(ch: ChannelSet, ep: ExpansionPoint, aux_n: RobustAux, config: SystemConfig,
                            p: ChanceBoundParams) -> ConicProgram:
    rb_n = ep.bf
    prog = ConicProgram("sca-robust")
    G, N = ch.G, ch.N
    w = prog.complex_variable((G, N), "w")
    Ut = prog.hermitian_variable(N, "U~")
    phi = prog.variable((), "phi")
    t = prog.variable(G, "t")
    phi_g = prog.variable(G, "phi_g")
    vt = prog.variable((), "vartheta")
    handles = {"w": w, "U~": Ut, "phi": phi, "t": t, "phi_g": phi_g, "vartheta": vt}
    prog.add_nonneg(vt, "vartheta>=0")
    for g in range(G):
        for m in range(len(ch.h_mg[g])):
            add_surrogate_bound(prog, build_F_mg(ch, ep, g, m), w, Ut, (phi + t[g]) * LN2)
        pn = float(aux_n.phi_g[g])
        prog.add_nonneg(t[g] * LN2 - np.log1p(pn) - (phi_g[g] - pn) / (1.0 + pn), f"phi_rate[{g}]")
        rhs = Affine.const(xi_g(p, g)) + vt
        for i in range(G):
            if i != g:
                rhs = rhs + real_inner(2 * rb_n.w[i], w[i]) - float(np.linalg.norm(rb_n.w[i]) ** 2)
        add_quadratic_over_linear(prog, w[g].real_parts(), phi_g[g], rhs, f"eve_bound[{g}]")
    add_lambda_min_floor(prog, Ut, vt, "U>=vartheta")
    if active_primary(config):
        handles.update(_add_primary_block(prog, ch, config, p, aux_n, w, Ut))
    _add_power(prog, w, Ut, config)
    prog.maximize(phi)
    prog._handles = handles
    return prog


def build_robust_init(ch, rb_n, aux_n, config, p) -> ConicProgram:
    prog = ConicProgram("robust-init")
    G, N = ch.G, ch.N
    w = prog.complex_variable((G, N), "w")
    Ut = prog.hermitian_variable(N, "U~")
    tau = prog.variable((), "tau")
    handles = {"w": w, "U~": Ut, "tau": tau}
    handles.update(_add_primary_block(prog, ch, config, p, aux_n, w, Ut, tau))
    _add_power(prog, w, Ut, config)
    prog.maximize(tau)
    prog._handles = handles
    return prog


def _read_primary(h, x, aux: RobustAux):
    aux.alpha = np.atleast_1d(h["alpha"].value(x))
    aux.beta = float(h["beta"].value(x))
    aux.theta = float(h["theta"].value(x))
    aux.eta = float(np.sqrt(max(h["v"].value(x), 0.0)))
    aux.z = float(h["z"].value(x))
    aux.mu = h["mu"].value(x)
    aux.mu_tilde = h["mu~"].value(x)
    aux.omega = h["omega"].value(x)
    aux.omega_tilde = h["omega~"].value(x)


def _read_bf(h, x) -> RobustBeamformer:
    U = h["U~"].value(x)
    return RobustBeamformer(w=h["w"].value(x), U_tilde=(U + U.conj().T) / 2)


# ----------------------------------------------------------------------
# algorithm


def robust_initialize(ch: ChannelSet, config: SystemConfig, p: ChanceBoundParams | None = None,
                      start: RobustBeamformer | None = None, backend: str = "clarabel", fallback: bool = True):
    """Feasibility phase for the primary block.

    Starts from :func:`starting_point` (or ``start``); if that stalls and
    ``fallback`` is set, restarts once from :func:`scalar_start`.
    Returns ``(rb, aux, ok, iterations, values)``.
    """
    p = p or ChanceBoundParams.from_config(config, ch)
    if start is None:
        rb, aux = starting_point(ch, config, p)
    else:
        rb, aux = start, derive_aux(ch, start, config, p)
    out = _initialize_from(ch, config, p, rb, aux, backend)
    if out[2] or start is not None or not fallback:
        return out
    rb, aux = scalar_start(ch, config, p)
    rb, aux, ok, it, values = _initialize_from(ch, config, p, rb, aux, backend)
    return rb, aux, ok, out[3] + it, out[4] + values


def _initialize_from(ch, config, p, rb, aux, backend):
    crit = primary_criterion(aux, config)
    values = [crit]
    if crit >= 0:
        return rb, aux, True, 0, values
    for it in range(1, config.sca.init_max_iterations + 1):
        prog = build_robust_init(ch, rb, aux, config, p)
        res = solve(prog, backend)
        if not res.ok:
            return rb, aux, False, it, values
        h = prog._handles
        rb = _read_bf(h, res.x)
        new = derive_aux(ch, rb, config, p)
        _read_primary(h, res.x, new)
        aux = new
        crit = primary_criterion(aux, config)
        values.append(crit)
        if crit >= 0 or res.objective >= 0:
            return rb, aux, crit >= -1e-7, it, values
        if it > 1 and abs(values[-1] - values[-2]) <= 1e-7:
            return rb, aux, False, it, values
    return rb, aux, False, config.sca.init_max_iterations, values


def robust_run(ch: ChannelSet, config: SystemConfig, start: RobustBeamformer | None = None,
               backend: str = "clarabel") -> RobustSolution:
    p = ChanceBoundParams.from_config(config, ch)
    trace = IterationTrace()
    t0 = time.perf_counter()
    rb, aux, ok, n_init, values = robust_initialize(ch, config, p, start, backend)
    trace.init_iterations = n_init
    trace.init_values = values
    if not ok:
        trace.final_status = "infeasible"
        return RobustSolution("infeasible", None, None, float("nan"), trace, p)
    # secondary auxiliaries tight at the feasible point
    aux = derive_aux(ch, rb, config, p, primary=aux if active_primary(config) else None)
    phi = secondary_guarantee(ch, rb, aux)
    aux.phi = phi
    trace.append(0, phi, "start", time.perf_counter() - t0)
    status = "converged"
    n = 0
    for n in range(1, config.sca.max_iterations + 1):
        ep = ExpansionPoint.at(ch, rb)
        prog = build_robust_subproblem(ch, ep, aux, config, p)
        res = solve(prog, backend)
        if not res.ok:
            trace.append(n, float("nan"), res.status, res.wall_time)
            status = res.status
            n -= 1
            break
        h = prog._handles
        trace.append(n, res.objective, "optimal", res.wall_time)
        prev = phi
        rb = _read_bf(h, res.x)
        new = RobustAux(phi_g=h["phi_g"].value(res.x), t=h["t"].value(res.x),
                        vartheta=float(h["vartheta"].value(res.x)), phi=res.objective)
        if active_primary(config):
            _read_primary(h, res.x, new)
        aux = new
        phi = res.objective
        if abs(phi - prev) / max(1.0, abs(prev)) <= config.sca.tolerance:
            break
    else:
        status = "max_iterations"
    trace.iterations = n
    trace.final_status = status
    if n == 0:
        return RobustSolution("failure", None, None, float("nan"), trace, p)
    return RobustSolution("ok", rb, aux, float(phi), trace, p)


def run_non_robust(ch: ChannelSet, config: SystemConfig, backend: str = "clarabel") -> RobustSolution:
    """Robust machinery applied to the estimates as if they were exact (radius zero)."""
    return robust_run(ch.presumed(), config, backend=backend)


def true_primary_ok(ch: ChannelSet, sol: RobustSolution, config: SystemConfig, tol: float = 1e-6) -> bool:
    """Primary targets checked on the true PR channels against the design's Eve level ``z``."""
    act = active_primary(config)
    if not act:
        return True
    g = model.sinr_pr_all(ch, sol.bf)
    return all(np.log2(1 + g[l]) - sol.aux.z >= config.R_bar[l] - tol for l in act)


def scored_secrecy(ch: ChannelSet, sol: RobustSolution, config: SystemConfig) -> float:
    """Reported metric: the guarantee if the true-channel primary check passes, else zero."""
    if not sol.ok:
        return 0.0
    return max(0.0, sol.phi) if true_primary_ok(ch, sol, config) else 0.0

"""Max-min secondary secrecy design with perfect CSI by successive convex approximation.

Each iteration replaces every log-SINR term by its bound from
:mod:`cogsec.surrogates` around the current point and solves the resulting
second-order cone program.  A feasibility phase with the same machinery
produces the first point that satisfies the primary secrecy targets.

The same loop also drives the reduced designs used by the baselines
(jamming removed, null-space parametrisations, split power budgets)
through :class:`Design`.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import model
from .conic import Affine, CAffine, ConicProgram, cconcat, concat, solve
from .model import LN2, Beamformer, ChannelSet, SystemConfig
from .surrogates import (ExpansionPoint, add_surrogate_bound, build_F_kg, build_F_mg, build_P_kp,
                         build_P_l)


@dataclass(frozen=True)
class Design:
    """Feasible-set restriction of the full problem.

    ``V_w`` holds one orthonormal basis (N x d_g) per group or None for the
    full space; ``V_U`` is a basis for the jamming columns or None for
    unrestricted jamming; ``jamming=False`` removes ``U`` altogether;
    ``split`` gives separate (information, jamming) budgets.
    """

    name: str = "full"
    V_w: tuple | None = None
    V_U: np.ndarray | None = None
    jamming: bool = True
    split: tuple[float, float] | None = None


FULL = Design()


@dataclass
class IterationRecord:
    index: int
    phi: float
    status: str
    wall_time: float


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)
    final_status: str = "running"
    iterations: int = 0
    init_iterations: int = 0
    init_values: list = field(default_factory=list)

    @property
    def phis(self) -> np.ndarray:
        return np.array([r.phi for r in self.records])

    def append(self, index, phi, status, wall):
        self.records.append(IterationRecord(int(index), float(phi), status, float(wall)))


@dataclass
class PerfectSolution:
    status: str  # ok | infeasible | failure
    bf: Beamformer | None
    phi: float
    t: np.ndarray | None
    z: float | None
    trace: IterationTrace
    design: str = "full"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass
class SubproblemSolution:
    status: str
    w: np.ndarray | None
    U: np.ndarray | None
    phi: float
    t: np.ndarray | None
    z: float | None
    wall_time: float
    raw: object = None


# ----------------------------------------------------------------------
# helpers


def active_primary(config: SystemConfig) -> list[int]:
    """PRs with a positive target; a zero target is met by every point."""
    return [l for l, r in enumerate(config.R_bar) if r > 0]


def eve_rates(ch: ChannelSet, bf) -> tuple[np.ndarray, float]:
    """Best secondary-side Eve rate per group and best primary-side Eve rate (bits)."""
    t = np.array([np.max(np.log2(1 + model.sinr_sr_eve_all(ch, bf, g))) for g in range(ch.G)])
    z = float(np.max(np.log2(1 + model.sinr_pr_eve_all(ch, bf))))
    return t, z


def primary_criterion(ch: ChannelSet, bf, config: SystemConfig) -> float:
    """``min_l log2(1 + Gamma_pr,l) - z - Rbar_l`` over active PRs (+inf if none)."""
    act = active_primary(config)
    if not act:
        return float("inf")
    _, z = eve_rates(ch, bf)
    r = np.log2(1 + model.sinr_pr_all(ch, bf))
    return float(min(r[l] - z - config.R_bar[l] for l in act))


def starting_point(ch: ChannelSet, config: SystemConfig, design: Design = FULL,
                   rng: np.random.Generator | None = None) -> Beamformer:
    """Random ``w`` at half the budget plus (projected) isotropic jamming at the other half."""
    if rng is None:
        rng = np.random.default_rng([ch.seed & 0xFFFFFFFFFFFFFFFF, ch.trial_index, 1])
    N, G = ch.N, ch.G
    w = model.crandn(rng, G, N)
    if design.V_w is not None:
        w = np.stack([V @ (V.conj().T @ w[g]) for g, V in enumerate(design.V_w)])
    w *= np.sqrt(config.P_s / 2) / np.linalg.norm(w)
    if not design.jamming:
        U = np.zeros((N, N), dtype=complex)
    elif design.V_U is None:
        U = np.sqrt(config.P_s / (2 * N)) * np.eye(N, dtype=complex)
    else:
        V = design.V_U
        U = np.sqrt(config.P_s / (2 * V.shape[1])) * (V @ V.conj().T)
    return Beamformer(w=w, U=U)


def _variables(prog: ConicProgram, ch: ChannelSet, design: Design):
    N, G = ch.N, ch.G
    if design.V_w is None:
        w = prog.complex_variable((G, N), "w")
    else:
        rows = []
        for g, V in enumerate(design.V_w):
            wt = prog.complex_variable(V.shape[1], f"w~{g}")
            rows.append((V @ wt).reshape(1, N))
        w = cconcat(rows)
    if not design.jamming:
        U = None
    elif design.V_U is None:
        U = prog.complex_variable((N, N), "U")
    else:
        Uc = prog.complex_variable((design.V_U.shape[1], N), "U~")
        U = design.V_U @ Uc
    return w, U


def _add_power(prog: ConicProgram, w: CAffine, U: CAffine | None, config: SystemConfig, design: Design):
    if design.split is None:
        parts = [w.real_parts()] + ([U.real_parts()] if U is not None else [])
        prog.add_soc(np.sqrt(config.P_s), concat(parts), "power")
    else:
        pw, pu = design.split
        prog.add_soc(np.sqrt(pw), w.real_parts(), "power:w")
        if U is not None:
            prog.add_soc(np.sqrt(pu), U.real_parts(), "power:U")


def _add_primary(prog, ch, ep, config, w, U, z, tau=None):
    for l in active_primary(config):
        rhs = (z + config.R_bar[l]) * LN2 if tau is None else (z + config.R_bar[l] + tau) * LN2
        add_surrogate_bound(prog, build_P_l(ch, ep, l), w, U, rhs)
    for k in range(ch.K_p):
        add_surrogate_bound(prog, build_P_kp(ch, ep, k), w, U, z * LN2)


def _extract(res, w, U, ch):
    wv = w.value(res.x)
    Uv = U.value(res.x) if U is not None else np.zeros((ch.N, ch.N), dtype=complex)
    return wv, Uv


# ----------------------------------------------------------------------
# feasibility phase


def initialize(ch: ChannelSet, config: SystemConfig, design: Design = FULL, start: Beamformer | None = None,
               backend: str = "clarabel"):
    """Find a point meeting every active primary target.

    Returns ``(bf, ok, iterations, values)`` where ``values`` records the
    criterion (bits) at the start and after every convex step.
    """
    bf = start if start is not None else starting_point(ch, config, design)
    crit = primary_criterion(ch, bf, config)
    values = [crit]
    if crit >= 0:
        return bf, True, 0, values
    for it in range(1, config.sca.init_max_iterations + 1):
        ep = ExpansionPoint.at(ch, bf)
        prog = ConicProgram("init")
        w, U = _variables(prog, ch, design)
        z = prog.variable((), "z")
        tau = prog.variable((), "tau")
        _add_primary(prog, ch, ep, config, w, U, z, tau)
        _add_power(prog, w, U, config, design)
        prog.maximize(tau)
        res = solve(prog, backend)
        if not res.ok:
            return bf, False, it, values
        wv, Uv = _extract(res, w, U, ch)
        bf = Beamformer(w=wv, U=Uv)
        crit = primary_criterion(ch, bf, config)
        values.append(crit)
        if crit >= 0 or res.objective >= 0:
            return bf, crit >= -1e-7, it, values
        if it > 1 and abs(values[-1] - values[-2]) <= 1e-7:
            return bf, False, it, values
    return bf, False, config.sca.init_max_iterations, values


# ----------------------------------------------------------------------
# main loop


def solve_subproblem(ch: ChannelSet, ep: ExpansionPoint, config: SystemConfig, design: Design = FULL,
                     backend: str = "clarabel") -> SubproblemSolution:
    """One convex step: maximise phi subject to all surrogate constraints."""
    prog = build_subproblem(ch, ep, config, design)
    res = solve(prog, backend)
    w, U = prog._handles["w"], prog._handles["U"]
    if not res.ok:
        return SubproblemSolution(res.status, None, None, float("nan"), None, None, res.wall_time, res)
    wv, Uv = _extract(res, w, U, ch)
    t = prog._handles["t"].value(res.x)
    z = prog._handles["z"]
    return SubproblemSolution("optimal", wv, Uv, res.objective, t,
                              float(z.value(res.x)) if z is not None else None, res.wall_time, res)


def build_subproblem(ch: ChannelSet, ep: ExpansionPoint, config: SystemConfig, design: Design = FULL) -> ConicProgram:
    prog = ConicProgram("sca-perfect")
    w, U = _variables(prog, ch, design)
    phi = prog.variable((), "phi")
    t = prog.variable(ch.G, "t")
    z = prog.variable((), "z") if active_primary(config) else None
    for g in range(ch.G):
        for m in range(len(ch.h_mg[g])):
            add_surrogate_bound(prog, build_F_mg(ch, ep, g, m), w, U, (phi + t[g]) * LN2)
        for k in range(len(ch.g_kg[g])):
            add_surrogate_bound(prog, build_F_kg(ch, ep, g, k), w, U, t[g] * LN2)
    if z is not None:
        _add_primary(prog, ch, ep, config, w, U, z)
    _add_power(prog, w, U, config, design)
    prog.maximize(phi)
    prog._handles = {"w": w, "U": U, "phi": phi, "t": t, "z": z}
    return prog


def expansion_phi(ch: ChannelSet, bf: Beamformer) -> float:
    """Objective of the reformulated problem at ``bf`` (auxiliaries set to exact Eve rates)."""
    return model.secondary_margin(ch, bf)


def run(ch: ChannelSet, config: SystemConfig, design: Design = FULL, start: Beamformer | None = None,
        backend: str = "clarabel") -> PerfectSolution:
    """Feasibility phase followed by SCA iterations until the relative change drops below tolerance."""
    trace = IterationTrace()
    t0 = time.perf_counter()
    bf, ok, n_init, values = initialize(ch, config, design, start, backend)
    trace.init_iterations = n_init
    trace.init_values = values
    if not ok:
        trace.final_status = "infeasible"
        return PerfectSolution("infeasible", None, float("nan"), None, None, trace, design.name)
    phi = expansion_phi(ch, bf)
    trace.append(0, phi, "start", time.perf_counter() - t0)
    t_best, z_best = eve_rates(ch, bf)
    z_best = z_best if active_primary(config) else None
    status = "converged"
    n = 0
    for n in range(1, config.sca.max_iterations + 1):
        ep = ExpansionPoint.at(ch, bf)
        sub = solve_subproblem(ch, ep, config, design, backend)
        if sub.status != "optimal":
            trace.append(n, float("nan"), sub.status, sub.wall_time)
            status = sub.status
            n -= 1
            break
        trace.append(n, sub.phi, "optimal", sub.wall_time)
        prev = phi
        bf = Beamformer(w=sub.w, U=sub.U)
        phi, t_best, z_best = sub.phi, sub.t, sub.z
        if abs(phi - prev) / max(1.0, abs(prev)) <= config.sca.tolerance:
            break
    else:
        status = "max_iterations"
    trace.iterations = n
    trace.final_status = status
    if n == 0:
        return PerfectSolution("failure", None, float("nan"), None, None, trace, design.name)
    return PerfectSolution("ok", bf, float(phi), np.asarray(t_best), z_best, trace, design.name)


def stationarity_gap(ch: ChannelSet, sol: PerfectSolution, config: SystemConfig, design: Design = FULL,
                     backend: str = "clarabel") -> float:
    """Objective change from one more convex step at the returned point."""
    sub = solve_subproblem(ch, ExpansionPoint.at(ch, sol.bf), config, design, backend)
    return float(sub.phi - sol.phi) if sub.status == "optimal" else float("nan")

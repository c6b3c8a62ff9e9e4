"""Comparison schemes: no jamming, partial zero-forcing, equal power split and non-robust design."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import sca_perfect, sca_robust
from .model import Beamformer, ChannelSet, SystemConfig
from .sca_perfect import Design, IterationTrace, PerfectSolution

ZF_CUTOFF = 1e-10


class SchemeId(str, enum.Enum):
    PROPOSED = "Proposed"
    NO_JN = "NoJN"
    PARTIAL_ZF = "PartialZF"
    EQUAL_SPLIT = "EqualPowerSplit"
    ROBUST = "Robust"
    NON_ROBUST = "NonRobust"

    @classmethod
    def parse(cls, name: str) -> "SchemeId":
        for s in cls:
            if s.value.lower() == name.strip().lower():
                return s
        raise ValueError(f"unknown scheme {name!r}; choose from {[s.value for s in cls]}")


def nullspace(A: np.ndarray, cutoff: float = ZF_CUTOFF) -> np.ndarray:
    """Orthonormal basis (N x d) of ``{x : A^H x = 0}`` where the columns of ``A`` span the constraints."""
    N = A.shape[0]
    if A.shape[1] == 0:
        return np.eye(N, dtype=complex)
    u, s, _ = np.linalg.svd(A, full_matrices=True)
    rank = int(np.sum(s > cutoff * s[0])) if s.size and s[0] > 0 else 0
    return u[:, rank:]


@dataclass
class ZFBases:
    feasible: bool
    V_g: tuple | None
    V_U: np.ndarray | None
    dims: tuple

    def residual(self, ch: ChannelSet) -> float:
        """Largest ``|V^H c|`` over the channels each basis must null."""
        if not self.feasible:
            return float("nan")
        out = 0.0
        for f in ch.f_l:
            out = max(out, np.max(np.abs(self.V_U.conj().T @ f), initial=0.0))
            for V in self.V_g:
                out = max(out, np.max(np.abs(V.conj().T @ f), initial=0.0))
        for g in range(ch.G):
            for h in ch.h_mg[g]:
                out = max(out, np.max(np.abs(self.V_U.conj().T @ h), initial=0.0))
                for i, V in enumerate(self.V_g):
                    if i != g:
                        out = max(out, np.max(np.abs(V.conj().T @ h), initial=0.0))
        return float(out)


def zf_bases(ch: ChannelSet, config: SystemConfig | None = None) -> ZFBases:
    """Null-space bases: jamming avoids every PR and SR, group ``g`` avoids PRs and other groups' SRs."""
    F = np.stack(ch.f_l, axis=1)
    H = [np.stack(ch.h_mg[g], axis=1) for g in range(ch.G)]
    V_U = nullspace(np.concatenate([F] + H, axis=1))
    V_g = tuple(nullspace(np.concatenate([F] + [H[i] for i in range(ch.G) if i != g], axis=1))
                for g in range(ch.G))
    dims = (V_U.shape[1],) + tuple(V.shape[1] for V in V_g)
    if min(dims) <= 0:
        return ZFBases(False, None, None, dims)
    return ZFBases(True, V_g, V_U, dims)


def _infeasible(name: str) -> PerfectSolution:
    tr = IterationTrace(final_status="infeasible")
    return PerfectSolution("infeasible", None, float("nan"), None, None, tr, name)


def run_proposed(ch: ChannelSet, config: SystemConfig, backend: str = "clarabel",
                 start: Beamformer | None = None) -> PerfectSolution:
    return sca_perfect.run(ch, config, sca_perfect.FULL, start=start, backend=backend)


def run_no_jn(ch: ChannelSet, config: SystemConfig, backend: str = "clarabel") -> PerfectSolution:
    return sca_perfect.run(ch, config, Design("NoJN", jamming=False), backend=backend)


def partial_zf_design(ch: ChannelSet, config: SystemConfig) -> Design | None:
    zb = zf_bases(ch, config)
    if not zb.feasible:
        return None
    return Design("PartialZF", V_w=zb.V_g, V_U=zb.V_U)


def run_partial_zf(ch: ChannelSet, config: SystemConfig, backend: str = "clarabel") -> PerfectSolution:
    design = partial_zf_design(ch, config)
    if design is None:
        return _infeasible("PartialZF")
    return sca_perfect.run(ch, config, design, backend=backend)


def run_equal_split(ch: ChannelSet, config: SystemConfig, backend: str = "clarabel") -> PerfectSolution:
    half = config.P_s / 2
    return sca_perfect.run(ch, config, Design("EqualPowerSplit", split=(half, half)), backend=backend)


def run_robust(ch: ChannelSet, config: SystemConfig, backend: str = "clarabel") -> sca_robust.RobustSolution:
    return sca_robust.robust_run(ch, config, backend=backend)


def run_non_robust(ch: ChannelSet, config: SystemConfig, backend: str = "clarabel") -> sca_robust.RobustSolution:
    """Robust pipeline on the estimates with zero radius; score it with :func:`sca_robust.scored_secrecy`."""
    return sca_robust.run_non_robust(ch, config, backend=backend)


def proposed_best_of(ch: ChannelSet, config: SystemConfig, others: list[PerfectSolution],
                     backend: str = "clarabel") -> PerfectSolution:
    """Proposed scheme from its own start and warm-started from each feasible baseline point.

    Every baseline design is a restriction of the full design, so a warm
    start from its solution is feasible and the monotone loop cannot end
    below it.  The best run is returned; its trace is the one that produced it.
    """
    best = run_proposed(ch, config, backend)
    for sol in others:
        if sol is None or not sol.ok:
            continue
        if best.ok and best.phi >= sol.phi:
            continue
        cand = run_proposed(ch, config, backend, start=sol.bf)
        if cand.ok and (not best.ok or cand.phi > best.phi):
            best = cand
    return best


PERFECT_RUNNERS = {
    SchemeId.PROPOSED: run_proposed,
    SchemeId.NO_JN: run_no_jn,
    SchemeId.PARTIAL_ZF: run_partial_zf,
    SchemeId.EQUAL_SPLIT: run_equal_split,
}
ROBUST_RUNNERS = {
    SchemeId.ROBUST: run_robust,
    SchemeId.NON_ROBUST: run_non_robust,
}

"""Closed-form chance-constraint bounds for passive eavesdroppers and their Monte-Carlo checks.

With i.i.d. Rayleigh eavesdropper channels, the probability that the best
primary-side Eve stays below SINR ``beta`` is lower-bounded through the
smallest eigenvalue of the transmit covariance.  Requiring the bound to
exceed ``eps_tilde`` gives ``lambda_min(U~) >= xi_tilde(beta)``; the
secondary-side analogue gives a group-wise constant ``xi_g``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ChannelSet, RobustBeamformer, SystemConfig, crandn


@dataclass(frozen=True)
class ChanceBoundParams:
    N: int
    K_p: int
    K_g: tuple
    P_p: float
    sigma2_p: float
    sigma2_g: tuple
    eps_tilde: float
    eps_g: tuple

    def __post_init__(self):
        for eps in (self.eps_tilde, *self.eps_g):
            if not 0.0 < eps < 1.0:
                raise ValueError("chance levels must lie in (0, 1)")
        if self.N < 1 or self.K_p < 1 or min(self.K_g) < 1:
            raise ValueError("N and Eve counts must be >= 1")

    @classmethod
    def from_config(cls, config: SystemConfig, ch: ChannelSet | None = None) -> "ChanceBoundParams":
        """Collect constants; with unequal Eve noise the smallest variance is used (worst Eve)."""
        if ch is not None:
            s_p = float(np.min(ch.s2_pe))
            s_g = tuple(float(np.min(s)) for s in ch.s2_se)
        else:
            noise = config.noise_arrays()
            s_p = float(np.min(noise["pe"]))
            s_g = tuple(float(np.min(s)) for s in noise["se"])
        return cls(N=config.N, K_p=config.K_p, K_g=tuple(config.K_g), P_p=float(config.P_p),
                   sigma2_p=s_p, sigma2_g=s_g, eps_tilde=float(config.eps_tilde), eps_g=tuple(config.eps_g))

    @property
    def c_tilde(self) -> float:
        """``(1 - eps_tilde**(1/K_p))**(1/N)``."""
        return float((1.0 - self.eps_tilde ** (1.0 / self.K_p)) ** (1.0 / self.N))

    @property
    def a(self) -> float:
        """Exponent rate ``sigma^2 / (N P_p)`` of the primary bound."""
        return self.sigma2_p / (self.N * self.P_p)


def xi_tilde(beta, p: ChanceBoundParams):
    """Eigenvalue floor that keeps every primary-side Eve below ``beta`` with probability ``eps_tilde``."""
    beta = np.asarray(beta, dtype=float)
    if np.any(beta <= 0):
        raise ValueError("beta must be positive")
    out = (np.exp(-beta * p.a) / p.c_tilde - 1.0) * p.P_p / beta
    return float(out) if out.ndim == 0 else out


def xi_g(p: ChanceBoundParams, g: int) -> float:
    N, K = p.N, p.K_g[g]
    return float((np.exp(p.sigma2_g[g] / (N * p.P_p)) * p.eps_g[g] ** (-1.0 / (N * K)) - 1.0) * p.P_p)


def beta_for_floor(theta: float, p: ChanceBoundParams, lo: float = 1e-6, hi: float = 1e6,
                   rtol: float = 1e-10) -> float:
    """Root of ``xi_tilde(beta) = theta`` by geometric bisection (``xi_tilde`` is decreasing)."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    f_lo = xi_tilde(lo, p) - theta
    f_hi = xi_tilde(hi, p) - theta
    if f_lo < 0:
        return lo
    if f_hi > 0:
        return hi
    while hi / lo - 1.0 > rtol:
        mid = np.sqrt(lo * hi)
        if xi_tilde(mid, p) > theta:
            lo = mid
        else:
            hi = mid
    return float(np.sqrt(lo * hi))


def primary_chance_bound(lam_min: float, beta: float, p: ChanceBoundParams) -> float:
    """Analytic lower bound on the primary chance probability for a given ``lambda_min``."""
    single = 1.0 - np.exp(-beta * p.sigma2_p / p.P_p) * (beta * lam_min / p.P_p + 1.0) ** (-p.N)
    return float(max(single, 0.0) ** p.K_p)


# ----------------------------------------------------------------------
# Monte-Carlo estimators


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def mc_primary_chance(bf: RobustBeamformer, p: ChanceBoundParams, beta: float, samples: int = 20000,
                      seed=0, chunk: int = 5000) -> float:
    """Empirical ``Pr(max_kp Gamma_e,kp <= beta)`` over Rayleigh Eve channels."""
    if beta <= 0:
        return 0.0
    rng = _rng(seed)
    A = bf.w.T @ bf.w.conj() + bf.U_tilde  # sum_g w_g w_g^H + U~
    hits = 0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        f = crandn(rng, n, p.K_p, p.N)
        gch = crandn(rng, n, p.K_p)
        quad = np.real(np.einsum("skn,nm,skm->sk", f.conj(), A, f))
        gam = p.P_p * np.abs(gch) ** 2 / (quad + p.sigma2_p)
        hits += int(np.sum(np.max(gam, axis=1) <= beta))
        done += n
    return hits / samples


def mc_secondary_chance(bf: RobustBeamformer, p: ChanceBoundParams, g: int, phi_g: float,
                        samples: int = 20000, seed=0, chunk: int = 5000) -> float:
    """Empirical ``Pr(max_kg Gamma_e,kg <= phi_g)`` for group ``g``."""
    if phi_g < 0:
        return 0.0
    rng = _rng(seed)
    K = p.K_g[g]
    others = [i for i in range(bf.w.shape[0]) if i != g]
    B = bf.U_tilde + sum(np.outer(bf.w[i], bf.w[i].conj()) for i in others)
    hits = 0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        gv = crandn(rng, n, K, p.N)
        fk = crandn(rng, n, K)
        sig = np.abs(gv.conj() @ bf.w[g]) ** 2
        interf = np.real(np.einsum("skn,nm,skm->sk", gv.conj(), B, gv))
        gam = sig / (interf + p.P_p * np.abs(fk) ** 2 + p.sigma2_g[g])
        hits += int(np.sum(np.max(gam, axis=1) <= phi_g))
        done += n
    return hits / samples


# ----------------------------------------------------------------------
# trace / eigenvalue inequalities


def trace_eig_lower(F: np.ndarray, A: np.ndarray) -> tuple[float, float]:
    """``(tr(F A), tr(F) lambda_min(A))`` for rank-one PSD ``F``; first >= second."""
    lhs = float(np.real(np.trace(F @ A)))
    rhs = float(np.real(np.trace(F)) * np.linalg.eigvalsh(A)[0])
    return lhs, rhs


def trace_eig_upper(G: np.ndarray, B: np.ndarray) -> tuple[float, float]:
    """``(tr(G B), tr(G) lambda_max(B))`` for rank-one PSD ``G``; first <= second."""
    lhs = float(np.real(np.trace(G @ B)))
    rhs = float(np.real(np.trace(G)) * np.linalg.eigvalsh(B)[-1])
    return lhs, rhs

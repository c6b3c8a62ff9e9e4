"""Convex bounding functions for the log-SINR terms.

Three scalar inequalities drive everything here::

    ln(1 + |x|^2/y) >= ln(1 + g) - g + 2 Re{x_n^* x}/y_n - g (|x|^2 + y)/(y_n + |x_n|^2)
    |x|^2 / y       >= 2 Re{x_n^* x}/y_n - |x_n|^2 y / y_n^2
    ln(1 + x)       <= ln(1 + x_n) + (x - x_n)/(1 + x_n)

with ``g = |x_n|^2 / y_n``.  Applied to the SINR expressions they give
four families around an expansion point:

* ``F_mg`` concave lower bound of ``ln(1 + Gamma_sr)``,
* ``F_kg`` convex upper bound of ``ln(1 + Gamma_se)``,
* ``P_l``  concave lower bound of ``ln(1 + Gamma_pr)``,
* ``P_kp`` convex upper bound of ``ln(1 + Gamma_pe)``.

All values are in nats.  Each family is returned as a
:class:`SurrogateCoeffs` object so that the conic layer can translate it
into cone constraints without re-deriving anything.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import Beamformer, ChannelSet, RobustBeamformer


def log_qol_lower(x, y, x_n, y_n) -> float:
    """Tangent-type lower bound of ``ln(1 + |x|^2 / y)`` around ``(x_n, y_n)``."""
    if y <= 0 or y_n <= 0:
        raise ValueError("y and y_n must be positive")
    a = abs(x_n) ** 2
    g = a / y_n
    return float(np.log1p(g) - g + 2.0 * np.real(np.conj(x_n) * x) / y_n - a * (abs(x) ** 2 + y) / (y_n * (y_n + a)))


def qol_lower(x, y, x_n, y_n) -> float:
    """Affine lower bound of ``|x|^2 / y`` around ``(x_n, y_n)``."""
    if y <= 0 or y_n <= 0:
        raise ValueError("y and y_n must be positive")
    return float(2.0 * np.real(np.conj(x_n) * x) / y_n - abs(x_n) ** 2 * y / y_n ** 2)


def log_tangent_upper(x, x_n) -> float:
    """Tangent upper bound of ``ln(1 + x)`` at ``x_n``."""
    if x < 0 or x_n < 0:
        raise ValueError("arguments must be nonnegative")
    return float(np.log1p(x_n) + (x - x_n) / (1.0 + x_n))


# ----------------------------------------------------------------------
# interference terms


def _jam(bf, v):
    return bf.jam_quad(v)


def chi_sr(ch: ChannelSet, bf, g: int) -> np.ndarray:
    """Interference-plus-noise at the SRs of group ``g``."""
    v = ch.h_mg[g]
    p = np.abs(v.conj() @ bf.w.T) ** 2
    return p.sum(axis=1) - p[:, g] + _jam(bf, v) + ch.P_p * np.abs(ch.f_mg[g]) ** 2 + ch.s2_sr[g]


def chi_se(ch: ChannelSet, bf, g: int) -> np.ndarray:
    v = ch.g_kg[g]
    p = np.abs(v.conj() @ bf.w.T) ** 2
    return p.sum(axis=1) - p[:, g] + _jam(bf, v) + ch.P_p * np.abs(ch.f_kg[g]) ** 2 + ch.s2_se[g]


def chi_pr(ch: ChannelSet, bf) -> np.ndarray:
    v = ch.f_l
    return (np.abs(v.conj() @ bf.w.T) ** 2).sum(axis=1) + _jam(bf, v) + ch.s2_pr


def chi_pe(ch: ChannelSet, bf) -> np.ndarray:
    v = ch.f_kp
    return (np.abs(v.conj() @ bf.w.T) ** 2).sum(axis=1) + _jam(bf, v) + ch.s2_pe


@dataclass(frozen=True, eq=False)
class ExpansionPoint:
    """Current iterate with every denominator and SINR cached."""

    bf: object
    chi_sr: list
    chi_se: list
    chi_pr: np.ndarray
    chi_pe: np.ndarray
    sig_sr: list  # |h^H w_g|^2 per group
    sig_se: list
    gamma_sr: list
    gamma_se: list
    gamma_pr: np.ndarray
    gamma_pe: np.ndarray

    @property
    def covariance(self) -> bool:
        return isinstance(self.bf, RobustBeamformer)

    @property
    def w(self):
        return self.bf.w

    @classmethod
    def at(cls, ch: ChannelSet, bf) -> "ExpansionPoint":
        G = ch.G
        c_sr = [chi_sr(ch, bf, g) for g in range(G)]
        c_se = [chi_se(ch, bf, g) for g in range(G)]
        s_sr = [np.abs(ch.h_mg[g].conj() @ bf.w[g]) ** 2 for g in range(G)]
        s_se = [np.abs(ch.g_kg[g].conj() @ bf.w[g]) ** 2 for g in range(G)]
        c_pr = chi_pr(ch, bf)
        c_pe = chi_pe(ch, bf)
        return cls(
            bf=bf, chi_sr=c_sr, chi_se=c_se, chi_pr=c_pr, chi_pe=c_pe, sig_sr=s_sr, sig_se=s_se,
            gamma_sr=[s / c for s, c in zip(s_sr, c_sr)],
            gamma_se=[s / c for s, c in zip(s_se, c_se)],
            gamma_pr=ch.P_p * np.abs(ch.h_l) ** 2 / c_pr,
            gamma_pe=ch.P_p * np.abs(ch.g_kp) ** 2 / c_pe,
        )


@dataclass
class SurrogateCoeffs:
    """Structured description of one bounding function.

    ``sense='lower'`` (concave)::

        constant + lin(w, U) - coef * Q(w, U)
        Q = sum_{i in quad_groups} |v^H w_i|^2 + jam(v) + quad_const

    ``sense='upper'`` (convex)::

        constant + coef * |num|^2 / Phi(w, U),   Phi affine

    where ``num = v^H w_{num_group}`` or the constant ``sqrt(num_const)``
    when ``num_group`` is None.  ``jam(v)`` is ``||v^H U||^2`` for a
    shaping matrix and ``v^H U v`` in covariance mode (then linear).
    Linear maps are ``Re(sum(conj(C) * X))`` with coefficient arrays
    ``lin_w`` (G x N) and ``lin_U`` (N x N).
    """

    sense: str
    constant: float
    coef: float
    v: np.ndarray
    covariance: bool
    lin_w: np.ndarray
    lin_U: np.ndarray
    quad_groups: tuple = ()
    quad_jam: bool = True
    quad_const: float = 0.0
    num_group: int | None = None
    num_const: float = 0.0
    phi_const: float = 0.0
    phi_w: np.ndarray | None = None
    phi_U: np.ndarray | None = None
    sigma2: float = 1.0
    tag: str = ""

    @property
    def phi_floor(self) -> float:
        return 1e-6 * self.sigma2

    def linear(self, w, U) -> float:
        return float(np.real(np.vdot(self.lin_w, w)) + np.real(np.vdot(self.lin_U, U)))

    def jam(self, U) -> float:
        if self.covariance:
            return float(np.real(self.v.conj() @ U @ self.v))
        return float(np.sum(np.abs(self.v.conj() @ U) ** 2))

    def Q(self, w, U) -> float:
        q = sum(abs(self.v.conj() @ w[i]) ** 2 for i in self.quad_groups)
        if self.quad_jam:
            q += self.jam(U)
        return float(q + self.quad_const)

    def phi(self, w, U) -> float:
        return float(self.phi_const + np.real(np.vdot(self.phi_w, w)) + np.real(np.vdot(self.phi_U, U)))

    def numerator2(self, w) -> float:
        if self.num_group is None:
            return float(self.num_const)
        return float(abs(self.v.conj() @ w[self.num_group]) ** 2)

    def evaluate(self, w, U) -> float:
        """Surrogate value in nats; ``+inf`` for an upper bound with ``Phi <= 0``."""
        w = np.asarray(w)
        U = np.asarray(U)
        if self.sense == "lower":
            return self.constant + self.linear(w, U) - self.coef * self.Q(w, U)
        ph = self.phi(w, U)
        if ph <= 0:
            return float("inf")
        return self.constant + self.linear(w, U) + self.coef * self.numerator2(w) / ph


def _zeros_like_point(ch: ChannelSet):
    return np.zeros((ch.G, ch.N), dtype=complex), np.zeros((ch.N, ch.N), dtype=complex)


def _jam_lin(v, ep: ExpansionPoint):
    """Affine under-estimator of the jamming term at ``v``: (const, coefficient)."""
    if ep.covariance:
        return 0.0, np.outer(v, v.conj())
    Un = ep.bf.U
    a = v.conj() @ Un
    return -float(np.sum(np.abs(a) ** 2)), 2.0 * np.outer(v, v.conj()) @ Un


def build_F_mg(ch: ChannelSet, ep: ExpansionPoint, g: int, m: int) -> SurrogateCoeffs:
    v = ch.h_mg[g][m]
    x_n = v.conj() @ ep.w[g]
    chi_n = ep.chi_sr[g][m]
    gam = ep.gamma_sr[g][m]
    lin_w, lin_U = _zeros_like_point(ch)
    lin_w[g] = 2.0 * v * x_n / chi_n
    return SurrogateCoeffs(
        sense="lower",
        constant=float(np.log1p(gam) - gam),
        coef=float(gam / (chi_n + abs(x_n) ** 2)),
        v=v, covariance=ep.covariance, lin_w=lin_w, lin_U=lin_U,
        quad_groups=tuple(range(ch.G)), quad_jam=True,
        quad_const=float(ch.P_p * abs(ch.f_mg[g][m]) ** 2 + ch.s2_sr[g][m]),
        sigma2=float(ch.s2_sr[g][m]), tag=f"F_mg[{g},{m}]",
    )


def build_F_kg(ch: ChannelSet, ep: ExpansionPoint, g: int, k: int) -> SurrogateCoeffs:
    v = ch.g_kg[g][k]
    gam = ep.gamma_se[g][k]
    lin_w, lin_U = _zeros_like_point(ch)
    phi_w = np.zeros((ch.G, ch.N), dtype=complex)
    phi_const = 0.0
    for i in range(ch.G):
        if i == g:
            continue
        x_i = v.conj() @ ep.w[i]
        phi_w[i] = 2.0 * v * x_i
        phi_const -= abs(x_i) ** 2
    jc, phi_U = _jam_lin(v, ep)
    phi_const += jc + ch.P_p * abs(ch.f_kg[g][k]) ** 2 + ch.s2_se[g][k]
    return SurrogateCoeffs(
        sense="upper",
        constant=float(np.log1p(gam) - gam / (1.0 + gam)),
        coef=float(1.0 / (1.0 + gam)),
        v=v, covariance=ep.covariance, lin_w=lin_w, lin_U=lin_U,
        num_group=g, phi_const=float(phi_const), phi_w=phi_w, phi_U=phi_U,
        sigma2=float(ch.s2_se[g][k]), tag=f"F_kg[{g},{k}]",
    )


def build_P_l(ch: ChannelSet, ep: ExpansionPoint, l: int) -> SurrogateCoeffs:
    v = ch.f_l[l]
    sig = ch.P_p * abs(ch.h_l[l]) ** 2
    gam = ep.gamma_pr[l]
    lin_w, lin_U = _zeros_like_point(ch)
    return SurrogateCoeffs(
        sense="lower",
        constant=float(np.log1p(gam) + gam),
        coef=float(gam / (ep.chi_pr[l] + sig)),
        v=v, covariance=ep.covariance, lin_w=lin_w, lin_U=lin_U,
        quad_groups=tuple(range(ch.G)), quad_jam=True,
        quad_const=float(ch.s2_pr[l] + sig),
        sigma2=float(ch.s2_pr[l]), tag=f"P_l[{l}]",
    )


def build_P_kp(ch: ChannelSet, ep: ExpansionPoint, k_p: int) -> SurrogateCoeffs:
    v = ch.f_kp[k_p]
    gam = ep.gamma_pe[k_p]
    lin_w, lin_U = _zeros_like_point(ch)
    phi_w = np.zeros((ch.G, ch.N), dtype=complex)
    phi_const = 0.0
    for i in range(ch.G):
        x_i = v.conj() @ ep.w[i]
        phi_w[i] = 2.0 * v * x_i
        phi_const -= abs(x_i) ** 2
    jc, phi_U = _jam_lin(v, ep)
    phi_const += jc + ch.s2_pe[k_p]
    return SurrogateCoeffs(
        sense="upper",
        constant=float(np.log1p(gam) - gam / (1.0 + gam)),
        coef=float(1.0 / (1.0 + gam)),
        v=v, covariance=ep.covariance, lin_w=lin_w, lin_U=lin_U,
        num_group=None, num_const=float(ch.P_p * abs(ch.g_kp[k_p]) ** 2),
        phi_const=float(phi_const), phi_w=phi_w, phi_U=phi_U,
        sigma2=float(ch.s2_pe[k_p]), tag=f"P_kp[{k_p}]",
    )


def all_surrogates(ch: ChannelSet, ep: ExpansionPoint) -> list[SurrogateCoeffs]:
    out = []
    for g in range(ch.G):
        out += [build_F_mg(ch, ep, g, m) for m in range(len(ch.h_mg[g]))]
        out += [build_F_kg(ch, ep, g, k) for k in range(len(ch.g_kg[g]))]
    out += [build_P_l(ch, ep, l) for l in range(ch.L)]
    out += [build_P_kp(ch, ep, k) for k in range(ch.K_p)]
    return out


def true_log_sinr(ch: ChannelSet, s: SurrogateCoeffs, w, U) -> float:
    """Exact ``ln(1 + SINR)`` of the receiver a surrogate approximates (nats)."""
    from . import model

    bf = RobustBeamformer(w=w, U_tilde=U) if s.covariance else Beamformer(w=w, U=U)
    kind, idx = s.tag.split("[")
    idx = [int(i) for i in idx.rstrip("]").split(",")]
    if kind == "F_mg":
        gam = model.sinr_sr_all(ch, bf, idx[0])[idx[1]]
    elif kind == "F_kg":
        gam = model.sinr_sr_eve_all(ch, bf, idx[0])[idx[1]]
    elif kind == "P_l":
        gam = model.sinr_pr_all(ch, bf)[idx[0]]
    else:
        gam = model.sinr_pr_eve_all(ch, bf)[idx[0]]
    return float(np.log1p(gam))


# ----------------------------------------------------------------------
# conic encoding


def add_surrogate_bound(prog, s: SurrogateCoeffs, w, U, rhs, label: str | None = None) -> None:
    """Impose ``s(w, U) >= rhs`` (lower sense) or ``s(w, U) <= rhs`` (upper sense).

    ``w`` is a (G, N) complex affine expression and ``U`` either a complex
    affine matrix or None (jamming switched off).
    """
    from .conic import Affine, CAffine, add_quadratic_over_linear, add_sum_squares_le, concat, real_inner

    label = label or s.tag
    lin = real_inner(s.lin_w, w)
    if U is not None and np.any(s.lin_U):
        lin = lin + real_inner(s.lin_U, U)
    if s.sense == "lower":
        # constant + lin - coef * Q >= rhs
        if s.coef <= 0.0:
            prog.add_nonneg(lin + s.constant - rhs, label)
            return
        slack = (lin + s.constant - rhs) * (1.0 / s.coef) - s.quad_const
        parts = [s.v.conj() @ w[i] for i in s.quad_groups]
        if U is not None and s.quad_jam:
            if s.covariance:
                slack = slack - real_inner(np.outer(s.v, s.v.conj()), U)
            else:
                parts.append(U.H @ s.v)
        z = concat([p.real_parts() if p.shape else concat([p.re, p.im]) for p in parts])
        add_sum_squares_le(prog, z, slack, label)
        return
    # constant + lin + coef * |num|^2 / Phi <= rhs
    phi = real_inner(s.phi_w, w) + s.phi_const
    if U is not None:
        phi = phi + real_inner(s.phi_U, U)
    prog.add_nonneg(phi - s.phi_floor, label + ":floor")
    room = (rhs - lin - s.constant) * (1.0 / s.coef)
    if s.num_group is None:
        num = Affine.const(np.sqrt(s.num_const))
    else:
        x = s.v.conj() @ w[s.num_group]
        num = concat([x.re, x.im])
    add_quadratic_over_linear(prog, num, phi, room, label)

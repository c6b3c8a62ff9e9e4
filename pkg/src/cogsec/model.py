"""Scenario description, channel generation, SINR and secrecy-rate evaluation.

Every power is linear and relative to unit noise power.  Powers given in
dBm at the configuration boundary are converted once by
``linear = 10 ** (dBm / 10)``.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

LN2 = np.log(2.0)


def db2lin(value_db: float) -> float:
    return float(10.0 ** (value_db / 10.0))


def lin2db(value: float) -> float:
    return float(10.0 * np.log10(value))


@dataclass(frozen=True)
class ScaSettings:
    tolerance: float = 1e-3
    max_iterations: int = 50
    init_max_iterations: int = 20


@dataclass(frozen=True)
class SystemConfig:
    """All scenario constants of one experiment point.

    Per-receiver noise variances default to ``noise`` and can be overridden
    through ``noise_overrides`` with keys ``pr`` (L values), ``pe`` (K_p
    values), ``sr`` and ``se`` (one list per group).

    CSI error radii are either given directly (``delta``, one per PR) or as
    the normalised squared error ``delta_bar2 = delta_l**2 / ||f_l||**2``,
    in which case the radius is resolved per realisation.
    """

    N: int = 8
    G: int = 2
    M: tuple[int, ...] = (2, 2)
    L: int = 2
    K_g: tuple[int, ...] = (2, 2)
    K_p: int = 2
    P_p: float = 100.0
    P_s: float = 10.0 ** 1.5
    noise: float = 1.0
    noise_overrides: dict | None = None
    R_bar: tuple[float, ...] = (2.0, 2.0)
    delta: tuple[float, ...] | None = None
    delta_bar2: float | None = 0.05
    eps_g: tuple[float, ...] = (0.99, 0.99)
    eps_tilde: float = 0.99
    sca: ScaSettings = field(default_factory=ScaSettings)
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.N < 1 or self.G < 1 or self.L < 1 or self.K_p < 1:
            raise ValueError("N, G, L and K_p must all be >= 1")
        if len(self.M) != self.G or len(self.K_g) != self.G or len(self.eps_g) != self.G:
            raise ValueError("M, K_g and eps_g need one entry per group")
        if min(self.M) < 1 or min(self.K_g) < 1:
            raise ValueError("group sizes and eavesdropper counts must be >= 1")
        if len(self.R_bar) != self.L:
            raise ValueError("R_bar needs one entry per primary receiver")
        if self.P_p <= 0 or self.P_s <= 0:
            raise ValueError("P_p and P_s must be positive")
        if self.noise <= 0:
            raise ValueError("noise variance must be positive")
        if min(self.R_bar) < 0:
            raise ValueError("R_bar must be nonnegative")
        if self.delta is not None:
            if len(self.delta) != self.L or min(self.delta) < 0:
                raise ValueError("delta needs L nonnegative radii")
        if self.delta_bar2 is not None and self.delta_bar2 < 0:
            raise ValueError("delta_bar2 must be nonnegative")
        for eps in (*self.eps_g, self.eps_tilde):
            if not 0.0 < eps < 1.0:
                raise ValueError("chance levels must lie strictly in (0, 1)")
        if self.noise_overrides:
            for key, val in self.noise_overrides.items():
                flat = np.concatenate([np.atleast_1d(v) for v in val]) if key in ("sr", "se") else np.atleast_1d(val)
                if np.any(flat <= 0):
                    raise ValueError(f"noise override {key!r} must be positive")

    # ------------------------------------------------------------------
    def noise_arrays(self) -> dict:
        over = self.noise_overrides or {}
        out = {
            "pr": np.asarray(over.get("pr", [self.noise] * self.L), dtype=float),
            "pe": np.asarray(over.get("pe", [self.noise] * self.K_p), dtype=float),
            "sr": [np.asarray(v, dtype=float) for v in over.get("sr", [[self.noise] * m for m in self.M])],
            "se": [np.asarray(v, dtype=float) for v in over.get("se", [[self.noise] * k for k in self.K_g])],
        }
        if out["pr"].shape != (self.L,) or out["pe"].shape != (self.K_p,):
            raise ValueError("noise override shapes do not match L / K_p")
        for g in range(self.G):
            if out["sr"][g].shape != (self.M[g],) or out["se"][g].shape != (self.K_g[g],):
                raise ValueError("noise override shapes do not match group sizes")
        return out

    def with_(self, **changes) -> "SystemConfig":
        """Copy with fields replaced; scalars broadcast like in :meth:`from_dict`."""
        d = self.to_dict()
        d.update(changes)
        return SystemConfig.from_dict(d)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("M", "K_g", "R_bar", "eps_g"):
            d[key] = list(d[key])
        if d["delta"] is not None:
            d["delta"] = list(d["delta"])
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SystemConfig":
        d = dict(d)
        for key in ("P_p", "P_s"):
            if f"{key}_dBm" in d:
                d[key] = db2lin(float(d.pop(f"{key}_dBm")))
        G = int(d.get("G", cls.G))
        L = int(d.get("L", cls.L))

        def per(key, n, default, cast):
            val = d.get(key, default)
            if np.isscalar(val):
                return tuple(cast(val) for _ in range(n))
            return tuple(cast(v) for v in val)

        d["M"] = per("M", G, 2, int)
        d["K_g"] = per("K_g", G, 2, int)
        d["eps_g"] = per("eps_g", G, 0.99, float)
        d["R_bar"] = per("R_bar", L, 2.0, float)
        if d.get("delta") is not None:
            d["delta"] = per("delta", L, 0.0, float)
        sca = d.get("sca", {})
        if isinstance(sca, dict):
            d["sca"] = ScaSettings(**sca)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


# ----------------------------------------------------------------------
# channels


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """One realisation of every channel plus the scenario constants SINRs need.

    Vector channels are stored row-wise: ``f_l[l]`` is the ST->PR-l vector.
    Per-group quantities are lists with one array per group.
    """

    h_l: np.ndarray
    g_kp: np.ndarray
    f_l: np.ndarray
    f_hat_l: np.ndarray
    f_kp: np.ndarray
    h_mg: list
    g_kg: list
    f_mg: list
    f_kg: list
    delta: np.ndarray
    P_p: float
    s2_pr: np.ndarray
    s2_pe: np.ndarray
    s2_sr: list
    s2_se: list
    seed: int = 0
    trial_index: int = 0

    @property
    def N(self) -> int:
        return self.f_l.shape[1]

    @property
    def G(self) -> int:
        return len(self.h_mg)

    @property
    def L(self) -> int:
        return self.f_l.shape[0]

    @property
    def K_p(self) -> int:
        return self.f_kp.shape[0]

    def presumed(self) -> "ChannelSet":
        """The channel set as a non-robust designer sees it: estimates as truth, zero radius."""
        return replace(self, f_l=self.f_hat_l.copy(), delta=np.zeros_like(self.delta))

    def to_dict(self) -> dict:
        return {
            "h_l": _c2l(self.h_l),
            "g_kp": _c2l(self.g_kp),
            "f_l": _c2l(self.f_l),
            "f_hat_l": _c2l(self.f_hat_l),
            "f_kp": _c2l(self.f_kp),
            "h_mg": [_c2l(a) for a in self.h_mg],
            "g_kg": [_c2l(a) for a in self.g_kg],
            "f_mg": [_c2l(a) for a in self.f_mg],
            "f_kg": [_c2l(a) for a in self.f_kg],
            "delta": self.delta.tolist(),
            "P_p": self.P_p,
            "s2_pr": self.s2_pr.tolist(),
            "s2_pe": self.s2_pe.tolist(),
            "s2_sr": [a.tolist() for a in self.s2_sr],
            "s2_se": [a.tolist() for a in self.s2_se],
            "seed": self.seed,
            "trial_index": self.trial_index,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelSet":
        return cls(
            h_l=_l2c(d["h_l"]),
            g_kp=_l2c(d["g_kp"]),
            f_l=_l2c(d["f_l"]),
            f_hat_l=_l2c(d["f_hat_l"]),
            f_kp=_l2c(d["f_kp"]),
            h_mg=[_l2c(a) for a in d["h_mg"]],
            g_kg=[_l2c(a) for a in d["g_kg"]],
            f_mg=[_l2c(a) for a in d["f_mg"]],
            f_kg=[_l2c(a) for a in d["f_kg"]],
            delta=np.asarray(d["delta"], dtype=float),
            P_p=float(d["P_p"]),
            s2_pr=np.asarray(d["s2_pr"], dtype=float),
            s2_pe=np.asarray(d["s2_pe"], dtype=float),
            s2_sr=[np.asarray(a, dtype=float) for a in d["s2_sr"]],
            s2_se=[np.asarray(a, dtype=float) for a in d["s2_se"]],
            seed=int(d.get("seed", 0)),
            trial_index=int(d.get("trial_index", 0)),
        )

    @classmethod
    def from_json(cls, text: str) -> "ChannelSet":
        return cls.from_dict(json.loads(text))


def _c2l(a) -> list:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _l2c(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.size == 0:
        return np.zeros(a.shape[:-1], dtype=complex)
    return a[..., 0] + 1j * a[..., 1]


def crandn(rng: np.random.Generator, *shape) -> np.ndarray:
    """Standard circularly-symmetric complex Gaussian draws, CN(0, 1)."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_ball(rng: np.random.Generator, n: int, radius: float, size: int | None = None) -> np.ndarray:
    """Uniform samples from the complex ``n``-ball of the given radius."""
    shape = (n,) if size is None else (size, n)
    v = crandn(rng, *shape)
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    u = rng.random(() if size is None else (size, 1))
    return radius * u ** (1.0 / (2 * n)) * v


def generate_channels(config: SystemConfig, trial_index: int) -> ChannelSet:
    """Draw one channel realisation, deterministic in ``(config.seed, trial_index)``."""
    rng = np.random.default_rng([int(config.seed) & 0xFFFFFFFFFFFFFFFF, int(trial_index)])
    N, G, L, Kp = config.N, config.G, config.L, config.K_p
    h_l = crandn(rng, L)
    g_kp = crandn(rng, Kp)
    f_l = crandn(rng, L, N)
    f_kp = crandn(rng, Kp, N)
    h_mg = [crandn(rng, config.M[g], N) for g in range(G)]
    g_kg = [crandn(rng, config.K_g[g], N) for g in range(G)]
    f_mg = [crandn(rng, config.M[g]) for g in range(G)]
    f_kg = [crandn(rng, config.K_g[g]) for g in range(G)]

    if config.delta is not None:
        delta = np.asarray(config.delta, dtype=float)
    elif config.delta_bar2 is not None:
        delta = np.sqrt(config.delta_bar2) * np.linalg.norm(f_l, axis=1)
    else:
        delta = np.zeros(L)
    f_hat_l = f_l.copy()
    for l in range(L):
        if delta[l] > 0:
            f_hat_l[l] = f_l[l] - sample_ball(rng, N, delta[l])

    noise = config.noise_arrays()
    return ChannelSet(
        h_l=h_l, g_kp=g_kp, f_l=f_l, f_hat_l=f_hat_l, f_kp=f_kp,
        h_mg=h_mg, g_kg=g_kg, f_mg=f_mg, f_kg=f_kg,
        delta=delta, P_p=float(config.P_p),
        s2_pr=noise["pr"], s2_pe=noise["pe"], s2_sr=noise["sr"], s2_se=noise["se"],
        seed=int(config.seed), trial_index=int(trial_index),
    )


# ----------------------------------------------------------------------
# beamformers


@dataclass(frozen=True, eq=False)
class Beamformer:
    """Information beamvectors ``w`` (G x N) and jamming shaping ``U`` (N x N)."""

    w: np.ndarray
    U: np.ndarray

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2) + np.sum(np.abs(self.U) ** 2))

    @property
    def jam_power(self) -> float:
        return float(np.sum(np.abs(self.U) ** 2))

    def jam_quad(self, v: np.ndarray) -> np.ndarray:
        """``||v^H U||^2`` for each row ``v`` (rows are channel vectors)."""
        return np.sum(np.abs(np.atleast_2d(v).conj() @ self.U) ** 2, axis=-1)

    def covariance(self) -> np.ndarray:
        return self.U @ self.U.conj().T

    def to_dict(self) -> dict:
        return {"w": _c2l(self.w), "U": _c2l(self.U)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "Beamformer":
        return cls(w=_l2c(d["w"]), U=_l2c(d["U"]))

    @classmethod
    def from_json(cls, text: str) -> "Beamformer":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class RobustBeamformer:
    """Information beamvectors ``w`` and Hermitian PSD jamming covariance ``U_tilde``."""

    w: np.ndarray
    U_tilde: np.ndarray

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.w) ** 2) + np.real(np.trace(self.U_tilde)))

    @property
    def jam_power(self) -> float:
        return float(np.real(np.trace(self.U_tilde)))

    def jam_quad(self, v: np.ndarray) -> np.ndarray:
        v = np.atleast_2d(v)
        return np.real(np.einsum("ki,ij,kj->k", v.conj(), self.U_tilde, v))

    def covariance(self) -> np.ndarray:
        return self.U_tilde

    def to_dict(self) -> dict:
        return {"w": _c2l(self.w), "U_tilde": _c2l(self.U_tilde)}

    @classmethod
    def from_dict(cls, d: dict) -> "RobustBeamformer":
        return cls(w=_l2c(d["w"]), U_tilde=_l2c(d["U_tilde"]))


# ----------------------------------------------------------------------
# SINRs (vectorised over receivers of one class)


def _inner2(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """``|v_k^H w_g|^2`` for rows ``v_k`` and rows ``w_g``, shape (K, G)."""
    return np.abs(np.atleast_2d(v).conj() @ np.atleast_2d(w).T) ** 2


def sinr_pr_all(ch: ChannelSet, bf, f_l: np.ndarray | None = None) -> np.ndarray:
    f = ch.f_l if f_l is None else np.atleast_2d(f_l)
    interf = _inner2(f, bf.w).sum(axis=1) + bf.jam_quad(f) + ch.s2_pr
    return ch.P_p * np.abs(ch.h_l) ** 2 / interf


def sinr_pr_eve_all(ch: ChannelSet, bf) -> np.ndarray:
    interf = _inner2(ch.f_kp, bf.w).sum(axis=1) + bf.jam_quad(ch.f_kp) + ch.s2_pe
    return ch.P_p * np.abs(ch.g_kp) ** 2 / interf


def _group_sinr(v, cross, s2, g, bf, P_p):
    p = _inner2(v, bf.w)
    others = p.sum(axis=1) - p[:, g]
    return p[:, g] / (others + bf.jam_quad(v) + P_p * np.abs(cross) ** 2 + s2)


def sinr_sr_all(ch: ChannelSet, bf, g: int) -> np.ndarray:
    return _group_sinr(ch.h_mg[g], ch.f_mg[g], ch.s2_sr[g], g, bf, ch.P_p)


def sinr_sr_eve_all(ch: ChannelSet, bf, g: int) -> np.ndarray:
    return _group_sinr(ch.g_kg[g], ch.f_kg[g], ch.s2_se[g], g, bf, ch.P_p)


def sinr_pr(ch: ChannelSet, bf, l: int) -> float:
    return float(sinr_pr_all(ch, bf)[l])


def sinr_pr_eve(ch: ChannelSet, bf, k_p: int) -> float:
    return float(sinr_pr_eve_all(ch, bf)[k_p])


def sinr_sr(ch: ChannelSet, bf, g: int, m: int) -> float:
    return float(sinr_sr_all(ch, bf, g)[m])


def sinr_sr_eve(ch: ChannelSet, bf, g: int, k: int) -> float:
    return float(sinr_sr_eve_all(ch, bf, g)[k])


# ----------------------------------------------------------------------
# secrecy rates (bits/s/Hz)


def secrecy_rate_primary(ch: ChannelSet, bf, l: int) -> float:
    eve = np.max(np.log2(1.0 + sinr_pr_eve_all(ch, bf)))
    return max(0.0, float(np.log2(1.0 + sinr_pr(ch, bf, l)) - eve))


def secrecy_rate_secondary(ch: ChannelSet, bf, g: int, m: int) -> float:
    eve = np.max(np.log2(1.0 + sinr_sr_eve_all(ch, bf, g)))
    return max(0.0, float(np.log2(1.0 + sinr_sr(ch, bf, g, m)) - eve))


def secondary_margin(ch: ChannelSet, bf) -> float:
    """Unclamped max-min objective: min over SRs of own rate minus best Eve rate."""
    vals = []
    for g in range(ch.G):
        eve = np.max(np.log2(1.0 + sinr_sr_eve_all(ch, bf, g)))
        vals.append(np.min(np.log2(1.0 + sinr_sr_all(ch, bf, g))) - eve)
    return float(min(vals))


def min_secondary_secrecy(ch: ChannelSet, bf) -> float:
    return max(0.0, secondary_margin(ch, bf))


@dataclass
class FeasibilityReport:
    power_ok: bool
    per_PR_secrecy_ok: list[bool]
    power: float
    per_PR_secrecy: list[float]

    @property
    def ok(self) -> bool:
        return self.power_ok and all(self.per_PR_secrecy_ok)


def check_p1_feasible(ch: ChannelSet, bf, config: SystemConfig, tol: float = 1e-4) -> FeasibilityReport:
    power = bf.power
    rates = [secrecy_rate_primary(ch, bf, l) for l in range(ch.L)]
    return FeasibilityReport(
        power_ok=power <= config.P_s + tol,
        per_PR_secrecy_ok=[r >= rb - tol for r, rb in zip(rates, config.R_bar)],
        power=power,
        per_PR_secrecy=rates,
    )


def random_beamformer(rng: np.random.Generator, N: int, G: int, P_s: float, w_share: float = 0.5) -> Beamformer:
    """Random Gaussian ``w`` at ``w_share * P_s`` and isotropic ``U`` with the rest."""
    w = crandn(rng, G, N)
    w *= np.sqrt(w_share * P_s) / np.linalg.norm(w)
    U = np.sqrt((1.0 - w_share) * P_s / N) * np.eye(N, dtype=complex)
    return Beamformer(w=w, U=U)

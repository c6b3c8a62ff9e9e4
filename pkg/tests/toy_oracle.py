"""Brute-force reference for the one-group, one-receiver, two-antenna toy.

With N = 2 the problem has seven real degrees of freedom once the common
phase of ``w`` is removed: total power fraction, information share, two
angles for ``w`` and, for the jamming covariance, two angles plus an
eigenvalue split.  A dense grid over these followed by Nelder-Mead from
the best cells gives a reference value for the perfect-CSI design.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import minimize

from cogsec.model import Beamformer, ChannelSet, SystemConfig, secondary_margin
from cogsec.sca_perfect import primary_criterion

TOY = dict(N=2, G=1, M=(1,), L=1, K_g=(1,), K_p=1, R_bar=(1.0,), eps_g=(0.99,))

GRID = {
    "s": np.geomspace(0.02, 1.0, 7),
    "x": np.linspace(0.0, 1.0, 9),
    "a": np.linspace(0.0, np.pi / 2, 9),
    "phi": np.linspace(0.0, 2 * np.pi, 8, endpoint=False),
    "b": np.linspace(0.0, np.pi / 2, 7),
    "psi": np.linspace(0.0, 2 * np.pi, 6, endpoint=False),
    "lam": np.linspace(0.5, 1.0, 4),
}


def toy_config(**kw) -> SystemConfig:
    d = dict(TOY)
    d.update(kw)
    return SystemConfig.from_dict(d)


def grid_size() -> int:
    return int(np.prod([len(v) for v in GRID.values()]))


def _point(P_s, s, x, a, phi, b, psi, lam):
    """Vectorised map from parameters to (w, jamming covariance)."""
    pw, pu = s * P_s * x, s * P_s * (1 - x)
    w = np.sqrt(pw)[..., None] * np.stack([np.cos(a) + 0j, np.sin(a) * np.exp(1j * phi)], -1)
    v = np.stack([np.cos(b) + 0j, np.sin(b) * np.exp(1j * psi)], -1)
    vp = np.stack([-np.sin(b) * np.exp(-1j * psi), np.cos(b) + 0j], -1)
    C = pu[..., None, None] * (lam[..., None, None] * v[..., :, None] * v[..., None, :].conj()
                               + (1 - lam)[..., None, None] * vp[..., :, None] * vp[..., None, :].conj())
    return w, C


def _quad(c, w, C):
    """``|c^H w|^2`` and ``c^H C c`` for a fixed channel ``c``."""
    return np.abs(w @ c.conj()) ** 2, np.real(np.einsum("i,...ij,j->...", c.conj(), C, c))


def _values(ch: ChannelSet, config: SystemConfig, w, C):
    """(secondary margin, primary criterion) in bits for arrays of points."""
    P = ch.P_p
    sig_s, jam_s = _quad(ch.h_mg[0][0], w, C)
    sr = sig_s / (jam_s + P * abs(ch.f_mg[0][0]) ** 2 + ch.s2_sr[0][0])
    sig_e, jam_e = _quad(ch.g_kg[0][0], w, C)
    se = sig_e / (jam_e + P * abs(ch.f_kg[0][0]) ** 2 + ch.s2_se[0][0])
    ip, jp = _quad(ch.f_l[0], w, C)
    pr = P * abs(ch.h_l[0]) ** 2 / (ip + jp + ch.s2_pr[0])
    ie, je = _quad(ch.f_kp[0], w, C)
    pe = P * abs(ch.g_kp[0]) ** 2 / (ie + je + ch.s2_pe[0])
    margin = np.log2(1 + sr) - np.log2(1 + se)
    prim = np.log2(1 + pr) - np.log2(1 + pe) - config.R_bar[0]
    return margin, prim


def _objective(ch, config, w, C):
    margin, prim = _values(ch, config, w, C)
    return np.where(prim >= 0, margin, -np.inf)


def _merit(ch, config, w, C):
    """Margin when feasible, otherwise a value below every feasible one that improves with the criterion."""
    margin, prim = _values(ch, config, w, C)
    return np.where(prim >= 0, margin, prim - 100.0)


def grid_search(ch: ChannelSet, config: SystemConfig, chunk: int = 200_000, top: int = 20):
    """Best feasible grid points; returns (values, parameter rows) sorted descending."""
    names = list(GRID)
    axes = [GRID[k] for k in names]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(axes))
    best_v, best_p = np.full(0, -np.inf), np.zeros((0, len(axes)))
    for start in range(0, len(mesh), chunk):
        p = mesh[start:start + chunk]
        w, C = _point(config.P_s, *p.T)
        val = _merit(ch, config, w, C)
        keep = np.argsort(val)[-top:]
        best_v = np.concatenate([best_v, val[keep]])
        best_p = np.concatenate([best_p, p[keep]])
    order = np.argsort(best_v)[::-1][:top]
    return best_v[order], best_p[order]


def _clip(p):
    s, x, a, phi, b, psi, lam = p
    return np.array([np.clip(s, 1e-6, 1.0), np.clip(x, 0.0, 1.0), a, phi, b, psi, np.clip(lam, 0.0, 1.0)])


def refine(ch, config, p0) -> tuple[float, np.ndarray]:
    def f(p):
        q = _clip(p)
        w, C = _point(config.P_s, *[np.array(v) for v in q])
        return -float(_merit(ch, config, w, C))

    res = minimize(f, p0, method="Nelder-Mead", options={"xatol": 1e-7, "fatol": 1e-9, "maxiter": 3000})
    q = _clip(res.x)
    w, C = _point(config.P_s, *[np.array(v) for v in q])
    return float(_objective(ch, config, w, C)), q


def reference_value(ch: ChannelSet, config: SystemConfig, top: int = 10) -> dict:
    """Grid maximum, refined maximum and the beamformer attaining it.

    Refinement starts from the ``top`` best cells by merit, so a thin
    feasible region missed by the grid can still be reached.
    """
    vals, params = grid_search(ch, config, top=top)
    grid_best = float(vals[0]) if vals[0] > -50 else -np.inf
    best, best_p = grid_best, params[0]
    for p0 in params:
        v, q = refine(ch, config, p0)
        if v > best:
            best, best_p = v, q
    if not np.isfinite(best):
        return {"feasible": False, "grid": grid_best, "refined": best, "bf": None}
    w, C = _point(config.P_s, *[np.array(v) for v in best_p])
    ev, evec = np.linalg.eigh(C)
    U = evec * np.sqrt(np.clip(ev, 0, None))
    bf = Beamformer(w=w.reshape(1, 2), U=U)
    return {"feasible": True, "grid": grid_best, "refined": best, "bf": bf}


def cross_check(ch: ChannelSet, config: SystemConfig, rng, n: int = 5) -> float:
    """Largest difference between the vectorised evaluation and the library SINR code."""
    err = 0.0
    for _ in range(n):
        p = np.array([rng.uniform(0.1, 1), rng.uniform(), rng.uniform(0, 1.5), rng.uniform(0, 6),
                      rng.uniform(0, 1.5), rng.uniform(0, 6), rng.uniform(0.5, 1)])
        w, C = _point(config.P_s, *[np.array(v) for v in p])
        margin, prim = _values(ch, config, w, C)
        ev, evec = np.linalg.eigh(C)
        bf = Beamformer(w=w.reshape(1, 2), U=evec * np.sqrt(np.clip(ev, 0, None)))
        err = max(err, abs(float(margin) - secondary_margin(ch, bf)),
                  abs(float(prim) - primary_criterion(ch, bf, config)))
    return err

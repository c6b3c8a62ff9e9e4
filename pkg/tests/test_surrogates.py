import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cogsec import surrogates as su
from cogsec.conic import ConicProgram, solve
from cogsec.model import LN2, SystemConfig, generate_channels, random_beamformer
from checks import audit_surrogates


@settings(max_examples=200, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(0.01, 50), st.floats(-5, 5), st.floats(-5, 5),
       st.floats(0.01, 50))
def test_log_qol_lower_bound(xr, xi, y, xnr, xni, yn):
    x, xn = complex(xr, xi), complex(xnr, xni)
    exact = np.log1p(abs(x) ** 2 / y)
    assert su.log_qol_lower(x, y, xn, yn) <= exact + 1e-9


@settings(max_examples=200, deadline=None)
@given(st.floats(-5, 5), st.floats(0.01, 50), st.floats(-5, 5), st.floats(0.01, 50))
def test_qol_lower_bound(x, y, xn, yn):
    assert su.qol_lower(x, y, xn, yn) <= x ** 2 / y + 1e-9


@settings(max_examples=200, deadline=None)
@given(st.floats(0.0, 100.0), st.floats(0.0, 100.0))
def test_log_tangent_upper(x, xn):
    assert su.log_tangent_upper(x, xn) >= np.log1p(x) - 1e-12


def test_scalar_bounds_tight_at_expansion():
    assert su.log_qol_lower(1 + 2j, 3.0, 1 + 2j, 3.0) == pytest.approx(np.log1p(5 / 3))
    assert su.qol_lower(2.0, 4.0, 2.0, 4.0) == pytest.approx(1.0)
    assert su.log_tangent_upper(2.0, 2.0) == pytest.approx(np.log(3.0))


def test_scalar_input_validation():
    with pytest.raises(ValueError):
        su.log_qol_lower(1.0, -1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        su.log_tangent_upper(1.0, -2.0)


def test_surrogate_audit_small():
    a = audit_surrogates(SystemConfig(), instances=4, points=50, seed=1)
    assert a.tightness <= 1e-9
    assert a.direction >= -1e-9
    assert a.gradient <= 1e-4


def test_surrogate_tags_cover_every_receiver():
    cfg = SystemConfig()
    ch = generate_channels(cfg, 0)
    ep = su.ExpansionPoint.at(ch, random_beamformer(np.random.default_rng(0), 8, 2, cfg.P_s))
    tags = [s.tag for s in su.all_surrogates(ch, ep)]
    assert len(tags) == sum(cfg.M) + sum(cfg.K_g) + cfg.L + cfg.K_p
    assert len(set(tags)) == len(tags)


def test_encoded_bound_is_tight_at_expansion():
    # maximise the SR surrogate alone under the power budget; the optimum is at least the
    # exact value at the expansion point, which is feasible for the encoding
    cfg = SystemConfig()
    ch = generate_channels(cfg, 0)
    bf = random_beamformer(np.random.default_rng(2), 8, 2, cfg.P_s)
    ep = su.ExpansionPoint.at(ch, bf)
    s = su.build_F_mg(ch, ep, 0, 0)
    p = ConicProgram()
    w = p.complex_variable((2, 8))
    U = p.complex_variable((8, 8))
    r = p.variable(())
    su.add_surrogate_bound(p, s, w, U, r)
    from cogsec.conic import concat
    p.add_soc(np.sqrt(cfg.P_s), concat([w.real_parts(), U.real_parts()]))
    p.maximize(r)
    res = solve(p)
    assert res.ok
    assert res.objective >= su.true_log_sinr(ch, s, bf.w, bf.U) - 1e-6
    # and the optimum's true value dominates its surrogate value
    wv, Uv = w.value(res.x), U.value(res.x)
    assert su.true_log_sinr(ch, s, wv, Uv) >= res.objective - 1e-6

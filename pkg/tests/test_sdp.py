import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aftrack import allocate as al
from aftrack import sdp
from aftrack.errors import ValidationError
from conftest import random_instance


def test_eigenvalue_sdp():
    p = sdp.SdpProblem(np.diag([1.0, 0.0]), eq_constraints=[(np.eye(2), 1.0)], sense="max")
    s = sdp.solve(p)
    assert s.ok
    assert s.objective_value == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(s.x, np.diag([1.0, 0.0]), atol=1e-8)
    assert sdp.check_certificate(p, s).passed


def test_scaling_sdp_min():
    p = sdp.SdpProblem(np.eye(2), ineq_constraints=[(-np.eye(2), -2.0)], sense="min")
    s = sdp.solve(p)
    assert s.ok
    assert s.objective_value == pytest.approx(2.0, abs=1e-9)
    assert s.duals[0] == pytest.approx(1.0, abs=1e-7)
    assert sdp.check_certificate(p, s).passed


def test_complex_rank_one_objective(rng):
    h = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    p = sdp.SdpProblem(np.outer(h, h.conj()), eq_constraints=[(np.eye(3), 1.0)])
    s = sdp.solve(p)
    assert s.objective_value == pytest.approx(np.vdot(h, h).real, rel=1e-9)
    lam = np.linalg.eigvalsh(s.x)
    assert lam[-2] <= 1e-8 * lam[-1]


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6))
def test_max_eigenvalue_property(seed, n):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    c = a + a.conj().T
    p = sdp.SdpProblem(c, eq_constraints=[(np.eye(n), 1.0)])
    s = sdp.solve(p)
    assert s.ok
    lmax = np.linalg.eigvalsh(c)[-1]
    assert s.objective_value == pytest.approx(lmax, abs=1e-8 * (1 + abs(lmax)))
    assert sdp.check_certificate(p, s).passed


def test_infeasible_and_unbounded_detected():
    p = sdp.SdpProblem(np.eye(2), eq_constraints=[(np.eye(2), -1.0)], sense="min")
    assert sdp.solve(p).status == sdp.INFEASIBLE
    p = sdp.SdpProblem(np.eye(2), ineq_constraints=[(np.diag([1.0, 0.0]), 1.0)], sense="max")
    assert sdp.solve(p).status == sdp.INFEASIBLE


def test_problem_validation():
    with pytest.raises(ValidationError):
        sdp.SdpProblem(np.eye(2), eq_constraints=[(np.eye(3), 1.0)])
    with pytest.raises(ValidationError):
        sdp.SdpProblem(np.eye(2), sense="sup")
    with pytest.raises(ValidationError):
        sdp.solve(sdp.SdpProblem(np.eye(2)))


def test_bad_initializers_rejected():
    p = sdp.SdpProblem(np.eye(2), ineq_constraints=[(np.eye(2), 1.0)])
    with pytest.raises(ValidationError):
        sdp.solve(p, init_x=np.eye(2))             # tr = 2 > 1
    with pytest.raises(ValidationError):
        sdp.solve(p, init_x=np.diag([0.2, 0.0]))   # singular
    with pytest.raises(ValidationError):
        sdp.solve(p, init_duals=[0.5])             # 0.5 I - I not PD


def test_embedding_factor_two(rng):
    for _ in range(10):
        a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        a, x = a + a.conj().T, x @ x.conj().T
        ea, ex = sdp.embed(a), sdp.embed(x)
        assert np.trace(ex @ ea) == pytest.approx(2 * np.trace(x @ a).real, rel=1e-12)
        np.testing.assert_allclose(sdp.unembed(ex), x, atol=1e-13)
        # embedding preserves the spectrum, each eigenvalue doubled in multiplicity
        np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(ea))[::2], np.linalg.eigvalsh(a), atol=1e-12)


def test_deterministic(rng):
    sc, h = random_instance(rng, 4)
    p = al.individual_power_sdp(sc, h)
    a, b = sdp.solve(p), sdp.solve(p)
    assert a.objective_value == pytest.approx(b.objective_value, rel=1e-9)


def test_certificate_flags_perturbation(rng):
    sc, h = random_instance(rng, 3)
    p = al.individual_power_sdp(sc, h)
    s = sdp.solve(p)
    cert = sdp.check_certificate(p, s)
    assert cert.passed, cert.failures
    assert cert.x_min_eig >= -1e-8 and cert.min_ineq_dual >= -1e-8
    bad = sdp.SdpSolution(s.x + 1e-3 * np.eye(p.dim), s.duals, s.objective_value, s.gap, s.status)
    cert = sdp.check_certificate(p, bad)
    assert not cert.passed
    assert any("complementary" in f for f in cert.failures)


def test_dual_slack_rank_on_eq16_instance(rng):
    sc, h = random_instance(rng, 4)
    p = al.individual_power_sdp(sc, h)
    s = sdp.solve(p)
    g = sdp.dual_slack(p, s.duals)
    lam = np.linalg.eigvalsh(g[:4, :4])
    assert np.sum(lam > 1e-6 * np.linalg.norm(g)) >= 3


def test_weak_duality_on_feasible_iterates(rng):
    sc, h = random_instance(rng, 5)
    p = al.individual_power_sdp(sc, h)
    x0, y0 = al.individual_power_start(sc, h)
    s = sdp.solve(p, init_x=x0, init_duals=y0, record=True)
    assert s.ok and len(s.history) == s.iterations + 1
    for it in s.history:
        assert it.primal_obj <= it.dual_obj + 1e-9 * (1 + abs(it.dual_obj))


def test_eq16_instance_vs_grid(rng):
    sc, h = random_instance(rng, 3)
    p = al.individual_power_sdp(sc, h)
    s = sdp.solve(p)
    w, caps, hv = sc.power_weights, sc.indiv_powers, np.abs(h) ** 2 * sc.meas_noise_vars
    m = [np.linspace(0, np.sqrt(caps[i] / w[i]), 6) for i in range(3)]
    ph = np.exp(1j * np.linspace(0, 2 * np.pi, 68, endpoint=False))
    g1, g2, g3, p2, p3 = np.meshgrid(m[0], m[1], m[2], ph, ph, indexing="ij")
    x = np.stack([g1, g2 * p2, g3 * p3], -1).reshape(-1, 3)
    assert x.shape[0] > 990_000
    best = np.max(np.abs(np.conj(x) @ h) ** 2 / ((np.abs(x) ** 2 * hv).sum(1) + sc.fc_noise_var))
    assert best <= s.objective_value * (1 + 1e-9)
    assert s.objective_value <= best * 1.005


def test_to_json():
    p = sdp.SdpProblem(np.diag([1.0, 2.0]), eq_constraints=[(np.eye(2), 1.0)],
                       ineq_constraints=[(np.array([[0, 1j], [-1j, 0]]), 0.5)])
    doc = json.loads(p.to_json())
    assert doc["sense"] == "max"
    assert doc["ineq"][0]["G"]["im"][0][1] == 1.0
    assert p.rhs.tolist() == [1.0, 0.5]

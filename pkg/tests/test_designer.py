import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nclsim.designer import (
    design_provenance,
    evaluate,
    input_phase,
    optimize_amplitude,
    profile_for_comb,
    profile_for_fock,
    profile_for_pair,
    profile_for_target,
    sweep_amplitude,
)
from nclsim.fock import Comb, Fock, Pair, TailRule, coherent_density_matrix
from nclsim.metrics import coherence_closed_form
from nclsim.stationary import stationary_matrix

R_OPT_02 = math.sqrt(0.5 * (2 - math.sqrt(3) + math.sqrt(7)))


def zeros_of_F(profile, dim):
    return set(np.flatnonzero(profile.zero_mask(dim)).tolist())


# -- profiles -------------------------------------------------------------------------


def test_fock_profile():
    p = profile_for_fock(3, 10)
    assert p.f_values[3] == 0.0 and sum(p.f_values) == 10.0
    assert p.tail is TailRule.HOLD
    with pytest.raises(ValueError):
        profile_for_fock(0, 10)
    with pytest.raises(ValueError):
        profile_for_fock(11, 10)


@pytest.mark.parametrize("n, m", [(0, 2), (1, 3), (4, 9), (2, 3), (0, 7)])
def test_pair_profile_window(n, m):
    n_max = m + (m - n) + 5
    p = profile_for_pair(n, m, n_max)
    F = p.F(n_max + 1)
    assert zeros_of_F(p, n_max + 1) == {0, n, m}
    for k in range(n, m):
        assert F[k] == pytest.approx(F[k + m - n], rel=1e-15)
    np.testing.assert_allclose(F[[k for k in range(n_max + 1) if k not in (0, n, m)]], 1.0, rtol=1e-15)


def test_pair_profile_errors():
    with pytest.raises(ValueError):
        profile_for_pair(3, 3, 20)
    with pytest.raises(ValueError):
        profile_for_pair(4, 9, 12)


@pytest.mark.parametrize("N, n0", [(2, 0), (2, 1), (3, 0), (3, 2), (5, 4)])
def test_comb_profile(N, n0):
    n_max = 6 * N
    p = profile_for_comb(N, n0, n_max)
    F = p.F(n_max + 1 + 4 * N)
    assert zeros_of_F(p, n_max + 1) == {0} | {n for n in range(n_max + 1) if n % N == n0}
    np.testing.assert_allclose(F[1 : 1 + 3 * N], F[1 + N : 1 + 4 * N], rtol=1e-15, atol=0)
    with pytest.raises(ValueError):
        profile_for_comb(1, 0, 10)
    with pytest.raises(ValueError):
        profile_for_comb(3, 2, 6)


def test_profile_for_target_dispatch():
    assert profile_for_target(Fock(2), 10) == profile_for_fock(2, 10)
    assert profile_for_target(Comb(2, 1), 10) == profile_for_comb(2, 1, 10)
    with pytest.raises(TypeError):
        profile_for_target("fock:2", 10)
    with pytest.raises(TypeError):
        design_provenance(3)


def test_design_provenance():
    assert design_provenance(Pair(1, 4))["zeros_of_F"] == [0, 1, 4]
    assert design_provenance(Fock(2))["zeros_of_f"] == [2]


# -- evaluation ---------------------------------------------------------------------------


@given(st.floats(-math.pi, math.pi))
@settings(max_examples=20)
def test_input_phase_reaches_target_phase(phi):
    target = Pair(1, 3, phi)
    assert input_phase(target) == pytest.approx(phi / 2)
    rep = evaluate(target, 1.2)
    rho13 = rep.rho[1, 3]
    assert abs(np.angle(rho13 * np.exp(1j * phi))) < 1e-9
    assert rep.fidelity == pytest.approx(0.5 + abs(rho13) - rep.rho[0, 0].real / 2, abs=1e-12)


def test_evaluate_r_zero_is_vacuum():
    rep = evaluate(Pair(0, 2), 0.0)
    assert rep.rho[0, 0] == pytest.approx(1.0)
    assert rep.purity == pytest.approx(1.0)


# -- optimisation -------------------------------------------------------------------------


def test_optimize_pair02():
    res = optimize_amplitude(Pair(0, 2), (0.2, 3.0))
    assert res.r_opt == pytest.approx(R_OPT_02, abs=1e-5)
    assert res.objective == pytest.approx(coherence_closed_form(Pair(0, 2), R_OPT_02), abs=1e-10)
    assert not res.boundary
    assert all(res.objective >= v for _, v in res.trace)


def test_optimize_is_deterministic():
    a = optimize_amplitude(Pair(1, 3), (0.2, 3.0))
    b = optimize_amplitude(Pair(1, 3), (0.2, 3.0))
    assert a.r_opt == b.r_opt and a.objective == b.objective and a.trace == b.trace


def test_fock_fidelity_hits_boundary():
    res = optimize_amplitude(Fock(1), (0.1, 2.0), objective="fidelity")
    assert res.boundary
    assert res.r_opt == pytest.approx(2.0, abs=1e-6)
    assert any("boundary" in w for w in res.warnings)


@pytest.mark.parametrize("n, m", [(4, 9), (6, 13)])
def test_large_pair_optimum_near_m_minus_half(n, m):
    res = optimize_amplitude(Pair(n, m), (1.0, 4.5), tol=1e-4, grid_points=24)
    assert abs(res.r_opt**2 - (m - 0.5)) < 1.0


def test_optimize_rejects_bad_input():
    with pytest.raises(ValueError):
        optimize_amplitude(Pair(0, 2), (2.0, 1.0))
    with pytest.raises(ValueError):
        optimize_amplitude(Pair(0, 2), (0.0, 1.0), objective="entropy")


# -- sweeps ---------------------------------------------------------------------------------


def test_fock1_sweep_fidelity():
    rs = [0.0, 0.5, 1.0, 1.5, 2.0]
    rows = sweep_amplitude(Fock(1), rs)
    for row in rows:
        assert row["fidelity"] == pytest.approx(1 - math.exp(-row["r"] ** 2), abs=1e-12)


def test_sweep_thread_order(monkeypatch):
    rs = [2.5, 0.3, 1.7, 0.9, 2.1, 1.2]
    serial = sweep_amplitude(Comb(2, 0), rs, workers=1)
    threaded = sweep_amplitude(Comb(2, 0), rs, workers=4)
    assert [r["r"] for r in threaded] == rs
    assert serial == threaded
    monkeypatch.setenv("NCL_THREADS", "3")
    assert sweep_amplitude(Comb(2, 0), rs) == serial


def test_sweep_elements_are_accumulators():
    row = sweep_amplitude(Pair(0, 2), [1.0])[0]
    assert set(row["rho_elements"]) >= {"0,2"}
    assert abs(row["rho_elements"]["0,2"]) * 2 == pytest.approx(row["coherence"])


def test_sweep_matches_direct_solve():
    r = 1.3
    row = sweep_amplitude(Comb(3, 1), [r])[0]
    n_max = 20
    rep = stationary_matrix(profile_for_comb(3, 1, n_max), coherent_density_matrix(r, n_max))
    assert row["purity"] == pytest.approx(rep.purity, abs=1e-10)


def test_sweep_rejects_bad_input():
    with pytest.raises(ValueError):
        sweep_amplitude(Fock(1), [])
    with pytest.raises(ValueError):
        sweep_amplitude(Fock(1), [1.0, -0.5])

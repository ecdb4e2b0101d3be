import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from conftest import random_density_matrix
from nclsim.designer import profile_for_pair, profile_for_target
from nclsim.evolution import (
    EvolutionSettings,
    evolve_band,
    evolve_bands,
    evolve_matrix,
    evolve_until_stationary,
    is_stationary,
    min_positive_phi,
    phi_values,
    reassemble,
    segment_invariant,
)
from nclsim.fock import (
    DiagonalBand,
    LossProfile,
    bands_from_matrix,
    coherent_density_matrix,
    coherent_weight,
    fock_density_matrix,
    parse_target,
)
from nclsim.rk import StiffnessError
from nclsim.stationary import stationary_matrix


def lindblad_oracle(profile, rho0, gamma, t):
    """Propagate with the superoperator of L = a f(n), assembled from Kronecker products."""
    dim = rho0.shape[0]
    a = np.diag(np.sqrt(np.arange(1, dim)), 1)
    f = np.array([profile.f(n) for n in range(dim)])
    L = a @ np.diag(f)
    LdL = L.conj().T @ L
    eye = np.eye(dim)
    # row-major vec: vec(A X B) = kron(A, B.T) vec(X)
    sup = gamma * (2 * np.kron(L, L.conj()) - np.kron(LdL, eye) - np.kron(eye, LdL.T))
    return (expm(sup * t) @ rho0.reshape(-1)).reshape(dim, dim)


# -- settings ------------------------------------------------------------------


@pytest.mark.parametrize(
    "kw",
    [
        {"gamma": 0.0},
        {"t_end": -1.0},
        {"rel_tol": 0.0},
        {"abs_tol": 0.1},
        {"max_step": 0.0},
        {"t_end": 1.0, "snapshot_times": (0.5, 0.2)},
        {"t_end": 1.0, "snapshot_times": (2.0,)},
    ],
)
def test_settings_validation(kw):
    with pytest.raises(ValueError):
        EvolutionSettings(**kw)


def test_output_times_include_endpoints():
    s = EvolutionSettings(t_end=2.0, snapshot_times=(0.5, 1.0))
    np.testing.assert_array_equal(s.output_times(), [0.0, 0.5, 1.0, 2.0])


# -- matrix evolution vs independent oracle -------------------------------------


@pytest.mark.parametrize("spec", ["fock:2", "pair:0,2", "comb:2,1"])
def test_matrix_evolution_matches_superoperator(spec):
    n_max = 7
    profile = profile_for_target(parse_target(spec), n_max)
    rho0 = random_density_matrix(np.random.default_rng(7), n_max + 1)
    traj = evolve_matrix(profile, rho0, EvolutionSettings(gamma=0.7, t_end=1.5, rel_tol=1e-10, abs_tol=1e-14))
    oracle = lindblad_oracle(profile, rho0, 0.7, 1.5)
    assert np.max(np.abs(traj.final - oracle)) < 1e-9


def test_nonuniform_profile_against_oracle():
    profile = LossProfile((1.0, 0.3, 2.0, 0.0, 1.5, 0.8), "truncate")
    rho0 = random_density_matrix(np.random.default_rng(3), 6)
    traj = evolve_matrix(profile, rho0, EvolutionSettings(t_end=0.8, rel_tol=1e-10, abs_tol=1e-14))
    assert np.max(np.abs(traj.final - lindblad_oracle(profile, rho0, 1.0, 0.8))) < 1e-9


# -- examples ------------------------------------------------------------------------


def test_zero_profile_freezes_band():
    profile = LossProfile((0.0,) * 6, "truncate")
    band = DiagonalBand(1, 1.0, np.linspace(1, 0.2, 5))
    traj = evolve_band(profile, band, EvolutionSettings(t_end=5.0))
    np.testing.assert_array_equal(traj.final, band.values)


def test_linear_loss_empties_to_vacuum():
    profile = LossProfile((1.0,), "hold")
    rho0 = coherent_density_matrix(1.0, 25)
    band0 = bands_from_matrix(rho0)[0]
    traj = evolve_band(profile, band0, EvolutionSettings(t_end=20.0))
    assert traj.final[0].real == pytest.approx(np.trace(rho0).real, abs=1e-12)
    assert np.max(np.abs(traj.final[1:])) < 1e-12


def test_band_evolution_reaches_stationary_values():
    profile = profile_for_pair(0, 2, 30)
    rho0 = coherent_density_matrix(1.3, 30)
    t = 50.0 / min_positive_phi(profile, 31)
    report = stationary_matrix(profile, rho0)
    for tr in evolve_bands(profile, rho0, EvolutionSettings(t_end=t)):
        k = tr.offset
        expected = np.diagonal(report.rho, offset=k) / tr.scale
        assert np.max(np.abs(tr.final - expected)) < 1e-6


def test_dark_fock_state_is_stationary():
    profile = profile_for_target(parse_target("fock:3"), 8)
    rho0 = fock_density_matrix(3, 8)
    traj = evolve_matrix(profile, rho0, EvolutionSettings(t_end=10.0))
    np.testing.assert_array_equal(traj.final, rho0)


@pytest.mark.parametrize("spec", ["fock:1", "pair:4,9", "comb:3,2"])
def test_vacuum_is_stationary(spec):
    profile = profile_for_target(parse_target(spec), 20)
    rho0 = fock_density_matrix(0, 20)
    assert np.array_equal(evolve_matrix(profile, rho0, EvolutionSettings(t_end=3.0)).final, rho0)


def test_pair_vacuum_population_approaches_flow_value():
    r = 1.2
    profile = profile_for_pair(0, 2, 30)
    rho0 = coherent_density_matrix(r, 30)
    t = 50.0 / min_positive_phi(profile, 31)
    final = evolve_matrix(profile, rho0, EvolutionSettings(t_end=t)).final
    assert final[0, 0].real == pytest.approx(coherent_weight(0, r) ** 2 + coherent_weight(1, r) ** 2, abs=1e-6)


# -- invariants -----------------------------------------------------------------------


@given(st.sampled_from(["fock:2", "pair:0,2", "pair:1,3", "comb:2,0", "comb:3,1"]),
       st.floats(0.3, 2.0), st.floats(-math.pi, math.pi), st.floats(0.1, 3.0))
def test_conservation_and_positivity(spec, r, phase, t_end):
    n_max = 18
    profile = profile_for_target(parse_target(spec), n_max)
    rho0 = coherent_density_matrix(r * np.exp(1j * phase), n_max, warn=False)
    s = EvolutionSettings(gamma=1.3, t_end=t_end, snapshot_times=(t_end / 3, t_end / 2))
    traj = evolve_matrix(profile, rho0, s, alpha_phase=phase)
    assert np.all(traj.trace_error <= 1e-8 * (1 + s.gamma * traj.times))
    assert np.max(traj.herm_error) <= 1e-10
    assert np.min(traj.min_xi) >= -1e-10


@given(st.sampled_from(["fock:2", "pair:0,2", "comb:2,1"]), st.floats(0.3, 2.0))
def test_rescaled_band_values_do_not_decrease(spec, r):
    n_max = 15
    profile = profile_for_target(parse_target(spec), n_max)
    rho0 = coherent_density_matrix(r, n_max, warn=False)
    s = EvolutionSettings(t_end=2.0, snapshot_times=tuple(np.linspace(0.1, 1.9, 10)))
    for tr in evolve_bands(profile, rho0, s):
        phi = phi_values(profile, tr.offset, n_max + 1)
        growth = np.exp(np.outer(tr.times, phi))
        scaled = tr.states.real * growth
        # integrator noise of size abs_tol is amplified by the same growth factor
        slack = 1e-8 * np.abs(scaled[1:]) + 10 * s.abs_tol * growth[1:]
        assert np.all(np.diff(scaled, axis=0) >= -slack)


@pytest.mark.parametrize("spec", ["fock:3", "pair:0,2", "comb:3,1"])
def test_band_and_matrix_routes_agree(spec):
    n_max = 30
    profile = profile_for_target(parse_target(spec), n_max)
    rho0 = coherent_density_matrix(1.5, n_max)
    s = EvolutionSettings(t_end=3.0, snapshot_times=(0.5, 1.0, 2.0))
    whole = evolve_matrix(profile, rho0, s)
    parts = reassemble(evolve_bands(profile, rho0, s))
    assert np.max(np.abs(whole.states - parts.states)) <= 1e-10


def test_threaded_bands_match_serial(monkeypatch):
    profile = profile_for_target(parse_target("comb:2,0"), 20)
    rho0 = coherent_density_matrix(1.0, 20)
    s = EvolutionSettings(t_end=1.0)
    serial = reassemble(evolve_bands(profile, rho0, s, workers=1))
    monkeypatch.setenv("NCL_THREADS", "4")
    threaded = reassemble(evolve_bands(profile, rho0, s))
    assert np.array_equal(serial.states, threaded.states)


def test_band_trace_diagnostic_only_for_main_diagonal():
    profile = profile_for_target(parse_target("fock:1"), 10)
    trs = evolve_bands(profile, coherent_density_matrix(0.8, 10), EvolutionSettings(t_end=1.0))
    assert np.all(np.isfinite(trs[0].trace_error))
    assert np.all(np.isnan(trs[1].trace_error))
    assert np.all(np.isnan(trs[0].herm_error))


# -- segment invariant ------------------------------------------------------------


def test_segment_invariant_pair02():
    profile = profile_for_pair(0, 2, 30)
    rho0 = coherent_density_matrix(1.1, 30)
    s = EvolutionSettings(t_end=8.0, snapshot_times=tuple(np.linspace(0.5, 7.5, 15)))
    band0 = evolve_bands(profile, rho0, s)[0]
    inv = segment_invariant(band0, profile, 0, 2)
    np.testing.assert_allclose(inv, band0.states[:, 0].real + band0.states[:, 1].real)
    assert np.ptp(inv) < 1e-8
    # starting value equals the long-time accumulator value
    assert inv[0] == pytest.approx(stationary_matrix(profile, rho0).rho[0, 0].real, abs=1e-14)


def test_segment_invariant_band_k2():
    profile = profile_for_pair(0, 2, 30)
    rho0 = coherent_density_matrix(1.1, 30)
    s = EvolutionSettings(t_end=8.0, snapshot_times=(1.0, 4.0))
    band2 = evolve_bands(profile, rho0, s)[2]
    inv = segment_invariant(band2, profile, 0)
    assert np.ptp(inv) < 1e-8
    assert inv[0] * band2.scale == pytest.approx(stationary_matrix(profile, rho0).rho[0, 2], abs=1e-14)


def test_segment_invariant_zero_profile_constant():
    profile = LossProfile((0.0,) * 8, "truncate")
    band = DiagonalBand(0, 1.0, np.linspace(1, 0, 8))
    traj = evolve_band(profile, band, EvolutionSettings(t_end=4.0, snapshot_times=(1.0, 2.0)))
    for n2 in range(1, 8):
        assert np.ptp(segment_invariant(traj, profile, 0, n2)) == 0.0


def test_segment_invariant_rejects_non_accumulator():
    profile = profile_for_pair(0, 2, 10)
    band0 = evolve_bands(profile, coherent_density_matrix(0.5, 10), EvolutionSettings(t_end=0.1))[0]
    with pytest.raises(ValueError, match="accumulator"):
        segment_invariant(band0, profile, 1)
    with pytest.raises(ValueError):
        segment_invariant(reassemble([band0] + evolve_bands(profile, coherent_density_matrix(0.5, 10),
                                                            EvolutionSettings(t_end=0.1))[1:]), profile, 0)


# -- stationarity and stiffness ----------------------------------------------------


def test_evolve_until_stationary_matches_analytic():
    profile = profile_for_target(parse_target("fock:2"), 20)
    rho0 = coherent_density_matrix(1.0, 20)
    traj = evolve_until_stationary(profile, rho0, EvolutionSettings(t_end=1.0))
    assert is_stationary(profile, traj.final)
    assert np.max(np.abs(traj.final - stationary_matrix(profile, rho0).rho)) < 1e-10


def test_stiffness_failure_names_level():
    profile = LossProfile(tuple(float(n) ** 4 for n in range(40)), "hold")
    rho0 = coherent_density_matrix(1.0, 39)
    with pytest.raises(StiffnessError, match="n=39") as err:
        evolve_matrix(profile, rho0, EvolutionSettings(t_end=1.0))
    assert err.value.index == 39
    with pytest.raises(StiffnessError, match="k=0.*n=39"):
        evolve_band(profile, bands_from_matrix(rho0)[0], EvolutionSettings(t_end=1.0))

import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_density_matrix
from test_evolution import lindblad_oracle
from nclsim.designer import profile_for_comb, profile_for_fock, profile_for_pair, profile_for_target
from nclsim.evolution import min_positive_phi
from nclsim.fock import (
    LossProfile,
    TruncationWarning,
    coherent_density_matrix,
    coherent_weight,
    fock_density_matrix,
    parse_target,
)
from nclsim.stationary import stationary_matrix, stationary_support

specs = st.sampled_from(["fock:1", "fock:3", "pair:0,2", "pair:1,3", "pair:2,5", "comb:2,0", "comb:2,1", "comb:3,1"])


# -- support --------------------------------------------------------------------


def test_support_single_zero():
    sup = stationary_support(profile_for_fock(3, 12), 12)
    assert set(sup.accumulators) == {(0, 0), (3, 0), (0, 3)}


def test_support_linear_loss_is_vacuum():
    sup = stationary_support(LossProfile((1.0,), "hold"), 15)
    assert sup.accumulators == ((0, 0),)
    rho = stationary_matrix(LossProfile((1.0,), "hold"), coherent_density_matrix(1.0, 15, warn=False)).rho
    assert rho[0, 0].real == pytest.approx(1.0, abs=1e-9)


def test_support_even_comb_enumeration():
    n_max = 14
    sup = stationary_support(profile_for_comb(2, 0, n_max), n_max)
    expected = {(n, m - n) for n in range(0, n_max + 1, 2) for m in range(n, n_max + 1, 2)}
    assert set(sup.accumulators) == expected


def test_support_sorted_and_masks():
    sup = stationary_support(profile_for_pair(0, 2, 6), 6)
    assert sup.accumulators == ((0, 0), (2, 0), (0, 2))
    m = sup.mask()
    assert m[0, 2] and m[2, 0] and m[2, 2] and not m[1, 1]
    assert (0, 2) in sup and (1, 0) not in sup


def test_blocking_indices():
    sup = stationary_support(profile_for_pair(0, 2, 10), 10)
    assert sup.blocking[(0, 0)] == 2
    assert sup.blocking[(2, 0)] is None
    assert sup.segment_end(2, 0) == 11
    assert sup.blocking[(0, 2)] == 2  # F(2) = 0 stops the k=2 flow


@given(specs, st.integers(0, 12))
def test_accumulators_satisfy_zero_condition(spec, extra):
    target = parse_target(spec)
    n_max = target.reach + extra
    profile = profile_for_target(target, n_max)
    sup = stationary_support(profile, n_max)
    assert (0, 0) in sup
    for n, k in sup.accumulators:
        assert profile.is_zero(n) and profile.is_zero(n + k)


# -- closed forms -----------------------------------------------------------------


def test_fock3_closed_form():
    rep = stationary_matrix(profile_for_fock(3, 60), coherent_density_matrix(3.0, 60))
    rho00 = math.exp(-9) * (1 + 9 + 40.5)
    assert rep.rho[0, 0].real == pytest.approx(rho00, abs=1e-15)
    assert rep.rho[3, 3].real == pytest.approx(1 - rho00, abs=1e-12)
    assert rho00 == pytest.approx(6.232195e-3, abs=1e-9)


@given(st.floats(0.1, 3.0))
def test_pair02_coherence_closed_form(r):
    rep = stationary_matrix(profile_for_pair(0, 2, 60), coherent_density_matrix(r, 60, warn=False))
    r2 = r * r
    c02 = math.sqrt(2) * (r2 + r2 * r2 / math.sqrt(3)) * math.exp(-r2)
    assert 2 * abs(rep.rho[0, 2]) == pytest.approx(c02, rel=1e-12, abs=1e-15)
    q = coherent_weight(np.arange(4), r)
    assert abs(rep.rho[0, 2]) == pytest.approx(q[0] * q[2] + q[1] * q[3], rel=1e-12, abs=1e-15)


def test_vacuum_maps_to_vacuum():
    for spec in ("fock:2", "pair:4,9", "comb:3,1"):
        profile = profile_for_target(parse_target(spec), 20)
        rho = stationary_matrix(profile, fock_density_matrix(0, 20)).rho
        np.testing.assert_array_equal(rho, fock_density_matrix(0, 20))


# -- agreement with an independent propagator ---------------------------------------


@pytest.mark.parametrize("spec", ["fock:2", "pair:0,2", "pair:1,3", "comb:2,1"])
def test_matches_long_time_superoperator(spec):
    n_max = 8
    profile = profile_for_target(parse_target(spec), n_max)
    rho0 = random_density_matrix(np.random.default_rng(11), n_max + 1)
    t = 60.0 / min_positive_phi(profile, n_max + 1)
    oracle = lindblad_oracle(profile, rho0, 1.0, t)
    assert np.max(np.abs(stationary_matrix(profile, rho0).rho - oracle)) < 1e-10


def test_nonuniform_transmittance_against_superoperator():
    # unequal F on a window, so transmittances below one enter the products
    profile = LossProfile.from_F([0.0, 1.0, 0.0, 2.0, 0.5, 1.5, 0.7, 1.1], "truncate")
    rho0 = random_density_matrix(np.random.default_rng(5), 8)
    t = 60.0 / min_positive_phi(profile, 8)
    oracle = lindblad_oracle(profile, rho0, 1.0, t)
    assert np.max(np.abs(stationary_matrix(profile, rho0).rho - oracle)) < 1e-10


# -- invariants ----------------------------------------------------------------------


@given(specs, st.integers(0, 2**31 - 1))
def test_trace_preserved_exactly(spec, seed):
    target = parse_target(spec)
    n_max = target.reach + 4
    profile = profile_for_target(target, n_max)
    rho0 = random_density_matrix(np.random.default_rng(seed), n_max + 1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TruncationWarning)
        rho = stationary_matrix(profile, rho0).rho
    assert abs(np.trace(rho) - np.trace(rho0)) < 1e-13


@given(specs, st.floats(0.2, 3.0))
def test_nonzero_entries_sit_where_F_matches(spec, r):
    target = parse_target(spec)
    n_max = max(target.reach, 40)
    profile = profile_for_target(target, n_max)
    rho = stationary_matrix(profile, coherent_density_matrix(r, n_max, warn=False)).rho
    F = profile.F(n_max + 1)
    n, m = np.nonzero(np.abs(rho) > 0)
    assert np.all(F[n] == F[m])


def test_scale_invariance():
    profile = profile_for_pair(1, 3, 30)
    rho0 = coherent_density_matrix(1.4, 30)
    a = stationary_matrix(profile, rho0).rho
    b = stationary_matrix(profile.scaled(3.7), rho0).rho
    assert np.max(np.abs(a - b)) < 1e-15


def test_long_segments_use_log_products():
    F = [0.0] + [1.0 + 0.5 * (n % 2) for n in range(1, 150)]
    F[100] = 0.0
    profile = LossProfile.from_F(F, "truncate")
    rho0 = coherent_density_matrix(9.0, 149, warn=False)
    rho = stationary_matrix(profile, rho0).rho
    assert np.all(np.isfinite(rho))
    assert abs(np.trace(rho) - np.trace(rho0)) < 1e-12


# -- warnings and report ---------------------------------------------------------------


def test_truncation_warning_when_band_hits_cutoff():
    with pytest.warns(TruncationWarning, match="cutoff"):
        rep = stationary_matrix(profile_for_fock(3, 10), coherent_density_matrix(3.0, 10, warn=False))
    assert any("cutoff" in w for w in rep.warnings)


def test_report_json():
    rep = stationary_matrix(profile_for_pair(0, 2, 12), coherent_density_matrix(0.5, 12), parse_target("pair:0,2"))
    d = rep.to_dict()
    assert d["support"] == [[0, 0], [2, 0], [0, 2]]
    assert d["warnings"] == []
    assert len(d["rho"]) == 13 * 14 // 2
    assert set(d["coherences"]) == {"0,2"}
    assert d["fidelity"] == pytest.approx(rep.fidelity)
    assert '"purity"' in rep.to_json()
    assert rep.element(2, 0) == pytest.approx(np.conj(rep.element(0, 2)))

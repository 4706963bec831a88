import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import unitary_group

from catbox._catmodel import (
    CAT,
    DEFAULT_DECAY_RATE,
    HOUR,
    NUCLEUS,
    DecayParams,
    cat_report,
    decay_unitary,
    evolve_decay,
    initial_state,
    purity_law,
    reduced_cat,
    reduced_nucleus,
    rotated_basis_check,
)
from catbox._errors import DomainError
from catbox._qcore import entropy, is_unitary, purity


def test_initial_state_is_up_alive():
    psi = initial_state()
    assert psi.names == ["nucleus", "cat"]
    assert psi.amplitude("up", "alive") == 1


def test_decay_at_zero_time_is_initial_state():
    np.testing.assert_array_equal(evolve_decay(DecayParams(t=0.0)).amplitudes, initial_state().amplitudes)


def test_only_correlated_branches_populated():
    psi = evolve_decay(DecayParams(t=1234.0))
    assert psi.amplitude("up", "dead") == 0
    assert psi.amplitude("down", "alive") == 0
    assert psi.is_normalized()


def test_one_hour_cat_is_an_equal_mixture():
    rho = reduced_cat(HOUR)
    np.testing.assert_allclose(rho.populations(), [0.5, 0.5], atol=1e-15)
    assert abs(rho.matrix[0, 1]) < 1e-14
    assert entropy(rho) == pytest.approx(1.0, abs=1e-12)


def test_two_hours():
    rho = reduced_cat(2 * HOUR)
    np.testing.assert_allclose(rho.populations(), [0.25, 0.75], atol=1e-12)


def test_nucleus_reduction_mirrors_cat():
    np.testing.assert_allclose(reduced_nucleus(HOUR / 3).matrix, reduced_cat(HOUR / 3).matrix, atol=1e-15)


def test_rotated_nucleus_basis_gives_same_reduction():
    rotated, standard = rotated_basis_check(HOUR)
    np.testing.assert_allclose(rotated.matrix, standard.matrix, atol=1e-12)


def test_random_rotations_of_traced_factor(rng):
    for _ in range(50):
        v = unitary_group.rvs(2, random_state=rng)
        t = float(rng.uniform(0, 5 * HOUR))
        rotated, standard = rotated_basis_check(t, rotation=v)
        np.testing.assert_allclose(rotated.matrix, standard.matrix, atol=1e-12)


@pytest.mark.parametrize("t", [0.0, 600.0, HOUR, 3 * HOUR, 40 * HOUR])
def test_purity_law(t):
    assert purity(reduced_cat(t)) == pytest.approx(purity_law(t), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 1e5), st.floats(0, 1e5))
def test_dead_population_grows_with_time(t1, t2):
    lo, hi = sorted((t1, t2))
    assert reduced_cat(lo).populations()[1] <= reduced_cat(hi).populations()[1] + 1e-15


def test_half_life_constructor():
    params = DecayParams.from_half_life(HOUR, t=HOUR)
    assert params.decay_rate == DEFAULT_DECAY_RATE
    assert params.survival == pytest.approx(0.5)


@pytest.mark.parametrize("rate, t", [(0.0, 1.0), (-1.0, 1.0), (1.0, -1.0), (math.nan, 1.0), (1.0, math.inf)])
def test_domain_errors(rate, t):
    with pytest.raises(DomainError):
        DecayParams(rate, t)


def test_decay_unitary_reproduces_amplitude_law():
    params = DecayParams(t=5000.0)
    u = decay_unitary(params)
    assert is_unitary(u)
    np.testing.assert_allclose(u[:, 0], evolve_decay(params).amplitudes, atol=1e-16)


def test_cat_report_row():
    (row,) = cat_report(DecayParams(t=HOUR))
    assert row.branch == "cat"
    assert row.probability == 1.0
    assert row.scalars["population[0]"] == pytest.approx(0.5, abs=1e-15)
    assert row.scalars["coherence_abs[0,1]"] < 1e-14
    assert row.scalars["purity"] == pytest.approx(0.5, abs=1e-15)
    assert row.matrices["rho"].shape == (2, 2)
    assert [f.name for f in (NUCLEUS, CAT)] == ["nucleus", "cat"]

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from catbox._cavity import (
    RAMSEY_PULSE,
    AtomSpace,
    Branch,
    FockSpace,
    cat_fringe_signal,
    cat_state,
    coherent_overlap,
    coherent_state,
    correlation_row,
    default_cutoff,
    detect_atom,
    dispersive_shift,
    erase_which_path,
    fork_on_detection,
    garching_protocol,
    jc_evolve,
    jc_hamiltonian,
    joint_populations,
    mean_photon_number,
    paris_protocol,
    ramsey_pulse,
    required_cutoff,
    rotate_atom,
    sample_detection,
    tail_mass,
)
from catbox._errors import DomainError, ErasureError, ErasureOrderError, LabelError, TruncationError
from catbox._qcore import (
    DensityOperator,
    StateVector,
    basis_state,
    coherence,
    density_violations,
    fidelity,
    inner,
    product,
    reduced_density,
    tensor,
    to_density,
)

ATOM = AtomSpace()
ATOM3 = AtomSpace(("e", "g", "a"))


def _rows(rows):
    return {r.branch: r for r in rows}


class TestSpaces:
    def test_fock_label(self):
        f = FockSpace(10)
        assert f.dim == 11
        assert f.label.fock
        assert FockSpace.from_label(f.label) == f

    def test_fock_cutoff_must_be_positive(self):
        with pytest.raises(ValueError):
            FockSpace(0)

    def test_for_alpha_uses_default_cutoff(self):
        assert FockSpace.for_alpha(2).cutoff == default_cutoff(2) == 28
        assert FockSpace.for_alpha(2, dim=40).dim == 40

    @pytest.mark.parametrize("levels", [("e",), ("e", "a"), ("e", "g", "x"), ("e", "e", "g")])
    def test_bad_atom_levels(self, levels):
        with pytest.raises(LabelError):
            AtomSpace(levels)

    def test_from_label_rejects_plain_space(self):
        with pytest.raises(LabelError):
            FockSpace.from_label(ATOM.label)


class TestCoherentState:
    @pytest.mark.parametrize("alpha", [0, 0.5, 1 + 1j, 2, 3, -2.5j])
    def test_mean_photon_number(self, alpha):
        field = FockSpace.for_alpha(alpha)
        psi = coherent_state(field, alpha)
        assert psi.is_normalized()
        assert mean_photon_number(psi, field) == pytest.approx(abs(alpha) ** 2, abs=1e-8)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0, 3), st.floats(0, 2 * math.pi))
    def test_default_cutoff_tail_is_negligible(self, r, phase):
        alpha = r * complex(math.cos(phase), math.sin(phase))
        assert tail_mass(alpha, default_cutoff(alpha)) < 1e-10

    def test_vacuum(self):
        psi = coherent_state(FockSpace(10), 0)
        assert psi.amplitude(0) == 1

    def test_truncation_error_reports_required_dimension(self):
        with pytest.raises(TruncationError) as info:
            coherent_state(FockSpace(5), 3)
        assert info.value.required_dim == required_cutoff(3) + 1
        assert tail_mass(3, info.value.required_dim - 1) < 1e-10
        assert tail_mass(3, info.value.required_dim - 2) >= 1e-10

    @pytest.mark.parametrize("alpha, beta", [(1, 1), (1, -1), (0.5j, 1 + 0.5j), (2, 2.1)])
    def test_overlap_closed_form(self, alpha, beta):
        field = FockSpace(40)
        numeric = inner(coherent_state(field, alpha), coherent_state(field, beta))
        assert numeric == pytest.approx(coherent_overlap(alpha, beta), abs=1e-10)

    def test_cat_states(self):
        field = FockSpace.for_alpha(2)
        even, odd = cat_state(field, 2, +1), cat_state(field, 2, -1)
        assert abs(inner(even, odd)) < 1e-12
        assert np.all(np.abs(even.amplitudes[1::2]) < 1e-12)
        with pytest.raises(DomainError):
            cat_state(FockSpace(10), 0, -1)


class TestAtomOperations:
    def test_ramsey_convention(self):
        psi = ramsey_pulse(basis_state(ATOM.label, "e"), ATOM)
        np.testing.assert_allclose(psi.amplitudes, [1 / math.sqrt(2)] * 2, atol=1e-15)
        twice = ramsey_pulse(psi, ATOM)
        assert fidelity(twice, basis_state(ATOM.label, "g")) == pytest.approx(1.0, abs=1e-12)

    def test_rotation_generalizes_ramsey(self):
        psi = basis_state(ATOM3.label, "g")
        np.testing.assert_allclose(
            rotate_atom(psi, ATOM3, math.pi / 2).amplitudes,
            ramsey_pulse(psi, ATOM3).amplitudes,
            atol=1e-15,
        )
        np.testing.assert_allclose(RAMSEY_PULSE @ RAMSEY_PULSE.conj().T, np.eye(2), atol=1e-15)

    def test_rotation_leaves_erasure_level_alone(self):
        psi = basis_state(ATOM3.label, "a")
        np.testing.assert_allclose(rotate_atom(psi, ATOM3, 1.234).amplitudes, psi.amplitudes, atol=1e-15)

    def test_dispersive_shift_flips_field_for_g(self):
        field = FockSpace.for_alpha(2)
        psi = product(basis_state(ATOM.label, "g"), coherent_state(field, 2))
        out = dispersive_shift(psi, ATOM, field, 0.0, math.pi)
        target = product(basis_state(ATOM.label, "g"), coherent_state(field, -2))
        assert fidelity(out, target) > 1 - 1e-12
        unchanged = product(basis_state(ATOM.label, "e"), coherent_state(field, 2))
        assert fidelity(dispersive_shift(unchanged, ATOM, field, 0.0, math.pi), unchanged) > 1 - 1e-12

    @pytest.mark.parametrize("alpha", [0.5, 2, 3])
    @pytest.mark.parametrize("phi", [0.3, 0.7, 2.1])
    def test_opposite_phases_rotate_the_field(self, alpha, phi):
        field = FockSpace.for_alpha(alpha)
        psi = ramsey_pulse(product(basis_state(ATOM.label, "e"), coherent_state(field, alpha)), ATOM)
        out = dispersive_shift(psi, ATOM, field, phi, -phi)
        up = product(basis_state(ATOM.label, "e"), coherent_state(field, alpha * np.exp(1j * phi)))
        down = product(basis_state(ATOM.label, "g"), coherent_state(field, alpha * np.exp(-1j * phi)))
        target = StateVector(up.factors, (up.amplitudes + down.amplitudes) / math.sqrt(2))
        assert fidelity(out, target) > 1 - 1e-8


class TestWhichPathCoherence:
    def test_orthogonal_markers_leave_no_field_interference(self, rng):
        alpha = 2
        field = FockSpace.for_alpha(alpha)
        plus, minus = coherent_state(field, alpha), coherent_state(field, -alpha)
        pinv = np.linalg.pinv(np.column_stack([plus.amplitudes, minus.amplitudes]))
        start = product(basis_state(ATOM.label, "e"), plus)
        for theta in rng.uniform(0, 2 * math.pi, 50):
            psi = dispersive_shift(rotate_atom(start, ATOM, theta), ATOM, field, 0.0, math.pi)
            rho = reduced_density(psi, [field.label])
            weights = pinv @ rho.matrix @ pinv.conj().T
            assert abs(weights[0, 1]) < 1e-10
            np.testing.assert_allclose(
                np.diag(weights).real,
                [math.cos(theta / 2) ** 2, math.sin(theta / 2) ** 2],
                atol=1e-10,
            )
            assert abs(coherence(rho, plus, minus)) <= math.exp(-2 * alpha ** 2) + 1e-10

    def test_atom_coherence_bounded_by_field_marker_overlap(self, rng):
        for _ in range(50):
            alpha = rng.uniform(0.2, 2.5)
            theta, phi = rng.uniform(0, 2 * math.pi, 2)
            field = FockSpace.for_alpha(alpha)
            psi = rotate_atom(product(basis_state(ATOM.label, "e"), coherent_state(field, alpha)), ATOM, theta)
            psi = dispersive_shift(psi, ATOM, field, 0.0, phi)
            rho = reduced_density(psi, [ATOM.label]).matrix
            bound = abs(coherent_overlap(alpha, alpha * np.exp(1j * phi)))
            assert abs(rho[0, 1]) <= bound + 1e-10
            assert abs(rho[0, 1]) == pytest.approx(abs(math.sin(theta)) / 2 * bound, abs=1e-9)


class TestJaynesCummings:
    def test_hamiltonian_is_hermitian(self):
        h = jc_hamiltonian(ATOM3, FockSpace(4))
        np.testing.assert_allclose(h, h.conj().T)

    @pytest.mark.parametrize("gt", np.linspace(0, math.pi, 32))
    def test_vacuum_rabi_law(self, gt):
        field = FockSpace(10)
        psi = tensor(basis_state(ATOM3.label, "e"), basis_state(field.label, 0))
        out = jc_evolve(psi, ATOM3, field, 1.0, gt)
        assert out.amplitude("e", 0) == pytest.approx(math.cos(gt), abs=1e-12)
        assert out.amplitude("g", 1) == pytest.approx(1j * math.sin(gt), abs=1e-12)
        assert out.norm() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("g", [0.5, 1.0, 2.5])
    def test_vacuum_rabi_period(self, g):
        field = FockSpace(10)
        psi = tensor(basis_state(ATOM3.label, "e"), basis_state(field.label, 0))
        assert jc_evolve(psi, ATOM3, field, g, math.pi / g).amplitude("e", 0) == pytest.approx(-1.0, abs=1e-12)
        full = jc_evolve(psi, ATOM3, field, g, 2 * math.pi / g)
        np.testing.assert_allclose(full.amplitudes, psi.amplitudes, atol=1e-12)
        for t in np.linspace(0, 2 * math.pi / g, 7):
            later = jc_evolve(psi, ATOM3, field, g, t + 2 * math.pi / g)
            np.testing.assert_allclose(later.amplitudes, jc_evolve(psi, ATOM3, field, g, t).amplitudes, atol=1e-12)

    def test_jc_after_erasure_is_rejected(self):
        field = FockSpace(10)
        psi = tensor(basis_state(ATOM3.label, "a"), basis_state(field.label, 0))
        with pytest.raises(ErasureOrderError):
            jc_evolve(psi, ATOM3, field, 1.0, 0.3)


class TestErasure:
    def test_needs_three_level_atom(self):
        with pytest.raises(ErasureError):
            erase_which_path(basis_state(ATOM.label, "e"), ATOM)

    def test_weight_of_equal_superposition(self):
        field = FockSpace(4)
        atom = StateVector((ATOM3.label,), [1, 1, 0]).normalize()
        psi = tensor(atom, basis_state(field.label, 0))
        out, weight = erase_which_path(psi, ATOM3)
        assert weight == pytest.approx(2.0)
        assert out.amplitude("a", 0) == pytest.approx(1.0)

    def test_destructive_erasure_has_zero_norm(self):
        atom = StateVector((ATOM3.label,), [1, -1, 0]).normalize()
        with pytest.raises(ErasureError, match="annihilates"):
            erase_which_path(atom, ATOM3)

    def test_cannot_erase_twice(self):
        psi, _ = erase_which_path(basis_state(ATOM3.label, "e"), ATOM3)
        with pytest.raises(ErasureOrderError):
            erase_which_path(psi, ATOM3)


class TestDetection:
    def test_records_cover_every_level(self):
        psi = ramsey_pulse(basis_state(ATOM3.label, "e"), ATOM3)
        records = detect_atom(psi, ATOM3)
        assert [r.outcome for r in records] == ["e", "g", "a"]
        assert sum(r.probability for r in records) == pytest.approx(1.0)
        assert records[2].post_state is None
        assert records[0].post_state.amplitude("e") == pytest.approx(1.0)

    def test_fork_drops_impossible_outcomes(self):
        branches = fork_on_detection([Branch(basis_state(ATOM3.label, "g"))], ATOM3)
        assert [b.branch_id() for b in branches] == ["atom=g"]
        assert branches[0].branch_id("x") == "x/atom=g"
        assert Branch(basis_state(ATOM3.label, "g")).branch_id() == "root"

    def test_sampled_fork_keeps_one_branch(self):
        psi = ramsey_pulse(basis_state(ATOM.label, "e"), ATOM)
        picks = set()
        for seed in range(20):
            (branch,) = fork_on_detection([Branch(psi)], ATOM, np.random.default_rng(seed))
            assert branch.probability == pytest.approx(0.5)
            picks.add(branch.outcomes)
        assert picks == {(("atom", "e"),), (("atom", "g"),)}

    def test_sampler_never_picks_impossible_level(self):
        records = detect_atom(basis_state(ATOM3.label, "g"), ATOM3)
        rng = np.random.default_rng(7)
        assert {sample_detection(records, rng).outcome for _ in range(50)} == {"g"}

    def test_fork_needs_pure_state(self):
        rho = to_density(basis_state(ATOM.label, "e"))
        with pytest.raises(TypeError):
            fork_on_detection([Branch(rho)], ATOM)

    def test_joint_populations_follow_argument_order(self):
        a1, a2 = AtomSpace(name="atom1"), AtomSpace(name="atom2")
        psi = product(basis_state(a1.label, "e"), basis_state(a2.label, "g"))
        assert joint_populations(psi, a1, a2)[0, 1] == 1
        assert joint_populations(psi, a2, a1)[1, 0] == 1

    def test_correlation_row(self):
        a1, a2 = AtomSpace(name="atom1"), AtomSpace(name="atom2")
        same = Branch(product(basis_state(a1.label, "e"), basis_state(a2.label, "e")), 0.5)
        diff = Branch(product(basis_state(a1.label, "g"), basis_state(a2.label, "e")), 0.5)
        row = correlation_row([same, diff], a1, a2)
        assert row.branch == "correlation"
        assert row.scalars == {"correlation_signal": 0.0, "p_same": 0.5, "p_different": 0.5}


class TestFringeSignal:
    def test_pure_cats(self):
        field = FockSpace.for_alpha(2)
        even = to_density(cat_state(field, 2, +1))
        odd = to_density(cat_state(field, 2, -1))
        assert cat_fringe_signal(even, 2) == pytest.approx(1.0, abs=1e-12)
        assert cat_fringe_signal(odd, 2) == pytest.approx(-1.0, abs=1e-12)

    def test_statistical_mixture_shows_no_fringe(self):
        field = FockSpace.for_alpha(2)
        m = (to_density(coherent_state(field, 2)).matrix + to_density(coherent_state(field, -2)).matrix) / 2
        signal = cat_fringe_signal(DensityOperator((field.label,), m), 2)
        assert signal == pytest.approx(math.exp(-8), abs=1e-10)
        assert abs(signal) < 4e-4

    def test_vacuum_has_no_odd_component(self):
        field = FockSpace(10)
        assert cat_fringe_signal(to_density(coherent_state(field, 0)), 0) == pytest.approx(1.0)


def _kron_chain(*ops):
    out = ops[0]
    for op in ops[1:]:
        out = np.kron(out, op)
    return out


def _oracle_correlation(alpha: complex, with_r2: bool) -> float:
    """Whole-protocol unitary on (atom1, atom2, field) built with np.kron, applied in one shot."""
    field = FockSpace.for_alpha(alpha)
    d = field.dim
    i2, i_f = np.eye(2), np.eye(d)
    parity = np.diag(np.exp(1j * math.pi * np.arange(d)))
    c1 = np.kron(np.diag([1, 0]), np.kron(i2, i_f)) + np.kron(np.diag([0, 1]), np.kron(i2, parity))
    c2 = np.kron(i2, np.kron(np.diag([1, 0]), i_f) + np.kron(np.diag([0, 1]), parity))
    r1 = _kron_chain(RAMSEY_PULSE, i2, i_f)
    r2 = _kron_chain(i2, RAMSEY_PULSE, i_f)
    u = r2 @ c2 @ r2 @ (r1 if with_r2 else np.eye(4 * d)) @ c1 @ r1
    psi0 = np.kron(np.kron([1, 0], [1, 0]), coherent_state(field, alpha).amplitudes)
    p = (np.abs(u @ psi0) ** 2).reshape(2, 2, d).sum(axis=2)
    return float(p[0, 0] + p[1, 1] - p[0, 1] - p[1, 0])


class TestParis:
    def test_detection_probabilities_and_cat_fidelity(self):
        field = FockSpace.for_alpha(2)
        atom1, atom2 = AtomSpace(name="atom1"), AtomSpace(name="atom2")
        psi = product(basis_state(atom1.label, "e"), basis_state(atom2.label, "e"), coherent_state(field, 2))
        psi = ramsey_pulse(psi, atom1)
        psi = dispersive_shift(psi, atom1, field, 0.0, math.pi)
        psi = ramsey_pulse(psi, atom1)
        records = {r.outcome: r for r in detect_atom(psi, atom1)}
        eps = math.exp(-2 * 4)
        assert records["g"].probability == pytest.approx((1 + eps) / 2, abs=1e-10)
        assert records["e"].probability == pytest.approx((1 - eps) / 2, abs=1e-10)
        field_g = reduced_density(records["g"].post_state, [field.label])
        even = cat_state(field, 2, +1).amplitudes
        assert np.real(even.conj() @ field_g.matrix @ even) > 1 - 1e-8

    def test_full_protocol_rows(self):
        rows = _rows(paris_protocol(2))
        assert list(rows)[:3] == ["atom1:R1", "atom1:C", "atom1:R2"]
        assert rows["atom1=g"].scalars["fringe_signal"] == pytest.approx(1.0, abs=1e-8)
        assert rows["atom1=e"].scalars["fringe_signal"] == pytest.approx(-1.0, abs=1e-8)
        assert abs(rows["atom1:C"].scalars["fringe_signal"]) < 4e-4
        final = [r for r in rows.values() if r.branch.startswith("atom1=") and "," in r.branch]
        assert sum(r.probability for r in final) == pytest.approx(1.0, abs=1e-10)
        assert rows["correlation"].scalars["correlation_signal"] > 0.4

    def test_full_protocol_matches_oracle(self):
        signal = _rows(paris_protocol(2))["correlation"].scalars["correlation_signal"]
        assert signal == pytest.approx(_oracle_correlation(2, True), abs=1e-10)

    def test_null_experiment_matches_oracle(self):
        rows = _rows(paris_protocol(2, with_r2=False, with_detection=False))
        signal = rows["correlation"].scalars["correlation_signal"]
        assert abs(signal) < 1e-3
        assert signal == pytest.approx(_oracle_correlation(2, False), abs=1e-10)
        assert set(rows) == {"atom1:R1", "atom1:C", "atom2=e", "atom2=g", "correlation"}

    def test_early_detection_does_not_change_joint_statistics(self):
        late = _rows(paris_protocol(1.5, with_detection=False))["correlation"]
        early = _rows(paris_protocol(1.5, with_detection=True))["correlation"]
        assert late.close_to(early, tol=1e-12)

    def test_vacuum_probe_ignores_r2(self):
        with_r2 = _rows(paris_protocol(0, with_detection=False))
        without = _rows(paris_protocol(0, with_r2=False, with_detection=False))
        for rows in (with_r2, without):
            assert "atom2=e" not in rows
            assert rows["atom2=g"].probability == pytest.approx(1.0, abs=1e-12)

    def test_truncation_is_reported(self):
        with pytest.raises(TruncationError):
            paris_protocol(2, fock_dim=6)


class TestGarching:
    def test_erasure_restores_field_coherence(self):
        (row,) = garching_protocol()
        assert row.branch == "atom=a"
        assert row.probability == pytest.approx(1.0, abs=1e-12)
        assert row.scalars["coherence_abs[0,1]"] == pytest.approx(0.5, abs=1e-12)
        assert row.scalars["erasure_norm"] == pytest.approx(1.0, abs=1e-12)
        assert row.scalars["purity"] == pytest.approx(1.0, abs=1e-12)

    def test_without_erasure_field_is_mixed(self):
        (row,) = garching_protocol(with_erasure=False)
        assert row.branch == "root"
        assert row.scalars["population[0]"] == pytest.approx(0.5, abs=1e-12)
        assert row.scalars["population[1]"] == pytest.approx(0.5, abs=1e-12)
        assert row.scalars["coherence_abs[0,1]"] < 1e-14
        assert "erasure_norm" not in row.scalars

    @pytest.mark.parametrize("gt", np.linspace(0, math.pi / 2, 32))
    def test_coherence_sweep(self, gt):
        (row,) = garching_protocol(t_prime=gt)
        assert row.scalars["coherence_abs[0,1]"] == pytest.approx(abs(math.sin(2 * gt)) / 2, abs=1e-12)
        assert row.scalars["population[1]"] == pytest.approx(math.sin(gt) ** 2, abs=1e-12)

    def test_density_operators_pass_every_gate(self):
        for rows in (garching_protocol(), garching_protocol(with_erasure=False)):
            for row in rows:
                assert density_violations(row.matrices["rho"]) == []

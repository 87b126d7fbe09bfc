import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density, random_pure
from qdcemu.circuit import Circuit, rz
from qdcemu.engine import DensityMatrix, evolve_exact
from qdcemu.errors import DimensionMismatch, IncompleteData, TooManyQubits
from qdcemu.tomography import (
    EXACT,
    SHOTS,
    SettingData,
    basis_probabilities,
    dump,
    expectations_from_distribution,
    fidelity,
    load,
    measure_settings,
    project_psd,
    reconstruct,
    run_tomography,
    tomography_settings,
)

ZERO = DensityMatrix.from_statevector(np.array([1, 0]))
PLUS = DensityMatrix.from_statevector(np.array([1, 1]) / math.sqrt(2))
PHI_PLUS = DensityMatrix.from_statevector(np.array([1, 0, 0, 1]) / math.sqrt(2))


class TestSettings:
    def test_one_qubit(self):
        assert [s.basis for s in tomography_settings(1)] == ["X", "Y", "Z"]

    def test_two_qubits_order(self):
        bases = [s.basis for s in tomography_settings(2)]
        assert len(bases) == 9 and bases[0] == "XX" and bases[-1] == "ZZ"

    def test_five_qubits(self):
        assert len(tomography_settings(5)) == 243

    @pytest.mark.parametrize("k", [0, 6])
    def test_out_of_range(self, k):
        with pytest.raises(TooManyQubits):
            tomography_settings(k)


class TestMeasurement:
    def test_basis_probabilities_plus(self):
        np.testing.assert_allclose(basis_probabilities(PLUS, "X"), [1, 0], atol=1e-12)
        np.testing.assert_allclose(basis_probabilities(PLUS, "Z"), [0.5, 0.5], atol=1e-12)

    def test_y_eigenstate(self):
        plus_i = DensityMatrix.from_statevector(np.array([1, 1j]) / math.sqrt(2))
        np.testing.assert_allclose(basis_probabilities(plus_i, "Y"), [1, 0], atol=1e-12)

    def test_bell_expectations(self):
        for basis, want in [("XX", 1.0), ("YY", -1.0), ("ZZ", 1.0)]:
            ex = expectations_from_distribution(basis, basis_probabilities(PHI_PLUS, basis))
            assert ex[basis] == pytest.approx(want, abs=1e-12)
            assert ex["I" + basis[1]] == pytest.approx(0.0, abs=1e-12)
            assert ex["II"] == pytest.approx(1.0, abs=1e-12)

    def test_basis_length_checked(self):
        with pytest.raises(DimensionMismatch):
            basis_probabilities(PHI_PLUS, "X")

    def test_shot_counts_sum(self):
        data = measure_settings(PHI_PLUS, shots=100, seed=3)
        assert all(sum(d.counts.values()) == 100 for d in data)
        assert {k for d in data for k in d.counts} <= {"00", "01", "10", "11"}

    def test_shot_seed_reproducible(self):
        a = measure_settings(PHI_PLUS, shots=50, seed=9)
        b = measure_settings(PHI_PLUS, shots=50, seed=9)
        assert [d.counts for d in a] == [d.counts for d in b]


class TestReconstruction:
    def test_zero_exact(self):
        res = run_tomography(ZERO)
        assert res.mode == EXACT and res.settings_used == 3
        np.testing.assert_allclose(res.rho_hat.data, [[1, 0], [0, 0]], atol=1e-12)

    def test_bell_exact(self):
        res = run_tomography(PHI_PLUS)
        np.testing.assert_allclose(res.rho_hat.data, PHI_PLUS.data, atol=1e-12)

    def test_plus_with_shots(self):
        res = run_tomography(PLUS, shots=4096, seed=11)
        assert res.mode == SHOTS and res.shots == 4096
        assert fidelity(res.rho_hat, PLUS) >= 0.99

    @pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
    def test_lossless_for_random_mixed(self, k, rng):
        rho = DensityMatrix(random_density(2**k, rng))
        res = run_tomography(rho)
        np.testing.assert_allclose(res.rho_hat.data, rho.data, atol=1e-10)
        assert fidelity(res.rho_hat, rho) >= 1 - 1e-8

    def test_engine_state(self):
        c = Circuit(3)
        c.h(2).cx(2, 1).h(0).unitary(rz(0.4), 0).cz(1, 0)
        rho = evolve_exact(c)
        assert fidelity(run_tomography(rho).rho_hat, rho) >= 1 - 1e-8

    def test_incomplete(self):
        data = measure_settings(PHI_PLUS)[:-1]
        with pytest.raises(IncompleteData):
            reconstruct(data, 2)

    def test_setting_without_data(self):
        data = measure_settings(ZERO)
        data[0] = SettingData(data[0].basis)
        with pytest.raises(IncompleteData):
            reconstruct(data, 1)

    def test_raw_estimate_kept(self):
        res = run_tomography(PLUS, shots=20, seed=1)
        assert res.raw.data.trace().real == pytest.approx(1.0, abs=1e-12)


class TestProjection:
    def test_clips_negative_spectrum(self):
        m = np.diag([1.2, -0.2]).astype(complex)
        np.testing.assert_allclose(project_psd(m), np.diag([1.0, 0.0]), atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**31))
    def test_idempotent_unit_trace(self, seed):
        r = np.random.default_rng(seed)
        a = r.normal(size=(4, 4)) + 1j * r.normal(size=(4, 4))
        p = project_psd(a + a.conj().T)
        assert np.trace(p).real == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.eigvalsh(p).min() >= -1e-12
        np.testing.assert_allclose(project_psd(p), p, atol=1e-10)

    def test_negative_definite_rejected(self):
        with pytest.raises(IncompleteData):
            project_psd(-np.eye(2))


class TestFidelity:
    def test_zero_plus(self):
        assert fidelity(ZERO, PLUS) == pytest.approx(0.5, abs=1e-12)

    def test_maximally_mixed(self):
        assert fidelity(DensityMatrix(np.eye(2) / 2), ZERO) == pytest.approx(0.5, abs=1e-12)

    def test_self(self, rng):
        rho = DensityMatrix(random_density(8, rng))
        assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-9)

    def test_pure_pairs_overlap(self, rng):
        for _ in range(20):
            a, b = random_pure(8, rng), random_pure(8, rng)
            want = abs(np.vdot(a, b)) ** 2
            got = fidelity(DensityMatrix.from_statevector(a), DensityMatrix.from_statevector(b))
            assert got == pytest.approx(want, abs=1e-9)

    def test_symmetric_and_bounded(self, rng):
        for _ in range(10):
            r, s = DensityMatrix(random_density(4, rng)), DensityMatrix(random_density(4, rng))
            f = fidelity(r, s)
            assert 0.0 <= f <= 1.0 + 1e-12
            assert f == pytest.approx(fidelity(s, r), abs=1e-9)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            fidelity(ZERO, PHI_PLUS)


@pytest.mark.parametrize("shots", [None, 64])
def test_dump_load_roundtrip(tmp_path, shots):
    data = measure_settings(PHI_PLUS, shots=shots, seed=5)
    mode = EXACT if shots is None else SHOTS
    path = tmp_path / "tomo.json"
    dump(data, 2, mode, path)
    again, k, m = load(path)
    assert (k, m) == (2, mode)
    assert [d.to_dict() for d in again] == [d.to_dict() for d in data]
    np.testing.assert_allclose(reconstruct(again, 2).rho_hat.data, reconstruct(data, 2).rho_hat.data, atol=1e-12)

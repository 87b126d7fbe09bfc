import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from conftest import choi_from_kraus, choi_from_map, random_density
from qdcemu.circuit import Circuit, Gate, Reset
from qdcemu.collision import (
    FIBER_CATALOG,
    NoiseLinkSpec,
    amplitude_damping_kraus,
    analytic_excited_population,
    collision_gate,
    collision_unitary,
    damping_parameter,
    distance_for_steps,
    fiber_alpha,
    insert_link_noise,
    lindblad_excited_population,
    load_fiber_catalog,
    normalize_fiber_name,
)
from qdcemu.engine import DensityMatrix, evolve_exact, reduced
from qdcemu.errors import NegativeCoupling, NonPositiveAlpha, QubitRoleViolation

SP = np.array([[0, 0], [1, 0]], dtype=complex)  # sigma_+ = |1><0|
SM = SP.conj().T
KAPPA_DTS = [0.0, 0.1, 0.5, math.pi / 4, math.pi / 2]


def hamiltonian(kappa):
    return kappa * (np.kron(SP, SM) + np.kron(SM, SP))


class TestCollisionUnitary:
    @pytest.mark.parametrize("kappa, dt", [(0.1, 1.0), (0.5, 1.0), (0.2, 2.5), (math.pi / 2, 1.0), (1.3, 0.7)])
    def test_matches_matrix_exponential(self, kappa, dt):
        np.testing.assert_allclose(collision_unitary(kappa, dt), expm(-1j * hamiltonian(kappa) * dt), atol=1e-13)

    def test_zero_coupling_is_identity(self):
        np.testing.assert_array_equal(collision_unitary(0.0), np.eye(4))

    def test_full_swap(self):
        u = collision_unitary(math.pi / 2, 1.0)
        ket10 = np.array([0, 0, 1, 0])
        np.testing.assert_allclose(u @ ket10, -1j * np.array([0, 1, 0, 0]), atol=1e-15)

    def test_small_rotation(self):
        u = collision_unitary(0.1, 1.0)
        out = u @ np.array([0, 0, 1, 0])
        np.testing.assert_allclose(out, [0, -1j * math.sin(0.1), math.cos(0.1), 0], atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0, 10), st.floats(0.01, 5))
    def test_unitary_and_block_structure(self, kappa, dt):
        u = collision_unitary(kappa, dt)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(4), atol=1e-12)
        assert u[0, 0] == 1 and u[3, 3] == 1
        assert not u[0, 1:].any() and not u[3, :3].any()

    def test_negative_coupling(self):
        with pytest.raises(NegativeCoupling):
            collision_unitary(-0.1)

    def test_bad_dt(self):
        with pytest.raises(ValueError):
            collision_unitary(0.1, 0.0)

    def test_gate_records_angle(self):
        g = collision_gate(0.2, 1.5, 0, 1)
        assert g.name == "COLLISION" and g.params == pytest.approx((0.3,))


class TestDamping:
    def test_parameter_values(self):
        assert damping_parameter(0.0) == 0
        assert damping_parameter(math.pi / 2) == pytest.approx(1.0)
        assert damping_parameter(0.1) == pytest.approx(0.0099667, abs=5e-8)

    @pytest.mark.parametrize("kdt", KAPPA_DTS)
    def test_choi_equivalence(self, kdt):
        u = collision_unitary(kdt, 1.0)
        env0 = np.diag([1, 0])

        def channel(x):
            big = u @ np.kron(x, env0) @ u.conj().T
            return np.einsum("aibi->ab", big.reshape(2, 2, 2, 2))

        got = choi_from_map(channel, 2)
        want = choi_from_kraus(amplitude_damping_kraus(damping_parameter(kdt)))
        assert np.max(np.abs(got - want)) <= 1e-10

    def test_kraus_complete(self):
        for eta in (0, 0.3, 1):
            ks = amplitude_damping_kraus(eta)
            np.testing.assert_allclose(sum(k.conj().T @ k for k in ks), np.eye(2), atol=1e-15)

    def test_kraus_rejects_bad_eta(self):
        with pytest.raises(ValueError):
            amplitude_damping_kraus(1.2)


class TestClosedForms:
    def test_examples(self):
        assert analytic_excited_population(0, 0.1) == 1
        assert analytic_excited_population(1, 0.1) == pytest.approx(0.990033, abs=5e-7)
        assert analytic_excited_population(1, 0.1) == pytest.approx(1 - damping_parameter(0.1))
        assert abs(analytic_excited_population(100, 0.01) - math.exp(-0.01)) < 1e-4
        assert lindblad_excited_population(100, 0.01) == pytest.approx(math.exp(-0.01))

    @pytest.mark.parametrize("n", [1, 2, 5, 13])
    def test_engine_composition(self, n):
        c = Circuit(2).x(0)
        for _ in range(n):
            c.append(collision_gate(0.3, 1.0, 0, 1)).reset(1)
        p = reduced(evolve_exact(c), [0]).probability("1")
        assert abs(p - analytic_excited_population(n, 0.3)) <= 1e-10

    @pytest.mark.parametrize("n", [1, 3, 4])
    def test_reset_recycling_equals_fresh_environments(self, n, rng):
        rho_s = random_density(2, rng)
        recycled = Circuit(2)
        for _ in range(n):
            recycled.append(collision_gate(0.4, 1.0, 0, 1)).reset(1)
        a = evolve_exact(recycled, DensityMatrix(np.kron(np.diag([1, 0]), rho_s)))
        fresh = Circuit(n + 1)
        for k in range(n):
            fresh.append(collision_gate(0.4, 1.0, 0, k + 1))
        init = rho_s
        for _ in range(n):
            init = np.kron(np.diag([1, 0]), init)
        b = evolve_exact(fresh, DensityMatrix(init))
        np.testing.assert_allclose(reduced(a, [0]).data, reduced(b, [0]).data, atol=1e-10)


class TestDistance:
    def test_examples(self):
        assert distance_for_steps(0, 0.1, 0.0415) == 0
        assert distance_for_steps(1, 0.1, 0.0415) == pytest.approx(0.2410, abs=5e-5)
        assert distance_for_steps(10, 0.1, 0.0392) == pytest.approx(2.551, abs=5e-4)

    @settings(max_examples=50)
    @given(st.integers(0, 1000), st.floats(0, 3), st.floats(1e-3, 1))
    def test_linear(self, n, kappa, alpha):
        assert distance_for_steps(2 * n, kappa, alpha) == 2 * distance_for_steps(n, kappa, alpha)

    def test_non_positive_alpha(self):
        with pytest.raises(NonPositiveAlpha):
            distance_for_steps(1, 0.1, 0.0)


class TestCatalog:
    def test_builtin_values(self):
        assert FIBER_CATALOG == {"G652D": 0.0415, "G654D": 0.0392, "G655D": 0.0507}

    @pytest.mark.parametrize("name", ["G654E", "G-654-E", "g.654.e", "G654D"])
    def test_g654_aliases(self, name):
        assert fiber_alpha(name) == 0.0392
        assert normalize_fiber_name(name) == "G654D"

    def test_load_with_overrides(self, tmp_path):
        p = tmp_path / "cat.json"
        p.write_text(json.dumps({"custom": 0.02, "G652D": 0.05}))
        cat = load_fiber_catalog(p)
        assert cat["CUSTOM"].alpha == 0.02 and cat["G652D"].alpha == 0.05 and cat["G655D"].alpha == 0.0507

    def test_bad_alpha_in_file(self, tmp_path):
        p = tmp_path / "cat.json"
        p.write_text(json.dumps({"bad": 0.0}))
        with pytest.raises(NonPositiveAlpha):
            load_fiber_catalog(p)

    def test_numeric_alpha(self):
        assert fiber_alpha(0.03) == 0.03
        with pytest.raises(NonPositiveAlpha):
            fiber_alpha(-1.0)

    def test_unknown_fiber(self):
        with pytest.raises(KeyError):
            fiber_alpha("G999")


class TestNoiseSpec:
    def test_defaults(self):
        s = NoiseLinkSpec()
        assert (s.kappa_transducer, s.kappa_fiber, s.dt, s.fiber_steps, s.transducer_collisions) == (0.1, 0.1, 1.0, 0, 1)
        assert s.fiber_side == "receiver_only" and s.alpha == 0.0415
        assert not s.is_noiseless and NoiseLinkSpec.noiseless().is_noiseless

    @pytest.mark.parametrize("kw, err", [
        ({"kappa_transducer": -1}, NegativeCoupling),
        ({"kappa_fiber": -0.1}, NegativeCoupling),
        ({"dt": 0}, ValueError),
        ({"fiber_steps": -1}, ValueError),
        ({"fiber_side": "both"}, ValueError),
    ])
    def test_invalid(self, kw, err):
        with pytest.raises(err):
            NoiseLinkSpec(**kw)


def _bell_circuit():
    c = Circuit(4).h(0).cx(0, 2)  # comm_a=0 env_a=1 comm_b=2 env_b=3
    return c


def _pairs(c):
    ins = c.instructions
    return [(ins[i], ins[i + 1]) for i in range(len(ins) - 1)
            if isinstance(ins[i], Gate) and ins[i].name == "COLLISION"]


class TestInsertLinkNoise:
    def test_noiseless_unchanged(self):
        c = _bell_circuit()
        before = c.copy()
        insert_link_noise(c, 0, 1, 2, 3, NoiseLinkSpec(transducer_collisions=0, fiber_steps=0))
        assert c == before

    def test_step_one_counts(self):
        c = insert_link_noise(_bell_circuit(), 0, 1, 2, 3, NoiseLinkSpec(fiber_steps=1))
        pairs = _pairs(c)
        assert len(pairs) == 3
        assert all(isinstance(r, Reset) and r.qubit == g.qubits[1] for g, r in pairs)
        assert [g.qubits for g, _ in pairs] == [(0, 1), (2, 3), (2, 3)]

    def test_symmetric_side(self):
        c = insert_link_noise(_bell_circuit(), 0, 1, 2, 3, NoiseLinkSpec(fiber_steps=2, fiber_side="symmetric"))
        assert [g.qubits for g, _ in _pairs(c)] == [(0, 1), (2, 3), (0, 1), (0, 1), (2, 3), (2, 3)]

    def test_transducer_only_bell_fidelity(self):
        c = insert_link_noise(_bell_circuit(), 0, 1, 2, 3, NoiseLinkSpec())
        rho = reduced(evolve_exact(c), [0, 2])
        phi = np.array([1, 0, 0, 1]) / math.sqrt(2)
        fid = rho.fidelity_pure(phi)
        assert fid < 1
        assert rho.probability("00") + rho.probability("11") > 0.98
        # oracle: two independent damping channels on |Phi+>
        eta = math.sin(0.1) ** 2
        ks = amplitude_damping_kraus(eta)
        bell = np.outer(phi, phi)
        want = sum(np.kron(a, b) @ bell @ np.kron(a, b).conj().T for a in ks for b in ks)
        np.testing.assert_allclose(rho.data, want, atol=1e-12)

    def test_bell_fidelity_non_increasing(self):
        phi = np.array([1, 0, 0, 1]) / math.sqrt(2)
        fids = []
        for steps in range(8):
            c = insert_link_noise(_bell_circuit(), 0, 1, 2, 3, NoiseLinkSpec(fiber_steps=steps))
            fids.append(reduced(evolve_exact(c), [0, 2]).fidelity_pure(phi))
        assert all(b <= a + 1e-12 for a, b in zip(fids, fids[1:]))

    @pytest.mark.parametrize("args", [(0, 1, 2, 1), (0, 0, 2, 3), (0, 1, 1, 3), (0, 1, 0, 3)])
    def test_role_clash(self, args):
        with pytest.raises(QubitRoleViolation):
            insert_link_noise(_bell_circuit(), *args, NoiseLinkSpec())

    def test_env_used_in_other_gate(self):
        c = Circuit(4).h(0).cx(0, 2).cx(1, 2)
        with pytest.raises(QubitRoleViolation):
            insert_link_noise(c, 0, 1, 2, 3, NoiseLinkSpec())

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_boundary, random_su2
from lqgchip import lqg_core as L
from lqgchip.errors import ConfigError, DimensionError, DomainError

# frozen oracle values
RAW_SINGULAR_VALUES = (1 / math.sqrt(6), 1 / math.sqrt(12), 1 / math.sqrt(12), 1 / math.sqrt(18))
ABS_A_REGULAR = 1 / math.sqrt(3)
A_00000 = math.sqrt(6) / 16


class TestQubitState:
    def test_poles_and_equator(self):
        assert np.allclose(L.bloch_to_vector(L.QubitState(0, 0)), [1, 0])
        assert np.allclose(L.bloch_to_vector(L.QubitState(np.pi, 0)), [0, 1])
        assert np.allclose(L.bloch_to_vector(L.REGULAR), [1 / np.sqrt(2), 1j / np.sqrt(2)])

    @pytest.mark.parametrize("theta,phi", [(-0.1, 0), (np.pi + 0.1, 0), (0, 2 * np.pi), (0, -1e-3),
                                           (float("nan"), 0)])
    def test_out_of_range(self, theta, phi):
        with pytest.raises(DomainError):
            L.QubitState(theta, phi)
        with pytest.raises(DomainError):
            L.bloch_to_vector((theta, phi))

    @given(st.floats(0, np.pi), st.floats(0, 2 * np.pi, exclude_max=True))
    def test_unit_norm(self, theta, phi):
        assert abs(np.linalg.norm(L.bloch_to_vector((theta, phi))) - 1) < 1e-15

    def test_boundary_needs_five(self):
        with pytest.raises(DimensionError):
            L.BoundaryState((L.REGULAR,) * 4)

    def test_relabel(self):
        b = L.BoundaryState.from_angles([(0.1 * k, 0.2 * k) for k in range(1, 6)])
        swapped = b.relabel((2, 1, 3, 4, 5))
        assert swapped.tets[0] == b.tets[1] and swapped.tets[1] == b.tets[0]


class TestIntertwiners:
    def test_orthonormal(self):
        i0, i1 = L.build_intertwiner_basis()
        assert abs(np.vdot(i0, i1)) < 1e-12
        assert abs(np.vdot(i0, i0) - 1) < 1e-12 and abs(np.vdot(i1, i1) - 1) < 1e-12

    def test_invariant_under_su2(self, rng):
        for iota in L.build_intertwiner_basis():
            for _ in range(50):
                g = random_su2(rng)
                rotated = np.einsum("ai,bj,ck,dl,ijkl->abcd", g, g, g, g, iota)
                assert np.max(np.abs(rotated - iota)) < 1e-12

    def test_projector_trace_matches_casimir_count(self):
        i0, i1 = (v.ravel() for v in L.build_intertwiner_basis())
        proj = np.outer(i0, i0.conj()) + np.outer(i1, i1.conj())
        assert abs(np.trace(proj) - 2) < 1e-12
        assert oracles.spin_casimir_invariant_dim(4) == 2
        # the projector is the Casimir null space
        assert np.allclose(proj @ proj, proj, atol=1e-12)

    def test_matches_oracle_basis(self):
        for ours, ref in zip(L.build_intertwiner_basis(), oracles.intertwiners()):
            assert np.max(np.abs(ours - ref)) < 1e-14


class TestVertexTensor:
    def test_oracle_equivalence(self):
        assert np.max(np.abs(L.contract_vertex() - oracles.brute_force_vertex())) < 1e-12

    def test_frozen_spectrum(self, tensor):
        raw = L.contract_vertex()
        sv = np.linalg.svd(raw.reshape(4, 8).T, compute_uv=False)
        assert np.allclose(sv, RAW_SINGULAR_VALUES, atol=1e-14)
        assert tensor.norm_scale == pytest.approx(RAW_SINGULAR_VALUES[0], abs=1e-15)

    def test_normalized(self, gate):
        assert abs(np.linalg.svd(gate, compute_uv=False)[0] - 1) < 1e-12
        assert np.all(np.linalg.norm(gate, axis=0) <= 1 + 1e-12)

    def test_gauge_invariance(self, rng):
        ref = L.contract_vertex()
        for _ in range(100):
            g = random_su2(rng)
            bilinear = g.T @ L.EPSILON @ g
            assert np.max(np.abs(L.contract_vertex(bilinear=bilinear) - ref)) < 1e-10

    def test_entries_read_only(self, tensor):
        with pytest.raises(ValueError):
            tensor.entries[0, 0, 0, 0, 0] = 1

    def test_gate_shape_and_round_trip(self, tensor, gate):
        assert gate.shape == (8, 4)
        back = L.gate_from_tensor(L.tensor_from_gate(gate, tensor.norm_scale))
        assert np.array_equal(back, gate)

    def test_gate_index_order(self, tensor, gate):
        a = tensor.entries
        for i1, i2, i3, i4, i5 in np.ndindex(*(2,) * 5):
            assert gate[4 * i3 + 2 * i4 + i5, 2 * i1 + i2] == a[i1, i2, i3, i4, i5]
        assert gate[0, 0] == pytest.approx(A_00000, abs=1e-15)

    def test_bad_leg_table(self):
        with pytest.raises(ConfigError):
            L.build_vertex_tensor({1: (2, 3, 4, 5), 2: (1, 3, 4, 5), 3: (1, 2, 4, 5),
                                   4: (1, 2, 3, 5), 5: (1, 2, 3, 3)})

    def test_non_finite_rejected(self):
        bad = np.zeros((2,) * 5)
        bad[0, 0, 0, 0, 0] = np.nan
        with pytest.raises(DomainError):
            L.VertexTensor(bad, 1.0, "x")


class TestAmplitude:
    def test_all_regular_frozen(self, tensor):
        a = L.amplitude(tensor, L.BoundaryState.uniform(L.REGULAR))
        assert abs(a) == pytest.approx(ABS_A_REGULAR, abs=1e-12)

    def test_matches_naive_sum(self, gate, rng):
        for _ in range(20):
            b = random_boundary(rng)
            assert abs(L.amplitude_from_matrix(gate, b) - oracles.naive_amplitude(gate, b.vectors())) < 1e-12

    def test_matrix_form_equals_tensor_form(self, tensor, gate, rng):
        for _ in range(100):
            b = random_boundary(rng)
            assert abs(L.amplitude(tensor, b) - L.amplitude_from_matrix(gate, b)) < 1e-12

    def test_zero_matrix(self, rng):
        assert L.amplitude_from_matrix(np.zeros((8, 4)), random_boundary(rng)) == 0

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            L.amplitude_from_matrix(np.zeros((4, 8)), L.BoundaryState.uniform(L.REGULAR))

    def test_bounded_by_one(self, gate):
        vec = L.random_boundary_vectors(2000, 3)
        assert np.max(np.abs(L.amplitudes_from_vectors(gate, vec))) <= 1 + 1e-12

    def test_multilinearity(self, gate, rng):
        v = L.random_boundary_vectors(1, 7)[0]
        for label in range(5):
            w = L.random_boundary_vectors(1, 8 + label)[0, label]
            a, b = rng.normal(size=2) + 1j * rng.normal(size=2)
            mixed = v.copy()
            mixed[label] = a * v[label] + b * w
            alt = v.copy()
            alt[label] = w
            lhs = L.amplitudes_from_vectors(gate, mixed[None])[0]
            f = L.amplitudes_from_vectors(gate, v[None])[0]
            g = L.amplitudes_from_vectors(gate, alt[None])[0]
            if label < 2:
                expected = a * f + b * g
            else:
                expected = np.conj(a) * f + np.conj(b) * g
            assert abs(lhs - expected) < 1e-12


class TestSymmetry:
    def test_group(self):
        group = L.symmetry_group()
        assert len(group) == 12 and len(set(group)) == 12

    def test_theory_gate_relabeling_invariance(self, gate):
        # Exact invariance is impossible for a full-rank gate: A(swap12 b) = A(b)
        # for all b needs gate @ SWAP = gate, i.e. rank <= 3.
        assert L.symmetry_residual(gate, 1000, 0) < 1e-10

    def test_global_phase_does_not_change_residual(self, gate):
        alpha = 0.73
        r0 = L.symmetry_residual(gate, 200, 1)
        r1 = L.symmetry_residual(np.exp(1j * alpha) * gate, 200, 1)
        assert abs(r0 - r1) < 1e-10

    def test_symmetric_matrix_has_zero_residual(self):
        # a gate built from symmetric projectors is exactly invariant
        sym2 = np.array([[1, 0, 0, 0], [0, .5, .5, 0], [0, .5, .5, 0], [0, 0, 0, 1]])
        sym3 = np.zeros((8, 8))
        for i in range(8):
            bits = [(i >> k) & 1 for k in (2, 1, 0)]
            for perm in ((0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)):
                j = sum(bits[perm[k]] << (2 - k) for k in range(3))
                sym3[j, i] += 1 / 6
        m = sym3 @ np.random.default_rng(0).normal(size=(8, 4)) @ sym2
        assert L.symmetry_residual(m, 300, 2) < 1e-12

    def test_zeroed_column_breaks_symmetry(self, gate):
        m = gate.copy()
        m[:, 1] = 0
        assert L.symmetry_residual(m, 100, 3) > 0

    def test_rank_obstruction(self, gate):
        swap = np.eye(4)[[0, 2, 1, 3]]
        assert np.linalg.matrix_rank(gate) == 4
        assert np.linalg.norm(gate @ swap - gate) > 0.5


class TestScans:
    def test_axes(self):
        theta, phi = L.grid_axes(101)
        assert theta[0] == 0 and theta[-1] == np.pi and phi[0] == 0 and phi[-1] < 2 * np.pi
        with pytest.raises(ConfigError):
            L.grid_axes(0)

    def test_one_point_grid(self, gate):
        grid = L.scan_amplitudes(gate, L.ALL_EQUAL, 1)
        b = L.BoundaryState.uniform(L.QubitState(0.0, 0.0))
        assert grid.values.shape == (1, 1)
        assert grid.values[0, 0] == L.amplitude_from_matrix(gate, b)

    def test_setup_parsing(self):
        assert L.ScanSetup.parse("vary_one(3)") == L.VARY_ONE(3)
        assert L.ScanSetup.parse("VARY_ONE:5") == L.VARY_ONE(5)
        assert L.ScanSetup.parse("ALL_EQUAL") == L.ALL_EQUAL
        for bad in ("VARY_ONE(6)", "SOMETHING", "VARY_ONE(x)"):
            with pytest.raises(ConfigError):
                L.ScanSetup.parse(bad)
        with pytest.raises(ConfigError):
            L.scan_amplitudes(np.zeros((8, 4)), object(), 3)

    def test_all_equal_peak(self, gate):
        grid = L.scan_amplitudes(gate, L.ALL_EQUAL, 101)
        theta, phi = grid.argmax_abs()
        cell = 2 * np.pi / 101
        assert abs(theta - np.pi / 2) <= np.pi / 100
        assert min(abs(phi - np.pi / 2), abs(phi - 3 * np.pi / 2)) <= cell

    def test_vary_one_four_five_identical(self, gate):
        g4 = L.scan_amplitudes(gate, L.VARY_ONE(4), 101).values
        g5 = L.scan_amplitudes(gate, L.VARY_ONE(5), 101).values
        assert np.max(np.abs(g4 - g5)) < 1e-10

    def test_workers_bit_identical(self, gate):
        a = L.scan_amplitudes(gate, L.VARY_ONE(2), 37).values
        b = L.scan_amplitudes(gate, L.VARY_ONE(2), 37, workers=3).values
        assert np.array_equal(a, b)

    def test_row_major_rows(self, gate):
        grid = L.scan_amplitudes(gate, L.ALL_EQUAL, 3)
        rows = list(grid.rows())
        assert len(rows) == 9
        assert rows[1][0] == 0 and rows[1][1] == grid.phi[1]


class TestRandomExpectation:
    def test_deterministic(self, gate):
        assert L.expectation_random(gate, 500, 9) == L.expectation_random(gate, 500, 9)

    def test_zero_matrix(self):
        assert L.expectation_random(np.zeros((8, 4)), 100, 1) == (0, 0.0)

    def test_bloch_gauge_mean(self, gate):
        mean, se = L.expectation_random(gate, 200_000, 4)
        exact = gate[0, 0] * (2 / 3) ** 5
        assert abs(mean - exact) < 5 * se

    def test_raw_gauge_mean_is_zero(self, gate):
        mean, se = L.expectation_random(gate, 50_000, 4, gauge="raw")
        assert abs(mean) < 5 * se

    def test_states_are_bloch_representatives(self):
        v = L.random_boundary_vectors(100, 0)
        assert np.allclose(np.linalg.norm(v, axis=-1), 1)
        assert np.all(v[..., 0].imag == 0) and np.all(v[..., 0].real >= 0)

    def test_haar_bloch_uniform(self):
        # Haar states have cos(theta) uniform on [-1, 1]
        v = L.random_boundary_vectors(20_000, 5).reshape(-1, 2)
        z = np.abs(v[:, 0]) ** 2 - np.abs(v[:, 1]) ** 2
        assert abs(z.mean()) < 0.01 and abs(np.mean(z ** 2) - 1 / 3) < 0.01

    def test_bad_args(self, gate):
        with pytest.raises(DomainError):
            L.expectation_random(gate, 0, 1)
        with pytest.raises(ConfigError):
            L.random_boundary_vectors(3, 0, gauge="other")

    def test_haar_unitary(self, rng):
        u = L.haar_unitary(5, rng)
        assert np.allclose(u.conj().T @ u, np.eye(5), atol=1e-12)


class TestComplexity:
    def test_single_vertex(self):
        assert L.complexity_bound(L.ComplexityInput(1, 3.5, (), ())).value == 3.5

    def test_black_hole_size(self):
        c = L.ComplexityInput(14, 2, (1,) * 5, (1,) * 10)
        assert L.complexity_bound(c) == (16384.0, False)

    def test_arithmetic(self):
        assert L.complexity_bound(L.ComplexityInput(3, 10, (2, 2), (3,))).value == 12000

    def test_overflow_flag(self):
        bound = L.complexity_bound(L.ComplexityInput(10_000, 1e10, (), ()))
        assert bound.overflow and math.isinf(bound.value)

    @pytest.mark.parametrize("args", [(0, 2, (), ()), (1, -1, (), ()), (1, 2, (0,), ()),
                                      (1, 2, (), (-1,)), (1.5, 2, (), ())])
    def test_invalid(self, args):
        with pytest.raises(DomainError):
            L.ComplexityInput(*args)

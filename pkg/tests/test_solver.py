import numpy as np
import pytest

from covert_planner.errors import SolverInputError
from covert_planner.solver import (
    ConvexProgram,
    hermitian_basis,
    herm_from_vec,
    phase_one,
    rank_one_certificate,
    rank_one_extract,
    real_embedding,
    smallest_eigpairs,
    solve,
    trace_coeffs,
    vec_from_herm,
)


def bisect_root(f, lo, hi, tol=1e-12):
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(lo) * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


class TestBasicSolves:
    def test_lp_corner(self):
        prog = ConvexProgram()
        x = prog.add_variable("x", 1, lower=0.0, upper=1.0)
        prog.add_objective_linear([x[0]], [1.0])
        sol = solve(prog, np.array([0.5]))
        assert sol.status == "optimal"
        assert sol.objective == pytest.approx(1.0, abs=1e-6)

    def test_log_minus_quadratic(self):
        # maximize log(1+x) - x^2/2 on x >= 0; stationarity 1/(1+x) = x
        prog = ConvexProgram()
        x = prog.add_variable("x", 1, lower=0.0)
        prog.add_objective_log(1.0, [x[0]], [1.0], 1.0)
        prog.add_objective_quad([x[0]], np.array([[1.0]]))
        sol = solve(prog, np.array([0.2]), gap_tol=1e-9)
        root = bisect_root(lambda v: 1.0 / (1.0 + v) - v, 0.0, 1.0)
        assert root == pytest.approx((np.sqrt(5.0) - 1.0) / 2.0, abs=1e-10)
        assert sol.values["x"][0] == pytest.approx(root, abs=1e-8)

    def test_quadratic_constraint(self):
        # maximize x + y subject to x^2 + y^2 <= 2 -> (1, 1)
        prog = ConvexProgram()
        v = prog.add_variable("v", 2)
        prog.add_objective_linear(v.indices(), [1.0, 1.0])
        prog.add_quad_ineq(v.indices(), 2.0 * np.eye(2), np.zeros(2), -2.0)
        sol = solve(prog, np.array([0.0, 0.0]), gap_tol=1e-9)
        assert sol.values["v"] == pytest.approx([1.0, 1.0], abs=1e-6)

    def test_soc_constraint(self):
        # maximize 3x + 4y subject to ||(x, y)|| <= 5 -> (3, 4)
        prog = ConvexProgram()
        v = prog.add_variable("v", 2)
        prog.add_objective_linear(v.indices(), [3.0, 4.0])
        prog.add_soc(v.indices(), np.eye(2), np.zeros(2), np.zeros(2), 5.0)
        sol = solve(prog, np.array([0.0, 0.0]), gap_tol=1e-9)
        assert sol.values["v"] == pytest.approx([3.0, 4.0], abs=1e-5)

    def test_logsum_constraint(self):
        # maximize x + y subject to log(x) >= y, x <= 2 -> (2, log 2)
        prog = ConvexProgram()
        v = prog.add_variable("v", 2, upper=[2.0, np.inf])
        prog.add_objective_linear(v.indices(), [1.0, 1.0])
        prog.add_logsum(v.indices(), [1.0], np.array([[1.0, 0.0]]), [0.0], np.array([0.0, 1.0]), 0.0)
        sol = solve(prog, np.array([1.0, -0.5]), gap_tol=1e-9)
        assert sol.values["v"][0] == pytest.approx(2.0, abs=1e-6)
        assert sol.values["v"][1] == pytest.approx(np.log(2.0), abs=1e-6)

    def test_sqrt_epigraph_objective(self):
        # maximize sqrt(x) - x -> x = 1/4, value 1/4
        prog = ConvexProgram()
        x = prog.add_variable("x", 1, lower=0.0)
        prog.add_objective_sqrt(1.0, [x[0]], [1.0], 0.0)
        prog.add_objective_linear([x[0]], [-1.0])
        sol = solve(prog, np.array([0.5, 0.1]), gap_tol=1e-9)
        assert sol.values["x"][0] == pytest.approx(0.25, abs=1e-6)
        assert sol.objective == pytest.approx(0.25, abs=1e-6)

    def test_equality_constraints(self):
        # maximize -(x^2+y^2)/2 subject to x + y = 2 -> (1, 1)
        prog = ConvexProgram()
        v = prog.add_variable("v", 2)
        prog.add_objective_quad(v.indices(), np.eye(2))
        prog.add_linear_eq(v.indices(), [1.0, 1.0], 2.0)
        sol = solve(prog, np.array([1.5, 0.5]), gap_tol=1e-9)
        assert sol.values["v"] == pytest.approx([1.0, 1.0], abs=1e-8)

    def test_hermitian_sdp_trace(self):
        # maximize tr(W) s.t. W >= 0 (2x2 Hermitian), diag(W) <= 1 -> 2
        prog = ConvexProgram()
        w = prog.add_hermitian_variable("W", 2)
        prog.add_hermitian_psd(w)
        prog.add_linear_ineq([w[0]], [1.0], 1.0)
        prog.add_linear_ineq([w[1]], [1.0], 1.0)
        prog.add_objective_linear([w[0], w[1]], [1.0, 1.0])
        x0 = vec_from_herm(0.5 * np.eye(2, dtype=complex))
        sol = solve(prog, x0, gap_tol=1e-8)
        assert sol.objective == pytest.approx(2.0, abs=1e-5)
        w_opt = herm_from_vec(sol.values["W"], 2)
        assert np.linalg.eigvalsh(w_opt).min() > -1e-8

    def test_hermitian_lmi_minimizes_to_second_eigenvalue(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        w0 = a @ a.conj().T
        vals, vecs = smallest_eigpairs(w0, 2)
        prog = ConvexProgram()
        w = prog.add_hermitian_variable("W", 3)
        psi = prog.add_variable("psi", 1, lower=0.0)
        prog.add_hermitian_lmi(psi[0], vecs, w)
        coeffs = vec_from_herm(w0)
        for i in range(9):
            prog.add_linear_eq([w[i]], [1.0], coeffs[i])
        prog.add_objective_linear([psi[0]], [-1.0])
        x0 = np.concatenate([coeffs, [float(vals[-1]) + 1.0]])
        sol = solve(prog, x0, gap_tol=1e-9)
        assert sol.values["psi"][0] == pytest.approx(float(vals[-1]), abs=1e-5)


class TestSolverProperties:
    def _sample_program(self):
        prog = ConvexProgram()
        v = prog.add_variable("v", 3, lower=0.0, upper=2.0)
        prog.add_objective_linear(v.indices(), [1.0, 2.0, -0.5])
        prog.add_objective_log(0.7, v.indices(), [1.0, 1.0, 0.0], 0.5)
        prog.add_quad_ineq(v.indices(), np.eye(3), np.zeros(3), -1.5)
        prog.add_soc(v.indices(), np.eye(3)[:2], np.zeros(2), np.zeros(3), 1.4)
        return prog, np.array([0.3, 0.3, 0.3])

    def test_stage_objectives_monotone(self):
        prog, x0 = self._sample_program()
        sol = solve(prog, x0)
        diffs = np.diff(sol.stage_objectives)
        assert np.all(diffs >= -1e-9)

    def test_determinism(self):
        prog1, x0 = self._sample_program()
        a = solve(prog1, x0.copy())
        prog2, _ = self._sample_program()
        b = solve(prog2, x0.copy())
        assert a.objective == b.objective
        assert a.newton_steps == b.newton_steps
        assert a.iterations == b.iterations

    def test_feasibility_reverified(self):
        prog, x0 = self._sample_program()
        sol = solve(prog, x0)
        assert sol.status == "optimal"
        assert sol.max_violation <= 1e-8
        assert prog.check(sol.x) == []

    def test_infeasible_start_rejected(self):
        prog, _ = self._sample_program()
        with pytest.raises(SolverInputError):
            solve(prog, np.array([5.0, 5.0, 5.0]))

    def test_describe_stable(self):
        prog, _ = self._sample_program()
        d1 = prog.describe()
        d2 = prog.describe()
        assert d1 == d2
        assert "v[3]" in d1


class TestPhaseOne:
    def test_finds_interior_point(self):
        prog = ConvexProgram()
        v = prog.add_variable("v", 2)
        prog.add_linear_ineq(v.indices(), [1.0, 1.0], 1.0)
        prog.add_linear_ineq(v.indices(), [-1.0, 0.0], -0.2)  # x >= 0.2
        prog.add_quad_ineq(v.indices(), 2.0 * np.eye(2), np.zeros(2), -1.0)
        x, feasible, cert = phase_one(prog, np.array([5.0, 5.0]))
        assert feasible
        assert cert < 0
        assert prog.check(x, 1e-9) == []

    def test_detects_infeasibility(self):
        prog = ConvexProgram()
        v = prog.add_variable("v", 1)
        prog.add_linear_ineq([v[0]], [1.0], 0.0)  # x <= 0
        prog.add_linear_ineq([v[0]], [-1.0], -1.0)  # x >= 1
        x, feasible, cert = phase_one(prog, np.array([0.5]))
        assert not feasible
        assert cert >= 0.5 - 1e-6


class TestEigenMachinery:
    def test_identity_eigpairs(self):
        vals, vecs = smallest_eigpairs(np.eye(3, dtype=complex), 2)
        assert vals == pytest.approx([1.0, 1.0])
        assert vecs.conj().T @ vecs == pytest.approx(np.eye(2), abs=1e-12)

    def test_rank_one_matrix_has_zero_small_eigs(self):
        rng = np.random.default_rng(1)
        u = rng.normal(size=4) + 1j * rng.normal(size=4)
        w = np.outer(u, u.conj())
        vals, _ = smallest_eigpairs(w)
        assert np.max(np.abs(vals)) < 1e-10 * np.linalg.norm(w)

    def test_reconstruction(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
        w = a @ a.conj().T
        vals, vecs = smallest_eigpairs(w, 5)
        rebuilt = vecs @ np.diag(vals) @ vecs.conj().T
        assert np.linalg.norm(rebuilt - w) < 1e-8 * np.linalg.norm(w)
        assert np.linalg.norm(w @ vecs - vecs @ np.diag(vals)) <= 1e-8 * np.linalg.norm(w)

    def test_non_hermitian_rejected(self):
        with pytest.raises(SolverInputError):
            smallest_eigpairs(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_rank_one_extract_recovers_up_to_phase(self):
        rng = np.random.default_rng(3)
        u = rng.normal(size=6) + 1j * rng.normal(size=6)
        w = np.outer(u, u.conj())
        got, residual = rank_one_extract(w)
        assert residual < 1e-9
        overlap = abs(np.vdot(u, got))
        assert overlap == pytest.approx(np.linalg.norm(u) * np.linalg.norm(got), rel=1e-9)

    def test_diag_residual_value(self):
        _, residual = rank_one_extract(np.diag([1.0, 1.0]).astype(complex))
        assert residual == pytest.approx(1.0 / np.sqrt(2.0), rel=1e-12)

    def test_certificate_agrees_with_residual(self):
        rng = np.random.default_rng(4)
        for i in range(200):
            dim = int(rng.integers(2, 7))
            if i % 2 == 0:
                u = rng.normal(size=dim) + 1j * rng.normal(size=dim)
                w = np.outer(u, u.conj())
            else:
                a = rng.normal(size=(dim, max(2, dim - 1))) + 1j * rng.normal(size=(dim, max(2, dim - 1)))
                w = a @ a.conj().T
            _, residual = rank_one_extract(w)
            assert rank_one_certificate(w) == (residual <= 1e-6)


class TestRealEmbedding:
    def test_eigenvalues_come_in_pairs(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            dim = int(rng.integers(2, 6))
            a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
            h = a + a.conj().T
            emb = real_embedding(h)
            assert np.allclose(emb, emb.T)
            vals = np.sort(np.linalg.eigvalsh(emb))
            assert np.allclose(vals[0::2], vals[1::2], atol=1e-8 * max(1.0, np.abs(vals).max()))
            herm_vals = np.sort(np.linalg.eigvalsh(h))
            assert np.allclose(np.repeat(herm_vals, 2), vals, atol=1e-8 * max(1.0, np.abs(vals).max()))

    def test_vec_roundtrip_and_trace(self):
        rng = np.random.default_rng(6)
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        h = a + a.conj().T
        assert np.allclose(herm_from_vec(vec_from_herm(h), 4), h)
        b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        g = b + b.conj().T
        lhs = float(np.real(np.trace(g @ h)))
        assert trace_coeffs(g) @ vec_from_herm(h) == pytest.approx(lhs, rel=1e-12)

    def test_basis_matches_vec_layout(self):
        basis = hermitian_basis(3)
        rng = np.random.default_rng(7)
        coeffs = rng.normal(size=9)
        h = sum(c * e for c, e in zip(coeffs, basis))
        assert np.allclose(vec_from_herm(h), coeffs)

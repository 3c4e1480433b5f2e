"""In-repo convex solver: log-barrier path following with Newton steps.

Programs are built from typed atoms (affine equality/inequality, second-order
cone, convex-quadratic, log-sum, positive-semidefinite blocks) over a flat
real variable vector.  Complex Hermitian matrix variables are carried as
their real coefficient vectors and enter PSD atoms through the standard
2Lx2L real symmetric embedding.  Maximized objectives are concave:
linear + weighted logarithms - convex quadratic, plus sqrt-of-affine terms
via epigraph variables.

Variable bounds and plain linear inequalities are evaluated in batch (their
barrier Hessians are a diagonal update and one weighted Gram matrix); the
remaining atoms contribute small local blocks.  Every solve is
deterministic: no randomness, fixed atom order, dense numpy linear algebra.
Feasibility of a returned point is re-verified by an independent evaluator
rather than trusted from solver state.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverInputError

DEFAULT_GAP_TOL = 1e-6
DEFAULT_FEAS_TOL = 1e-8
BARRIER_MULTIPLIER = 10.0
LINE_SEARCH_ALPHA = 0.3
LINE_SEARCH_BETA = 0.5
NEWTON_TOL = 1e-10
MAX_NEWTON_PER_STAGE = 60


# ---------------------------------------------------------------------------
# Hermitian <-> real coefficient helpers
# ---------------------------------------------------------------------------


def real_embedding(h: np.ndarray) -> np.ndarray:
    """Map a complex Hermitian matrix to its 2Lx2L real symmetric embedding.

    [[Re H, -Im H], [Im H, Re H]]; PSD iff H is, with doubled eigenvalues.
    """
    re, im = np.real(h), np.imag(h)
    return np.block([[re, -im], [im, re]])


def hermitian_basis(dim: int) -> list[np.ndarray]:
    """Hermitian basis matching the coefficient layout of ``vec_from_herm``."""
    basis = []
    for l in range(dim):
        e = np.zeros((dim, dim), dtype=complex)
        e[l, l] = 1.0
        basis.append(e)
    for l in range(dim):
        for m in range(l + 1, dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[l, m] = 1.0
            e[m, l] = 1.0
            basis.append(e)
    for l in range(dim):
        for m in range(l + 1, dim):
            e = np.zeros((dim, dim), dtype=complex)
            e[l, m] = 1.0j
            e[m, l] = -1.0j
            basis.append(e)
    return basis


def vec_from_herm(h: np.ndarray) -> np.ndarray:
    """Real coefficients [diag, Re upper, Im upper] of a Hermitian matrix."""
    dim = h.shape[0]
    iu = np.triu_indices(dim, 1)
    return np.concatenate([np.real(np.diag(h)), np.real(h[iu]), np.imag(h[iu])])


def herm_from_vec(v: np.ndarray, dim: int) -> np.ndarray:
    iu = np.triu_indices(dim, 1)
    n_off = iu[0].size
    h = np.zeros((dim, dim), dtype=complex)
    h[np.diag_indices(dim)] = v[:dim]
    h[iu] = v[dim : dim + n_off] + 1j * v[dim + n_off :]
    h = h + np.tril(h.conj().T, -1)
    return h


def trace_coeffs(a: np.ndarray) -> np.ndarray:
    """Coefficients t with tr(A W) = t . vec_from_herm(W) for Hermitian A, W."""
    dim = a.shape[0]
    iu = np.triu_indices(dim, 1)
    return np.concatenate([np.real(np.diag(a)), 2.0 * np.real(a[iu]), 2.0 * np.imag(a[iu])])


# ---------------------------------------------------------------------------
# Program description
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarBlock:
    name: str
    offset: int
    size: int

    def indices(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.size)

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.size:
            raise IndexError(i)
        return self.offset + i

    def __len__(self) -> int:
        return self.size


class _QuadIneq:
    """(1/2) x' P x + q . x + r <= 0 over a local index set, P PSD."""

    nu = 1
    kind = "quad"

    def __init__(self, idx, p, q, r):
        self.idx = np.asarray(idx, dtype=np.intp)
        self.p = np.asarray(p, dtype=float)
        self.q = np.asarray(q, dtype=float)
        self.r = float(r)
        if self.p.shape != (self.idx.size, self.idx.size):
            raise SolverInputError("quadratic atom: P shape mismatch")

    def _value_grad(self, x):
        xl = x[self.idx]
        px = self.p @ xl
        val = 0.5 * float(xl @ px) + float(self.q @ xl) + self.r
        return val, px + self.q

    def violation(self, x):
        return max(0.0, self._value_grad(x)[0])

    def barrier(self, x):
        v, _ = self._value_grad(x)
        return None if v >= 0.0 else -np.log(-v)

    def add_grad_hess(self, x, g, h):
        v, grad = self._value_grad(x)
        s = -v
        g[self.idx] += grad / s
        h[np.ix_(self.idx, self.idx)] += np.outer(grad, grad) / s**2 + self.p / s


class _Soc:
    """|| A x + b || <= c . x + d over a local index set."""

    nu = 2
    kind = "soc"

    def __init__(self, idx, a, b, c, d):
        self.idx = np.asarray(idx, dtype=np.intp)
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.d = float(d)

    def _parts(self, x):
        xl = x[self.idx]
        return self.a @ xl + self.b, float(self.c @ xl) + self.d

    def violation(self, x):
        u, t = self._parts(x)
        return max(0.0, float(np.linalg.norm(u)) - t)

    def barrier(self, x):
        u, t = self._parts(x)
        if t <= 0.0:
            return None
        s = t * t - float(u @ u)
        return None if s <= 0.0 else -np.log(s)

    def add_grad_hess(self, x, g, h):
        u, t = self._parts(x)
        s = t * t - float(u @ u)
        grad_s = 2.0 * t * self.c - 2.0 * (self.a.T @ u)
        hess_s = 2.0 * np.outer(self.c, self.c) - 2.0 * (self.a.T @ self.a)
        g[self.idx] += -grad_s / s
        h[np.ix_(self.idx, self.idx)] += np.outer(grad_s, grad_s) / s**2 - hess_s / s


class _LogSum:
    """sum_i w_i log(a_i . x + b_i) >= c . x + d over a local index set."""

    kind = "logsum"

    def __init__(self, idx, weights, a, b, c, d):
        self.idx = np.asarray(idx, dtype=np.intp)
        self.w = np.asarray(weights, dtype=float)
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.c = np.asarray(c, dtype=float)
        self.d = float(d)
        if np.any(self.w <= 0.0):
            raise SolverInputError("log-sum atom: weights must be positive")
        self.nu = 1 + self.w.size

    def _margin(self, x):
        xl = x[self.idx]
        args = self.a @ xl + self.b
        if np.any(args <= 0.0):
            return None, args
        return float(self.w @ np.log(args) - self.c @ xl - self.d), args

    def violation(self, x):
        m, args = self._margin(x)
        if m is None:
            return float(np.max(-np.minimum(args, 0.0))) + 1.0
        return max(0.0, -m)

    def barrier(self, x):
        m, _ = self._margin(x)
        return None if m is None or m <= 0.0 else -np.log(m)

    def add_grad_hess(self, x, g, h):
        m, args = self._margin(x)
        wa = self.w / args
        grad_m = self.a.T @ wa - self.c
        g[self.idx] += -grad_m / m
        curve = (self.a.T * (self.w / args**2)) @ self.a  # -hess of the margin
        h[np.ix_(self.idx, self.idx)] += np.outer(grad_m, grad_m) / m**2 + curve / m


class _Psd:
    """F0 + sum_i x_i F_i >= 0, all F real symmetric of size p."""

    kind = "psd"

    def __init__(self, idx, f0, fs):
        self.idx = np.asarray(idx, dtype=np.intp)
        self.f0 = np.asarray(f0, dtype=float)
        self.fs = np.asarray(fs, dtype=float)  # (n_local, p, p)
        if self.fs.shape[0] != self.idx.size:
            raise SolverInputError("PSD atom: coefficient count mismatch")
        self.nu = self.f0.shape[0]

    def matrix(self, x):
        return self.f0 + np.tensordot(x[self.idx], self.fs, axes=1)

    def violation(self, x):
        s = self.matrix(x)
        w = np.linalg.eigvalsh(0.5 * (s + s.T))
        return max(0.0, -float(w[0]))

    def barrier(self, x):
        s = self.matrix(x)
        try:
            chol = np.linalg.cholesky(s)
        except np.linalg.LinAlgError:
            return None
        return -2.0 * float(np.sum(np.log(np.diag(chol))))

    def add_grad_hess(self, x, g, h):
        s = self.matrix(x)
        s_inv = np.linalg.inv(s)
        s_inv = 0.5 * (s_inv + s_inv.T)
        m = np.einsum("ab,ibc->iac", s_inv, self.fs)  # S^-1 F_i
        g[self.idx] += -np.einsum("iaa->i", m)
        p = s.shape[0]
        flat = m.reshape(self.fs.shape[0], p * p)
        flat_t = np.transpose(m, (0, 2, 1)).reshape(self.fs.shape[0], p * p)
        h[np.ix_(self.idx, self.idx)] += flat @ flat_t.T


@dataclass
class Solution:
    values: dict
    objective: float
    status: str  # optimal | max-iter | infeasible | numerical
    gap: float
    iterations: int
    newton_steps: int
    stage_objectives: list
    max_violation: float
    wall_time: float
    final_t: float = 0.0
    x: np.ndarray = field(repr=False, default=None)


class ConvexProgram:
    """Declarative convex program over named variable blocks (maximization)."""

    def __init__(self):
        self.n = 0
        self.blocks: dict[str, VarBlock] = {}
        self.atoms = []
        self._lb, self._ub = [], []  # per-scalar bounds, +-inf default
        self.lin_idx, self.lin_coef, self.lin_ub = [], [], []
        self.eq_idx, self.eq_coef, self.eq_rhs = [], [], []
        self.obj_c_idx, self.obj_c_val = [], []
        self.obj_logs = []  # (w, idx, coef, const)
        self.obj_quads = []  # (idx, P)  subtracted as (1/2) x'Px

    # -- variables -----------------------------------------------------------

    def add_variable(self, name: str, size: int, lower=None, upper=None) -> VarBlock:
        if name in self.blocks:
            raise SolverInputError(f"duplicate variable block {name!r}")
        block = VarBlock(name, self.n, size)
        self.blocks[name] = block
        self.n += size
        lo = np.broadcast_to(np.asarray(-np.inf if lower is None else lower, dtype=float), (size,))
        up = np.broadcast_to(np.asarray(np.inf if upper is None else upper, dtype=float), (size,))
        if np.any(lo >= up):
            raise SolverInputError(f"block {name!r}: empty bound interval")
        self._lb.extend(lo)
        self._ub.extend(up)
        return block

    def add_hermitian_variable(self, name: str, dim: int) -> VarBlock:
        """L x L complex Hermitian matrix as L^2 real coefficients."""
        block = self.add_variable(name, dim * dim)
        object.__setattr__(block, "_herm_dim", dim)
        return block

    @property
    def lower_bounds(self) -> np.ndarray:
        return np.asarray(self._lb)

    @property
    def upper_bounds(self) -> np.ndarray:
        return np.asarray(self._ub)

    # -- constraints ---------------------------------------------------------

    def add_linear_ineq(self, idx, coef, ub):
        self.lin_idx.append(np.asarray(idx, dtype=np.intp))
        self.lin_coef.append(np.asarray(coef, dtype=float))
        self.lin_ub.append(float(ub))

    def add_linear_eq(self, idx, coef, rhs):
        self.eq_idx.append(np.asarray(idx, dtype=np.intp))
        self.eq_coef.append(np.asarray(coef, dtype=float))
        self.eq_rhs.append(float(rhs))

    def add_quad_ineq(self, idx, p, q, r):
        self.atoms.append(_QuadIneq(idx, p, q, r))

    def add_soc(self, idx, a, b, c, d):
        self.atoms.append(_Soc(idx, a, b, c, d))

    def add_logsum(self, idx, weights, a, b, c, d):
        self.atoms.append(_LogSum(idx, weights, a, b, c, d))

    def add_psd(self, idx, f0, fs):
        self.atoms.append(_Psd(idx, f0, fs))

    def add_hermitian_psd(self, block: VarBlock):
        """W >= 0 for a Hermitian block, via the real symmetric embedding."""
        dim = getattr(block, "_herm_dim", None)
        if dim is None:
            raise SolverInputError("add_hermitian_psd needs a Hermitian block")
        fs = np.stack([real_embedding(e) for e in hermitian_basis(dim)])
        self.add_psd(block.indices(), np.zeros((2 * dim, 2 * dim)), fs)

    def add_hermitian_lmi(self, scale_index: int, v: np.ndarray, block: VarBlock):
        """psi * I - V' W V >= 0 with psi a scalar variable and W Hermitian."""
        dim = getattr(block, "_herm_dim", None)
        if dim is None:
            raise SolverInputError("add_hermitian_lmi needs a Hermitian block")
        p = v.shape[1]
        idx = np.concatenate([[scale_index], block.indices()])
        fs = [real_embedding(np.eye(p, dtype=complex))]
        for e in hermitian_basis(dim):
            fs.append(real_embedding(-(v.conj().T @ e @ v)))
        self.add_psd(idx, np.zeros((2 * p, 2 * p)), np.stack(fs))

    # -- objective (maximize) --------------------------------------------------

    def add_objective_linear(self, idx, coef):
        self.obj_c_idx.extend(int(i) for i in np.atleast_1d(idx))
        self.obj_c_val.extend(float(c) for c in np.atleast_1d(coef))

    def add_objective_log(self, weight, idx, coef, const):
        if weight <= 0:
            raise SolverInputError("log objective weight must be positive")
        self.obj_logs.append(
            (float(weight), np.asarray(idx, dtype=np.intp), np.asarray(coef, dtype=float), float(const))
        )

    def add_objective_quad(self, idx, p):
        """Subtract (1/2) x' P x (P PSD) from the maximized objective."""
        self.obj_quads.append((np.asarray(idx, dtype=np.intp), np.asarray(p, dtype=float)))

    def add_objective_sqrt(self, weight, idx, coef, const, name=None):
        """Add weight * sqrt(a . x + b): epigraph variable + rotated-cone atom."""
        if weight <= 0:
            raise SolverInputError("sqrt objective weight must be positive")
        name = name or f"_sqrt{self.n}"
        z = self.add_variable(name, 1, lower=0.0)
        # z^2 <= a . x + b
        local = np.concatenate([[z[0]], np.asarray(idx, dtype=np.intp)])
        p = np.zeros((local.size, local.size))
        p[0, 0] = 2.0
        q = np.concatenate([[0.0], -np.asarray(coef, dtype=float)])
        self.add_quad_ineq(local, p, q, -float(const))
        self.add_objective_linear([z[0]], [weight])
        return z

    # -- evaluation ------------------------------------------------------------

    def objective_value(self, x) -> float:
        val = 0.0
        if self.obj_c_idx:
            val += float(np.asarray(self.obj_c_val) @ x[np.asarray(self.obj_c_idx, dtype=np.intp)])
        for w, idx, coef, const in self.obj_logs:
            arg = float(coef @ x[idx]) + const
            if arg <= 0.0:
                return -np.inf
            val += w * np.log(arg)
        for idx, p in self.obj_quads:
            xl = x[idx]
            val -= 0.5 * float(xl @ p @ xl)
        return val

    def _objective_grad_hess(self, x, g, h):
        """Accumulate gradient/Hessian of the MINIMIZED objective -f."""
        if self.obj_c_idx:
            np.subtract.at(g, np.asarray(self.obj_c_idx, dtype=np.intp), np.asarray(self.obj_c_val))
        for w, idx, coef, const in self.obj_logs:
            arg = float(coef @ x[idx]) + const
            g[idx] -= w * coef / arg
            h[np.ix_(idx, idx)] += w * np.outer(coef, coef) / arg**2
        for idx, p in self.obj_quads:
            g[idx] += p @ x[idx]
            h[np.ix_(idx, idx)] += p

    def _objective_domain_ok(self, x) -> bool:
        return all(float(coef @ x[idx]) + const > 0.0 for _, idx, coef, const in self.obj_logs)

    def linear_matrix(self):
        a = np.zeros((len(self.lin_idx), self.n))
        for row, (idx, coef) in enumerate(zip(self.lin_idx, self.lin_coef)):
            np.add.at(a[row], idx, coef)
        return a, np.asarray(self.lin_ub, dtype=float)

    def equality_matrix(self):
        if not self.eq_idx:
            return np.zeros((0, self.n)), np.zeros(0)
        a = np.zeros((len(self.eq_idx), self.n))
        for row, (idx, coef) in enumerate(zip(self.eq_idx, self.eq_coef)):
            np.add.at(a[row], idx, coef)
        return a, np.asarray(self.eq_rhs)

    def check(self, x, feas_tol=DEFAULT_FEAS_TOL):
        """Independent feasibility evaluation; returns (kind, index, violation)."""
        issues = []
        lb, ub = self.lower_bounds, self.upper_bounds
        for i in np.nonzero(x < lb - feas_tol)[0]:
            issues.append(("lower-bound", int(i), float(lb[i] - x[i])))
        for i in np.nonzero(x > ub + feas_tol)[0]:
            issues.append(("upper-bound", int(i), float(x[i] - ub[i])))
        a, b = self.equality_matrix()
        if a.shape[0]:
            resid = np.abs(a @ x - b)
            scale = 1.0 + np.abs(b)
            for row in np.nonzero(resid > feas_tol * scale)[0]:
                issues.append(("equality", int(row), float(resid[row])))
        a_lin, b_lin = self.linear_matrix()
        if a_lin.shape[0]:
            viol = a_lin @ x - b_lin
            for row in np.nonzero(viol > feas_tol)[0]:
                issues.append(("linear", int(row), float(viol[row])))
        for i, atom in enumerate(self.atoms):
            v = atom.violation(x)
            if v > feas_tol:
                issues.append((atom.kind, i, float(v)))
        return issues

    def values_dict(self, x):
        return {name: x[b.indices()].copy() for name, b in self.blocks.items()}

    def total_nu(self) -> float:
        lb, ub = self.lower_bounds, self.upper_bounds
        bound_count = int(np.isfinite(lb).sum() + np.isfinite(ub).sum())
        return float(bound_count + len(self.lin_idx) + sum(atom.nu for atom in self.atoms))

    def describe(self) -> str:
        """Human-readable dump of blocks and atoms, in stable order."""
        lines = [f"variables ({self.n} scalars):"]
        for name, b in self.blocks.items():
            lines.append(f"  {name}[{b.size}] @ {b.offset}")
        lines.append(f"equalities: {len(self.eq_idx)}; linear inequalities: {len(self.lin_idx)}")
        for i, atom in enumerate(self.atoms):
            lines.append(f"  atom {i}: {atom.kind} (nu={atom.nu})")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Barrier solve
# ---------------------------------------------------------------------------


class _Compiled:
    """Batched evaluators for one solve: bounds, stacked linear rows, atoms."""

    def __init__(self, prog: ConvexProgram):
        self.prog = prog
        self.lb = prog.lower_bounds
        self.ub = prog.upper_bounds
        self.has_lb = np.isfinite(self.lb)
        self.has_ub = np.isfinite(self.ub)
        self.a_lin, self.b_lin = prog.linear_matrix()
        self.a_eq, self.b_eq = prog.equality_matrix()

    def barrier_value(self, x, t):
        prog = self.prog
        if not prog._objective_domain_ok(x):
            return None
        total = -t * prog.objective_value(x)
        if self.has_lb.any():
            s = x[self.has_lb] - self.lb[self.has_lb]
            if np.any(s <= 0.0):
                return None
            total -= float(np.sum(np.log(s)))
        if self.has_ub.any():
            s = self.ub[self.has_ub] - x[self.has_ub]
            if np.any(s <= 0.0):
                return None
            total -= float(np.sum(np.log(s)))
        if self.a_lin.shape[0]:
            s = self.b_lin - self.a_lin @ x
            if np.any(s <= 0.0):
                return None
            total -= float(np.sum(np.log(s)))
        for atom in prog.atoms:
            b = atom.barrier(x)
            if b is None:
                return None
            total += b
        return total

    def grad_hess(self, x, t):
        prog = self.prog
        n = prog.n
        g = np.zeros(n)
        h = np.zeros((n, n))
        obj_g = np.zeros(n)
        obj_h = np.zeros((n, n))
        prog._objective_grad_hess(x, obj_g, obj_h)
        g += t * obj_g
        h += t * obj_h
        diag = np.zeros(n)
        if self.has_lb.any():
            s = x[self.has_lb] - self.lb[self.has_lb]
            g[self.has_lb] += -1.0 / s
            diag[self.has_lb] += 1.0 / s**2
        if self.has_ub.any():
            s = self.ub[self.has_ub] - x[self.has_ub]
            g[self.has_ub] += 1.0 / s
            diag[self.has_ub] += 1.0 / s**2
        h[np.diag_indices(n)] += diag
        if self.a_lin.shape[0]:
            s = self.b_lin - self.a_lin @ x
            g += self.a_lin.T @ (1.0 / s)
            scaled = self.a_lin / s[:, None]
            h += scaled.T @ scaled
        for atom in prog.atoms:
            atom.add_grad_hess(x, g, h)
        return g, h


def _newton_stage(compiled: _Compiled, x, t, max_steps=MAX_NEWTON_PER_STAGE):
    """Minimize t*(-f) + barrier subject to equalities, from strictly feasible x."""
    a_eq, b_eq = compiled.a_eq, compiled.b_eq
    n = compiled.prog.n
    steps = 0
    for _ in range(max_steps):
        g, h = compiled.grad_hess(x, t)
        reg = 1e-12 * (1.0 + float(np.trace(h)) / max(n, 1))
        for _attempt in range(8):
            try:
                if a_eq.shape[0]:
                    m = a_eq.shape[0]
                    kkt = np.zeros((n + m, n + m))
                    kkt[:n, :n] = h + reg * np.eye(n)
                    kkt[:n, n:] = a_eq.T
                    kkt[n:, :n] = a_eq
                    rhs = np.concatenate([-g, -(a_eq @ x - b_eq)])
                    sol = np.linalg.solve(kkt, rhs)
                    dx = sol[:n]
                else:
                    dx = np.linalg.solve(h + reg * np.eye(n), -g)
                break
            except np.linalg.LinAlgError:
                reg = max(reg * 100.0, 1e-10)
        else:
            return x, steps, "numerical"

        lam2 = float(dx @ (h @ dx))
        if not np.isfinite(lam2):
            return x, steps, "numerical"
        eq_resid = float(np.linalg.norm(a_eq @ x - b_eq)) if a_eq.shape[0] else 0.0
        if lam2 / 2.0 <= NEWTON_TOL and eq_resid <= 1e-9:
            return x, steps, "converged"

        base = compiled.barrier_value(x, t)
        if base is None:
            return x, steps, "numerical"
        step = 1.0
        gdx = float(g @ dx)
        accepted = False
        for _bt in range(60):
            cand = x + step * dx
            val = compiled.barrier_value(cand, t)
            if val is not None and val <= base + LINE_SEARCH_ALPHA * step * gdx + 1e-12:
                x = cand
                accepted = True
                break
            step *= LINE_SEARCH_BETA
        steps += 1
        if not accepted:
            return x, steps, "stalled"
    return x, steps, "max-iter"


def solve(
    prog: ConvexProgram,
    x0: np.ndarray,
    gap_tol: float = DEFAULT_GAP_TOL,
    feas_tol: float = DEFAULT_FEAS_TOL,
    t0: float = 1.0,
    mu: float = BARRIER_MULTIPLIER,
    max_stages: int = 40,
) -> Solution:
    """Barrier path following from a strictly feasible start.

    The start must satisfy every atom strictly; equality constraints may carry
    tiny residuals (corrected by the Newton steps).  Raises SolverInputError
    when the start is outside some barrier domain.
    """
    start = time.perf_counter()
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (prog.n,):
        raise SolverInputError(f"start has {x.shape} entries, program has {prog.n}")
    compiled = _Compiled(prog)
    if compiled.barrier_value(x, t0) is None:
        bad = [(i, a.kind) for i, a in enumerate(prog.atoms) if a.barrier(x) is None]
        if np.any(x <= prog.lower_bounds) or np.any(x >= prog.upper_bounds):
            bad.append(("bounds", "violated"))
        if compiled.a_lin.shape[0] and np.any(compiled.a_lin @ x >= compiled.b_lin):
            bad.append(("linear", "violated"))
        raise SolverInputError(f"start not strictly feasible; blocking: {bad[:8]}")

    nu = prog.total_nu()
    t = t0
    stage_objectives = []
    newton_total = 0
    stages = 0
    status = "optimal"
    while True:
        x, steps, inner = _newton_stage(compiled, x, t)
        newton_total += steps
        stages += 1
        stage_objectives.append(prog.objective_value(x))
        if inner == "numerical":
            status = "numerical"
            break
        gap = nu / t
        if gap <= gap_tol or nu == 0.0:
            break
        if stages >= max_stages:
            status = "max-iter"
            break
        t *= mu

    issues = prog.check(x, feas_tol)
    max_violation = max((v for _, _, v in issues), default=0.0)
    if status == "optimal" and max_violation > feas_tol:
        status = "numerical"
    return Solution(
        values=prog.values_dict(x),
        objective=prog.objective_value(x),
        status=status,
        gap=nu / t if t > 0 else np.inf,
        iterations=stages,
        newton_steps=newton_total,
        stage_objectives=stage_objectives,
        max_violation=max_violation,
        wall_time=time.perf_counter() - start,
        final_t=t,
        x=x,
    )


def phase_one(prog: ConvexProgram, x_guess: np.ndarray, slack_cap: float = 1e8):
    """Search for a strictly feasible point by minimizing a single violation slack.

    Supports bound, linear, quadratic, SOC and PSD constraints; the guess must
    already satisfy the variable bounds strictly (clip it if needed).
    Programs with log-sum atoms (or log objective terms) must supply their own
    interior start.  Returns (x, feasible, certificate) with certificate the
    optimal slack value.
    """
    for atom in prog.atoms:
        if isinstance(atom, _LogSum):
            raise SolverInputError("phase one cannot relax log-sum atoms; provide a start")
    if prog.obj_logs:
        raise SolverInputError("phase one cannot handle log objective terms; provide a start")

    aux = ConvexProgram()
    aux.n = prog.n
    aux.blocks = dict(prog.blocks)
    aux._lb = list(prog._lb)
    aux._ub = list(prog._ub)
    s_block = aux.add_variable("_phase1_slack", 1, upper=slack_cap)
    s = s_block[0]
    for idx, coef, ub in zip(prog.lin_idx, prog.lin_coef, prog.lin_ub):
        aux.add_linear_ineq(np.append(idx, s), np.append(coef, -1.0), ub)
    for atom in prog.atoms:
        if isinstance(atom, _QuadIneq):
            idx = np.append(atom.idx, s)
            p = np.zeros((idx.size, idx.size))
            p[:-1, :-1] = atom.p
            aux.add_quad_ineq(idx, p, np.append(atom.q, -1.0), atom.r)
        elif isinstance(atom, _Soc):
            idx = np.append(atom.idx, s)
            a = np.hstack([atom.a, np.zeros((atom.a.shape[0], 1))])
            aux.add_soc(idx, a, atom.b, np.append(atom.c, 1.0), atom.d)
        elif isinstance(atom, _Psd):
            idx = np.append(atom.idx, s)
            p = atom.f0.shape[0]
            fs = np.concatenate([atom.fs, np.eye(p)[None, :, :]])
            aux.add_psd(idx, atom.f0, fs)
    aux.eq_idx, aux.eq_coef, aux.eq_rhs = prog.eq_idx, prog.eq_coef, prog.eq_rhs
    aux.add_objective_linear([s], [-1.0])

    x = np.zeros(aux.n)
    x[: prog.n] = x_guess
    s0 = 0.0
    a_lin, b_lin = prog.linear_matrix()
    if a_lin.shape[0]:
        s0 = max(s0, float(np.max(a_lin @ x_guess - b_lin)))
    for atom in prog.atoms:
        s0 = max(s0, atom.violation(x_guess))
    x[s] = min(s0 + 1.0, slack_cap / 2.0)
    sol = solve(aux, x, gap_tol=1e-9)
    cert = float(sol.x[s])
    feasible = cert < 0.0
    return sol.x[: prog.n].copy(), feasible, cert


# ---------------------------------------------------------------------------
# Eigen routines and rank-one machinery
# ---------------------------------------------------------------------------


def _check_hermitian(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w)
    scale = max(float(np.linalg.norm(w)), 1e-300)
    if float(np.linalg.norm(w - w.conj().T)) > 1e-10 * scale:
        raise SolverInputError("matrix is not Hermitian within tolerance")
    return 0.5 * (w + w.conj().T)


def smallest_eigpairs(w: np.ndarray, count: int | None = None):
    """Ascending smallest eigenvalues and orthonormal eigenvectors of a
    Hermitian matrix (symmetrized defensively), default count L-1."""
    w = _check_hermitian(w)
    dim = w.shape[0]
    if count is None:
        count = dim - 1
    if not 0 <= count <= dim:
        raise SolverInputError(f"eigenpair count {count} out of range for dim {dim}")
    vals, vecs = np.linalg.eigh(w)
    return vals[:count], vecs[:, :count]


def rank_one_extract(w: np.ndarray):
    """Dominant-eigenpair factor u = sqrt(lambda_max) v_max and the relative
    Frobenius residual ||W - u u'|| / ||W||; residual <= 1e-6 certifies rank one."""
    w = _check_hermitian(w)
    vals, vecs = np.linalg.eigh(w)
    lam = max(float(vals[-1]), 0.0)
    u = np.sqrt(lam) * vecs[:, -1]
    denom = max(float(np.linalg.norm(w)), 1e-300)
    residual = float(np.linalg.norm(w - np.outer(u, u.conj()))) / denom
    return u, residual


RANK_ONE_RESIDUAL_TOL = 1e-6


def rank_one_certificate(w: np.ndarray, tol: float = RANK_ONE_RESIDUAL_TOL) -> bool:
    """Lemma-style certificate: all but the largest eigenvalue vanish."""
    w = _check_hermitian(w)
    vals, vecs = smallest_eigpairs(w, w.shape[0] - 1)
    scale = max(float(np.linalg.norm(w)), 1e-300)
    projected = vecs.conj().T @ w @ vecs
    return float(np.max(np.abs(np.diag(projected)))) <= tol * scale

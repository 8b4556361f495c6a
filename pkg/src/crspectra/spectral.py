"""Rayleigh-Ritz approximation of the Kohn-Laplacian spectrum.

Trial space: restrictions of monomials z^a conj(z)^b to M.  Restrictions of
polynomial multiples of the defining function vanish identically on M, so
the Gram matrix is rank-deficient by construction whenever such multiples
live in the basis; the solver projects that null space out (relative
eigenvalue < 1e-13) before reducing the pencil.  All eigensolves use a
cyclic complex Jacobi iteration with a fixed sweep order, so reports are
bit-reproducible and independent of the BLAS in use.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CholeskyFailure,
    IllConditionedGram,
    JobValidationError,
    NoPositiveEigenvalue,
)
from .frames import build_frame, hermitize
from .operators import delta_tilde_coefficients
from .quadrature import QuadratureRule
from .runtime import map_chunks

MAX_DEGREE = 6

GRAM_DROP_TOL = 1e-13       # relative; below this a direction is null on M
GRAM_COND_TOL = 1e-12       # retained directions below this are ambiguous


@dataclass(frozen=True)
class MonomialBasis:
    """Exponent pairs (a, b), |a| + |b| <= degree, graded-lexicographic."""

    m: int
    degree: int
    holo: np.ndarray      # (B, m) holomorphic exponents a
    anti: np.ndarray      # (B, m) antiholomorphic exponents b

    @classmethod
    def build(cls, m, degree):
        if degree > MAX_DEGREE:
            raise JobValidationError(f"basis degree {degree} exceeds {MAX_DEGREE}")
        exps = []
        for total in range(degree + 1):
            block = sorted(
                e
                for e in itertools.product(range(total + 1), repeat=2 * m)
                if sum(e) == total
            )
            exps.extend(block)
        arr = np.asarray(exps, dtype=np.intp)
        return cls(m=m, degree=degree, holo=arr[:, :m], anti=arr[:, m:])

    def __len__(self):
        return self.holo.shape[0]

    def labels(self):
        out = []
        for a, b in zip(self.holo, self.anti):
            parts = [f"z{j+1}^{e}" for j, e in enumerate(a) if e]
            parts += [f"zb{j+1}^{e}" for j, e in enumerate(b) if e]
            out.append("*".join(parts) if parts else "1")
        return out


def _power_tables(pts, dmax):
    """pt[p, j, k] = z_j^k and conj(z_j)^k for k = 0..dmax."""
    P, m = pts.shape
    tz = np.ones((P, m, dmax + 1), dtype=np.complex128)
    for k in range(1, dmax + 1):
        tz[:, :, k] = tz[:, :, k - 1] * pts
    return tz, np.conj(tz)


def _gather_product(table, exps, shift_var=None):
    """prod_j table[p, j, e_j], with e_{shift_var} lowered by one.

    Returns (values (P, B), multiplicity (B,)): the multiplicity is the
    original exponent of the shifted variable (zero kills the term).
    """
    P = table.shape[0]
    B = exps.shape[0]
    m = exps.shape[1]
    out = np.ones((P, B), dtype=np.complex128)
    mult = None
    for j in range(m):
        e = exps[:, j]
        if shift_var == j:
            mult = e.astype(np.float64)
            e = np.maximum(e - 1, 0)
        out *= table[:, j, :][:, e]
    if shift_var is None:
        return out, None
    return out, mult


def basis_values(basis: MonomialBasis, pts):
    tz, tzb = _power_tables(pts, basis.degree)
    vz, _ = _gather_product(tz, basis.holo)
    vb, _ = _gather_product(tzb, basis.anti)
    return vz * vb


def basis_dbar(basis: MonomialBasis, pts):
    """d/d conj(z_k) of every basis monomial, shape (P, m, B)."""
    tz, tzb = _power_tables(pts, basis.degree)
    vz, _ = _gather_product(tz, basis.holo)
    out = np.empty((pts.shape[0], basis.m, len(basis)), dtype=np.complex128)
    for k in range(basis.m):
        vb, mult = _gather_product(tzb, basis.anti, shift_var=k)
        out[:, k, :] = vz * vb * mult
    return out


def basis_mixed(basis: MonomialBasis, pts, j, k):
    """d_j dbar_k of every basis monomial, shape (P, B)."""
    tz, tzb = _power_tables(pts, basis.degree)
    vz, mj = _gather_product(tz, basis.holo, shift_var=j)
    vb, mk = _gather_product(tzb, basis.anti, shift_var=k)
    return vz * vb * (mj * mk)


@dataclass
class SpectralProblem:
    gram: np.ndarray
    stiffness: np.ndarray
    basis: MonomialBasis
    kernel_tol: float = 1e-6
    herm_deviation: float = 0.0
    ibp_deviation: float | None = None
    rule_meta: dict = field(default_factory=dict)


def assemble(rho, rule: QuadratureRule, basis: MonomialBasis, params=None,
             kernel_tol=1e-6, check_ibp=True) -> SpectralProblem:
    """Gram and stiffness matrices of the dbar_b pairing over the rule.

    The stiffness consistency diagnostic compares against the integral of
    (box_b phi_u) conj(phi_v): on a closed surface both quadratures must
    agree to quadrature accuracy, which validates the operator end to end.
    """
    pts = rule.points
    w = rule.weights
    frame = build_frame(rho, pts, params=params)
    m, n = frame.m, frame.n
    B = len(basis)
    flat = pts.shape[0]
    tcoef = delta_tilde_coefficients(frame)
    gbar = np.conj(frame.grad)
    gb_w = gbar[np.arange(flat), frame.chart]
    gb_a = np.take_along_axis(gbar, frame.nonchart, axis=1)

    def piece(sl):
        p = pts[sl]
        ww = w[sl]
        V = basis_values(basis, p)
        db = basis_dbar(basis, p)
        local = np.arange(sl.stop - sl.start)
        dbw = db[local, frame.chart[sl], :]
        # Z_betabar phi = phi_betabar - (rho_betabar / rho_wbar) phi_wbar
        zb = np.take_along_axis(db, frame.nonchart[sl][:, :, None], axis=1)
        zb = zb - (gb_a[sl] / gb_w[sl][:, None])[:, :, None] * dbw[:, None, :]
        Vw = V * ww[:, None]
        g_part = Vw.T @ np.conj(V)
        s_part = np.zeros((B, B), dtype=np.complex128)
        for gma in range(n):
            for sgm in range(n):
                c = ww * frame.levi_inv[sl][:, gma, sgm]
                s_part += (zb[:, gma, :] * c[:, None]).T @ np.conj(zb[:, sgm, :])
        if check_ibp:
            box = np.zeros((p.shape[0], B), dtype=np.complex128)
            for j in range(m):
                for k in range(m):
                    box += tcoef[sl][:, j, k][:, None] * basis_mixed(basis, p, j, k)
            box += n * np.einsum("pk,pkb->pb", np.conj(frame.xi[sl]), db)
            sp_part = (box * ww[:, None]).T @ np.conj(V)
        else:
            sp_part = np.zeros((B, B), dtype=np.complex128)
        return g_part[None], s_part[None], sp_part[None]

    g_parts, s_parts, sp_parts = map_chunks(piece, flat, 4096)
    G = g_parts.sum(axis=0)
    S = s_parts.sum(axis=0)
    herm_dev = max(
        float(np.max(np.abs(G - G.conj().T))), float(np.max(np.abs(S - S.conj().T)))
    )
    G = hermitize(G)
    S = hermitize(S)
    ibp_dev = None
    if check_ibp:
        Sp = sp_parts.sum(axis=0)
        ibp_dev = float(np.max(np.abs(S - Sp)))
    return SpectralProblem(
        gram=G, stiffness=S, basis=basis, kernel_tol=kernel_tol,
        herm_deviation=herm_dev, ibp_deviation=ibp_dev, rule_meta=rule.meta(),
    )


# --- deterministic Hermitian eigensolver ------------------------------------


def jacobi_eigh(a, tol=1e-14, max_sweeps=60):
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi.

    Deterministic sweep order (p ascending, q ascending), threshold skips,
    stable ascending sort.  Returns (eigenvalues, eigenvectors).
    """
    A = np.array(a, dtype=np.complex128)
    B = A.shape[0]
    V = np.eye(B, dtype=np.complex128)
    if B == 1:
        return A[0, 0].real.reshape(1), V
    scale = max(1.0, float(np.max(np.abs(A))))
    for _ in range(max_sweeps):
        off = np.abs(A - np.diag(np.diag(A)))
        if float(off.max()) <= tol * scale:
            break
        thresh = max(tol * scale, 1e-2 * float(off.max()))
        for p in range(B - 1):
            for q in range(p + 1, B):
                apq = A[p, q]
                mag = abs(apq)
                if mag < thresh:
                    continue
                app = A[p, p].real
                aqq = A[q, q].real
                tau = (aqq - app) / (2.0 * mag)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                u = apq / mag
                # unitary columns j_p = (c, -s conj(u)), j_q = (s u, c)
                col_p = c * A[:, p] - s * np.conj(u) * A[:, q]
                col_q = s * u * A[:, p] + c * A[:, q]
                A[:, p], A[:, q] = col_p, col_q
                row_p = c * A[p, :] - s * u * A[q, :]
                row_q = s * np.conj(u) * A[p, :] + c * A[q, :]
                A[p, :], A[q, :] = row_p, row_q
                A[p, q] = 0.0
                A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                vcol_p = c * V[:, p] - s * np.conj(u) * V[:, q]
                vcol_q = s * u * V[:, p] + c * V[:, q]
                V[:, p], V[:, q] = vcol_p, vcol_q
    w = np.diag(A).real.copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


@dataclass
class SolveResult:
    eigenvalues: np.ndarray
    kernel_dim: int
    lambda1: float
    dropped_dim: int
    gram_cond: float
    kernel_tol: float

    def to_dict(self):
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "kernel_dim": int(self.kernel_dim),
            "lambda1": float(self.lambda1),
            "dropped_dim": int(self.dropped_dim),
            "gram_cond": float(self.gram_cond),
            "kernel_tol": float(self.kernel_tol),
        }


def solve(problem: SpectralProblem) -> SolveResult:
    """Ritz values of the (stiffness, gram) pencil on the numerical range of G."""
    G, S = problem.gram, problem.stiffness
    wg, U = jacobi_eigh(G)
    wmax = float(wg[-1])
    if wmax <= 0.0:
        raise CholeskyFailure("Gram matrix has no positive mass")
    if float(wg[0]) < -1e-10 * wmax:
        raise CholeskyFailure(
            f"Gram matrix is not positive semidefinite (min eig {wg[0]:.3e})"
        )
    keep = wg > GRAM_DROP_TOL * wmax
    kept = wg[keep]
    if kept.size == 0:
        raise CholeskyFailure("Gram matrix is numerically zero")
    gram_cond = float(wmax / kept[0])
    if kept[0] < GRAM_COND_TOL * wmax:
        raise IllConditionedGram(
            f"Gram condition estimate {gram_cond:.3e} > 1e12: "
            "lower the basis degree or raise the quadrature resolution"
        )
    W = U[:, keep] / np.sqrt(kept)[None, :]
    St = hermitize(W.conj().T @ S @ W)
    lam, _ = jacobi_eigh(St)
    thr = problem.kernel_tol * max(1.0, float(lam[-1]))
    kernel_dim = int(np.sum(lam < thr))
    positive = lam[lam >= thr]
    if positive.size == 0:
        raise NoPositiveEigenvalue("no Ritz value above the kernel threshold")
    return SolveResult(
        eigenvalues=lam, kernel_dim=kernel_dim, lambda1=float(positive[0]),
        dropped_dim=int(np.sum(~keep)), gram_cond=gram_cond,
        kernel_tol=problem.kernel_tol,
    )


@dataclass
class SpectralReport:
    lambda1: float
    eigenvalues: list
    kernel_dim: int
    basis_size: int
    degree: int
    dropped_dim: int
    gram_cond: float
    herm_deviation: float
    ibp_deviation: float | None
    lambda1_by_degree: dict
    monotone_ok: bool
    rule_meta: dict

    def to_dict(self):
        return {
            "lambda1": float(self.lambda1),
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "kernel_dim": int(self.kernel_dim),
            "basis_size": int(self.basis_size),
            "degree": int(self.degree),
            "dropped_dim": int(self.dropped_dim),
            "gram_cond": float(self.gram_cond),
            "herm_deviation": float(self.herm_deviation),
            "ibp_deviation": None if self.ibp_deviation is None else float(self.ibp_deviation),
            "lambda1_by_degree": {str(k): float(v) for k, v in self.lambda1_by_degree.items()},
            "monotone_ok": bool(self.monotone_ok),
            "quadrature": self.rule_meta,
        }


def estimate_lambda1(rho, degree, rule, params=None, kernel_tol=1e-6,
                     check_monotonicity=True) -> SpectralReport:
    """assemble -> solve pipeline with a Ritz monotonicity diagnostic."""
    degrees = list(range(2, degree + 1)) if check_monotonicity and degree > 2 else [degree]
    by_degree = {}
    last = None
    for d in degrees:
        basis = MonomialBasis.build(rho.m, d)
        problem = assemble(rho, rule, basis, params=params, kernel_tol=kernel_tol,
                           check_ibp=(d == degree))
        result = solve(problem)
        by_degree[d] = result.lambda1
        if d == degree:
            last = (problem, result)
    problem, result = last
    vals = [by_degree[d] for d in sorted(by_degree)]
    monotone = all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))
    return SpectralReport(
        lambda1=result.lambda1,
        eigenvalues=[float(x) for x in result.eigenvalues],
        kernel_dim=result.kernel_dim,
        basis_size=len(problem.basis),
        degree=degree,
        dropped_dim=result.dropped_dim,
        gram_cond=result.gram_cond,
        herm_deviation=problem.herm_deviation,
        ibp_deviation=problem.ibp_deviation,
        lambda1_by_degree=by_degree,
        monotone_ok=monotone,
        rule_meta=problem.rule_meta,
    )

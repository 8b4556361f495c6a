"""Pointwise pseudohermitian frame data computed from 2-jets of a defining function.

Everything here is batched: a frame built at P points stores arrays with a
leading batch axis, and all invariant checks run vectorized.  Matrix algebra
for sizes 2 and 3 uses explicit cofactor formulas, which keeps the whole
construction exact arithmetic (no pivoting, bit-reproducible).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateJ,
    InternalConsistencyError,
    JetOrderError,
    NotOnSurface,
    NotRealValued,
    NotStrictlyPseudoconvex,
)
from .jets import Jet


@dataclass(frozen=True)
class FrameTolerances:
    """Numerical tolerances; the defaults match the documented contracts."""

    on_surface: float = 1e-9
    degenerate: float = 1e-12
    pairing: float = 1e-12          # |sum rho_k xi^k - 1|
    transverse: float = 1e-10       # |rho_{j kbar} xi^j - r rho_kbar|
    det_psi_rel: float = 1e-10
    levi_identity: float = 1e-10
    xi_crosscheck: float = 1e-9
    invariance: float = 1e-6


DEFAULT_TOLERANCES = FrameTolerances()


def hermitize(mat):
    """Average a (... , k, k) matrix with its conjugate transpose."""
    return 0.5 * (mat + np.conj(np.swapaxes(mat, -1, -2)))


def small_det(h):
    """Determinant of (..., k, k) for k in {1, 2, 3} by explicit formula."""
    k = h.shape[-1]
    if k == 1:
        return h[..., 0, 0]
    if k == 2:
        return h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] * h[..., 1, 0]
    if k == 3:
        return (
            h[..., 0, 0] * (h[..., 1, 1] * h[..., 2, 2] - h[..., 1, 2] * h[..., 2, 1])
            - h[..., 0, 1] * (h[..., 1, 0] * h[..., 2, 2] - h[..., 1, 2] * h[..., 2, 0])
            + h[..., 0, 2] * (h[..., 1, 0] * h[..., 2, 1] - h[..., 1, 1] * h[..., 2, 0])
        )
    raise ValueError(f"small_det supports sizes 1..3, got {k}")


def small_adjugate(h):
    """Adjugate of (..., k, k) for k in {1, 2, 3}: h @ adj(h) = det(h) I."""
    k = h.shape[-1]
    out = np.empty_like(h)
    if k == 1:
        out[..., 0, 0] = 1.0
        return out
    if k == 2:
        out[..., 0, 0] = h[..., 1, 1]
        out[..., 1, 1] = h[..., 0, 0]
        out[..., 0, 1] = -h[..., 0, 1]
        out[..., 1, 0] = -h[..., 1, 0]
        return out
    if k == 3:
        for i in range(3):
            for j in range(3):
                r = [a for a in range(3) if a != j]
                c = [a for a in range(3) if a != i]
                minor = (
                    h[..., r[0], c[0]] * h[..., r[1], c[1]]
                    - h[..., r[0], c[1]] * h[..., r[1], c[0]]
                )
                out[..., i, j] = (-1.0) ** (i + j) * minor
        return out
    raise ValueError(f"small_adjugate supports sizes 1..3, got {k}")


def hermitian_eig_bounds(h):
    """(min, max) eigenvalue of a Hermitian (..., k, k) matrix, k in {1, 2}."""
    k = h.shape[-1]
    if k == 1:
        v = h[..., 0, 0].real
        return v, v
    if k == 2:
        a = h[..., 0, 0].real
        d = h[..., 1, 1].real
        mid = 0.5 * (a + d)
        rad = np.sqrt(0.25 * (a - d) ** 2 + np.abs(h[..., 0, 1]) ** 2)
        return mid - rad, mid + rad
    raise ValueError(f"hermitian_eig_bounds supports sizes 1..2, got {k}")


@dataclass
class CRFrame:
    """All pointwise frame data on M; arrays carry a common batch shape."""

    point: np.ndarray        # (..., m) complex
    rho: np.ndarray          # (...) real residual of the defining function
    grad: np.ndarray         # (..., m) rho_j
    hessian: np.ndarray      # (..., m, m) rho_{j kbar}
    J: np.ndarray            # (...) Fefferman determinant
    detH: np.ndarray         # (...)
    adjugate: np.ndarray     # (..., m, m)
    r: np.ndarray            # (...) transverse curvature
    xi: np.ndarray           # (..., m) the (1,0) field with drho(xi) = 1
    psi: np.ndarray          # (..., m, m)
    psi_inv: np.ndarray      # (..., m, m)
    chart: np.ndarray        # (...) int, index w with max |rho_w|
    nonchart: np.ndarray     # (..., n) int, remaining indices ascending
    levi: np.ndarray         # (..., n, n)
    levi_inv: np.ndarray     # (..., n, n)
    tolerances: FrameTolerances = field(default=DEFAULT_TOLERANCES, repr=False)

    @property
    def m(self):
        return self.point.shape[-1]

    @property
    def n(self):
        return self.m - 1

    @property
    def batch_shape(self):
        return self.point.shape[:-1]

    @property
    def reeb(self):
        """Complex representation of the Reeb field T = i(xi - conj(xi))."""
        return 1j * self.xi

    @property
    def normal(self):
        """Complex representation of N = (xi + conj(xi)) / 2; N rho = 1."""
        return 0.5 * self.xi

    def take(self, idx):
        """Sub-frame at batch indices idx (batch shape must be 1-d)."""
        pick = lambda a: a[idx]
        return CRFrame(
            point=pick(self.point), rho=pick(self.rho), grad=pick(self.grad),
            hessian=pick(self.hessian), J=pick(self.J), detH=pick(self.detH),
            adjugate=pick(self.adjugate), r=pick(self.r), xi=pick(self.xi),
            psi=pick(self.psi), psi_inv=pick(self.psi_inv), chart=pick(self.chart),
            nonchart=pick(self.nonchart), levi=pick(self.levi),
            levi_inv=pick(self.levi_inv), tolerances=self.tolerances,
        )

    def __getitem__(self, idx):
        return self.take(idx)


def _worst(values, points):
    i = int(np.argmax(values))
    return values.reshape(-1)[i], points.reshape(-1, points.shape[-1])[i]


def frame_from_jet(jet: Jet, chart=None, tol: FrameTolerances | None = None) -> CRFrame:
    """Build the frame from a jet of the defining function (order >= 2)."""
    tol = tol or DEFAULT_TOLERANCES
    if jet.order < 2:
        raise JetOrderError("frame construction needs a jet of order >= 2")
    if not jet.is_real:
        # accept numerically real jets (e.g. sums of conjugate monomial pairs
        # that the syntactic reality rules cannot see)
        defect = jet.reality_defect()
        scale = max(1.0, float(np.max(np.abs(jet.coeffs))))
        if defect > 1e-10 * scale:
            raise NotRealValued(
                f"defining function is not real-valued (defect {defect:.3e})"
            )
        jet = jet.hermitized()
    m = jet.m
    n = m - 1
    batch = jet.batch_shape
    points = np.broadcast_to(jet.point, batch + (m,))

    rho = jet.constant_term().real
    worst_rho = np.max(np.abs(rho)) if rho.size else 0.0
    if worst_rho > tol.on_surface:
        val, pt = _worst(np.abs(np.atleast_1d(rho)), np.atleast_2d(points.reshape(-1, m)))
        raise NotOnSurface(f"|rho| = {val:.3e} > {tol.on_surface:.1e} at {pt}")

    zero = (0,) * m
    eye = [tuple(1 if t == s else 0 for t in range(m)) for s in range(m)]
    grad = np.stack([jet.partial(eye[j], zero) for j in range(m)], axis=-1)
    hess = np.empty(batch + (m, m), dtype=np.complex128)
    for j in range(m):
        for k in range(m):
            hess[..., j, k] = jet.partial(eye[j], eye[k])
    hess = hermitize(hess)

    adj = small_adjugate(hess)
    detH = small_det(hess).real
    gbar = np.conj(grad)
    # q = rho_kbar adj[k,j] rho_j  (real; equals J on M and det(psi) exactly)
    q = np.einsum("...k,...kj,...j->...", gbar, adj, grad).real
    J = q - rho * detH
    if np.min(J) <= tol.degenerate:
        val, pt = _worst(-np.atleast_1d(J), np.atleast_2d(points.reshape(-1, m)))
        raise DegenerateJ(f"J = {-val:.3e} <= {tol.degenerate:.1e} at {pt}")

    r = detH / q
    # xi^k = adj[j,k] rho_jbar / q; contraction identities then hold exactly
    xi = np.einsum("...jk,...j->...k", adj, gbar) / q[..., None]

    pairing = np.abs(np.einsum("...k,...k->...", grad, xi) - 1.0)
    if np.max(pairing) > tol.pairing:
        raise InternalConsistencyError(
            f"drho(xi) deviates from 1 by {np.max(pairing):.3e}"
        )
    transverse = np.abs(
        np.einsum("...j,...jk->...k", xi, hess) - r[..., None] * gbar
    )
    if np.max(transverse) > tol.transverse:
        raise InternalConsistencyError(
            f"xi-contraction residual {np.max(transverse):.3e} exceeds "
            f"{tol.transverse:.1e}"
        )

    psi = hermitize(hess + (1.0 - r)[..., None, None] * grad[..., :, None] * gbar[..., None, :])
    det_psi = small_det(psi).real
    if np.max(np.abs(det_psi - J)) > tol.det_psi_rel * np.max(np.abs(J)):
        raise InternalConsistencyError(
            f"det(psi) differs from J by {np.max(np.abs(det_psi - J)):.3e}"
        )
    psi_inv = small_adjugate(psi) / det_psi[..., None, None]

    xi_bar_alt = np.einsum("...kj,...j->...k", psi_inv, grad)
    crosscheck = np.max(np.abs(np.conj(xi) - xi_bar_alt))
    if crosscheck > tol.xi_crosscheck:
        raise InternalConsistencyError(
            f"xi from adjugate and from psi-inverse disagree by {crosscheck:.3e}"
        )

    if chart is None:
        chart_idx = np.argmax(np.abs(grad), axis=-1)
    else:
        chart_idx = np.broadcast_to(np.asarray(chart, dtype=np.intp), batch).copy()
    all_idx = np.broadcast_to(np.arange(m), batch + (m,))
    mask = all_idx != chart_idx[..., None]
    nonchart = all_idx[mask].reshape(batch + (n,))

    flatP = int(np.prod(batch)) if batch else 1
    fgrad = grad.reshape(flatP, m)
    fhess = hess.reshape(flatP, m, m)
    fchart = chart_idx.reshape(flatP)
    fnon = nonchart.reshape(flatP, n)
    rows = np.arange(flatP)

    g_a = np.take_along_axis(fgrad, fnon, axis=1)                  # rho_alpha
    g_w = fgrad[rows, fchart]                                      # rho_w
    H_ab = fhess[rows[:, None, None], fnon[:, :, None], fnon[:, None, :]]
    H_wb = fhess[rows[:, None], fchart[:, None], fnon]             # rho_{w betabar}
    H_aw = fhess[rows[:, None], fnon, fchart[:, None]]             # rho_{alpha wbar}
    H_ww = fhess[rows, fchart, fchart]                             # rho_{w wbar}

    levi = (
        H_ab
        - g_a[:, :, None] * H_wb[:, None, :] / g_w[:, None, None]
        - np.conj(g_a)[:, None, :] * H_aw[:, :, None] / np.conj(g_w)[:, None, None]
        + H_ww[:, None, None]
        * g_a[:, :, None]
        * np.conj(g_a)[:, None, :]
        / (np.abs(g_w) ** 2)[:, None, None]
    )
    levi = hermitize(levi)

    eig_min, _ = hermitian_eig_bounds(levi)
    if np.min(eig_min) <= tol.degenerate:
        bad = int(np.argmin(eig_min))
        raise NotStrictlyPseudoconvex(
            f"Levi form eigenvalue {eig_min.reshape(-1)[bad]:.3e} <= "
            f"{tol.degenerate:.1e} at {points.reshape(-1, m)[bad]}"
        )

    fpsi_inv = psi_inv.reshape(flatP, m, m)
    fxi = xi.reshape(flatP, m)
    P_ab = fpsi_inv[rows[:, None, None], fnon[:, :, None], fnon[:, None, :]]
    xi_a = np.take_along_axis(fxi, fnon, axis=1)
    levi_inv = P_ab - np.conj(xi_a)[:, :, None] * xi_a[:, None, :]

    ident = np.einsum("pab,pbc->pac", levi_inv, levi)
    ident_err = np.max(np.abs(ident - np.eye(n)))
    if ident_err > tol.levi_identity:
        raise InternalConsistencyError(
            f"Levi inverse identity residual {ident_err:.3e} exceeds "
            f"{tol.levi_identity:.1e}"
        )

    return CRFrame(
        point=np.array(points), rho=rho, grad=grad, hessian=hess, J=J, detH=detH,
        adjugate=adj, r=r, xi=xi, psi=psi, psi_inv=psi_inv,
        chart=chart_idx, nonchart=nonchart,
        levi=levi.reshape(batch + (n, n)),
        levi_inv=levi_inv.reshape(batch + (n, n)),
        tolerances=tol,
    )


def build_frame(rho, points, params=None, chart=None, tol=None) -> CRFrame:
    """Frame(s) of the hypersurface {rho = 0} at one or many ambient points."""
    points = np.asarray(points, dtype=np.complex128)
    jet = rho.jet(params, points, 2)
    return frame_from_jet(jet, chart=chart, tol=tol)

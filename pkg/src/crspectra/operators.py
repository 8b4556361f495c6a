"""Differential operators and curvature scalars built on CR frames.

Conventions, pinned by the unit-sphere normalization:

* the Kohn Laplacian satisfies  box_b conj(z_k) = n conj(z_k)  on the unit
  sphere, so it is nonnegative;
* the sub-Laplacian is  delta_b u = 2 (delta_tilde u + n N u)  on real u;
* the volume-normalized Webster scalar is  R_Theta = J^(1/(n+2)) D, where D
  is the curvature functional below.  The 1/(n+2) power is forced by
  invariance under change of defining function (J rescales with weight
  n+2, D with weight -1).
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateJ, JetOrderError, NotRealValued
from .frames import CRFrame, frame_from_jet, hermitize
from .jets import Jet


def _unit_tuples(m):
    zero = (0,) * m
    eye = [tuple(1 if t == s else 0 for t in range(m)) for s in range(m)]
    return zero, eye


def _dbar_vector(f: Jet):
    """Stack of first antiholomorphic partials, shape (..., m)."""
    zero, eye = _unit_tuples(f.m)
    return np.stack([f.partial(zero, eye[k]) for k in range(f.m)], axis=-1)


def _holo_vector(f: Jet):
    zero, eye = _unit_tuples(f.m)
    return np.stack([f.partial(eye[j], zero) for j in range(f.m)], axis=-1)


def _mixed_hessian(f: Jet):
    """Mixed partials d_j dbar_k f, shape (..., m, m)."""
    zero, eye = _unit_tuples(f.m)
    out = np.empty(f.batch_shape + (f.m, f.m), dtype=np.complex128)
    for j in range(f.m):
        for k in range(f.m):
            out[..., j, k] = f.partial(eye[j], eye[k])
    return out


def delta_tilde_coefficients(frame: CRFrame):
    """T[j,k] with delta_tilde f = sum T[j,k] d_j dbar_k f."""
    return frame.xi[..., :, None] * np.conj(frame.xi)[..., None, :] - np.swapaxes(
        frame.psi_inv, -1, -2
    )


def delta_tilde(frame: CRFrame, f_jet: Jet):
    """The degenerate second-order operator (xi^j xi^kbar - psi^kbar j) d_j dbar_k."""
    T = delta_tilde_coefficients(frame)
    return np.einsum("...jk,...jk->...", T, _mixed_hessian(f_jet))


def normal_derivative(frame: CRFrame, f_jet: Jet):
    """N f for the transverse real field N = (xi + conj(xi)) / 2."""
    holo = np.einsum("...k,...k->...", frame.xi, _holo_vector(f_jet))
    anti = np.einsum("...k,...k->...", np.conj(frame.xi), _dbar_vector(f_jet))
    return 0.5 * (holo + anti)


def kohn_laplacian(frame: CRFrame, f_jet: Jet):
    """box_b f at the frame's points; f_jet must have order >= 2."""
    if f_jet.order < 2:
        raise JetOrderError("kohn_laplacian needs a jet of order >= 2")
    n = frame.n
    xibar_f = np.einsum("...k,...k->...", np.conj(frame.xi), _dbar_vector(f_jet))
    return delta_tilde(frame, f_jet) + n * xibar_f


def sub_laplacian(frame: CRFrame, u_jet: Jet):
    """delta_b u = 2 (delta_tilde u + n N u) for real-valued u."""
    if not u_jet.is_real:
        raise NotRealValued("sub_laplacian requires a real-flagged jet")
    n = frame.n
    nu = np.einsum("...k,...k->...", frame.xi, _holo_vector(u_jet)).real
    return 2.0 * (delta_tilde(frame, u_jet).real + n * nu)


def _z_bar_components(frame: CRFrame, f_jet: Jet):
    """Tangential antiholomorphic derivatives Z_betabar f in the chart, (..., n)."""
    db = _dbar_vector(f_jet)
    batch = frame.batch_shape
    m, n = frame.m, frame.n
    flat = int(np.prod(batch)) if batch else 1
    db_f = db.reshape(flat, m)
    grad = frame.grad.reshape(flat, m)
    non = frame.nonchart.reshape(flat, n)
    w = frame.chart.reshape(flat)
    rows = np.arange(flat)
    gb = np.conj(grad)
    db_a = np.take_along_axis(db_f, non, axis=1)
    gb_a = np.take_along_axis(gb, non, axis=1)
    out = db_a - gb_a / gb[rows, w][:, None] * db_f[rows, w][:, None]
    return out.reshape(batch + (n,))


def dbar_pairing(frame: CRFrame, u_jet: Jet, v_jet: Jet):
    """Levi-inverse pairing of the tangential (0,1) parts of u and v.

    Hermitian in (u, v); nonnegative on the diagonal; vanishes when u is
    holomorphic.  Realizes the squared norm |dbar_b u|^2 for u = v.
    """
    zu = _z_bar_components(frame, u_jet)
    zv = _z_bar_components(frame, v_jet)
    return np.einsum("...gs,...g,...s->...", frame.levi_inv, zu, np.conj(zv))


def _jet_matrix_det(rows):
    """Determinant of a small square matrix of jets (Laplace expansion)."""
    k = len(rows)
    if k == 1:
        return rows[0][0]
    if k == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = None
    for j in range(k):
        minor = [[rows[r][c] for c in range(k) if c != j] for r in range(1, k)]
        term = rows[0][j] * _jet_matrix_det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total


def fefferman_det_jet(rho_jet: Jet) -> Jet:
    """Jet of the Fefferman determinant J[rho], of order rho_jet.order - 2.

    Entries of the bordered complex Hessian are taken as jets of the
    corresponding derivatives of rho, each truncated to the output order.
    """
    if rho_jet.order < 2:
        raise JetOrderError("fefferman_det_jet needs a jet of order >= 2")
    m = rho_jet.m
    order = rho_jet.order - 2
    zero, eye = _unit_tuples(m)
    top = [rho_jet.truncate(order)] + [
        rho_jet.derivative(zero, eye[k]).truncate(order) for k in range(m)
    ]
    rows = [top]
    for j in range(m):
        row = [rho_jet.derivative(eye[j], zero).truncate(order)] + [
            rho_jet.derivative(eye[j], eye[k]).truncate(order) for k in range(m)
        ]
        rows.append(row)
    det = _jet_matrix_det(rows)
    return (-det).hermitized()


def log_fefferman_jet(rho_jet: Jet, degenerate_tol=1e-12) -> Jet:
    jj = fefferman_det_jet(rho_jet)
    if np.min(jj.constant_term().real) <= degenerate_tol:
        raise DegenerateJ(
            f"J = {np.min(jj.constant_term().real):.3e} <= {degenerate_tol:.1e}"
        )
    return jj.log()


def ricci_tensor(frame: CRFrame, logJ_jet: Jet):
    """Webster Ricci components in the chart coframe, shape (..., n, n)."""
    g2 = _mixed_hessian(logJ_jet)
    batch = frame.batch_shape
    m, n = frame.m, frame.n
    flat = int(np.prod(batch)) if batch else 1
    rows = np.arange(flat)
    g2f = g2.reshape(flat, m, m)
    grad = frame.grad.reshape(flat, m)
    non = frame.nonchart.reshape(flat, n)
    w = frame.chart.reshape(flat)

    g_a = np.take_along_axis(grad, non, axis=1)
    g_w = grad[rows, w]
    G_ab = g2f[rows[:, None, None], non[:, :, None], non[:, None, :]]
    G_wb = g2f[rows[:, None], w[:, None], non]
    G_aw = g2f[rows[:, None], non, w[:, None]]
    G_ww = g2f[rows, w, w]

    d_ab = (
        G_ab
        - g_a[:, :, None] * G_wb[:, None, :] / g_w[:, None, None]
        - np.conj(g_a)[:, None, :] * G_aw[:, :, None] / np.conj(g_w)[:, None, None]
        + G_ww[:, None, None]
        * g_a[:, :, None]
        * np.conj(g_a)[:, None, :]
        / (np.abs(g_w) ** 2)[:, None, None]
    )
    d_ab = d_ab.reshape(batch + (n, n))
    ricci = -d_ab + (frame.n + 1) * frame.r[..., None, None] * frame.levi
    return hermitize(ricci)


def webster_scalar(frame: CRFrame, logJ_jet: Jet):
    """Webster scalar curvature of theta = (i/2)(dbar rho - d rho)."""
    n = frame.n
    ng = normal_derivative(frame, logJ_jet).real
    db = sub_laplacian(frame, logJ_jet)
    return n * (n + 1) * frame.r - n * ng + 0.5 * db


def curvature_functional(frame: CRFrame, logJ_jet: Jet):
    """The density D whose J-weighted value is the normalized Webster scalar."""
    n = frame.n
    ng = normal_derivative(frame, logJ_jet).real
    db = sub_laplacian(frame, logJ_jet)
    grad_norm = dbar_pairing(frame, logJ_jet, logJ_jet).real
    return n * (n + 1) * frame.r - n * ng - 0.5 * db - (n / (n + 1)) * grad_norm


def D_functional(frame: CRFrame, logJ_jet: Jet):
    return curvature_functional(frame, logJ_jet)


def curvature_quantities(rho, points, params=None, chart=None, tol=None):
    """All curvature scalars at on-surface points, from one 4-jet evaluation.

    Returns a dict with keys r, J, detH, R_theta, D, R_Theta plus the frame.
    """
    points = np.asarray(points, dtype=np.complex128)
    jet = rho.jet(params, points, 4)
    frame = frame_from_jet(jet, chart=chart, tol=tol)
    logj = log_fefferman_jet(jet)
    rtheta = webster_scalar(frame, logj)
    dval = curvature_functional(frame, logj)
    n = frame.n
    big_r = frame.J ** (1.0 / (n + 2)) * dval
    return {
        "r": frame.r,
        "J": frame.J,
        "detH": frame.detH,
        "R_theta": rtheta,
        "D": dval,
        "R_Theta": big_r,
        "frame": frame,
        "logJ_jet": logj,
    }


def normalized_scalar(rho, points, params=None, chart=None, tol=None):
    """Webster scalar curvature of the volume-normalized structure.

    Independent of which defining function of M is supplied (to numerical
    tolerance); positive everywhere iff M is super-pseudoconvex.
    """
    return curvature_quantities(rho, points, params=params, chart=chart, tol=tol)[
        "R_Theta"
    ]


class NormalizedDefiningFunction:
    """Evaluator for rho_hat = J[rho]^(-1/(n+2)) rho, with J[rho_hat] = 1 on M.

    Jets are available up to order 2 (each order of rho_hat consumes two
    extra orders of rho through the determinant).
    """

    def __init__(self, rho, params=None):
        self.rho = rho
        self.params = params
        self.n = rho.n

    def jet(self, points, order=2) -> Jet:
        if order > 2:
            raise JetOrderError(
                "normalized defining function jets are limited to order 2"
            )
        points = np.asarray(points, dtype=np.complex128)
        rho_jet = self.rho.jet(self.params, points, order + 2)
        jj = fefferman_det_jet(rho_jet)
        if np.min(jj.constant_term().real) <= 1e-12:
            raise DegenerateJ("J <= 0 along the requested points")
        factor = jj.pow_real(-1.0 / (self.n + 2))
        return factor * rho_jet.truncate(order)

    def fefferman_values(self, points):
        """J[rho_hat] at the given points (1 on M up to roundoff)."""
        return fefferman_det_jet(self.jet(points, 2)).constant_term().real


def first_normalization(rho, params=None) -> NormalizedDefiningFunction:
    return NormalizedDefiningFunction(rho, params)

import numpy as np
import pytest

from crspectra.expressions import parse
from crspectra.frames import build_frame
from crspectra.operators import (
    curvature_functional,
    curvature_quantities,
    dbar_pairing,
    fefferman_det_jet,
    first_normalization,
    kohn_laplacian,
    log_fefferman_jet,
    normalized_scalar,
    ricci_tensor,
    sub_laplacian,
    webster_scalar,
)
from crspectra.quadrature import points_on_surface

SPHERE = parse("abs2(z1)+abs2(z2)-1", 1)
SQUARED = parse("(abs2(z1)+abs2(z2))^2-1", 1)
ELLIPSOID = parse("abs2(z1)+abs2(z2)+0.1*re(z1^2)-1", 1)


def _sphere_frame(pts):
    return build_frame(SPHERE, pts)


def test_box_on_conjugate_coordinate():
    fr = _sphere_frame(np.array([1.0, 0.0], dtype=complex))
    f = parse("conj(z1)", 1).jet({}, np.array([1.0, 0.0], dtype=complex), 2)
    assert kohn_laplacian(fr, f) == pytest.approx(1.0)


def test_box_annihilates_holomorphic():
    pts = points_on_surface(ELLIPSOID, 15, seed=1)
    fr = build_frame(ELLIPSOID, pts)
    for text in ["z1^3", "z1*z2", "exp(0.5*z1)", "1+2*i", "z2^2-z1"]:
        vals = kohn_laplacian(fr, parse(text, 1).jet({}, pts, 2))
        assert np.max(np.abs(vals)) < 1e-12, text


def test_box_mixed_monomial_generic_point():
    pt = np.array([0.6, 0.8j], dtype=complex)
    fr = _sphere_frame(pt)
    f = parse("z1*conj(z2)", 1).jet({}, pt, 2)
    assert kohn_laplacian(fr, f) == pytest.approx(2.0 * 0.6 * np.conj(0.8j))


def test_sub_laplacian_constant_is_zero():
    pts = points_on_surface(SPHERE, 5, seed=3)
    fr = _sphere_frame(pts)
    u = parse("3.5", 1).jet({}, pts, 2)
    assert np.max(np.abs(sub_laplacian(fr, u))) == 0.0


def test_sub_laplacian_vs_box_identity():
    rng = np.random.default_rng(12)
    pts = points_on_surface(SQUARED, 20, seed=12)
    fr = build_frame(SQUARED, pts)
    for _ in range(20):
        c = rng.standard_normal(3)
        u = parse(
            f"{c[0]:.4f}*abs2(z1)+{c[1]:.4f}*re(z1*conj(z2))+{c[2]:.4f}*im(z2^2)", 1
        ).jet({}, pts, 2)
        lhs = sub_laplacian(fr, u)
        box = kohn_laplacian(fr, u)
        assert np.max(np.abs(lhs - (box + np.conj(box)))) < 1e-10


def test_sub_laplacian_of_modulus_at_pole():
    pt = np.array([1.0, 0.0], dtype=complex)
    fr = _sphere_frame(pt)
    u = parse("abs2(z1)", 1).jet({}, pt, 2)
    # delta_tilde kills |z1|^2 at the pole; N|z1|^2 = 1 there
    assert sub_laplacian(fr, u) == pytest.approx(2.0)


def test_pairing_examples():
    pt = np.array([0.0, 1.0], dtype=complex)
    fr = _sphere_frame(pt)
    u = parse("conj(z1)", 1).jet({}, pt, 1)
    assert dbar_pairing(fr, u, u) == pytest.approx(1.0)
    holo = parse("z1^2", 1).jet({}, pt, 1)
    assert dbar_pairing(fr, holo, u) == pytest.approx(0.0)


def test_pairing_hermitian_symmetry():
    rng = np.random.default_rng(5)
    pts = points_on_surface(ELLIPSOID, 10, seed=5)
    fr = build_frame(ELLIPSOID, pts)
    for _ in range(5):
        c = rng.standard_normal(4)
        u = parse(f"({c[0]:.3f}+{c[1]:.3f}*i)*conj(z1)*z2", 1).jet({}, pts, 1)
        v = parse(f"({c[2]:.3f}+{c[3]:.3f}*i)*conj(z2)^2", 1).jet({}, pts, 1)
        assert np.allclose(dbar_pairing(fr, u, v), np.conj(dbar_pairing(fr, v, u)))


def test_fefferman_jet_sphere_constant_one():
    pts = points_on_surface(SPHERE, 10, seed=8)
    jj = fefferman_det_jet(SPHERE.jet({}, pts, 4))
    assert np.max(np.abs(jj.constant_term() - 1.0)) < 1e-12
    assert np.max(np.abs(jj.coeffs[1:])) < 1e-12  # identically 1


def test_fefferman_jet_normal_form_quarter():
    text = "-im(z2) + abs2(z1) + kappa*abs2(z1)^2 + gamma*(z1*conj(z1)^3 + z1^3*conj(z1))"
    e = parse(text, 1)
    for kappa, gamma in [(1.0, 0.0), (-0.5, 0.2)]:
        jj = fefferman_det_jet(e.jet({"kappa": kappa, "gamma": gamma},
                                     np.zeros(2, dtype=complex), 4))
        assert complex(jj.constant_term()) == pytest.approx(0.25)


def test_fefferman_scaling_multilinearity():
    pts = points_on_surface(SPHERE, 6, seed=10)
    base = fefferman_det_jet(SPHERE.jet({}, pts, 4))
    scaled = parse("2*(abs2(z1)+abs2(z2)-1)", 1)
    jj = fefferman_det_jet(scaled.jet({}, pts, 4))
    assert np.max(np.abs(jj.coeffs - 8.0 * base.coeffs)) < 1e-10


def test_ricci_sphere_is_multiple_of_levi():
    # log J vanishes identically, so the Ricci tensor is (n+1) r h; in the
    # chart coframe h is the identity exactly at the coordinate poles
    pts = points_on_surface(SPHERE, 10, seed=14)
    fr = build_frame(SPHERE, pts)
    logj = log_fefferman_jet(SPHERE.jet({}, pts, 4))
    ric = ricci_tensor(fr, logj)
    assert np.max(np.abs(ric - 2.0 * fr.levi)) < 1e-10
    pole = build_frame(SPHERE, [1.0, 0.0])
    ric0 = ricci_tensor(pole, log_fefferman_jet(SPHERE.jet({}, np.array([1.0, 0.0], dtype=complex), 4)))
    assert np.max(np.abs(ric0 - 2.0 * np.eye(1))) < 1e-12


def test_ricci_trace_matches_webster_scalar():
    pts = points_on_surface(ELLIPSOID, 20, seed=15)
    fr = build_frame(ELLIPSOID, pts)
    logj = log_fefferman_jet(ELLIPSOID.jet({}, pts, 4))
    ric = ricci_tensor(fr, logj)
    trace = np.einsum("pba,pab->p", fr.levi_inv, ric).real
    scal = webster_scalar(fr, logj)
    assert np.max(np.abs(trace - scal)) < 1e-9
    herm = np.max(np.abs(ric - np.conj(np.swapaxes(ric, -1, -2))))
    assert herm < 1e-10


def test_webster_scalar_round_spheres():
    assert curvature_quantities(SPHERE, [[1.0, 0.0]])["R_theta"][0] == pytest.approx(2.0)
    s2 = parse("abs2(z1)+abs2(z2)+abs2(z3)-1", 2)
    assert curvature_quantities(s2, [[0.0, 0.0, 1.0]])["R_theta"][0] == pytest.approx(6.0)


def test_webster_scalar_constant_on_rescaled_sphere():
    pts = points_on_surface(SQUARED, 50, seed=16)
    vals = curvature_quantities(SQUARED, pts)["R_theta"]
    assert np.max(vals) - np.min(vals) < 1e-8


def test_functional_identity_with_webster_scalar():
    pts = points_on_surface(ELLIPSOID, 15, seed=17)
    fr = build_frame(ELLIPSOID, pts)
    logj = log_fefferman_jet(ELLIPSOID.jet({}, pts, 4))
    d = curvature_functional(fr, logj)
    scal = webster_scalar(fr, logj)
    delta_b = sub_laplacian(fr, logj)
    pair = dbar_pairing(fr, logj, logj).real
    n = fr.n
    assert np.max(np.abs(d - (scal - delta_b - n / (n + 1) * pair))) < 1e-9


def test_normalized_scalar_sphere_and_invariance():
    pts = points_on_surface(SPHERE, 25, seed=18)
    a = normalized_scalar(SPHERE, pts)
    b = normalized_scalar(parse("((abs2(z1)+abs2(z2))^2-1)/2", 1), pts)
    c = normalized_scalar(
        parse("(abs2(z1)+abs2(z2)-1)*(1+(abs2(z1)+abs2(z2)-1)/2)", 1), pts
    )
    assert np.max(np.abs(a - 2.0)) < 1e-9
    assert np.max(np.abs(a - b)) < 1e-6
    assert np.max(np.abs(a - c)) < 1e-6


def test_super_pseudoconvexity_flag_tracks_sign():
    text = "-im(z2) + abs2(z1) + kappa*abs2(z1)^2"
    e = parse(text, 1)
    pos = curvature_quantities(e, [0.0, 0.0], {"kappa": 0.7})
    neg = curvature_quantities(e, [0.0, 0.0], {"kappa": -0.7})
    assert pos["D"][()] > 0.0 > neg["D"][()]


def test_first_normalization_fixed_point_and_unit_j():
    nd = first_normalization(SPHERE)
    pts = points_on_surface(SPHERE, 10, seed=19)
    jet = nd.jet(pts, 2)
    base = SPHERE.jet({}, pts, 2)
    assert np.max(np.abs(jet.coeffs - base.coeffs)) < 1e-12  # J = 1 already

    nd2 = first_normalization(SQUARED)
    pts2 = points_on_surface(SQUARED, 50, seed=20)
    vals = nd2.fefferman_values(pts2)
    assert np.max(np.abs(vals - 1.0)) < 1e-9


def test_frame_j_matches_fefferman_jet_constant():
    # two independent code paths for J: the adjugate identity in the frame
    # and the Laplace expansion of the bordered jet determinant
    pts = points_on_surface(ELLIPSOID, 25, seed=23)
    fr = build_frame(ELLIPSOID, pts)
    jj = fefferman_det_jet(ELLIPSOID.jet({}, pts, 4))
    assert np.max(np.abs(fr.J - jj.constant_term().real)) < 1e-12


def test_chart_independence_of_operator_scalars():
    pts = points_on_surface(SQUARED, 30, seed=31)
    keep = (np.abs(pts[:, 0]) > 0.35) & (np.abs(pts[:, 1]) > 0.35)
    pts = pts[keep]
    q0 = curvature_quantities(SQUARED, pts, chart=0)
    q1 = curvature_quantities(SQUARED, pts, chart=1)
    for key in ("R_theta", "D", "R_Theta"):
        assert np.max(np.abs(q0[key] - q1[key])) < 1e-9, key
    u = parse("abs2(z1)-abs2(z2)+re(z1*conj(z2))", 1)
    f = parse("z1*conj(z2)^2", 1)
    for jets, op in ((u, sub_laplacian), (f, kohn_laplacian)):
        v0 = op(q0["frame"], jets.jet({}, pts, 2))
        v1 = op(q1["frame"], jets.jet({}, pts, 2))
        assert np.max(np.abs(v0 - v1)) < 1e-9

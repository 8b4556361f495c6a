import numpy as np
import pytest

from crspectra.bounds import (
    Decomposition,
    lower_bound,
    pullback_defining_function,
    reilly_bound,
    special_bound,
    upper_bound,
    validate_decomposition,
)
from crspectra.errors import (
    InvalidDecomposition,
    NegativeTransverseCurvature,
    NotApplicable,
    NotOnSphereImage,
)
from crspectra.expressions import parse
from crspectra.quadrature import QuadratureSettings, build_quadrature, points_on_surface

SPHERE = parse("abs2(z1)+abs2(z2)-1", 1)
SQUARED = parse("(abs2(z1)+abs2(z2))^2-1", 1)


@pytest.fixture(scope="module")
def sphere_rule():
    return build_quadrature(SPHERE, QuadratureSettings("hopf_product", resolution=24))


@pytest.fixture(scope="module")
def squared_rule():
    return build_quadrature(SQUARED, QuadratureSettings("hopf_product", resolution=24))


def _identity_dec():
    return Decomposition(N=1.0, nu=1.0, psi=None,
                         f_maps=[parse("z1", 1), parse("z2", 1)])


def _quadratic_immersion():
    return [parse("z1^2", 1), parse("pow(2,0.5)*z1*z2", 1), parse("z2^2", 1)]


def test_upper_bound_sphere_is_sharp(sphere_rule):
    report = upper_bound(SPHERE, _identity_dec(), sphere_rule)
    assert report.value == pytest.approx(1.0, abs=1e-9)
    assert report.diagnostics["identities_ok"]
    # candidate eigenfunction evaluators: box_b zbar_k = zbar_k on the sphere
    pts = points_on_surface(SPHERE, 5, seed=1)
    b1 = report.evaluators["b"][0](pts)
    assert np.allclose(b1, np.conj(pts[:, 0]), atol=1e-10)


def test_upper_bound_quadratic_immersion_decomposition(squared_rule):
    dec = Decomposition(N=1.0, nu=1.0, psi=None, f_maps=_quadratic_immersion())
    report = upper_bound(SQUARED, dec, squared_rule)
    # the decomposition is exact: sum |f|^2 = (rho + 1); lambda1 here is 1/2,
    # so the bound is valid but strict
    assert report.diagnostics["residual_max"] < 1e-12
    assert report.value > 0.5 + 1e-6
    assert report.value == pytest.approx(1.0, abs=1e-9)


def test_upper_bound_quadratic_decomposition(sphere_rule):
    dec = Decomposition(N=2.0, nu=1.0, psi=None, f_maps=_quadratic_immersion())
    report = upper_bound(SPHERE, dec, sphere_rule)
    assert report.value == pytest.approx(2.0, abs=1e-9)
    assert report.diagnostics["box_identity_rel_err"] < 1e-7
    assert report.diagnostics["pairing_identity_rel_err"] < 1e-7


def test_upper_bound_with_pluriharmonic_part():
    a = 0.1
    rho = parse(f"abs2(z1)+abs2(z2)+{a}*re(z1^2)-1", 1)
    rule = build_quadrature(rho, QuadratureSettings("hopf_product", resolution=24))
    dec = Decomposition(N=1.0, nu=1.0, psi=parse(f"{a}*re(z1^2)", 1),
                        f_maps=[parse("z1", 1), parse("z2", 1)])
    report = upper_bound(rho, dec, rule)
    assert report.diagnostics["identities_ok"]
    assert report.value > 0.9


def test_invalid_decomposition_wrong_residual(sphere_rule):
    dec = Decomposition(N=1.0, nu=1.0, psi=None, f_maps=[parse("z1", 1)])
    with pytest.raises(InvalidDecomposition):
        upper_bound(SPHERE, dec, sphere_rule)


def test_invalid_decomposition_nonholomorphic(sphere_rule):
    dec = Decomposition(N=1.0, nu=1.0, psi=None,
                        f_maps=[parse("conj(z1)", 1), parse("z2", 1)])
    with pytest.raises(InvalidDecomposition):
        upper_bound(SPHERE, dec, sphere_rule)


def test_invalid_decomposition_bad_psi(sphere_rule):
    dec = Decomposition(N=1.0, nu=1.0, psi=parse("abs2(z1)", 1),
                        f_maps=[parse("z1", 1), parse("z2", 1)])
    with pytest.raises(InvalidDecomposition):
        validate_decomposition(SPHERE, dec, sphere_rule.points)


def test_pullback_defining_function_text():
    rho_f = pullback_defining_function([parse("z1", 1), parse("z2", 1)])
    assert str(rho_f) == "abs2(z1)+abs2(z2)-1"


def test_reilly_identity_immersion(sphere_rule):
    report = reilly_bound([parse("z1", 1), parse("z2", 1)], sphere_rule)
    assert report.value == pytest.approx(1.0, abs=1e-9)
    report0 = reilly_bound([parse("z1", 1), parse("z2", 1), parse("0", 1)], sphere_rule)
    assert report0.value == pytest.approx(report.value, abs=1e-12)


def test_reilly_quadratic_immersion_strict(squared_rule):
    report = reilly_bound(_quadratic_immersion(), squared_rule)
    assert report.value > 0.5 + 1e-6  # lambda1(M, 2 theta_std) = 1/2


def test_reilly_rejects_non_sphere_image(sphere_rule):
    with pytest.raises(NotOnSphereImage):
        reilly_bound([parse("z1", 1), parse("0.5*z2", 1)], sphere_rule)


def test_special_bound_sphere_gate():
    pts = points_on_surface(SPHERE, 50, seed=3)
    report = special_bound(SPHERE, 1, pts)
    assert report.diagnostics["condition_ok"]
    assert report.diagnostics["condition_max"] <= 1e-10
    assert report.value == pytest.approx(1.0, abs=1e-10)
    assert report.diagnostics["r_spread"] <= 1e-10


def test_special_bound_negative_curvature_rejected():
    neg = parse("re(z1) + re(z3) - abs2(z1) + abs2(z2) + 4*abs2(z3)", 2)
    with pytest.raises(NegativeTransverseCurvature):
        special_bound(neg, 1, np.zeros((1, 3), dtype=complex))


def test_lower_bound_sphere_sharp_n1():
    pts = points_on_surface(SPHERE, 40, seed=6)
    report = lower_bound(SPHERE, pts, paneitz_positive=True)
    assert report.value == pytest.approx(1.0, abs=1e-9)
    assert report.diagnostics["super_pseudoconvex"]
    # the literally printed variant overshoots sphere sharpness by n(n+1)
    assert report.diagnostics["literal_printed_value"] == pytest.approx(2.0, abs=1e-9)


def test_lower_bound_sphere_sharp_n2():
    s2 = parse("abs2(z1)+abs2(z2)+abs2(z3)-1", 2)
    pts = points_on_surface(s2, 40, seed=7)
    report = lower_bound(s2, pts)  # n = 2: no Paneitz assertion needed
    assert report.value == pytest.approx(2.0, abs=1e-9)


def test_lower_bound_gate_n1():
    pts = points_on_surface(SPHERE, 5, seed=8)
    with pytest.raises(NotApplicable):
        lower_bound(SPHERE, pts)


def test_lower_bound_fefferman_normalized_equals_n_min_det():
    # J identically 1: the bound reduces to n * min det H = n * min r
    pts = points_on_surface(SPHERE, 30, seed=9)
    report = lower_bound(SPHERE, pts, paneitz_positive=True)
    from crspectra.frames import build_frame

    fr = build_frame(SPHERE, pts)
    assert report.value == pytest.approx(float(1 * np.min(fr.detH)), abs=1e-9)


def test_lower_bound_flags_vacuous_case():
    text = "-im(z2) + abs2(z1) + kappa*abs2(z1)^2"
    e = parse(text, 1)
    report = lower_bound(e, np.zeros((1, 2), dtype=complex),
                         params={"kappa": -1.0}, paneitz_positive=True)
    assert not report.diagnostics["super_pseudoconvex"]
    assert "warning" in report.diagnostics

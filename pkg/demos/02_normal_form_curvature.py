"""Curvature at the origin of a surface in volume-preserving normal form.

rho = -Im w + |z|^2 + kappa |z|^4 + gamma (z zbar^3 + z^3 zbar)

At the origin the Fefferman determinant is 1/4, the curvature functional D
equals 4 kappa (the gamma terms drop out), and the normalized Webster scalar
is (1/4)^(1/3) * 4 kappa = 2^(4/3) kappa.  The sign of kappa decides
super-pseudoconvexity at the point.
"""

from crspectra import curvature_quantities, parse

rho = parse(
    "-im(z2) + abs2(z1) + kappa*abs2(z1)^2 + gamma*(z1*conj(z1)^3 + z1^3*conj(z1))",
    1,
)

print(f"{'kappa':>7} {'gamma':>7} {'J(0)':>10} {'D(0)':>12} {'R_Theta(0)':>14} {'2^(4/3)k':>14}")
for kappa, gamma in [(1.0, 0.0), (1.0, 0.3), (-0.5, 0.2), (0.25, -0.6)]:
    q = curvature_quantities(rho, [0.0, 0.0], {"kappa": kappa, "gamma": gamma})
    print(
        f"{kappa:7.2f} {gamma:7.2f} {float(q['J']):10.6f} {float(q['D']):12.8f} "
        f"{float(q['R_Theta']):14.10f} {2 ** (4 / 3) * kappa:14.10f}"
    )

print("\nD(0) is 4*kappa for every gamma: the cubic-conjugate terms carry no")
print("weight in the order-4 jets that the curvature at the origin sees.")

"""Pointwise invariants of round and rescaled spheres.

Builds CR frames from defining-function expressions and prints the
transverse curvature r, the Fefferman determinant J, det H, and the Webster
scalar curvatures, showing the scaling laws J[c rho] = c^(n+2) J[rho] and
r[c rho] = r[rho] / c along the way.
"""

import numpy as np

from crspectra import build_frame, curvature_quantities, parse, points_on_surface

sphere = parse("abs2(z1)+abs2(z2)-1", 1)
pts = points_on_surface(sphere, 5, seed=0)

print("== round 3-sphere ==")
q = curvature_quantities(sphere, pts)
for key in ("r", "J", "detH", "R_theta", "R_Theta"):
    print(f"  {key:8s} {np.round(q[key], 12)}")

print("\n== the same sphere, defining function scaled by c ==")
for c in (0.5, 2.0, 3.0):
    scaled = parse(f"{c}*(abs2(z1)+abs2(z2)-1)", 1)
    fr = build_frame(scaled, pts)
    print(f"  c={c}: J = c^3 = {fr.J[0]:.6f}, r = 1/c = {fr.r[0]:.6f}")

print("\n== rho = (|z1|^2+|z2|^2)^2 - 1: same surface, doubled contact form ==")
squared = parse("(abs2(z1)+abs2(z2))^2-1", 1)
fr = build_frame(squared, pts)
print(f"  det H = {fr.detH[0]:.6f} (printed value in the literature: 8)")
print(f"  J     = {fr.J[0]:.6f}, r = {fr.r[0]:.6f}")
print("  note: the bordered determinant gives J = 8 and r = det H / J = 1,")
print("  not the J = 4, r = 2 sometimes quoted for this example.")

print("\n== the normalized Webster scalar does not depend on the defining function ==")
for text in (
    "abs2(z1)+abs2(z2)-1",
    "((abs2(z1)+abs2(z2))^2-1)/2",
    "(abs2(z1)+abs2(z2)-1)*(1+(abs2(z1)+abs2(z2)-1)/2)",
):
    val = curvature_quantities(parse(text, 1), pts)["R_Theta"]
    print(f"  R_Theta = {np.round(val, 10)}  for rho = {text}")

print("\n== five-sphere (n = 2) ==")
s2 = parse("abs2(z1)+abs2(z2)+abs2(z3)-1", 2)
pts2 = points_on_surface(s2, 3, seed=1)
q2 = curvature_quantities(s2, pts2)
print(f"  R_theta = {np.round(q2['R_theta'], 12)} (n(n+1) = 6)")

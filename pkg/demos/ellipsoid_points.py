"""Rational points on sum d_i a_i^2 = 4 sum d_i (small heights) and obstructions."""

from fractions import Fraction

from painleve_soliton import QuadricSpec, enumerate_points, modular_obstruction, secant_family

spec = QuadricSpec((2, 2))
pts = enumerate_points(spec, 5)
print(len(pts), "points on (2,2) up to height 5")
for p in pts[:12]:
    print("  ", [str(c) for c in p.coordinates])

base = [Fraction(-1), Fraction(-1)]
print("secant family through (-1,-1):")
for p in secant_family(spec, base, [Fraction(1), Fraction(0)], 5):
    print("  ", [str(c) for c in p.coordinates])

for dims in ((7, 7, 7), (3,), (2, 3)):
    s = QuadricSpec(dims)
    print(dims, "mod 8:", modular_obstruction(s, 8), " points:", len(enumerate_points(s, 6)))

print("one factor with points:", [d for d in range(2, 17) if enumerate_points(QuadricSpec((d,)), 5)])

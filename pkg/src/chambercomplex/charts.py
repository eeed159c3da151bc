"""Exact affine chart arithmetic on wall planes.

A wall carries (chain index, level) lattices on both sides.  The grid
side's cell (i, z) is the unit square [i,i+1]x[z,z+1]; the affine
side's cell is the image of its unit square under x -> A.x + t with
A in GL(2,Z) and rational t.  All predicates are exact (Fraction);
adjacency means open-interior overlap, boundary contact never counts.
"""

from __future__ import annotations

from fractions import Fraction


def mat_mul(A, B):
    return ((A[0][0] * B[0][0] + A[0][1] * B[1][0], A[0][0] * B[0][1] + A[0][1] * B[1][1]),
            (A[1][0] * B[0][0] + A[1][1] * B[1][0], A[1][0] * B[0][1] + A[1][1] * B[1][1]))


def mat_vec(A, v):
    return (A[0][0] * v[0] + A[0][1] * v[1], A[1][0] * v[0] + A[1][1] * v[1])


def mat_det(A):
    return A[0][0] * A[1][1] - A[0][1] * A[1][0]


def mat_inv(A):
    """Inverse of a GL(2,Z) matrix, again integral."""
    d = mat_det(A)
    if d not in (1, -1):
        raise ValueError(f"matrix {A} is not in GL(2,Z)")
    return ((A[1][1] * d, -A[0][1] * d), (-A[1][0] * d, A[0][0] * d))


def unit_square(i, z):
    """Corners counterclockwise for det > 0 charts; orientation is irrelevant
    to the overlap predicate."""
    return ((Fraction(i), Fraction(z)), (Fraction(i + 1), Fraction(z)),
            (Fraction(i + 1), Fraction(z + 1)), (Fraction(i), Fraction(z + 1)))


def affine_image(A, t, polygon):
    return tuple((A[0][0] * x + A[0][1] * y + t[0], A[1][0] * x + A[1][1] * y + t[1])
                 for (x, y) in polygon)


def _axes(polygon):
    n = len(polygon)
    for k in range(n):
        (x1, y1), (x2, y2) = polygon[k], polygon[(k + 1) % n]
        yield (y2 - y1, x1 - x2)  # normal to the edge


def interiors_overlap(P, Q) -> bool:
    """Separating-axis test for convex polygons; True iff open interiors meet."""
    for axis in list(_axes(P)) + list(_axes(Q)):
        pmin = min(x * axis[0] + y * axis[1] for x, y in P)
        pmax = max(x * axis[0] + y * axis[1] for x, y in P)
        qmin = min(x * axis[0] + y * axis[1] for x, y in Q)
        qmax = max(x * axis[0] + y * axis[1] for x, y in Q)
        if pmax <= qmin or qmax <= pmin:
            return False
    return True


def overlap_offsets(A, t):
    """All w in Z^2 with (A.sq(0,0) + t + w) overlapping sq(0,0) interiorly.

    The affine cell at (i', z') overlaps the grid cell at (i, z) iff
    A.(i', z') - (i, z) lies in this set, so one scan serves every wall
    instance of the gluing.
    """
    base = affine_image(A, t, unit_square(0, 0))
    sq0 = unit_square(0, 0)
    xs = [p[0] for p in base]
    ys = [p[1] for p in base]
    out = []
    # shift w must bring the bounding boxes together; pad by one cell
    for wx in range(int(-max(xs)) - 1, int(1 - min(xs)) + 2):
        for wy in range(int(-max(ys)) - 1, int(1 - min(ys)) + 2):
            shifted = tuple((x + wx, y + wy) for x, y in base)
            if interiors_overlap(shifted, sq0):
                out.append((wx, wy))
    return sorted(out)

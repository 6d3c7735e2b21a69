"""Icosahedral aperture-7 hexagonal grid: lattice and fold machinery.

The grid places cell centers at the vertices of a geodesic subdivision of the
icosahedron. At resolution r the subdivision parameter is an Eisenstein
integer w_r with norm 12*7^r, so there are 10*12*7^r + 2 = 2 + 120*7^r cells:
the 12 icosahedron corners become pentagonal cells (5 neighbors), everything
else is hexagonal (6 neighbors). Successive resolutions differ by a norm-7
factor, which gives the aperture-7 hierarchy: every hexagon has exactly 7
children, every pentagon 6.

Cell identity is exact integer arithmetic: a cell is a canonical
(resolution, face, i, j) tuple where (i, j) are Eisenstein coordinates in the
owning face's lattice. Floating point is used only to project query points and
to place cell centers; folds between adjacent faces are exact unit-affine maps
over the Eisenstein integers, derived once at import time and verified against
the face corner correspondences.
"""
from __future__ import annotations

import math

MAX_RESOLUTION = 5

_SQRT3_2 = math.sqrt(3.0) / 2.0

# ---------------------------------------------------------------------------
# Eisenstein integers: pairs (a, b) meaning a + b*u with u = e^{i*pi/3},
# so u^2 = u - 1. Unit group: the six rotations by 60 degrees.
# ---------------------------------------------------------------------------

UNITS = ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1))


def emul(z, w):
    a, b = z
    c, d = w
    return (a * c - b * d, a * d + b * c + b * d)


def eadd(z, w):
    return (z[0] + w[0], z[1] + w[1])


def esub(z, w):
    return (z[0] - w[0], z[1] - w[1])


def econj(z):
    a, b = z
    return (a + b, -b)


def enorm(z):
    a, b = z
    return a * a + a * b + b * b


def ediv_exact(z, w):
    """Exact Eisenstein division; raises if w does not divide z."""
    n = enorm(w)
    pa, pb = emul(z, econj(w))
    if pa % n or pb % n:
        raise ValueError(f"{z} not divisible by {w}")
    return (pa // n, pb // n)


def eis_to_xy(z):
    a, b = z
    return (a + 0.5 * b, b * _SQRT3_2)


def xy_to_eis_frac(x: float, y: float) -> tuple[float, float]:
    b = y / _SQRT3_2
    return (x - 0.5 * b, b)


def hexround(fa: float, fb: float):
    """Nearest lattice point to fractional Eisenstein coordinates.

    The nearest point is always a corner of the unit rhombus containing the
    query, so four candidates suffice. Ties break on (i, j) order, which keeps
    the function deterministic everywhere.
    """
    ia = math.floor(fa)
    ib = math.floor(fb)
    best = None
    best_d = None
    for ca in (ia, ia + 1):
        da = fa - ca
        for cb in (ib, ib + 1):
            db = fb - cb
            d = da * da + da * db + db * db
            if best_d is None or d < best_d - 1e-15 or (
                abs(d - best_d) <= 1e-15 and (ca, cb) < best
            ):
                best = (ca, cb)
                best_d = d
    return best


def hexround_frac7(na: int, nb: int):
    """Nearest lattice point to (na/7, nb/7), in exact integer arithmetic."""
    ia = na // 7
    ib = nb // 7
    best = None
    best_d = None
    for ca in (ia, ia + 1):
        da = na - 7 * ca
        for cb in (ib, ib + 1):
            db = nb - 7 * cb
            d = da * da + da * db + db * db
            if best_d is None or d < best_d or (d == best_d and (ca, cb) < best):
                best = (ca, cb)
                best_d = d
    return best


# ---------------------------------------------------------------------------
# Resolution parameters.
# ---------------------------------------------------------------------------


def _sextant(z):
    """Rotate z by units into the sextant a > 0, b >= 0 (angle in [0, 60))."""
    for unit in UNITS:
        w = emul(z, unit)
        if w[0] > 0 and w[1] >= 0:
            return w
    raise ValueError(f"cannot normalize {z}")


def _build_res_params():
    ws = [(2, 2)]
    for r in range(MAX_RESOLUTION):
        mult = (2, 1) if r % 2 == 0 else (1, 2)
        ws.append(_sextant(emul(ws[-1], mult)))
    qs = [ediv_exact(ws[r + 1], ws[r]) for r in range(MAX_RESOLUTION)]
    return ws, qs


#: w_r: icosahedron edge vector in resolution-r lattice coordinates.
RES_W, RES_Q = _build_res_params()

#: Cells at resolution r: 2 + 120 * 7^r.
CELL_COUNTS = [10 * enorm(w) + 2 for w in RES_W]


# ---------------------------------------------------------------------------
# Icosahedron.
# ---------------------------------------------------------------------------


def _norm3(v):
    n = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    return (v[0] / n, v[1] / n, v[2] / n)


def _cross(u, v):
    return (
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )


def _dot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def _sub(u, v):
    return (u[0] - v[0], u[1] - v[1], u[2] - v[2])


def _build_vertices():
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    raw = set()
    for s1 in (-1.0, 1.0):
        for s2 in (-phi, phi):
            raw.add((0.0, s1, s2))
            raw.add((s1, s2, 0.0))
            raw.add((s2, 0.0, s1))
    verts = sorted(_norm3(v) for v in raw)
    assert len(verts) == 12
    return tuple(verts)


def _build_faces(verts):
    # Adjacent icosahedron vertices have dot product 1/sqrt(5); all other
    # pairs are antipodal or at negative dot product.
    thresh = 0.0
    faces = []
    n = len(verts)
    for i in range(n):
        for j in range(i + 1, n):
            if _dot(verts[i], verts[j]) < thresh:
                continue
            for k in range(j + 1, n):
                if _dot(verts[i], verts[k]) < thresh or _dot(verts[j], verts[k]) < thresh:
                    continue
                tri = [i, j, k]
                # Orient counterclockwise as seen from outside the sphere.
                a, b, c = (verts[t] for t in tri)
                if _dot(_cross(_sub(b, a), _sub(c, a)), a) < 0:
                    tri = [i, k, j]
                faces.append(tuple(tri))
    faces.sort()
    assert len(faces) == 20
    return tuple(faces)


VERTICES = _build_vertices()
FACES = _build_faces(VERTICES)

FACE_CENTERS = tuple(
    _norm3(
        (
            VERTICES[a][0] + VERTICES[b][0] + VERTICES[c][0],
            VERTICES[a][1] + VERTICES[b][1] + VERTICES[c][1],
            VERTICES[a][2] + VERTICES[b][2] + VERTICES[c][2],
        )
    )
    for a, b, c in FACES
)


class _FaceFrame:
    """Planar coordinate frame of one (flat) icosahedron face.

    Corner 0 anchors the lattice origin; corner 1 sits at lattice coordinate
    w_r and corner 2 at w_r * u for every resolution.
    """

    __slots__ = (
        "index", "corners", "origin", "ex", "ey", "normal", "plane_d",
        "scale", "inv_scale", "corner2d",
    )

    def __init__(self, index, vert_ids):
        self.index = index
        self.corners = tuple(VERTICES[v] for v in vert_ids)
        a, b, c = self.corners
        self.origin = a
        ab = _sub(b, a)
        nrm = _cross(ab, _sub(c, a))
        self.normal = _norm3(nrm)
        self.plane_d = _dot(self.normal, a)
        self.ex = _norm3(ab)
        self.ey = _cross(self.normal, self.ex)
        self.corner2d = tuple(self.to2d(p) for p in self.corners)
        # Complex scale per resolution: lattice coordinate w_r maps to corner 1.
        bx, by = self.corner2d[1]
        self.scale = []
        self.inv_scale = []
        for w in RES_W:
            wx, wy = eis_to_xy(w)
            wn = wx * wx + wy * wy
            # s = B / w in complex arithmetic.
            sx = (bx * wx + by * wy) / wn
            sy = (by * wx - bx * wy) / wn
            self.scale.append((sx, sy))
            sn = sx * sx + sy * sy
            self.inv_scale.append((sx / sn, -sy / sn))

    def to2d(self, p):
        px = p[0] - self.origin[0]
        py = p[1] - self.origin[1]
        pz = p[2] - self.origin[2]
        ex, ey = self.ex, self.ey
        return (
            px * ex[0] + py * ex[1] + pz * ex[2],
            px * ey[0] + py * ey[1] + pz * ey[2],
        )

    def lattice_to_plane(self, z, res: int):
        zx, zy = eis_to_xy(z)
        sx, sy = self.scale[res]
        return (zx * sx - zy * sy, zx * sy + zy * sx)

    def plane_to_lattice_frac(self, xy, res: int):
        ix, iy = self.inv_scale[res]
        x, y = xy
        return xy_to_eis_frac(x * ix - y * iy, x * iy + y * ix)

    def lattice_to_sphere(self, z, res: int):
        x, y = self.lattice_to_plane(z, res)
        o, ex, ey = self.origin, self.ex, self.ey
        p = (
            o[0] + x * ex[0] + y * ey[0],
            o[1] + x * ex[1] + y * ey[1],
            o[2] + x * ex[2] + y * ey[2],
        )
        return _norm3(p)

    def project_unit(self, v):
        """Intersect the ray through unit vector v with the face plane."""
        t = self.plane_d / _dot(self.normal, v)
        return self.to2d((v[0] * t, v[1] * t, v[2] * t))


FRAMES = tuple(_FaceFrame(i, f) for i, f in enumerate(FACES))


def _build_edge_neighbors():
    """For each face edge, the adjacent face sharing it.

    Edge e of face (v0, v1, v2) is (v_e, v_{e+1 mod 3}): e0 is the lattice
    segment origin->w, e1 is w->w*u, e2 is w*u->origin.
    """
    owners: dict[tuple[int, int], list[int]] = {}
    for fi, (a, b, c) in enumerate(FACES):
        for pair in ((a, b), (b, c), (c, a)):
            owners.setdefault(tuple(sorted(pair)), []).append(fi)
    nbrs = []
    for fi, (a, b, c) in enumerate(FACES):
        row = []
        for pair in ((a, b), (b, c), (c, a)):
            pa, pb = owners[tuple(sorted(pair))]
            row.append(pb if pa == fi else pa)
        nbrs.append(tuple(row))
    return tuple(nbrs)


EDGE_NEIGHBOR = _build_edge_neighbors()


def _unfold_point(frame: _FaceFrame, edge: int, other: _FaceFrame, p3d):
    """Unfold a point of `other`'s plane across `frame`'s edge into `frame`'s plane."""
    e1 = frame.corners[edge]
    e2 = frame.corners[(edge + 1) % 3]
    ax = _norm3(_sub(e2, e1))
    rel = _sub(p3d, e1)
    x = _dot(rel, ax)
    # Perpendicular offset of p from the edge line, inside other's plane.
    perp = _sub(rel, (ax[0] * x, ax[1] * x, ax[2] * x))
    y = math.sqrt(max(0.0, _dot(perp, perp)))
    # Direction in frame's plane, perpendicular to the edge, away from frame's interior.
    far = frame.corners[(edge + 2) % 3]
    inward = _sub(far, e1)
    ix = _dot(inward, ax)
    inperp = _sub(inward, (ax[0] * ix, ax[1] * ix, ax[2] * ix))
    out = _norm3((-inperp[0], -inperp[1], -inperp[2]))
    return (
        e1[0] + x * ax[0] + y * out[0],
        e1[1] + x * ax[1] + y * out[1],
        e1[2] + x * ax[2] + y * out[2],
    )


def _round_int_pair(fa: float, fb: float, tol: float = 1e-6):
    ia = round(fa)
    ib = round(fb)
    if abs(fa - ia) > tol or abs(fb - ib) > tol:
        raise AssertionError(f"expected integer lattice coords, got ({fa}, {fb})")
    return (int(ia), int(ib))


def _build_fold_maps():
    """Exact affine maps (t, zeta): coords beyond edge e of face f, expressed in
    f's lattice, map to coords t + zeta*z in the adjacent face's lattice."""
    corner_coords = []
    for r in range(MAX_RESOLUTION + 1):
        w = RES_W[r]
        corner_coords.append(((0, 0), w, emul(w, (0, 1))))
    maps = {}
    for fi, frame in enumerate(FRAMES):
        for edge in range(3):
            gi = EDGE_NEIGHBOR[fi][edge]
            other = FRAMES[gi]
            for r in range(MAX_RESOLUTION + 1):
                src = []
                dst = []
                for ci in range(3):
                    p3d = other.corners[ci]
                    unfolded = _unfold_point(frame, edge, other, p3d)
                    fa, fb = frame.plane_to_lattice_frac(frame.to2d(unfolded), r)
                    src.append(_round_int_pair(fa, fb))
                    dst.append(corner_coords[r][ci])
                zeta = ediv_exact(esub(dst[1], dst[0]), esub(src[1], src[0]))
                if enorm(zeta) != 1:
                    raise AssertionError("fold rotation is not a unit")
                t = esub(dst[0], emul(zeta, src[0]))
                if eadd(t, emul(zeta, src[2])) != dst[2]:
                    raise AssertionError("fold map fails on third corner")
                maps[(fi, edge, r)] = (gi, t, zeta)
    return maps


FOLD_MAPS = _build_fold_maps()


# ---------------------------------------------------------------------------
# Canonical cell keys. A key is (face, i, j); resolution travels alongside.
# ---------------------------------------------------------------------------


def bary_num(z, res: int):
    """Numerators (p, q) of the barycentric coords alpha=p/T, beta=q/T of z
    with respect to the face triangle (0, w, w*u)."""
    w = RES_W[res]
    p, q = emul(z, econj(w))
    return p, q, enorm(w)


def resolve(face: int, z, res: int):
    """Fold (face, z) until the coordinates lie inside a face (closed)."""
    for _ in range(16):
        p, q, t = bary_num(z, res)
        if q < 0:
            edge = 0
        elif p + q > t:
            edge = 1
        elif p < 0:
            edge = 2
        else:
            return face, z
        gi, tvec, zeta = FOLD_MAPS[(face, edge, res)]
        face, z = gi, eadd(tvec, emul(zeta, z))
    raise AssertionError(f"fold iteration did not converge for face={face} z={z} r={res}")


def canonical(face: int, z, res: int):
    """Canonical (face, i, j) for a lattice vertex: fold inside a face, then
    pick the lowest-id representation among faces sharing a boundary vertex."""
    face, z = resolve(face, z, res)
    p, q, t = bary_num(z, res)
    on0 = q == 0
    on1 = p + q == t
    on2 = p == 0
    if not (on0 or on1 or on2):
        return face, z
    seen = {(face, z)}
    stack = [(face, z, p, q, t)]
    while stack:
        f, zz, pp, qq, tt = stack.pop()
        edges = []
        if qq == 0:
            edges.append(0)
        if pp + qq == tt:
            edges.append(1)
        if pp == 0:
            edges.append(2)
        for e in edges:
            gi, tvec, zeta = FOLD_MAPS[(f, e, res)]
            nz = eadd(tvec, emul(zeta, zz))
            if (gi, nz) not in seen:
                seen.add((gi, nz))
                np_, nq, nt = bary_num(nz, res)
                stack.append((gi, nz, np_, nq, nt))
    return min(seen)


def is_corner(face: int, z, res: int) -> bool:
    w = RES_W[res]
    return z == (0, 0) or z == w or z == emul(w, (0, 1))


def vertex_unit(face: int, z, res: int):
    """Unit vector of the cell center (vertex position projected to the sphere)."""
    return FRAMES[face].lattice_to_sphere(z, res)


def locate_unit(v, res: int):
    """Canonical cell key of the cell containing unit vector v at `res`.

    Face selection is the spherical Voronoi of face centers (which equals face
    containment for a regular icosahedron); the cell decomposition inside the
    face is planar nearest-lattice-vertex, which meets the adjacent face's
    decomposition exactly on the shared edge.
    """
    best = -1
    best_dot = -2.0
    for fi in range(20):
        c = FACE_CENTERS[fi]
        d = v[0] * c[0] + v[1] * c[1] + v[2] * c[2]
        if d > best_dot:
            best_dot = d
            best = fi
    frame = FRAMES[best]
    fa, fb = frame.plane_to_lattice_frac(frame.project_unit(v), res)
    z = hexround(fa, fb)
    return canonical(best, z, res)


def neighbors_of(face: int, z, res: int):
    """Canonical keys of the adjacent cells (6, or 5 for pentagons)."""
    out = set()
    for d in UNITS:
        out.add(canonical(face, eadd(z, d), res))
    out.discard((face, z))
    return out


def parent_of(face: int, z, res: int):
    """Canonical key of the containing cell one resolution coarser."""
    q = RES_Q[res - 1]
    na, nb = emul(z, econj(q))  # z / q, times 7
    return canonical(face, hexround_frac7(na, nb), res - 1)


def children_of(face: int, z, res: int):
    """Sorted canonical keys of the aperture-7 children at res + 1."""
    q = RES_Q[res]
    base = emul(z, q)
    kids = {canonical(face, base, res + 1)}
    for d in UNITS:
        kids.add(canonical(face, eadd(base, d), res + 1))
    return sorted(kids)


def base_cells():
    """All canonical keys at resolution 0, sorted."""
    w = RES_W[0]
    bound = abs(w[0]) + abs(w[1]) + 1
    found = set()
    for face in range(20):
        for a in range(-bound, bound + 1):
            for b in range(-bound, bound + 1):
                p, q, t = bary_num((a, b), 0)
                if p >= 0 and q >= 0 and p + q <= t:
                    found.add(canonical(face, (a, b), 0))
    return sorted(found)

"""Apollonian packings as a conformal graph directed system.

Three mutually tangent circles bound the curvilinear triangle T.  From them we
build the two Descartes circles C0 (enclosing) and C4 (inscribed), the dual
circles K0..K3, the horocircles H1..H3 and the parabolic generators
f_j = R_{H_j} o R_{K_j}.  Packing circles inside T are images of C4 under
alternating words in the generators; ``descartes_bfs`` grows the same set by
the quadruple recursion and serves as the independent oracle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, DegenerateTriple, IncompleteEnumeration
from .moebius import (
    INF,
    Circle,
    MobiusMap,
    anti_compose,
    apply,
    circle_through,
    compose,
    derivative_magnitude,
    image_circle,
    mats_image_disks,
    parabolic_data,
    reflection_matrix,
    tangency_point,
)
from .words import Word

DEFAULT_CAP = 5_000_000
PAIRS = {1: (2, 3), 2: (1, 3), 3: (1, 2)}


@dataclass(frozen=True)
class TangentTriple:
    C1: Circle
    C2: Circle
    C3: Circle
    tol: float = 1e-9

    def __post_init__(self):
        cs = [self.C1, self.C2, self.C3]
        # lines get their normal pointing away from the other two circles
        for i, C in enumerate(cs):
            if C.is_line:
                other = [cs[j] for j in range(3) if j != i and not cs[j].is_line]
                if other and C.power(other[0].center) < 0:
                    cs[i] = C.flipped()
        if sum(C.is_line for C in cs) > 1:
            raise DegenerateTriple("at most one line is supported")
        for C in cs:
            if C.curvature < 0:
                raise DegenerateTriple("triple circles must have nonnegative curvature")
        object.__setattr__(self, "C1", cs[0])
        object.__setattr__(self, "C2", cs[1])
        object.__setattr__(self, "C3", cs[2])
        for i in range(3):
            for j in range(i + 1, 3):
                r = tangency_residual(cs[i], cs[j])
                if r > 1e-7:
                    raise DegenerateTriple(f"circles {i + 1},{j + 1} not tangent (residual {r:.2e})")

    @property
    def circles(self):
        return (self.C1, self.C2, self.C3)

    def circle(self, j):
        return self.circles[j - 1]

    @property
    def tangency_points(self):
        """Contact points (C2 C3, C1 C3, C1 C2), i.e. the corner opposite C_j."""
        return tuple(tangency_point(self.circle(a), self.circle(b)) for a, b in (PAIRS[1], PAIRS[2], PAIRS[3]))


def tangency_residual(A: Circle, B: Circle) -> float:
    return abs(A.inversive(B) + 1.0)


# presets ----------------------------------------------------------------

def symmetric_unit() -> TangentTriple:
    """Corners at 1 and exp(+-2 pi i/3); the dual circle K0 is the unit circle."""
    r = math.sqrt(3.0)
    w = np.exp(1j * np.pi / 3)
    return TangentTriple(
        Circle.from_center(2 * w.conjugate(), r),
        Circle.from_center(2 * w, r),
        Circle.from_center(-2.0, r),
    )


def ford() -> TangentTriple:
    return TangentTriple(
        Circle.from_center(1.0, 1.0),
        Circle.from_center(-1.0, 1.0),
        Circle.line(-1j, 1.0),  # Im z = -1
    )


def fig1() -> TangentTriple:
    """Three radius-2 circles at 0 and 2*sqrt3 +- 2i."""
    s = 2 * math.sqrt(3.0)
    return TangentTriple(
        Circle.from_center(0.0, 2.0),
        Circle.from_center(complex(s, 2.0), 2.0),
        Circle.from_center(complex(s, -2.0), 2.0),
    )


def triple_from_curvatures(k1, k2, k3) -> TangentTriple:
    """Place three tangent circles of given positive curvatures."""
    r1, r2, r3 = 1.0 / k1, 1.0 / k2, 1.0 / k3
    c1 = 0.0
    c2 = r1 + r2
    # third center from the two distances r1+r3 and r2+r3
    a, b = r1 + r3, r2 + r3
    x = (a * a - b * b + c2 * c2) / (2 * c2)
    y = math.sqrt(max(a * a - x * x, 0.0))
    return TangentTriple(Circle.from_center(c1, r1), Circle.from_center(c2, r2), Circle.from_center(complex(x, y), r3))


def triple_from_list(vals) -> TangentTriple:
    vals = [float(v) for v in vals]
    if len(vals) == 3:
        return triple_from_curvatures(*vals)
    if len(vals) == 9:
        ks, cs = vals[:3], vals[3:]
        return TangentTriple(*(Circle.from_center(complex(cs[2 * i], cs[2 * i + 1]), 1.0 / ks[i]) for i in range(3)))
    raise DegenerateTriple("triple needs 3 curvatures or 3 curvatures followed by 3 centers")


PRESETS = {"symmetric-unit": symmetric_unit, "ford": ford, "fig1": fig1}


# construction -----------------------------------------------------------

def tangent_circles(triple: TangentTriple):
    """(C0, C4): the enclosing and the inscribed Descartes circles."""
    C1, C2, C3 = triple.circles
    ks = [C.curvature for C in triple.circles]
    zs = [C.curvature_center for C in triple.circles]
    e2 = ks[0] * ks[1] + ks[1] * ks[2] + ks[2] * ks[0]
    k4 = sum(ks) + 2 * math.sqrt(max(e2, 0.0))
    # given k4, tangency <C4, C_i> = -1 is linear in (Re kc4, Im kc4, kbar4)
    rows, rhs = [], []
    for C in triple.circles:
        k, kc, kb = C.augmented
        rows.append([kc.real, kc.imag, -0.5 * k])
        rhs.append(-1.0 + 0.5 * k4 * kb)
    x = np.linalg.solve(np.array(rows), np.array(rhs))
    C4 = Circle.from_augmented(k4, complex(x[0], x[1]), x[2])
    res = max(tangency_residual(C4, C) for C in triple.circles)
    if res > 1e-6:
        raise DegenerateTriple(f"inscribed circle residual {res:.2e}")
    k0 = 2 * sum(ks) - C4.curvature
    kc0 = 2 * sum(zs) - C4.curvature_center
    kb0 = 2 * sum(C.cobar for C in triple.circles) - C4.cobar
    C0 = Circle.from_augmented(k0, kc0, kb0)
    res0 = max(tangency_residual(C0, C) for C in triple.circles)
    if res0 > 1e-6:
        raise DegenerateTriple(f"enclosing circle residual {res0:.2e}")
    return C0, C4


def _oriented_through(pts, inside):
    K = circle_through(*pts)
    if K.power(inside) > 0:
        K = K.flipped()
    return K


def dual_and_horocircles(triple: TangentTriple, C0: Circle, C4: Circle):
    """Dual circles (K0, K1, K2, K3) and horocircles (H1, H2, H3)."""
    quad = {0: C0, 1: triple.C1, 2: triple.C2, 3: triple.C3}
    tp = {}
    for i in range(4):
        for j in range(i + 1, 4):
            tp[(i, j)] = tp[(j, i)] = tangency_point(quad[i], quad[j])
    K = [_oriented_through([tp[(1, 2)], tp[(1, 3)], tp[(2, 3)]], C4.center)]
    for j in (1, 2, 3):
        rest = [i for i in range(4) if i != j]
        pts = [tp[(rest[0], rest[1])], tp[(rest[0], rest[2])], tp[(rest[1], rest[2])]]
        K.append(circle_through(*pts))
    H = []
    for j in (1, 2, 3):
        i1, i2 = PAIRS[j]
        q = tp[(i1, i2)]
        Hp, Hj = C0.hermitian, quad[j].hermitian
        if q is INF:
            alpha, beta = quad[j].curvature, -C0.curvature
        else:
            alpha, beta = float(quad[j].power(q)), float(-C0.power(q))
        H.append(Circle.from_hermitian(alpha * Hp + beta * Hj))
    # residual checks
    for j in (1, 2, 3):
        i1, i2 = PAIRS[j]
        for C in (C0, quad[j]):
            if abs(H[j - 1].inversive(C)) < 1 - 1e-6 or abs(abs(H[j - 1].inversive(C)) - 1) > 1e-6:
                raise DegenerateTriple("horocircle not tangent")
        q = tp[(i1, i2)]
        if q is not INF and abs(H[j - 1].power(q)) > 1e-7 * max(1.0, abs(q) ** 2):
            raise DegenerateTriple("horocircle misses the corner")
    for j in range(4):
        for i in range(4):
            if i != j and abs(K[j].inversive(quad[i])) > 1e-7:
                raise DegenerateTriple("dual circle not orthogonal")
    return tuple(K), tuple(H)


def explicit_generator(H: Circle, K: Circle) -> MobiusMap:
    """f = R_H o R_K written out in centers m, n and radii r, s."""
    m, r = H.center, H.radius
    n, s = K.center, K.radius
    w = np.conj(n - m)
    return MobiusMap(r * r + m * w, -n * r * r + m * s * s - m * n * w, w, s * s - n * w)


@dataclass(frozen=True)
class ApollonianSystem:
    triple: TangentTriple
    C0: Circle
    C4: Circle
    K: tuple
    H: tuple
    f: tuple
    X: tuple
    corners: tuple
    tau: tuple
    name: str = "custom"

    def gen(self, j) -> MobiusMap:
        return self.f[j - 1]

    def domain(self, v) -> Circle:
        return self.X[v - 1]

    def corner(self, j):
        return self.corners[j - 1]

    def in_triangle(self, z):
        z = np.asarray(z, dtype=complex)
        ok = self.K[0].power(z) < 0
        for C in self.triple.circles:
            ok &= C.power(z) > 0
        return ok

    def power_coeffs(self, j, kappa):
        """Coefficient arrays of f_j^kappa (kappa real, array allowed)."""
        p, tau = self.corners[j - 1], self.tau[j - 1]
        t = np.asarray(kappa, dtype=float) * tau
        if p is INF:
            one = np.ones_like(t)
            return one, t, 0 * t, one
        return 1 + t * p, -t * p * p, t, 1 - t * p

    def power_map(self, j, k) -> MobiusMap:
        A, B, C, D = self.power_coeffs(j, k)
        return MobiusMap(complex(A), complex(B), complex(C), complex(D))

    def word_map(self, letters) -> MobiusMap:
        out = MobiusMap.identity()
        for v, k in letters:
            out = compose(out, self.power_map(v, k))
        return out

    def bounding_box(self):
        """Box of the K0 disk clipped to the triangle's corners."""
        pts = [p for p in self.corners]
        c, r = self.K[0].center, self.K[0].radius
        xs = [p.real for p in pts] + [c.real - r, c.real + r]
        ys = [p.imag for p in pts] + [c.imag - r, c.imag + r]
        lo = complex(max(min(xs), c.real - r), max(min(ys), c.imag - r))
        hi = complex(min(max(xs), c.real + r), min(max(ys), c.imag + r))
        return lo, hi

    def scaled(self, lam, shift=0.0):
        """System of the triple under z -> lam z + shift."""
        g = MobiusMap(lam, shift, 0, 1)
        return build_system(TangentTriple(*(image_circle(g, C) for C in self.triple.circles)), self.name + "-scaled")


def generator_maps(triple, C0, C4, K, H):
    """Generators twice: composed reflections and the explicit coefficient formula."""
    out = []
    for j in (1, 2, 3):
        fr = anti_compose(reflection_matrix(H[j - 1]), reflection_matrix(K[j]))
        if not (H[j - 1].is_line or K[j].is_line):
            fe = explicit_generator(H[j - 1], K[j])
            if not fr.almost_equal(fe, 1e-8):
                raise DegenerateTriple("explicit generator disagrees with reflections")
        out.append(fr)
    return tuple(out)


def build_system(triple: TangentTriple, name="custom") -> ApollonianSystem:
    C0, C4 = tangent_circles(triple)
    K, H = dual_and_horocircles(triple, C0, C4)
    f = generator_maps(triple, C0, C4, K, H)
    X = []
    corners, taus = [], []
    for j in (1, 2, 3):
        Xj = image_circle(f[j - 1], K[0])
        if Xj.curvature <= 0:
            raise DegenerateTriple("image of the dual disk is not a disk")
        X.append(Xj)
        p, tau = parabolic_data(f[j - 1])
        q = triple.tangency_points[j - 1]
        if (p is INF) != (q is INF) or (p is not INF and abs(p - q) > 1e-7 * max(1, abs(q))):
            raise DegenerateTriple("generator does not fix the opposite corner")
        corners.append(q if q is not INF else INF)
        taus.append(tau)
    return ApollonianSystem(triple, C0, C4, K, H, f, tuple(X), tuple(corners), tuple(taus), name)


def preset_system(name) -> ApollonianSystem:
    return build_system(PRESETS[name](), name)


# packing generation ----------------------------------------------------

@dataclass
class PackingCircle:
    circle: Circle
    word: Word
    generation: int


@dataclass
class Packing:
    """Circles as arrays; ``min_radius`` is the enumeration cutoff (radius > cutoff)."""

    center: np.ndarray
    radius: np.ndarray
    words: list | None
    generation: np.ndarray
    min_radius: float = 0.0
    max_depth: tuple | None = None

    def __len__(self):
        return len(self.radius)

    @property
    def curvature(self):
        return 1.0 / self.radius

    def circles(self):
        for i in range(len(self)):
            C = Circle.from_center(self.center[i], self.radius[i])
            w = Word(self.words[i], None) if self.words is not None else None
            yield PackingCircle(C, w, int(self.generation[i]))

    def to_json(self):
        out = []
        for i in range(len(self)):
            out.append({
                "curvature": float(1.0 / self.radius[i]),
                "center_re": float(self.center[i].real),
                "center_im": float(self.center[i].imag),
                "word": [list(x) for x in self.words[i]] if self.words is not None else [],
                "generation": int(self.generation[i]),
            })
        return out


def generate_packing(system: ApollonianSystem, min_radius=None, max_depth=None, cap=DEFAULT_CAP, keep_words=True):
    """Circles psi(C4) over alternating words psi = f_{w1}^{k1} o ... o f_{wn}^{kn}.

    ``min_radius``: keep circles of radius > min_radius (children of a circle are
    smaller than it, so the expansion is pruned there).  ``max_depth=(m, K)``:
    words of length <= m with powers <= K.  Output sorted lexicographically by
    address.
    """
    if min_radius is None and max_depth is None:
        raise ValueError("need min_radius or max_depth")
    eps = 0.0 if min_radius is None else float(min_radius)
    mmax, kmax = (10 ** 9, 10 ** 12) if max_depth is None else max_depth
    c4, r4 = system.C4.center, system.C4.radius
    centers, radii, gens, words = [], [], [], []
    if r4 > eps:
        centers.append(np.array([c4]))
        radii.append(np.array([r4]))
        gens.append(np.array([0]))
        words.append([()])
    # frontier: matrices, last vertex, word tuples
    fA = np.array([1 + 0j]); fB = np.array([0j]); fC = np.array([0j]); fD = np.array([1 + 0j])
    flast = np.array([0])
    fwords = [()]
    total = 1
    gen = 0
    while len(fA) and gen < mmax and r4 > eps:
        gen += 1
        nA, nB, nC, nD, nlast, nwords = [], [], [], [], [], []
        for j in (1, 2, 3):
            idx = np.nonzero(flast != j)[0]
            k = 1
            while len(idx) and k <= kmax:
                A, B, C, D = system.power_coeffs(j, k)
                a = fA[idx] * A + fB[idx] * C
                b = fA[idx] * B + fB[idx] * D
                c = fC[idx] * A + fD[idx] * C
                d = fC[idx] * B + fD[idx] * D
                cen, rad = mats_image_disks(a, b, c, d, c4, r4)
                keep = rad > eps
                idx, a, b, c, d, cen, rad = idx[keep], a[keep], b[keep], c[keep], d[keep], cen[keep], rad[keep]
                if len(idx):
                    nA.append(a); nB.append(b); nC.append(c); nD.append(d)
                    nlast.append(np.full(len(idx), j))
                    if keep_words:
                        nwords.extend(fwords[i] + ((j, k),) for i in idx)
                    centers.append(cen)
                    radii.append(rad)
                    gens.append(np.full(len(idx), gen))
                    total += len(idx)
                    if total > cap:
                        raise BudgetExceeded(f"more than {cap} circles")
                k += 1
        if not nA:
            break
        fA, fB, fC, fD = (np.concatenate(x) for x in (nA, nB, nC, nD))
        flast = np.concatenate(nlast)
        if keep_words:
            words.append(nwords)
            fwords = nwords
        else:
            fwords = [()] * len(fA)
    if not radii:
        return Packing(np.zeros(0, complex), np.zeros(0), [] if keep_words else None, np.zeros(0, int), eps, max_depth)
    center = np.concatenate(centers)
    radius = np.concatenate(radii)
    generation = np.concatenate(gens)
    if keep_words:
        allw = [w for block in words for w in block]
        order = sorted(range(len(allw)), key=lambda i: allw[i])
        order = np.array(order, dtype=int)
        return Packing(center[order], radius[order], [allw[i] for i in order], generation[order], eps, max_depth)
    return Packing(center, radius, None, generation, eps, max_depth)


def descartes_bfs(triple: TangentTriple, eps, cap=DEFAULT_CAP, check_identity=True):
    """Breadth-first Descartes recursion inside the triangle; returns (Packing, max identity residual)."""
    C0, C4 = tangent_circles(triple)
    eps = float(eps)
    # each node: triangle (a, b, c) plus the circle d on the far side
    def arr(Cs):
        return np.array([C.curvature for C in Cs]), np.array([C.curvature_center for C in Cs])

    ka, za = arr([triple.C1]); kb, zb = arr([triple.C2]); kc, zc = arr([triple.C3]); kd, zd = arr([C0])
    centers, radii, gens = [], [], []
    seen = set()
    worst = 0.0
    total = 0
    gen = 0
    while len(ka):
        kn = 2 * (ka + kb + kc) - kd
        zn = 2 * (za + zb + zc) - zd
        keep = 1.0 / kn > eps
        ka, za, kb, zb, kc, zc, kn, zn = (x[keep] for x in (ka, za, kb, zb, kc, zc, kn, zn))
        if not len(kn):
            break
        if check_identity:
            s = ka + kb + kc + kn
            q = 2 * (ka ** 2 + kb ** 2 + kc ** 2 + kn ** 2)
            worst = max(worst, float(np.max(np.abs(s * s - q) / q)))
        cen = zn / kn
        rad = 1.0 / kn
        keys = zip(np.round(cen.real * 1e10).astype(np.int64).tolist(),
                   np.round(cen.imag * 1e10).astype(np.int64).tolist(),
                   np.round(np.log(rad) * 1e10).astype(np.int64).tolist())
        mask = np.ones(len(kn), bool)
        for i, key in enumerate(keys):
            if key in seen:
                mask[i] = False
            else:
                seen.add(key)
        centers.append(cen[mask]); radii.append(rad[mask]); gens.append(np.full(int(mask.sum()), gen))
        total += int(mask.sum())
        if total > cap:
            raise BudgetExceeded(f"more than {cap} circles")
        gen += 1
        # children triangles (n, a, b; c), (n, b, c; a), (n, a, c; b)
        ka, za, kb, zb, kc, zc, kd, zd = (
            np.concatenate([kn, kn, kn]), np.concatenate([zn, zn, zn]),
            np.concatenate([ka, kb, ka]), np.concatenate([za, zb, za]),
            np.concatenate([kb, kc, kc]), np.concatenate([zb, zc, zc]),
            np.concatenate([kc, ka, kb]), np.concatenate([zc, za, zb]),
        )
    if not radii:
        return Packing(np.zeros(0, complex), np.zeros(0), None, np.zeros(0, int), eps), worst
    return Packing(np.concatenate(centers), np.concatenate(radii), None, np.concatenate(gens), eps), worst


def count_circles(packing: Packing, eps) -> int:
    """R(eps) = number of circles of radius > eps."""
    if packing.max_depth is not None and packing.min_radius == 0.0:
        raise IncompleteEnumeration("depth-limited enumeration cannot be counted by radius")
    if eps < packing.min_radius:
        raise IncompleteEnumeration(f"enumeration stops at {packing.min_radius} > {eps}")
    return int(np.count_nonzero(packing.radius > eps))


def match_packings(P: Packing, Q: Packing, rel=1e-9):
    """Compare two circle multisets; returns (matched, n_unmatched_P, n_unmatched_Q, max_rel_err)."""
    from scipy.spatial import cKDTree

    if len(P) != len(Q):
        return False, len(P), len(Q), math.inf
    if len(P) == 0:
        return True, 0, 0, 0.0
    tree = cKDTree(np.c_[Q.center.real, Q.center.imag])
    dist, j = tree.query(np.c_[P.center.real, P.center.imag])
    err_c = dist / P.radius
    err_r = np.abs(P.radius - Q.radius[j]) / P.radius
    worst = float(max(err_c.max(), err_r.max()))
    bad = (err_c > rel) | (err_r > rel)
    unique = len(np.unique(j)) == len(j)
    return bool(unique and not bad.any()), int(bad.sum()), int(len(j) - len(np.unique(j))), worst


def derivative_envelope(system: ApollonianSystem, kmax=200, n_samples=400):
    """Fitted Q with Q^-1 k^-2 <= sup |(f_j^k)'| on T minus X_j <= Q k^-2."""
    ratios = []
    for j in (1, 2, 3):
        z = sample_outside_domain(system, j, n_samples)
        ks = np.arange(1, kmax + 1)
        A, B, C, D = system.power_coeffs(j, ks)
        der = 1.0 / np.abs(C[:, None] * z[None, :] + D[:, None]) ** 2
        sup = der.max(axis=1)
        ratios.append(sup * ks ** 2)
    r = np.concatenate(ratios)
    return float(max(r.max(), 1.0 / r.min())), r


def sample_triangle_boundary(system: ApollonianSystem, n=200):
    """Points on the three boundary arcs of T."""
    pts = []
    tp = system.triple.tangency_points
    for j in (1, 2, 3):
        C = system.triple.circle(j)
        ends = [tp[i - 1] for i in (1, 2, 3) if i != j]
        if C.is_line:
            n_ = C.curvature_center
            s = [((e - C.offset * n_) / (1j * n_)).real for e in ends]
            t = np.linspace(min(s), max(s), n)
            pts.append(C.point_at(t))
        else:
            a = [np.angle(e - C.center) for e in ends]
            a0, a1 = a
            d = (a1 - a0 + np.pi) % (2 * np.pi) - np.pi  # short arc faces T
            t = a0 + d * np.linspace(0, 1, n)
            pts.append(C.point_at(t))
    return np.concatenate(pts)


def sample_outside_domain(system: ApollonianSystem, j, n=400, seed=0):
    """Boundary and interior samples of the closure of T minus X_j."""
    rng = np.random.default_rng(seed)
    bd = sample_triangle_boundary(system, n)
    Xj = system.domain(j)
    ring = Xj.point_at(np.linspace(0, 2 * np.pi, 4 * n, endpoint=False))
    lo, hi = system.bounding_box()
    zz = lo.real + (hi.real - lo.real) * rng.random(20 * n) + 1j * (lo.imag + (hi.imag - lo.imag) * rng.random(20 * n))
    pts = np.concatenate([bd, ring[system.in_triangle(ring)], zz[system.in_triangle(zz)]])
    keep = Xj.power(pts) >= -1e-12
    p = system.corner(j)
    if p is not INF:
        keep &= np.abs(pts - p) > 1e-6
    return pts[keep]


def check_generator_containment(system: ApollonianSystem, n=200, margin=0.0):
    """Largest value of Q_{X_j}(f_j(z)) over samples of T minus X_j (negative means inside)."""
    worst = -math.inf
    for j in (1, 2, 3):
        z = sample_outside_domain(system, j, n)
        w = apply(system.gen(j), z)
        worst = max(worst, float(np.max(system.domain(j).power(w))))
    return worst

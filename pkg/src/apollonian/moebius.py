"""Generalized circles and Moebius maps.

A generalized circle is stored in augmented curvature-center coordinates
``(k, kc, kbar)``.  For a true circle with center ``c`` and radius ``r``
we have ``k = +-1/r``, ``kc = k*c`` and ``kbar = k|c|^2 - 1/k``; for a line
``Re(conj(n) z) = offset`` we have ``k = 0``, ``kc = n`` (unit normal) and
``kbar = 2*offset``.  The quadratic form

    Q(z) = k|z|^2 - 2 Re(conj(kc) z) + kbar

vanishes on the circle and is negative on its "interior" (the bounded disk
for k > 0, the exterior for k < 0, the half plane the normal points into
for a line).  Every circle is normalized so that ``|kc|^2 - k*kbar = 1``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import CenterSingularity, IdentityMap, ParabolicDegenerate, PoleAtInput

TOL = 1e-9


class _Infinity:
    """Tagged point at infinity of the Riemann sphere."""

    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def is_inf(z) -> bool:
    return z is INF


@dataclass(frozen=True)
class Circle:
    curvature: float
    curvature_center: complex
    offset: float = 0.0

    # construction -------------------------------------------------------
    @classmethod
    def from_center(cls, center, radius, enclosing=False) -> "Circle":
        if radius <= 0:
            raise ValueError("radius must be positive")
        k = -1.0 / radius if enclosing else 1.0 / radius
        return cls(float(k), complex(k * center))

    @classmethod
    def line(cls, normal, offset) -> "Circle":
        n = complex(normal)
        a = abs(n)
        return cls(0.0, n / a, float(offset) / a)

    @classmethod
    def from_augmented(cls, k, kc, kbar, normalize=True) -> "Circle":
        k, kc, kbar = float(k), complex(kc), float(kbar)
        if normalize:
            disc = abs(kc) ** 2 - k * kbar
            if disc <= 0:
                raise ValueError("not a real circle")
            s = 1.0 / math.sqrt(disc)
            k, kc, kbar = k * s, kc * s, kbar * s
        if abs(k) < 1e-14 * max(1.0, abs(kc)):
            return cls(0.0, kc, kbar / 2.0)
        return cls(k, kc)

    @classmethod
    def from_hermitian(cls, H) -> "Circle":
        H = np.asarray(H)
        return cls.from_augmented(H[0, 0].real, -H[0, 1], H[1, 1].real)

    # accessors ----------------------------------------------------------
    @property
    def is_line(self) -> bool:
        return self.curvature == 0.0

    @property
    def center(self):
        if self.is_line:
            return INF
        return self.curvature_center / self.curvature

    @property
    def radius(self) -> float:
        if self.is_line:
            return math.inf
        return 1.0 / abs(self.curvature)

    @property
    def cobar(self) -> float:
        """The co-curvature kbar (k|c|^2 - 1/k, or twice the line offset)."""
        if self.is_line:
            return 2.0 * self.offset
        k = self.curvature
        return abs(self.curvature_center) ** 2 / k - 1.0 / k

    @property
    def augmented(self):
        return self.curvature, self.curvature_center, self.cobar

    @property
    def hermitian(self) -> np.ndarray:
        k, kc, kb = self.augmented
        return np.array([[k, -kc], [-kc.conjugate(), kb]], dtype=complex)

    def flipped(self) -> "Circle":
        """Same point set, opposite interior."""
        if self.is_line:
            return Circle(0.0, -self.curvature_center, -self.offset)
        return Circle(-self.curvature, -self.curvature_center)

    def power(self, z):
        """Q(z): negative inside, zero on the circle."""
        if z is INF:
            return self.curvature
        k, kc, kb = self.augmented
        z = np.asarray(z, dtype=complex)
        return k * np.abs(z) ** 2 - 2.0 * (np.conj(kc) * z).real + kb

    def contains(self, z, strict=True):
        q = self.power(z)
        return q < 0 if strict else q <= 0

    def point_at(self, theta):
        """Points on the circle; for lines ``theta`` is the arclength parameter."""
        theta = np.asarray(theta, dtype=float)
        if self.is_line:
            n = self.curvature_center
            return self.offset * n + 1j * n * theta
        return self.center + self.radius * np.exp(1j * theta)

    def inversive(self, other: "Circle") -> float:
        """Lorentz pairing: +1 for equal circles, -1 for tangent with disjoint interiors, 0 orthogonal."""
        k1, c1, b1 = self.augmented
        k2, c2, b2 = other.augmented
        return (c1 * c2.conjugate()).real - 0.5 * (k1 * b2 + b1 * k2)


def tangency_point(C1: Circle, C2: Circle):
    """Contact point of two tangent circles with disjoint interiors."""
    s = C1.curvature + C2.curvature
    kc = C1.curvature_center + C2.curvature_center
    if abs(s) < 1e-14 * max(1.0, abs(kc)):
        return INF
    return kc / s


def circle_through(z1, z2, z3) -> Circle:
    """Generalized circle through three points (one may be INF)."""
    rows = []
    for z in (z1, z2, z3):
        if z is INF:
            rows.append([1.0, 0.0, 0.0, 0.0])
        else:
            z = complex(z)
            rows.append([abs(z) ** 2, -2 * z.real, -2 * z.imag, 1.0])
    _, _, vt = np.linalg.svd(np.array(rows))
    k, x, y, kb = vt[-1]
    return Circle.from_augmented(k, complex(x, y), kb)


def reflect(C: Circle, z):
    """Inversion in a circle, or mirror in a line."""
    if z is INF:
        if C.is_line:
            return INF
        return C.center
    k, kc, kb = C.augmented
    if not C.is_line and abs(z - C.center) < TOL * max(1.0, C.radius):
        raise CenterSingularity(f"{z} is the center of the circle")
    if C.is_line:
        zb = np.conj(z)
        return (kc * zb - kb) / (k * zb - kc.conjugate())
    c = C.center
    return c + C.radius ** 2 / np.conj(z - c)


def reflection_matrix(C: Circle) -> np.ndarray:
    """Matrix N with R_C(z) = N(conj z), determinant -1."""
    k, kc, kb = C.augmented
    return np.array([[kc, -kb], [k, -kc.conjugate()]], dtype=complex)


@dataclass(frozen=True)
class MobiusMap:
    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        a, b, c, d = (complex(t) for t in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        scale = max(abs(a), abs(b), abs(c), abs(d))
        if scale == 0 or abs(det) <= 1e-300 or abs(det) < 1e-14 * scale * scale:
            raise ValueError("degenerate Moebius map (ad - bc = 0)")
        s = cmath.sqrt(det)
        a, b, c, d = a / s, b / s, c / s, d / s
        # canonical sign: first coefficient that is not ~0 has Re >= 0
        for t in (a, b, c, d):
            if abs(t) > 1e-15:
                if t.real < -1e-15 or (abs(t.real) <= 1e-15 and t.imag < 0):
                    a, b, c, d = -a, -b, -c, -d
                break
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    @classmethod
    def from_matrix(cls, M) -> "MobiusMap":
        M = np.asarray(M, dtype=complex)
        return cls(M[0, 0], M[0, 1], M[1, 0], M[1, 1])

    @classmethod
    def identity(cls) -> "MobiusMap":
        return cls(1, 0, 0, 1)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    @property
    def pole(self):
        if abs(self.c) < 1e-15:
            return INF
        return -self.d / self.c

    def __call__(self, z):
        return apply(self, z)

    def __matmul__(self, other: "MobiusMap") -> "MobiusMap":
        return compose(self, other)

    def inverse(self) -> "MobiusMap":
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def trace(self) -> complex:
        return self.a + self.d

    def almost_equal(self, other: "MobiusMap", tol=TOL) -> bool:
        x, y = self.matrix, other.matrix
        return bool(np.max(np.abs(x - y)) < tol or np.max(np.abs(x + y)) < tol)

    def to_json(self) -> dict:
        return {n: [getattr(self, n).real, getattr(self, n).imag] for n in "abcd"}

    @classmethod
    def from_json(cls, obj) -> "MobiusMap":
        return cls(*(complex(*obj[n]) for n in "abcd"))


def apply(M: MobiusMap, z):
    """(az+b)/(cz+d).  Scalars: INF in or out is tagged; arrays: pole raises."""
    if z is INF:
        if abs(M.c) < 1e-15:
            return INF
        return M.a / M.c
    den = M.c * z + M.d
    if np.ndim(z) == 0:
        if abs(den) < 1e-15 * max(1.0, abs(M.c * z)):
            return INF
        return (M.a * z + M.b) / den
    if np.any(np.abs(den) < 1e-15):
        raise PoleAtInput("input contains the pole of the map")
    return (M.a * z + M.b) / den


def derivative_magnitude(M: MobiusMap, z):
    """|M'(z)| = 1/|cz+d|^2 for the determinant-one normalization."""
    if z is INF:
        raise PoleAtInput("derivative at infinity")
    den = np.abs(M.c * np.asarray(z) + M.d) ** 2
    if np.any(den < 1e-300):
        raise PoleAtInput("derivative at the pole")
    return 1.0 / den


def compose(M1: MobiusMap, M2: MobiusMap) -> MobiusMap:
    """M1 o M2."""
    return MobiusMap.from_matrix(M1.matrix @ M2.matrix)


def compose_all(maps) -> MobiusMap:
    out = np.eye(2, dtype=complex)
    for m in maps:
        out = out @ m.matrix
    return MobiusMap.from_matrix(out)


def image_circle(M: MobiusMap, C: Circle) -> Circle:
    """Image of a generalized circle, interior mapped to interior."""
    Minv = M.inverse().matrix
    H = Minv.conj().T @ C.hermitian @ Minv
    return Circle.from_hermitian(H)


def anti_compose(N1, N2) -> MobiusMap:
    """R_1 o R_2 for anti-Moebius maps z -> N_i(conj z)."""
    return MobiusMap.from_matrix(np.asarray(N1) @ np.conj(np.asarray(N2)))


@dataclass(frozen=True)
class FixedPoint:
    z: object
    kind: str  # attracting | repelling | indifferent | parabolic
    multiplier: float


def fixed_points(M: MobiusMap, tol=TOL):
    """Fixed points labelled attracting/repelling/indifferent.

    Coinciding roots (parabolic maps) come back once, labelled ``parabolic``.
    """
    a, b, c, d = M.a, M.b, M.c, M.d
    if abs(b) < tol and abs(c) < tol and abs(a - d) < tol:
        raise IdentityMap("identity has every point fixed")
    pts = []
    if abs(c) < 1e-14:
        # affine: z -> (a z + b)/d, fixed point at infinity plus maybe one finite
        pts.append(INF)
        if abs(a - d) > 1e-14:
            pts.append(b / (d - a))
    else:
        disc = cmath.sqrt((d - a) ** 2 + 4 * b * c)
        r1 = (a - d + disc) / (2 * c)
        r2 = (a - d - disc) / (2 * c)
        pts.append(r1)
        if abs(disc) > 1e-12 * max(1.0, abs(a - d)):
            pts.append(r2)
    out = []
    for z in pts:
        if z is INF:
            mult = abs(d / a) ** 2 if abs(a) > 0 else math.inf
        else:
            mult = 1.0 / abs(c * z + d) ** 2
        if len(pts) == 1:
            kind = "parabolic"
        elif abs(mult - 1.0) < 1e-12:
            kind = "indifferent"
        else:
            kind = "attracting" if mult < 1 else "repelling"
        out.append(FixedPoint(z, kind, mult))
    return out


def is_parabolic(M: MobiusMap, tol=1e-7) -> bool:
    return abs(abs(M.trace()) - 2.0) < tol and abs(M.trace().imag) < tol


def attracting_fixed_point(M: MobiusMap):
    for fp in fixed_points(M):
        if fp.kind == "attracting":
            return fp.z
    raise ParabolicDegenerate("no attracting fixed point")


def parabolic_data(M: MobiusMap, tol=1e-7):
    """(p, tau) with M = [[1+tau p, -tau p^2],[tau, 1-tau p]] (or translation by tau at p=INF)."""
    t = M.trace()
    if abs(abs(t) - 2.0) > tol or abs(t.imag) > tol:
        raise ParabolicDegenerate(f"trace {t} is not +-2")
    sgn = 1.0 if t.real > 0 else -1.0
    a, b, c, d = (sgn * M.a, sgn * M.b, sgn * M.c, sgn * M.d)
    if abs(c) < 1e-14:
        return INF, b / d
    p = (a - d) / (2 * c)
    return p, c


def mobius_power(M: MobiusMap, kappa: float) -> MobiusMap:
    """Real power of a parabolic map along its one-parameter subgroup."""
    p, tau = parabolic_data(M)
    return parabolic_power_from(p, tau, kappa)


def parabolic_power_from(p, tau, kappa) -> MobiusMap:
    if p is INF:
        return MobiusMap(1, kappa * tau, 0, 1)
    t = kappa * tau
    return MobiusMap(1 + t * p, -t * p * p, t, 1 - t * p)


# vectorized helpers ------------------------------------------------------

def mats_apply(A, B, C, D, z):
    return (A * z + B) / (C * z + D)


def mats_image_disks(A, B, C, D, center, radius):
    """Images of disks (center, radius) under arrays of det-1 matrices.

    The disks must not contain the pole; returns (center, radius) arrays.
    """
    w = C * center + D
    delta = np.abs(w) ** 2 - np.abs(C) ** 2 * radius ** 2
    cen = ((A * center + B) * np.conj(w) - A * np.conj(C) * radius ** 2) / delta
    rad = radius / np.abs(delta)
    return cen, rad


def circle_to_json(C: Circle) -> dict:
    return {
        "curvature": C.curvature,
        "cc_re": C.curvature_center.real,
        "cc_im": C.curvature_center.imag,
        "offset": C.offset,
    }


def circle_from_json(obj) -> Circle:
    return Circle(float(obj["curvature"]), complex(obj["cc_re"], obj["cc_im"]), float(obj.get("offset", 0.0)))

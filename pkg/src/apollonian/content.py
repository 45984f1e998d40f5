"""Minkowski content, fractal curvatures and their oracles for Apollonian gaskets.

Everything rests on the gasket sum

    S = lim_m sum over words w of length m, sum over k >= 1 of diam(phi_w f_{t(w)}^k C4)^D,

evaluated by pushing the circles f_t^k C4 a fixed number of levels into the
system and replacing each resulting small disk J in X_v by diam(J)^D h_v(centre J),
with h the eigenfunction of the transfer operator (the limit of L^m 1).  Power
sums beyond the head K are integrated over a continuous power, as in thermo.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.spatial import cKDTree

from .errors import BudgetExceeded, IncompleteEnumeration, OutOfRange, PoleInDenominator
from .moebius import Circle, MobiusMap, derivative_magnitude, image_circle, mats_image_disks
from .packing import ApollonianSystem, TangentTriple, build_system, generate_packing
from . import thermo

PRINTED_LYAPUNOV = 0.915  # rounded-up value used in the printed lower bound for c_A


# ---------------------------------------------------------------------------
# geometry of the curvilinear triangle


def triangle_boundary(system: ApollonianSystem, n=20000):
    """Closed loop along the three boundary arcs of T."""
    tp = system.triple.tangency_points  # tp[j-1] is the corner opposite C_j
    C1, C2, C3 = system.triple.circles
    # C1 from (C1 n C3) to (C1 n C2), C2 from (C1 n C2) to (C2 n C3), C3 back to (C1 n C3)
    legs = [(C1, tp[1], tp[2]), (C2, tp[2], tp[0]), (C3, tp[0], tp[1])]
    pts = []
    for C, a, b in legs:
        t = np.linspace(0, 1, n, endpoint=False)
        if C.is_line:
            pts.append(a + (b - a) * t)
        else:
            c = C.center
            a0 = np.angle(a - c)
            d = (np.angle(b - c) - a0 + np.pi) % (2 * np.pi) - np.pi
            pts.append(c + C.radius * np.exp(1j * (a0 + d * t)))
    return np.concatenate(pts)


def triangle_area(system: ApollonianSystem, n=200000):
    z = triangle_boundary(system, n)
    x, y = z.real, z.imag
    return 0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


# ---------------------------------------------------------------------------
# gasket sums


@dataclass
class GasketSum:
    m: int
    K: int
    value: float
    tail_bound: float
    limit: float = float("nan")
    limit_error: float = float("nan")
    levels: list = field(default_factory=list)

    def to_json(self):
        return {"m": self.m, "K": self.K, "value": self.value, "tail_bound": self.tail_bound,
                "limit": self.limit, "limit_error": self.limit_error, "levels": self.levels}


def _words_matrices(system, m, K, last=None):
    """Coefficient arrays and first/last vertex for all alternating letter words of length m, powers <= K."""
    ks = np.arange(1, K + 1, dtype=float)
    A = np.array([1 + 0j]); B = np.array([0j]); C = np.array([0j]); Dd = np.array([1 + 0j])
    lastv = np.array([0])
    for _ in range(m):
        nA, nB, nC, nD, nl = [], [], [], [], []
        for j in (1, 2, 3):
            idx = np.nonzero(lastv != j)[0]
            if not len(idx):
                continue
            a, b, c, d = system.power_coeffs(j, ks)
            nA.append((A[idx, None] * a[None, :] + B[idx, None] * c[None, :]).ravel())
            nB.append((A[idx, None] * b[None, :] + B[idx, None] * d[None, :]).ravel())
            nC.append((C[idx, None] * a[None, :] + Dd[idx, None] * c[None, :]).ravel())
            nD.append((C[idx, None] * b[None, :] + Dd[idx, None] * d[None, :]).ravel())
            nl.append(np.full(len(idx) * K, j))
        A, B, C, Dd, lastv = (np.concatenate(x) for x in (nA, nB, nC, nD, nl))
    return A, B, C, Dd, lastv


def gasket_D_sum(system: ApollonianSystem, D, m, K, Q=None, base: Circle = None, terminal=None):
    """Literal S(m, K): alternating words of m letters followed by a power of the terminal vertex.

    In letter form these are all alternating words of m+1 letters applied to C4.  The
    tail bound covers powers above K at any of the m+1 positions through the k^-2
    envelope with constant Q.
    """
    base = base or system.C4
    if m < 0:
        raise ValueError("m >= 0")
    if (m + 1) * math.log(3 * K) > math.log(5e7):
        raise BudgetExceeded("literal sum too large; lower m or K")
    A, B, C, Dd, lastv = _words_matrices(system, m + 1, K)
    if terminal is not None:
        keep = lastv == terminal
        A, B, C, Dd = A[keep], B[keep], C[keep], Dd[keep]
    _, rad = mats_image_disks(A, B, C, Dd, base.center, base.radius)
    val = float(np.sum((2 * rad) ** D))
    if Q is None:
        from .packing import derivative_envelope
        Q = derivative_envelope(system, kmax=50)[0]
    k = np.arange(1, K + 1, dtype=float)
    head = np.sum(k ** (-2 * D))
    tail = (K + 0.5) ** (1 - 2 * D) / (2 * D - 1)
    rel = Q ** (2 * D) * tail / head
    return GasketSum(m, K, val, val * ((1 + rel) ** (m + 1) - 1))


def _items_start(system, K, n_quad, base: Circle, vertices=(1, 2, 3)):
    """Maps f_t^kappa over head powers and tail quadrature nodes, with weights."""
    out = []
    kap, c = _power_nodes(K, n_quad, 2.0)
    for t in vertices:
        a, b, cc, d = system.power_coeffs(t, kap)
        out.append((a, b, cc, d, c, np.full(kap.size, t)))
    A, B, C, D, W, V = (np.concatenate(x) for x in zip(*out))
    return A, B, C, D, W, V


_NODE_CACHE = {}


def _power_nodes(K, n_quad, alpha_scale):
    """Head powers 1..K with weight 1 and Laguerre nodes for the continuous tail above K + 1/2.

    The tail substitution uses kappa = (K + 1/2) e^{u / a} with a = 2 D - 1 ~ alpha_scale - 1;
    the exact D matters little since the weights absorb it.
    """
    key = (K, n_quad, alpha_scale)
    if key not in _NODE_CACHE:
        u, wq = np.polynomial.laguerre.laggauss(n_quad)
        a = alpha_scale - 1.0 if alpha_scale > 1.5 else 0.6
        k0 = K + 0.5
        kap = k0 * np.exp(u / a)
        c = wq * np.exp(u) * kap / a
        keep = np.isfinite(kap) & (u / a < 300)
        _NODE_CACHE[key] = (np.concatenate([np.arange(1, K + 1, dtype=float), kap[keep]]),
                            np.concatenate([np.ones(K), c[keep]]))
    return _NODE_CACHE[key]


def _push(system, items, K, n_quad, D):
    A, B, C, Dd, W, V = items
    kap, c = _power_nodes(K, n_quad, 2 * D)
    out = []
    for w in (1, 2, 3):
        idx = np.nonzero(V != w)[0]
        if not len(idx):
            continue
        a, b, cc, d = system.power_coeffs(w, kap)
        # f_w^kappa o M
        nA = (a[None, :] * A[idx, None] + b[None, :] * C[idx, None]).ravel()
        nB = (a[None, :] * B[idx, None] + b[None, :] * Dd[idx, None]).ravel()
        nC = (cc[None, :] * A[idx, None] + d[None, :] * C[idx, None]).ravel()
        nD = (cc[None, :] * B[idx, None] + d[None, :] * Dd[idx, None]).ravel()
        nW = (W[idx, None] * c[None, :]).ravel()
        out.append((nA, nB, nC, nD, nW, np.full(nA.size, w)))
    return tuple(np.concatenate(x) for x in zip(*out))


def _leaf_value(system, ed, items, D, base: Circle):
    A, B, C, Dd, W, V = items
    cen, rad = mats_image_disks(A, B, C, Dd, base.center, base.radius)
    tot = 0.0
    for v in (1, 2, 3):
        sel = V == v
        if np.any(sel):
            hv = ed.h_at(v, cen[sel])
            tot += float(np.sum(W[sel] * (2 * rad[sel]) ** D * hv))
    return tot


def gasket_limit(system: ApollonianSystem, ed: thermo.EigenData, D, depths=(0, 1), K=100, n_quad=24,
                 base: Circle = None, terminal=None):
    """Limit of the gasket sum; returns (value at the deepest level, all level values)."""
    base = base or system.C4
    verts = (1, 2, 3) if terminal is None else (terminal,)
    # start: f_t^k(base) inside X_t; words of length m then have terminal t
    items = _items_start(system, K, n_quad, base, verts)
    values = []
    level = 0
    for d in sorted(depths):
        while level < d:
            items = _push(system, items, K, n_quad, D)
            level += 1
        values.append(_leaf_value(system, ed, items, D, base))
    return values[-1], values


# ---------------------------------------------------------------------------
# content report


@dataclass
class ContentReport:
    name: str
    D: float
    D_bracket: tuple
    lyapunov: float
    lyapunov_routes: tuple
    S: float
    S_error: float
    S_levels: list
    M: float
    C1f: float
    C0f: float
    eta: float = float("nan")
    eigen: thermo.EigenData = None
    spec: thermo.SystemSpec = None
    system: ApollonianSystem = None

    def scale(self, nu_B):
        return self.S * nu_B * 2.0 ** (-self.D) / self.lyapunov

    def minkowski(self, nu_B=1.0):
        D = self.D
        return 2.0 / (D * (2 - D) * (D - 1)) * math.pi * self.scale(nu_B)

    def surface(self, nu_B=1.0):
        D = self.D
        return math.pi / (D * (D - 1)) * self.scale(nu_B)

    def euler(self, nu_B=1.0):
        return -1.0 / self.D * self.scale(nu_B)

    def to_json(self):
        return {"name": self.name, "D": self.D, "D_bracket": list(self.D_bracket), "lyapunov": self.lyapunov,
                "lyapunov_routes": list(self.lyapunov_routes), "S": self.S, "S_error": self.S_error,
                "S_levels": self.S_levels, "M": self.M, "C1f": self.C1f, "C0f": self.C0f}


def content_report(system: ApollonianSystem, K=100, degree=12, depths=(0, 1), m=6, bracket=True) -> ContentReport:
    spec = thermo.apollonian_spec(system, K=K, m=m, degree=degree)
    op = thermo.TransferOperator(spec)
    if bracket:
        lo, hi = thermo.bowen_dimension(spec, op=op)
        D = thermo.pressure_root(spec, op, (lo - 1e-4, hi + 1e-4))
    else:
        D = thermo.pressure_root(spec, op, (1.2, 1.4))
        lo = hi = D
    la, lb = thermo.lyapunov_exponent(spec, D, op=op, both=True)
    lyap = 0.5 * (la + lb)
    ed = thermo.eigen_data(spec, D, op=op)
    S, levels = gasket_limit(system, ed, D, depths, K)
    rep = ContentReport(system.name, D, (lo, hi), lyap, (la, lb), S, abs(levels[-1] - levels[0]), levels,
                        0.0, 0.0, 0.0, eigen=ed, spec=spec, system=system)
    rep.M, rep.C1f, rep.C0f = rep.minkowski(), rep.surface(), rep.euler()
    return rep


def minkowski_content(report: ContentReport, B=None):
    """M(F, B) for B = None (all of T), a Word cylinder, or a list of disjoint Word cylinders."""
    return report.minkowski(nu_of(report, B))


def euler_and_surface(report: ContentReport, B=None):
    nu = nu_of(report, B)
    return report.euler(nu), report.surface(nu)


def nu_of(report: ContentReport, B):
    if B is None:
        return 1.0
    if isinstance(B, (int, float)):
        return float(B)
    if isinstance(B, (list, tuple)):
        return float(sum(nu_of(report, b) for b in B))
    return cylinder_nu(report, B)


def cylinder_nu(report: ContentReport, word):
    """nu of the cylinder set phi_w(X_{t(w)}) (empty word with terminal v: nu(X_v))."""
    ed, spec = report.eigen, report.spec
    M = spec.word_map(word)
    D = report.D
    return ed.integrate_on(word.terminal, lambda z: derivative_magnitude(M, z) ** D)


def relabel_spread(report: ContentReport):
    """Spread of the per-vertex gasket sums (zero for a symmetric configuration)."""
    vals = [gasket_limit(report.system, report.eigen, report.D, (0,), terminal=t)[0] for t in (1, 2, 3)]
    return float((max(vals) - min(vals)) / np.mean(vals)), vals


# ---------------------------------------------------------------------------
# Moebius transport


def mobius_transport(report: ContentReport, g: MobiusMap):
    """nu(|g'|^D): the ratio M(g F, g T) / M(F, T)."""
    D = report.D
    return report.eigen.integrate(lambda v, z: derivative_magnitude(g, z) ** D)


def transport_image(system: ApollonianSystem, g: MobiusMap, name=None) -> ApollonianSystem:
    circles = [image_circle(g, C) for C in system.triple.circles]
    return build_system(TangentTriple(*circles), name or system.name + "-image")


def q_transform():
    """The transform sending the real line to C2 and C4 to the boundary of X1 (symmetric preset)."""
    w = (1 + 1j) * math.sqrt(3)
    return MobiusMap(1 + w, -1, 1, -1 + w)


# ---------------------------------------------------------------------------
# epsilon-neighbourhoods and counting


def _inside_circles(pk, eps):
    sel = pk.radius > eps
    return pk.center[sel], pk.radius[sel]


def exact_epsilon_volume(system: ApollonianSystem, eps, packing=None, area=None):
    """lambda_2(F_eps cap T) from the circle list.

    Almost every point of T lies in exactly one packing disk, and its distance to F is
    the distance to that disk's boundary.  Disks of radius <= eps lie entirely in F_eps;
    together they fill area(T) minus the larger disks.
    """
    pk = packing if packing is not None else generate_packing(system, min_radius=eps, keep_words=False)
    if pk.min_radius > eps:
        raise IncompleteEnumeration("packing not enumerated down to eps")
    _, r = _inside_circles(pk, eps)
    area = triangle_area(system) if area is None else area
    annuli = np.sum(np.pi * (r ** 2 - (r - eps) ** 2))
    rest = area - np.sum(np.pi * r ** 2)
    return float(annuli + rest)


@dataclass
class MCResult:
    eps: float
    estimate: float
    stderr: float
    n_samples: int
    n_in_triangle: int
    exact: float = float("nan")


def direct_epsilon_volume(system: ApollonianSystem, eps, n_samples=10 ** 7, seed=0, packing=None, batch=10 ** 6,
                          threads=1, area=None) -> MCResult:
    """Monte-Carlo lambda_2(F_eps cap T) with a counter-based sampler (Philox, one stream per batch).

    Points are classified through their minimum power with respect to the disks of radius
    > eps, found by a nearest-neighbour query in the lift (c, sqrt(R^2 - r^2)).
    """
    pk = packing if packing is not None else generate_packing(system, min_radius=eps, keep_words=False)
    if pk.min_radius > eps:
        raise IncompleteEnumeration("packing not enumerated down to eps")
    c, r = _inside_circles(pk, eps)
    area = triangle_area(system) if area is None else area
    lo, hi = system.bounding_box()
    if r.size == 0:
        return MCResult(eps, area, 0.0, n_samples, n_samples, area)
    R = r.max()
    tree = cKDTree(np.column_stack([c.real, c.imag, np.sqrt(R * R - r * r)]))
    hits = 0
    inside = 0
    done = 0
    b = 0
    while done < n_samples:
        n = min(batch, n_samples - done)
        rng = np.random.Generator(np.random.Philox(seed).jumped(b))
        z = lo.real + (hi.real - lo.real) * rng.random(n) + 1j * (lo.imag + (hi.imag - lo.imag) * rng.random(n))
        z = z[system.in_triangle(z)]
        if z.size:
            _, idx = tree.query(np.column_stack([z.real, z.imag, np.zeros(z.size)]), workers=threads)
            d = np.abs(z - c[idx])
            deep = d < r[idx] - eps
            hits += int(z.size - deep.sum())
            inside += int(z.size)
        done += n
        b += 1
    p = hits / inside
    return MCResult(eps, area * p, area * math.sqrt(p * (1 - p) / inside), n_samples, inside)


def circle_count(system: ApollonianSystem, eps, packing=None):
    """R(eps): number of packing circles in T with radius > eps."""
    pk = packing if packing is not None else generate_packing(system, min_radius=eps, keep_words=False)
    if pk.min_radius > eps:
        raise IncompleteEnumeration("packing not enumerated down to eps")
    return int(np.sum(pk.radius > eps))


def epsilon_table(system: ApollonianSystem, D, eps_grid, packing=None):
    """Rows (eps, R(eps), eps^D R(eps), eps^{D-2} lambda_2(F_eps cap T)) from one enumeration."""
    eps_grid = np.sort(np.asarray(eps_grid, dtype=float))[::-1]
    pk = packing if packing is not None else generate_packing(system, min_radius=eps_grid.min(), keep_words=False)
    area = triangle_area(system)
    rows = []
    for e in eps_grid:
        n = int(np.sum(pk.radius > e))
        vol = exact_epsilon_volume(system, e, pk, area)
        rows.append((float(e), n, e ** D * n, e ** (D - 2) * vol))
    return rows


# ---------------------------------------------------------------------------
# the Apollonian constant


def apollonian_constant_bound(report: ContentReport = None, D=None, lyapunov=PRINTED_LYAPUNOV, with_sums=True):
    """Lower bounds on c_A.

    The printed bound uses rho_0 <= ((rho_hat + R) / (rho_hat - R))^2 and the constant 0.915.
    With a report, the two-sum ratio bound is evaluated too, once with the computed
    Lyapunov exponent and once with 0.915.
    """
    D = report.D if D is None else D
    rho_hat = math.sqrt(33 - 18 * math.sqrt(3))
    R = 2 * math.sqrt(3) - 3
    rho0 = ((rho_hat + R) / (rho_hat - R)) ** 2
    c_lower = math.pi ** (D / 2) / (D * 2 ** (D + 1)) * rho0 ** (-D) / lyapunov
    out = {"rho_hat": rho_hat, "rho_hat_sq": rho_hat ** 2, "R": R, "rho0_bound": rho0, "D": D,
           "lyapunov_used": lyapunov, "c_A_lower": c_lower}
    if report is not None and with_sums:
        q = q_transform()
        base = image_circle(q, report.system.C4)
        Sq, lv = gasket_limit(report.system, report.eigen, D, (1,), base=base, terminal=3)
        out["S"] = report.S
        out["S_q"] = Sq
        pref = 2 ** (-D) * math.pi ** (D / 2) / D
        out["c_A_ratio_bound"] = pref / report.lyapunov * report.S / (6 * Sq)
        out["c_A_ratio_bound_printed_lyapunov"] = pref / lyapunov * report.S / (6 * Sq)
        out["lyapunov_computed"] = report.lyapunov
    return out


# ---------------------------------------------------------------------------
# higher-dimensional curvature integrals


def unit_ball_volume(d):
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def ball_curvature(d, k, diam, t):
    """C_k of the e^{-t}-parallel set of the complement, restricted to a ball of diameter diam."""
    e = math.exp(-t)
    if not 0 <= k <= d:
        raise OutOfRange("need 0 <= k <= d")
    if e >= diam:
        raise OutOfRange("parallel radius must be below the diameter")
    rho = diam / 2
    kd = unit_ball_volume(d)
    if k == d:
        return kd * rho ** d - kd * (rho - e) ** d
    return kd / unit_ball_volume(d - k) * math.comb(d, k) * (-1) ** (d - k + 1) * (rho - e) ** k


def curvature_integral(d, k, D, diam):
    """Closed form of I^k = int e^{-T (D - k)} C_k(F_{e^{-T}}, ball) dT."""
    facs = [D - j for j in range(0, (d if k == d else k + 1))]
    if k == d:
        facs = [D - j for j in range(d)] + [d - D]
    if any(abs(f) < 1e-12 for f in facs):
        raise PoleInDenominator(f"D = {D} hits a pole")
    kd = unit_ball_volume(d)
    rho = diam / 2
    prod = math.prod(facs)
    if k == d:
        return kd * math.factorial(d) / prod * rho ** D
    pre = kd * math.factorial(d) / (unit_ball_volume(d - k) * math.factorial(d - k))
    return pre * (-1) ** (d - k + 1) * rho ** D / prod


def curvature_integral_quadrature(d, k, D, diam):
    """Adaptive quadrature of the same integral in the variable e = e^{-T}.

    For k = d the range e >= diam / 2 contributes the full ball volume.  Returns nan
    when the integral diverges (D <= k, or D <= d - 1 for k = d).
    """
    rho = diam / 2
    kd = unit_ball_volume(d)
    if (k < d and D <= k) or (k == d and not d - 1 < D < d):
        return float("nan")

    def inner(e):
        if k == d:
            # rho^d - (rho - e)^d, expanded to avoid cancellation near e = 0
            return kd * sum(math.comb(d, j) * rho ** (d - j) * (-1) ** (j + 1) * e ** j for j in range(1, d + 1))
        return kd / unit_ball_volume(d - k) * math.comb(d, k) * (-1) ** (d - k + 1) * (rho - e) ** k

    f = lambda e: e ** (D - k - 1) * inner(e)
    val, _ = integrate.quad(f, 0, rho, epsabs=0, epsrel=1e-10, limit=200)
    if k == d:
        full, _ = integrate.quad(lambda e: e ** (D - d - 1) * kd * rho ** d, rho, np.inf, epsabs=0, epsrel=1e-10,
                                 limit=200)
        val += full
    return val


@dataclass
class CurvatureTable:
    d: int
    D: float
    diam: float
    closed: list
    quadrature: list
    ratios: list  # C_k^f / C_{k+1}^f for k = 0..d-1

    def to_json(self):
        return {"d": self.d, "D": self.D, "diam": self.diam, "closed": self.closed, "quadrature": self.quadrature,
                "ratios": self.ratios}


def ratio_constant(d, k, D):
    """C_k^f / C_{k+1}^f = (kappa_{d-k-1} / kappa_{d-k}) (k + 1 - D) / (d - k)."""
    return unit_ball_volume(d - k - 1) / unit_ball_volume(d - k) * (k + 1 - D) / (d - k)


def curvature_table(d, D, diam=1.0, quad=True) -> CurvatureTable:
    closed = [curvature_integral(d, k, D, diam) for k in range(d + 1)]
    qv = [curvature_integral_quadrature(d, k, D, diam) for k in range(d + 1)] if quad else []
    # the fractal curvatures are the I^k times a common factor, so their ratios are I^k / I^{k+1}
    ratios = [closed[k] / closed[k + 1] for k in range(d)]
    return CurvatureTable(d, D, diam, closed, qv, ratios)

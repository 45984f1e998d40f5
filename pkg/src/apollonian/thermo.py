"""Symbolic dynamics, pressure and the transfer operator.

A ``SystemSpec`` is a finite set of vertices, each with a compact domain
(a disk in C or an interval in R), and a list of edge families.  A family
collects the maps phi_kappa : X_target -> X_source indexed by kappa in a finite
head plus an optional arithmetic tail running to infinity; the tail has a
smooth continuation in kappa, which is what makes its sum computable.

The transfer operator

    (L_s g)_v(x) = sum over edges e with target v of |phi_e'(x)|^s g_source(phi_e x)

is discretized on a Chebyshev basis per domain (tensor polynomials of bounded
total degree on disks, plain Chebyshev on intervals), fitted by least squares
on polar (resp. Chebyshev) nodes.  Tails are summed by an integral in kappa,
substituted kappa = K' e^y and integrated with Gauss-Laguerre nodes.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InsufficientWitnesses,
    NoConvergence,
    NonRegular,
    NonSummable,
    NotPeriodic,
)
from .moebius import INF, MobiusMap, attracting_fixed_point, compose, derivative_magnitude
from .words import Word

# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    dim = 2

    def local(self, z):
        w = (np.asarray(z) - self.center) / self.radius
        return w.real, w.imag

    def nodes(self, degree, factor=2.0):
        nb = (degree + 1) * (degree + 2) // 2
        n_t = 2 * degree + 2
        n_r = max(3, int(math.ceil(factor * nb / n_t)))
        r = np.cos(np.pi * np.arange(n_r) / (2 * n_r))  # clustered toward the rim
        t = 2 * np.pi * (np.arange(n_t) + 0.5) / n_t
        pts = [self.center + self.radius * ri * np.exp(1j * (t + 0.37 * i)) for i, ri in enumerate(r)]
        return np.concatenate(pts)

    def nbasis(self, degree):
        return (degree + 1) * (degree + 2) // 2

    def extrema_distance(self, q):
        """(min, max) of |z - q| over the closed disk."""
        d = abs(q - self.center)
        return max(d - self.radius, 0.0), d + self.radius

    def sample_boundary(self, n=64):
        return self.center + self.radius * np.exp(2j * np.pi * np.arange(n) / n)


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    dim = 1

    def local(self, z):
        x = np.real(np.asarray(z))
        return (2 * x - (self.a + self.b)) / (self.b - self.a), None

    def nodes(self, degree, factor=1.0):
        n = degree + 1
        u = np.cos(np.pi * (np.arange(n) + 0.5) / n)
        return (0.5 * (self.a + self.b) + 0.5 * (self.b - self.a) * u).astype(complex)

    def nbasis(self, degree):
        return degree + 1

    def extrema_distance(self, q):
        q = complex(q)
        if abs(q.imag) > 0:
            dy = abs(q.imag)
            dx = 0.0 if self.a <= q.real <= self.b else min(abs(q.real - self.a), abs(q.real - self.b))
            lo = math.hypot(dx, dy)
        else:
            lo = 0.0 if self.a <= q.real <= self.b else min(abs(q.real - self.a), abs(q.real - self.b))
        hi = max(abs(q - self.a), abs(q - self.b))
        return lo, hi

    def sample_boundary(self, n=64):
        return np.linspace(self.a, self.b, n).astype(complex)


def cheb_factors(u, degree):
    """T_0..T_degree evaluated at u; output shape u.shape + (degree+1,)."""
    u = np.asarray(u, dtype=float)
    out = np.empty(u.shape + (degree + 1,))
    out[..., 0] = 1.0
    if degree >= 1:
        out[..., 1] = u
    for i in range(2, degree + 1):
        out[..., i] = 2 * u * out[..., i - 1] - out[..., i - 2]
    return out


def total_degree_index(degree):
    idx = [(p, q) for p in range(degree + 1) for q in range(degree + 1 - p)]
    return np.array([p for p, _ in idx]), np.array([q for _, q in idx])


def basis_matrix(domain, z, degree):
    """Basis values at points z: shape (len(z), nbasis)."""
    u, v = domain.local(z)
    Tu = cheb_factors(u, degree)
    if domain.dim == 1:
        return Tu
    Tv = cheb_factors(v, degree)
    P, Q = total_degree_index(degree)
    return Tu[..., P] * Tv[..., Q]


# ---------------------------------------------------------------------------
# edge families


@dataclass
class Family:
    """Maps phi_kappa from X_target into X_source.

    ``image(kappa, z)`` and ``deriv(kappa, z)`` broadcast over arrays.  ``head``
    lists the indices summed literally; ``tail_start``/``step`` describe the
    arithmetic continuation to infinity (None for finite families); ``decay``
    is the exponent with |phi_kappa'| ~ kappa^-decay.
    """

    target: int
    source: int
    head: np.ndarray
    image: object
    deriv: object
    tail_start: float | None = None
    step: float = 1.0
    decay: float = 2.0
    letter: object = None  # kappa -> (vertex, power) letter, for words

    def n_tail_terms(self):
        return 0 if self.tail_start is None else math.inf


def parabolic_family(target, source, p, tau, K, tail=True):
    """Powers f^kappa of a parabolic map fixing p: z -> p + (z-p)/(1 + kappa tau (z-p))."""

    def image(k, z):
        w = z - p
        return p + w / (1 + k * tau * w)

    def deriv(k, z):
        return 1.0 / np.abs(1 + k * tau * (z - p)) ** 2

    head = np.arange(1, K + 1, dtype=float)
    return Family(target, source, head, image, deriv, K + 1.0 if tail else None, 1.0, 2.0,
                  letter=lambda k: (source, int(k)))


def mobius_family(target, source, coeffs, head, tail_start=None, step=1.0, decay=2.0, letter=None):
    """Family given by coefficient arrays (A, B, C, D) as functions of kappa."""

    def image(k, z):
        A, B, C, D = coeffs(k)
        return (A * z + B) / (C * z + D)

    def deriv(k, z):
        A, B, C, D = coeffs(k)
        return np.abs(A * D - B * C) / np.abs(C * z + D) ** 2

    return Family(target, source, np.asarray(head, dtype=float), image, deriv, tail_start, step, decay, letter)


# ---------------------------------------------------------------------------
# system specification


@dataclass
class SystemSpec:
    kind: str
    vertices: tuple
    domains: dict
    family_builder: object  # K -> list[Family]
    letter_map: object  # (vertex, power) -> MobiusMap
    K: int = 100
    m: int = 6
    alternating: bool = True
    s_min: float = 0.5  # summability threshold of the one-cylinder sum
    degree: int = 16
    tol: float = 1e-9
    info: dict = field(default_factory=dict)

    def families(self, K=None):
        return self.family_builder(self.K if K is None else K)

    def word_map(self, word) -> MobiusMap:
        out = MobiusMap.identity()
        for v, k in word.letters:
            out = compose(out, self.letter_map(v, k))
        return out

    def letters(self, K):
        """All letters with power <= K, as (vertex, power)."""
        out = []
        for fam in self.families(K):
            for k in fam.head:
                lt = fam.letter(k)
                if lt not in out:
                    out.append(lt)
        return sorted(out)


def apollonian_spec(system, K=100, m=6, degree=16) -> SystemSpec:
    """The three-vertex system of an Apollonian packing."""
    doms = {v: Disk(system.domain(v).center, system.domain(v).radius) for v in (1, 2, 3)}

    def build(K):
        fams = []
        for v in (1, 2, 3):
            for w in (1, 2, 3):
                if w != v:
                    fams.append(parabolic_family(v, w, system.corner(w), system.tau[w - 1], K))
        return fams

    def letter_map(w, k):
        return system.power_map(w, k)

    return SystemSpec("apollonian", (1, 2, 3), doms, build, letter_map, K, m, True, 0.5, degree,
                      info={"system": system})


def linear_spec(ratios, shifts, hull=(0.0, 1.0), kind="toy-sIFS", m=6, degree=8, info=None) -> SystemSpec:
    """Single-vertex IFS of affine maps x -> r_i x + t_i (r_i may be negative)."""
    ratios = np.asarray(ratios, dtype=float)
    shifts = np.asarray(shifts, dtype=float)
    n = len(ratios)
    absr = np.abs(ratios)

    def coeffs(k):
        i = np.asarray(k, dtype=int) - 1
        return ratios[i], shifts[i] + 0j, 0 * ratios[i], np.ones_like(ratios[i])

    def build(K):
        return [mobius_family(0, 0, coeffs, np.arange(1, n + 1), None, 1.0, 0.0, letter=lambda k: (0, int(k)))]

    def letter_map(v, k):
        return MobiusMap(ratios[k - 1], shifts[k - 1], 0, 1)

    base = {
        "ratios": ratios,
        "shifts": shifts,
        "pressure": lambda s: math.log(np.sum(absr ** s)),
        "lyapunov": lambda s: float(np.sum(-np.log(absr) * absr ** s) / np.sum(absr ** s)),
    }
    base.update(info or {})
    return SystemSpec(kind, (0,), {0: Interval(*hull)}, build, letter_map, n, m, False, 0.0, degree, info=base)


def similarity_spec(ratios, gaps=None, m=6, degree=8) -> SystemSpec:
    """Orientation-preserving similarities on [0,1], placed left to right."""
    ratios = np.asarray(ratios, dtype=float)
    n = len(ratios)
    free = 1.0 - ratios.sum()
    if gaps is None:
        gaps = np.full(max(n - 1, 1), max(free, 0.0) / max(n - 1, 1))
    shifts = np.concatenate([[0.0], np.cumsum(ratios[:-1] + gaps[: n - 1])])
    return linear_spec(ratios, shifts, m=m, degree=degree)


# ---------------------------------------------------------------------------
# words


def admissible_words(spec: SystemSpec, m, K=None):
    """All admissible words of length m with powers <= K, in lexicographic order.

    A word carries its terminal vertex (the domain it acts on).  For one-vertex
    systems the terminal is that vertex and every letter sequence is allowed.
    """
    K = spec.K if K is None else K
    if m == 0:
        if spec.alternating:
            yield Word((), None)
        else:
            yield Word((), spec.vertices[0], False)
        return
    letters = spec.letters(K)
    if not spec.alternating:
        v0 = spec.vertices[0]
        for combo in itertools.product(letters, repeat=m):
            yield Word(combo, v0, False)
        return
    verts = spec.vertices
    for combo in itertools.product(letters, repeat=m):
        if any(a[0] == b[0] for a, b in zip(combo, combo[1:])):
            continue
        for t in verts:
            if t != combo[-1][0]:
                yield Word(combo, t)


def count_words(spec: SystemSpec, m, K=None):
    return sum(1 for _ in admissible_words(spec, m, K))


def cylinder_derivative_bounds(spec: SystemSpec, word: Word):
    """(inf, sup) of |phi_w'| over the terminal domain; exact for Moebius maps."""
    M = spec.word_map(word)
    dom = spec.domains[word.terminal]
    if abs(M.c) < 1e-15:
        val = 1.0 / abs(M.d) ** 2
        return val, val
    lo, hi = dom.extrema_distance(M.pole)
    c2 = abs(M.c) ** 2
    if lo <= 0:
        raise NonSummable("pole of the cylinder map lies in its domain")
    return 1.0 / (c2 * hi * hi), 1.0 / (c2 * lo * lo)


def distortion_constants(spec: SystemSpec, nmax=3, K=4):
    """rho_n = sup over n-words of sup|phi'| / inf|phi'|, made nonincreasing from above."""
    raw = []
    for n in range(1, nmax + 1):
        r = 1.0
        for w in admissible_words(spec, n, K):
            a, b = cylinder_derivative_bounds(spec, w)
            r = max(r, b / a)
        raw.append(r)
    return np.maximum.accumulate(np.array(raw)[::-1])[::-1]


# ---------------------------------------------------------------------------
# discretized operator


def _laguerre(n):
    x, w = np.polynomial.laguerre.laggauss(n)
    return x, w


@dataclass
class _FamilyData:
    fam: Family
    v: int  # target index
    w: int  # source index
    Tu: np.ndarray  # (n_nodes, n_head, deg+1)
    Tv: np.ndarray | None
    logd: np.ndarray  # (n_nodes, n_head) log |phi'|


class TransferOperator:
    """Chebyshev discretization of L_s for a SystemSpec."""

    def __init__(self, spec: SystemSpec, K=None, degree=None, n_laguerre=30, node_factor=2.0):
        self.spec = spec
        self.K = spec.K if K is None else K
        self.degree = spec.degree if degree is None else degree
        self.n_laguerre = n_laguerre
        self.verts = list(spec.vertices)
        self.vindex = {v: i for i, v in enumerate(self.verts)}
        self.nodes, self.V, self.P, self.offsets = [], [], [], [0]
        for v in self.verts:
            dom = spec.domains[v]
            x = dom.nodes(self.degree, node_factor)
            V = basis_matrix(dom, x, self.degree)
            self.nodes.append(x)
            self.V.append(V)
            self.P.append(np.linalg.pinv(V))
            self.offsets.append(self.offsets[-1] + V.shape[1])
        self.size = self.offsets[-1]
        self.fams = []
        for fam in spec.families(self.K):
            vi, wi = self.vindex[fam.target], self.vindex[fam.source]
            x = self.nodes[vi]
            k = fam.head[None, :]
            z = fam.image(k, x[:, None])
            d = fam.deriv(k, x[:, None])
            Tu, Tv = self._factors(fam.source, z)
            self.fams.append(_FamilyData(fam, vi, wi, Tu, Tv, np.log(d)))
        self._cache = {}

    # helpers -------------------------------------------------------------
    def _factors(self, vertex, z):
        dom = self.spec.domains[vertex]
        u, v = dom.local(z)
        Tu = cheb_factors(u, self.degree)
        Tv = cheb_factors(v, self.degree) if dom.dim == 2 else None
        return Tu, Tv

    def _accumulate(self, Tu, Tv, wts):
        """sum_k wts[i,k] * basis(image_{ik}) -> (n_nodes, nbasis)."""
        if Tv is None:
            return np.einsum("ik,ikp->ip", wts, Tu)
        full = np.einsum("ik,ikp,ikq->ipq", wts, Tu, Tv)
        P, Q = total_degree_index(self.degree)
        return full[:, P, Q]

    def tail_nodes(self, fam: Family, s, lower=False):
        """Quadrature (kappa_i, c_i) for sum over the family tail of F(kappa)."""
        if fam.tail_start is None:
            return None
        alpha = fam.decay * s - 1.0
        if alpha <= 0:
            raise NonSummable(f"tail diverges at s = {s}")
        start = fam.tail_start if lower else fam.tail_start - 0.5 * fam.step
        u, wq = _laguerre(self.n_laguerre)
        # nodes past exp(300) carry Laguerre mass ~ exp(-300 alpha); dropped
        keep = u / alpha < 300.0
        u, wq = u[keep], wq[keep]
        kap = start * np.exp(u / alpha)
        c = wq * np.exp(u) * kap / alpha / fam.step
        return kap, c

    def node_images(self, s, potential=None, tail="mid"):
        """Per family the un-projected block (n_nodes_target, nbasis_source).

        tail: "mid" (midpoint integral, upper for convex terms), "low" (integral from
        the first tail index), or None.  ``potential`` multiplies each term by a
        function of log|phi'| (used for the derivative in s).
        """
        blocks = []
        for fd in self.fams:
            wts = np.exp(s * fd.logd)
            if potential is not None:
                wts = wts * potential(fd.logd)
            M = self._accumulate(fd.Tu, fd.Tv, wts)
            if tail and fd.fam.tail_start is not None:
                kap, c = self.tail_nodes(fd.fam, s, lower=(tail == "low"))
                x = self.nodes[fd.v][:, None]
                z = fd.fam.image(kap[None, :], x)
                ld = np.log(fd.fam.deriv(kap[None, :], x))
                wt = np.exp(s * ld) * c[None, :]
                if potential is not None:
                    wt = wt * potential(ld)
                Tu, Tv = self._factors(fd.fam.source, z)
                M = M + self._accumulate(Tu, Tv, wt)
            blocks.append((fd.v, fd.w, M))
        return blocks

    def matrix(self, s, potential=None, tail="mid"):
        key = (round(float(s), 15), potential is None, tail)
        if potential is None and key in self._cache:
            return self._cache[key]
        L = np.zeros((self.size, self.size))
        for vi, wi, M in self.node_images(s, potential, tail):
            o1, o2 = self.offsets[vi], self.offsets[vi + 1]
            p1, p2 = self.offsets[wi], self.offsets[wi + 1]
            L[o1:o2, p1:p2] += self.P[vi] @ M
        if potential is None:
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[key] = L
        return L

    def node_operator(self, s, tail="mid"):
        """Matrix taking coefficients to node values of L g (no projection)."""
        n_nodes = [len(x) for x in self.nodes]
        noff = np.concatenate([[0], np.cumsum(n_nodes)])
        A = np.zeros((noff[-1], self.size))
        for vi, wi, M in self.node_images(s, None, tail):
            A[noff[vi]:noff[vi + 1], self.offsets[wi]:self.offsets[wi + 1]] += M
        return A, noff

    def values_matrix(self):
        n_nodes = [len(x) for x in self.nodes]
        noff = np.concatenate([[0], np.cumsum(n_nodes)])
        V = np.zeros((noff[-1], self.size))
        for i, Vi in enumerate(self.V):
            V[noff[i]:noff[i + 1], self.offsets[i]:self.offsets[i + 1]] = Vi
        return V

    def fit(self, fn):
        """Coefficients of a function given per vertex as fn(v, z)."""
        c = np.zeros(self.size)
        for i, v in enumerate(self.verts):
            c[self.offsets[i]:self.offsets[i + 1]] = self.P[i] @ fn(v, self.nodes[i])
        return c

    def ones(self):
        return self.fit(lambda v, z: np.ones(len(z)))

    def evaluate(self, coef, v, z):
        i = self.vindex[v]
        B = basis_matrix(self.spec.domains[v], np.asarray(z), self.degree)
        return B @ coef[self.offsets[i]:self.offsets[i + 1]]

    # spectral data --------------------------------------------------------
    def leading(self, s, tail="mid"):
        """(lambda, right coefficient vector h, left vector ell) normalized ell.1 = 1, ell.h = 1."""
        L = self.matrix(s, tail=tail)
        vals, vecs = np.linalg.eig(L)
        i = int(np.argmax(vals.real))
        lam = vals[i].real
        h = vecs[:, i].real
        valsT, vecsT = np.linalg.eig(L.T)
        j = int(np.argmin(np.abs(valsT - lam)))
        ell = vecsT[:, j].real
        one = self.ones()
        ell = ell / (ell @ one)
        h = h / (ell @ h)
        return lam, h, ell, vals

    def log_eigenvalue(self, s, tail="mid"):
        return math.log(self.leading(s, tail)[0])


# ---------------------------------------------------------------------------
# pressure


@dataclass
class PressureEstimate:
    s: float
    lower: float
    upper: float
    tail_bound: float
    estimate: float = float("nan")
    discretization: float = 0.0
    m: int = 0
    K: int = 0

    def to_json(self):
        return dict(s=self.s, lower=self.lower, upper=self.upper, tail_bound=self.tail_bound,
                    estimate=self.estimate, discretization=self.discretization, m=self.m, K=self.K)


def _cw_bounds(op: TransferOperator, s, m, tail):
    """Collatz-Wielandt bracket from m-fold iterates of 1, evaluated at the nodes."""
    L = op.matrix(s, tail=tail)
    A, _ = op.node_operator(s, tail=tail)
    Vm = op.values_matrix()
    g = op.ones()
    for _ in range(max(m - 1, 0)):
        g = L @ g
        g = g / np.max(np.abs(g))
    num = A @ g
    den = Vm @ g
    if np.any(den <= 0) or np.any(num <= 0):
        raise NoConvergence("iterate lost positivity")
    r = num / den
    return float(np.log(r.min())), float(np.log(r.max()))


def _closed_form_pressure(spec, s):
    fn = spec.info.get("pressure")
    return None if fn is None else float(fn(s))


def pressure(spec: SystemSpec, s, m=None, K=None, op: TransferOperator | None = None, disc_check=True):
    """Bracket on P(-s xi) from m-fold transfer iterates with powers <= K plus tails."""
    m = spec.m if m is None else m
    K = spec.K if K is None else K
    if s <= spec.s_min:
        raise NonSummable(f"one-cylinder sum diverges for s <= {spec.s_min}")
    cf = _closed_form_pressure(spec, s)
    if cf is not None:
        return PressureEstimate(s, cf, cf, 0.0, cf, 0.0, m, K)
    op = op if op is not None else TransferOperator(spec, K)
    lo, _ = _cw_bounds(op, s, m, "low")
    _, hi = _cw_bounds(op, s, m, "mid")
    est = op.log_eigenvalue(s)
    tail = op.log_eigenvalue(s, "mid") - op.log_eigenvalue(s, None)
    disc = 0.0
    if disc_check:
        disc = abs(est - _coarse_op(op).log_eigenvalue(s))
    return PressureEstimate(float(s), lo - disc, hi + disc, float(tail), float(est), float(disc), m, K)


def _coarse_op(op: TransferOperator):
    key = "_coarse"
    if not hasattr(op, key):
        setattr(op, key, TransferOperator(op.spec, op.K, max(op.degree - 4, 2), op.n_laguerre))
    return getattr(op, key)


def pressure_cylinder_sum(spec: SystemSpec, s, m=1, K=20):
    """Naive cylinder-sum bracket (1/m) log sum inf/sup |phi_w'|^s over m-words, powers <= K.

    The sup side adds the tail of the power sums through the k^-decay envelope.
    """
    lo, hi = 0.0, 0.0
    for w in admissible_words(spec, m, K):
        a, b = cylinder_derivative_bounds(spec, w)
        lo += a ** s
        hi += b ** s
    fams = spec.families(K)
    if any(f.tail_start is not None for f in fams):
        # relative tail of one power sum, applied to every letter position
        dec = max(f.decay for f in fams)
        rel = (K + 0.5) ** (1 - dec * s) / (dec * s - 1) / sum(k ** (-dec * s) for k in range(1, K + 1))
        hi *= (1 + rel) ** m
    return math.log(lo) / m, math.log(hi) / m


def one_cylinder_sums(spec: SystemSpec, s, Ks):
    """Partial sums over one-letter cylinders of exp(sup s xi), one per truncation in Ks.

    With xi = -log|phi'| the summand is max(inf|phi'|^-s, sup|phi'|^-s).
    """
    Ks = sorted(int(k) for k in Ks)
    if spec.kind == "apollonian":
        system = spec.info["system"]
        ks = np.arange(1, Ks[-1] + 1, dtype=float)
        tot = np.zeros(ks.size)
        for w in (1, 2, 3):
            _, _, c, d = system.power_coeffs(w, ks)
            for t in (1, 2, 3):
                if t == w:
                    continue
                dom = spec.domains[t]
                dist = np.abs(-d / c - dom.center)
                a = 1.0 / (np.abs(c) ** 2 * (dist + dom.radius) ** 2)
                b = 1.0 / (np.abs(c) ** 2 * (dist - dom.radius) ** 2)
                tot += np.maximum(a ** -s, b ** -s)
        cs = np.cumsum(tot)
        return np.array([cs[k - 1] for k in Ks])
    powers, vals = [], []
    for w in admissible_words(spec, 1, Ks[-1]):
        a, b = cylinder_derivative_bounds(spec, w)
        powers.append(w.letters[0][1])
        vals.append(max(a ** -s, b ** -s))
    powers, vals = np.array(powers), np.array(vals)
    return np.array([vals[powers <= k].sum() for k in Ks])


# ---------------------------------------------------------------------------
# Bowen dimension


def _bisect(fn, a, b, tol):
    fa, fb = fn(a), fn(b)
    if fa < 0 or fb > 0:
        raise NonRegular(f"no sign change of the pressure on [{a}, {b}]")
    while b - a > tol:
        c = 0.5 * (a + b)
        if fn(c) > 0:
            a = c
        else:
            b = c
    return 0.5 * (a + b)


def bowen_dimension(spec: SystemSpec, tol=1e-9, m=None, K=None, bracket=None, op=None, return_op=False):
    """(D_lower, D_upper): roots of the upper and lower pressure bounds."""
    m = spec.m if m is None else m
    K = spec.K if K is None else K
    if "pressure" in spec.info:
        fn = spec.info["pressure"]
        a, b = bracket if bracket is not None else (spec.s_min + 1e-9, 10.0)
        D = _bisect(fn, a, b, tol * 1e-3)
        return (D, D, None) if return_op else (D, D)
    op = op if op is not None else TransferOperator(spec, K)
    coarse = _coarse_op(op)
    if bracket is None:
        a0, b0 = spec.s_min + 0.25, 4.0
        # quick secant on the central estimate to localize the root
        center = _bisect(lambda s: op.log_eigenvalue(s), a0, b0, 1e-4)
        a, b = max(a0, center - 0.01), center + 0.01
    else:
        a, b = bracket
    disc = abs(op.log_eigenvalue(0.5 * (a + b)) - coarse.log_eigenvalue(0.5 * (a + b)))
    lower = _bisect(lambda s: _cw_bounds(op, s, m, "mid")[1] + disc, a, b, tol)
    upper = _bisect(lambda s: _cw_bounds(op, s, m, "low")[0] - disc, a, b, tol)
    out = (min(lower, upper), max(lower, upper))
    return out + (op,) if return_op else out


def pressure_root(spec: SystemSpec, op=None, bracket=None, tol=1e-12):
    """Root of the central (eigenvalue) pressure estimate; no truncation allowance."""
    if "pressure" in spec.info:
        return bowen_dimension(spec, tol)[0]
    op = op if op is not None else TransferOperator(spec)
    a, b = bracket if bracket is not None else (spec.s_min + 0.25, 4.0)
    return _bisect(lambda s: op.log_eigenvalue(s), a, b, tol)


def transfer_apply(spec: SystemSpec, s, g, K=None, op=None):
    """Node values of L_s g for g given as g(v, z); tail included by quadrature."""
    op = op if op is not None else TransferOperator(spec, K)
    out = {}
    blocks = op.node_images(s)
    coef = op.fit(g)
    for vi, wi, M in blocks:
        v = op.verts[vi]
        c = coef[op.offsets[wi]:op.offsets[wi + 1]]
        out[v] = out.get(v, 0.0) + M @ c
    return {v: (op.nodes[op.vindex[v]], val) for v, val in out.items()}


# ---------------------------------------------------------------------------
# eigen data, measures, Lyapunov exponent


@dataclass
class EigenData:
    eigenvalue: float
    h: np.ndarray  # coefficients
    ell: np.ndarray  # left functional on coefficients
    R: float  # min of h on check points
    gamma: float
    residuals: np.ndarray
    op: TransferOperator = None
    D: float = float("nan")

    def h_at(self, v, z):
        return self.op.evaluate(self.h, v, z)

    def integrate(self, fn):
        """nu(fn) with fn(v, z) given per vertex."""
        return float(self.ell @ self.op.fit(fn))

    def integrate_on(self, v, fn):
        """nu restricted to the domain of v."""
        i = self.op.vindex[v]
        c = self.op.P[i] @ fn(self.op.nodes[i])
        return float(self.ell[self.op.offsets[i]:self.op.offsets[i + 1]] @ c)


@dataclass
class MeasureApprox:
    m: int
    words: list
    weights: np.ndarray  # normalized conformal weights nu[w]
    mu: np.ndarray  # Gibbs weights mu[w]
    gibbs_constant: float
    tail_mass: float
    gibbs_ratios: np.ndarray

    def to_json(self):
        return {
            "m": self.m,
            "gibbs_constant": self.gibbs_constant,
            "tail_mass": self.tail_mass,
            "cylinders": [{"word": w.to_json(), "terminal": w.terminal, "nu": float(a), "mu": float(b)}
                          for w, a, b in zip(self.words, self.weights, self.mu)],
        }


def eigen_data(spec: SystemSpec, D, K=None, op=None, n_iter=25) -> EigenData:
    op = op if op is not None else TransferOperator(spec, K)
    lam, h, ell, vals = op.leading(D)
    L = op.matrix(D)
    check = {v: np.concatenate([op.nodes[i], spec.domains[v].sample_boundary(128)]) for i, v in enumerate(op.verts)}
    hv = np.concatenate([op.evaluate(h, v, z) for v, z in check.items()])
    R = float(hv.min())
    # convergence of lambda^-n L^n 1 towards h (nu(1) = 1)
    g = op.ones()
    res = []
    for _ in range(n_iter):
        g = L @ g / lam
        res.append(np.max(np.abs(g - h)))
    res = np.array(res)
    good = res > 1e-13 * max(1.0, np.max(np.abs(h)))
    n = np.arange(1, n_iter + 1)
    if good.sum() >= 3:
        sl = np.polyfit(n[good], np.log(res[good]), 1)[0]
        gamma = float(math.exp(sl))
    else:
        mods = np.sort(np.abs(vals))[::-1]
        gamma = float(mods[1] / mods[0])
    return EigenData(lam, h, ell, R, gamma, res, op, D)


def default_anchor(spec: SystemSpec, v):
    """Attracting fixed point of a short cycle through vertex v."""
    if not spec.alternating:
        L = spec.letters(2)
        M = spec.letter_map(*L[0])
        return attracting_fixed_point(M)
    u = [w for w in spec.vertices if w != v][0]
    M = compose(spec.letter_map(v, 1), spec.letter_map(u, 1))
    return attracting_fixed_point(M)


def cylinder_measures(spec: SystemSpec, ed: EigenData, m, K=None, anchors=None):
    """nu and mu of all m-cylinders with powers <= K, plus the Gibbs certificate."""
    K = spec.K if K is None else K
    words = list(admissible_words(spec, m, K))
    nu, mu, ratio = [], [], []
    D = ed.D
    anchors = anchors or {v: default_anchor(spec, v) for v in spec.vertices}
    for w in words:
        M = spec.word_map(w)
        t = w.terminal
        a = ed.integrate_on(t, lambda z: derivative_magnitude(M, z) ** D)
        i0 = w.initial

        def fmu(z, M=M, i0=i0):
            return ed.h_at(i0, M(z)) * derivative_magnitude(M, z) ** D

        b = ed.integrate_on(t, fmu)
        nu.append(a)
        mu.append(b)
        ratio.append(b / derivative_magnitude(M, anchors[t]) ** D)
    nu, mu, ratio = np.array(nu), np.array(mu), np.array(ratio)
    tail = 1.0 - nu.sum()
    c = float(max(ratio.max(), 1.0 / ratio.min()))
    return MeasureApprox(m, words, nu / nu.sum(), mu / mu.sum(), c, float(tail), ratio)


def conformal_measure(spec: SystemSpec, D, m=1, K=None, op=None):
    K_ = spec.K if K is None else K
    ed = eigen_data(spec, D, K_, op)
    if abs(ed.eigenvalue - 1.0) > 1e-3:
        raise NoConvergence(f"eigenvalue {ed.eigenvalue} at D is not 1")
    Kc = min(K_, 10 if m == 1 else 4)
    return cylinder_measures(spec, ed, m, Kc), ed


def lyapunov_exponent(spec: SystemSpec, D, op=None, h=2e-3, both=False):
    """Integral of xi against the Gibbs state, two ways.

    A: -d/ds log lambda(s) at D by central differences with one Richardson step.
    B: nu( sum_e -log|phi_e'| |phi_e'|^D h(phi_e .) ) / nu(h), the mu-average of xi.
    """
    if "pressure" in spec.info:
        fn = spec.info["pressure"]

        def dlog(hh):
            return -(fn(D + hh) - fn(D - hh)) / (2 * hh)

        route_a = (4 * dlog(h / 2) - dlog(h)) / 3
        route_b = float(spec.info["lyapunov"](D))
        return (float(route_a), route_b) if both else 0.5 * (float(route_a) + route_b)
    op = op if op is not None else TransferOperator(spec)

    def dlog(hh):
        return -(op.log_eigenvalue(D + hh) - op.log_eigenvalue(D - hh)) / (2 * hh)

    route_a = (4 * dlog(h / 2) - dlog(h)) / 3
    lam, hc, ell, _ = op.leading(D)
    Lxi = op.matrix(D, potential=lambda ld: -ld)
    route_b = float(ell @ Lxi @ hc) / lam
    return (float(route_a), route_b) if both else 0.5 * (float(route_a) + route_b)


def entropy(spec: SystemSpec, D, op=None):
    """Measure-theoretic entropy of the Gibbs state at the root: h = P(-D xi) + D * lyapunov.

    Returns (h, residual) where residual = |P(-D xi)| relative to h.
    """
    lyap = lyapunov_exponent(spec, D, op=op)
    cf = _closed_form_pressure(spec, D)
    P = cf if cf is not None else (op if op is not None else TransferOperator(spec)).log_eigenvalue(D)
    h = P + D * lyap
    return h, abs(P) / abs(h)


# ---------------------------------------------------------------------------
# periodic data and lattice testing


def birkhoff_sum(spec: SystemSpec, word: Word):
    """S_n xi at the periodic point of the word: -log|phi_w'(fixed point)|."""
    if not word.letters:
        raise NotPeriodic("empty word")
    if spec.alternating and word.letters[0][0] == word.letters[-1][0] and len(word) > 1:
        raise NotPeriodic("word does not close up cyclically")
    if spec.alternating and len(word) == 1:
        raise NotPeriodic("single letters are not periodic in an alternating system")
    M = spec.word_map(word)
    z = attracting_fixed_point(M)
    return float(-math.log(derivative_magnitude(M, z)))


@dataclass
class LatticeVerdict:
    verdict: str  # lattice | non-lattice | inconclusive
    a: float | None
    witness: tuple | None
    sums: tuple
    heuristic: bool = True

    def to_json(self):
        return {"verdict": self.verdict, "a": self.a, "witness": self.witness, "sums": list(self.sums),
                "heuristic": self.heuristic}


def continued_fraction(x, n=40):
    out = []
    for _ in range(n):
        a = math.floor(x)
        out.append(int(a))
        f = x - a
        if f < 1e-15:
            break
        x = 1.0 / f
        if x > 1e15:
            break
    return out


def best_rational(x, qmax=10 ** 6, tol=1e-9):
    """Smallest convergent p/q of x with q <= qmax and |q x - p| < tol * max(1, |x|), else None.

    The integer relation q x - p is tested rather than |x - p/q|: every real number has
    convergents with |x - p/q| < 1/q^2, so a bare distance test with q up to 10^6 would call
    everything rational.
    """
    h0, h1, k0, k1 = 0, 1, 1, 0
    y = x
    for _ in range(60):
        a = math.floor(y)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > qmax:
            return None
        if abs(k1 * x - h1) < tol * max(1.0, abs(x)):
            return h1, k1
        f = y - a
        if f < 1e-300:
            return h1, k1
        y = 1.0 / f
    return None


def lattice_from_sums(sums, qmax=10 ** 6, tol=1e-9) -> LatticeVerdict:
    sums = tuple(float(s) for s in sums)
    if len(sums) < 2:
        raise InsufficientWitnesses("need at least two periodic orbits")
    base = sums[0]
    fracs = []  # s_i / base = num / den
    for s in sums[1:]:
        ratio = base / s
        pq = best_rational(ratio, qmax, tol)
        if pq is None:
            return LatticeVerdict("non-lattice", None, (base, s, ratio, continued_fraction(ratio, 20)), sums)
        fracs.append((pq[1], pq[0]))
    L = 1
    for _, den in fracs:
        L = L * den // math.gcd(L, den)
    ints = [L] + [num * (L // den) for num, den in fracs]
    g = 0
    for n in ints:
        g = math.gcd(g, abs(int(n)))
    a = abs(base) * g / L
    return LatticeVerdict("lattice", a, None, sums)


def lattice_test(spec: SystemSpec, periodic_words, qmax=10 ** 6, tol=1e-9) -> LatticeVerdict:
    if len(periodic_words) < 2:
        raise InsufficientWitnesses("need at least two periodic orbits")
    sums = [birkhoff_sum(spec, w) for w in periodic_words]
    return lattice_from_sums(sums, qmax, tol)

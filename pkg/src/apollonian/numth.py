"""Restricted continued-fraction and Lueroth digit sets.

Zeta sums are computed with an Euler-Maclaurin tail (Hurwitz form, so arithmetic
progressions of digits are exact); derivatives in s use a complex step.  The
1-d epsilon-neighbourhood oracles are exact interval computations: for a set F
with convex hull H and complementary gaps G, lambda(F_eps) = |H| + 2 eps - sum
over gaps longer than 2 eps of (|G| - 2 eps).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConditionViolated, DomainError, NoRoot
from .moebius import MobiusMap
from . import thermo

# B_2, B_4, ..., B_14
_BERN = [1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6]


def hurwitz_zeta(s, a=1.0, N=40):
    """sum_{j >= 0} (j + a)^-s for real or complex s with Re s > 1.

    Remainder after the last Bernoulli term is below 1e-16 relative for N = 40, s < 20.
    """
    if np.real(s) <= 1:
        raise DomainError(f"zeta needs s > 1, got {s}")
    j = np.arange(N)
    head = np.sum((j + a) ** (-s))
    x = N + a
    tail = x ** (1 - s) / (s - 1) + 0.5 * x ** (-s)
    poch = s  # rising factorial (s)_{2i-1}
    fact = 2.0
    for i, B in enumerate(_BERN, start=1):
        tail = tail + B / fact * poch * x ** (-s - 2 * i + 1)
        poch = poch * (s + 2 * i - 1) * (s + 2 * i)
        fact = fact * (2 * i + 1) * (2 * i + 2)
    return head + tail


def zeta(s):
    return float(np.real(hurwitz_zeta(s)))


def _cstep(fn, s, h=1e-20):
    return float(np.imag(fn(s + 1j * h)) / h)


@dataclass(frozen=True)
class DigitSet:
    """Either a finite sorted list, or the progression start, start+step, ... minus an excluded set."""

    finite: tuple | None = None
    start: int = 1
    step: int = 1
    exclude: tuple = ()

    def __post_init__(self):
        if self.finite is not None:
            object.__setattr__(self, "finite", tuple(sorted(set(int(k) for k in self.finite))))
            if len(self.finite) < 2 or self.finite[0] < 1:
                raise DomainError("digit set needs at least two positive digits")
        object.__setattr__(self, "exclude", tuple(sorted(set(int(k) for k in self.exclude))))

    # constructors
    @classmethod
    def of(cls, digits):
        return cls(finite=tuple(digits))

    @classmethod
    def naturals(cls, exclude=()):
        return cls(exclude=tuple(exclude))

    @classmethod
    def progression(cls, start, step, exclude=()):
        return cls(start=start, step=step, exclude=tuple(exclude))

    @classmethod
    def parse(cls, text):
        """'1,2,3' | 'exclude:5,7' | 'odd' | 'even' | 'all'."""
        t = text.strip().lower()
        if t in ("all", "n", "naturals"):
            return cls.naturals()
        if t == "odd":
            return cls.progression(1, 2)
        if t == "even":
            return cls.progression(2, 2)
        if t.startswith("exclude:"):
            return cls.naturals([int(x) for x in t[8:].strip("[] ").split(",") if x])
        return cls.of([int(x) for x in t.strip("[] ").split(",") if x])

    @property
    def is_finite(self):
        return self.finite is not None

    def __contains__(self, k):
        if self.finite is not None:
            return k in self.finite
        return k >= self.start and (k - self.start) % self.step == 0 and k not in self.exclude

    def upto(self, K):
        """Digits <= K as an array."""
        if self.finite is not None:
            return np.array([k for k in self.finite if k <= K])
        return np.array([k for k in range(self.start, K + 1, self.step) if k not in self.exclude])

    def tail_start(self, K):
        """First progression index beyond K and beyond every excluded digit, or None."""
        if self.finite is not None:
            return None
        k = self.start
        top = max([K] + list(self.exclude))
        while k <= top:
            k += self.step
        return k

    def complement(self, K):
        """Excluded digits <= K."""
        return np.array([k for k in range(1, K + 1) if k not in self])

    def neighbor_condition(self, K=None):
        """Every k outside the set has k-1 and k+1 in the set or equal to 0."""
        if self.finite is not None:
            return False  # k = max + 2 has no neighbour beyond the last digit
        K = K or (max(self.exclude, default=0) + 2 * self.step + self.start + 2)
        ok = lambda j: j == 0 or j in self
        return all(ok(k - 1) and ok(k + 1) for k in range(1, K + 1) if k not in self)

    def zeta(self, s):
        """zeta_Lambda(s) = sum over digits of k^-s (complex s allowed)."""
        if self.finite is not None:
            return np.sum(np.array(self.finite, dtype=float) ** (-s))
        tot = self.step ** (-s) * hurwitz_zeta(s, self.start / self.step)
        for k in self.exclude:
            if k in DigitSet(start=self.start, step=self.step):
                tot = tot - float(k) ** (-s)
        return tot

    def label(self):
        if self.finite is not None:
            return "{" + ",".join(map(str, self.finite)) + "}"
        base = "N" if (self.start, self.step) == (1, 1) else f"{self.start}+{self.step}N"
        return base + ("\\{" + ",".join(map(str, self.exclude)) + "}" if self.exclude else "")

    def to_json(self):
        if self.finite is not None:
            return {"digits": list(self.finite)}
        return {"start": self.start, "step": self.step, "exclude": list(self.exclude)}


def zeta_tools(s, digits: DigitSet = None):
    """(zeta(s), zeta_Lambda(s), (log zeta_Lambda)'(s))."""
    digits = digits or DigitSet.naturals()
    if s <= 1 and not digits.is_finite:
        raise DomainError(f"s must exceed 1, got {s}")
    zl = float(np.real(digits.zeta(s)))
    if digits.is_finite:
        k = np.array(digits.finite, dtype=float)
        dl = -np.sum(np.log(k) * k ** (-s)) / zl
    else:
        dl = _cstep(digits.zeta, s) / zl
    return (zeta(s) if s > 1 else math.inf), zl, float(dl)


# ---------------------------------------------------------------------------
# Lueroth systems


@dataclass
class LuerothSystem:
    s: float
    digits: DigitSet
    delta: float = float("nan")
    zeta_s: float = field(init=False)

    def __post_init__(self):
        if self.s <= 1:
            raise DomainError("Lueroth parameter s must exceed 1")
        self.zeta_s = zeta(self.s)
        if math.isnan(self.delta):
            self.delta = lueroth_delta(self.digits, self.s)

    def a(self, n):
        return np.asarray(n, dtype=float) ** (-self.s) / self.zeta_s

    def t(self, n):
        n = np.atleast_1d(np.asarray(n, dtype=float))
        out = np.array([np.real(hurwitz_zeta(self.s, x)) for x in n]) / self.zeta_s
        return out if out.size > 1 else float(out[0])

    def maps(self):
        if not self.digits.is_finite:
            raise DomainError("explicit maps need a finite digit set")
        n = np.array(self.digits.finite, dtype=float)
        return -self.a(n), np.array([self.t(k) for k in n])

    def pressure(self, u):
        """P(-u xi) = log(zeta_Lambda(u s) / zeta(s)^u)."""
        if u * self.s <= 1 and not self.digits.is_finite:
            raise DomainError("digit sum diverges")
        return math.log(float(np.real(self.digits.zeta(u * self.s)))) - u * math.log(self.zeta_s)

    def lyapunov(self, u=None):
        """Integral of xi against the Gibbs state of -u xi (default u = delta)."""
        u = self.delta if u is None else u
        _, _, dl = zeta_tools(u * self.s, self.digits)
        return -self.s * dl + math.log(self.zeta_s)

    def spec(self, m=6):
        if not self.digits.is_finite:
            raise DomainError("operator spec needs a finite digit set")
        r, t = self.maps()
        return thermo.linear_spec(r, t, hull=lueroth_hull(self), kind="lueroth", m=m,
                                  info={"pressure": self.pressure, "lyapunov": self.lyapunov})


def lueroth_delta(digits: DigitSet, s, tol=1e-13):
    """Root delta of log zeta_Lambda(delta s) - delta log zeta(s) = 0."""
    zs = math.log(zeta(s))

    def gap(d):
        return math.log(float(np.real(digits.zeta(d * s)))) - d * zs

    lo = 1e-12 if digits.is_finite else 1.0 / s + 1e-12
    hi = 1.0
    if gap(hi) > 1e-14:
        raise NoRoot("digit set too large for a root in (0, 1]")
    if abs(gap(hi)) <= 1e-14:
        return 1.0
    if gap(lo) < 0:
        raise NoRoot("digit set too sparse for a root in (0, 1]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if gap(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lueroth_hull(sysm: LuerothSystem):
    """Convex hull [alpha, beta] of a finite Lueroth attractor.

    Maps reverse orientation, so beta is the image of alpha under the smallest digit
    and alpha the image of beta under the largest.
    """
    if not sysm.digits.is_finite:
        return 0.0, 1.0
    lo, hi = sysm.digits.finite[0], sysm.digits.finite[-1]
    a1, t1 = sysm.a(lo), sysm.t(lo)
    a2, t2 = sysm.a(hi), sysm.t(hi)
    # beta = t1 - a1 alpha, alpha = t2 - a2 beta
    alpha = (t2 - a2 * t1) / (1 - a1 * a2)
    beta = t1 - a1 * alpha
    return float(alpha), float(beta)


def lueroth_first_gaps(sysm: LuerothSystem):
    """First-level gaps inside the hull (finite digits), or the excluded cylinders (infinite)."""
    if not sysm.digits.is_finite:
        ex = [k for k in range(1, max(sysm.digits.exclude, default=0) + 1) if k not in sysm.digits]
        if (sysm.digits.start, sysm.digits.step) != (1, 1):
            raise DomainError("infinite progressions need the neighbour condition route")
        return np.array([sysm.a(k) for k in ex])
    alpha, beta = lueroth_hull(sysm)
    r, t = sysm.maps()
    ims = sorted((ti + ri * beta, ti + ri * alpha) for ri, ti in zip(r, t))
    return np.array([b[0] - a[1] for a, b in zip(ims, ims[1:])])


@dataclass
class LuerothContent:
    digits: str
    s: float
    delta: float
    content: float
    closed_form: float | None
    lyapunov: float
    gaps: list
    verdict: object = None

    def to_json(self):
        return {"digits": self.digits, "s": self.s, "delta": self.delta, "content": self.content,
                "closed_form": self.closed_form, "lyapunov": self.lyapunov, "gaps": list(map(float, self.gaps)),
                "verdict": self.verdict.to_json() if self.verdict else None, "outcome": "measurable"}


@dataclass
class LatticeRefusal:
    digits: str
    s: float
    delta: float
    span: float
    amplitude: float | None = None
    verdict: object = None

    def to_json(self):
        return {"digits": self.digits, "s": self.s, "delta": self.delta, "span": self.span,
                "amplitude": self.amplitude, "outcome": "lattice-refusal"}


def lueroth_lattice(sysm: LuerothSystem, K=50):
    """Lattice verdict from the fixed-point Birkhoff sums -log a_n of single digits."""
    digs = sysm.digits.finite if sysm.digits.is_finite else sysm.digits.upto(K)
    sums = [-math.log(sysm.a(k)) for k in digs]
    return thermo.lattice_from_sums(sums)


def lueroth_content(digits: DigitSet, s, amplitude=True, eps_range=(2.0 ** -30, None)):
    """Minkowski content of the Lueroth attractor, or a LatticeRefusal.

    Content is 2^{1-delta} sum_G |G|^delta / (delta (1-delta) lyapunov) over the first-level
    gaps inside the hull, which reduces to the closed zeta form when the neighbour condition
    holds.
    """
    sysm = LuerothSystem(s, digits)
    d = sysm.delta
    verdict = lueroth_lattice(sysm)
    if verdict.verdict == "lattice":
        amp = lattice_amplitude(sysm, verdict.a, eps_range[0]) if amplitude and digits.is_finite else None
        return LatticeRefusal(digits.label(), s, d, verdict.a, amp, verdict)
    if d >= 1:
        raise DomainError("content formula needs delta < 1")
    lyap = sysm.lyapunov()
    gaps = lueroth_first_gaps(sysm)
    M = 2 ** (1 - d) * np.sum(gaps ** d) / (d * (1 - d) * lyap)
    formula = None
    if not digits.is_finite:
        zs = sysm.zeta_s
        _, zl, dl = zeta_tools(d * s, digits)
        formula = 2 ** (1 - d) * (zeta(s * d) / zs ** d - 1) / ((1 - d) * (math.log(zl) - d * s * dl))
    return LuerothContent(digits.label(), s, d, float(M), formula, lyap, list(gaps), verdict)


def linear_neighborhood_length(ratios, shifts, hull, eps, cap=10 ** 7):
    """Exact lambda_1(K_eps) for the attractor K of x -> r_i x + t_i with convex hull ``hull``."""
    alpha, beta = hull
    H = beta - alpha
    r = np.asarray(ratios, float)
    t = np.asarray(shifts, float)
    ims = sorted((min(ti + ri * alpha, ti + ri * beta), max(ti + ri * alpha, ti + ri * beta)) for ri, ti in zip(r, t))
    # first-level gaps as (left offset from alpha, length) in hull coordinates
    gl = np.array([b[0] - a[1] for a, b in zip(ims, ims[1:])])
    if np.any(gl < -1e-15):
        raise DomainError("first-level images overlap")
    gmax = gl.max() if len(gl) else 0.0
    two = 2 * eps
    excess = 0.0
    scales = np.array([1.0])
    seen = 0
    ar = np.abs(r)
    while scales.size:
        big = scales[:, None] * gl[None, :]
        mask = big > two
        excess += float(np.sum(big[mask] - two))
        scales = scales[scales * gmax > two]
        scales = (scales[:, None] * ar[None, :]).ravel()
        scales = scales[scales * gmax > two]
        seen += scales.size
        if seen > cap:
            raise thermo.NoConvergence("node budget exhausted")
    return H + two - excess


def lattice_amplitude(sysm: LuerothSystem, span, eps0=2.0 ** -30, n=64):
    """max - min of eps^{delta-1} lambda(L_eps) over one multiplicative period below eps0."""
    r, t = sysm.maps()
    hull = lueroth_hull(sysm)
    d = sysm.delta
    grid = eps0 * np.exp(-span * np.arange(n) / n)
    vals = np.array([e ** (d - 1) * linear_neighborhood_length(r, t, hull, e) for e in grid])
    return float(vals.max() - vals.min())


def lueroth_direct(sysm: LuerothSystem, eps):
    """Normalized exact volume eps^{delta-1} lambda(L_eps) for a finite digit set."""
    r, t = sysm.maps()
    return eps ** (sysm.delta - 1) * linear_neighborhood_length(r, t, lueroth_hull(sysm), eps)


def lattice_preset(ell=2, digits=(2, 4)):
    """Digits among powers of ell with s solving zeta(s) = ell^s, a lattice system."""
    lo, hi = 1.0001, 10.0
    f = lambda s: math.log(zeta(s)) - s * math.log(ell)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return DigitSet.of(digits), 0.5 * (lo + hi)


def matching_s(digits: DigitSet, delta, lo=1.0001, hi=20.0, tol=1e-13):
    """Parameter s at which the Lueroth set over ``digits`` has dimension ``delta``."""
    g = lambda s: lueroth_delta(digits, s) - delta
    glo = g(lo)
    if glo * g(hi) > 0:
        raise NoRoot("dimension not attained on the s-range")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if (g(mid) > 0) == (glo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# continued fractions


def cf_coeffs(k):
    k = np.asarray(k, dtype=float)
    return 0 * k, 1 + 0j * k, 1 + 0 * k, k


def cf_system(digits: DigitSet, K=100, m=30, degree=24) -> thermo.SystemSpec:
    """x -> 1/(x + k) on [0, 1] for k in the digit set (digits above K summed as a tail)."""
    head = digits.upto(K)
    tail = digits.tail_start(K)
    if tail is not None:
        # excluded digits above K are folded into the head so the tail is a clean progression
        head = digits.upto(tail - 1)

    def build(K_):
        return [thermo.mobius_family(0, 0, cf_coeffs, head, tail, float(digits.step), 2.0,
                                     letter=lambda k: (0, int(k)))]

    def letter_map(v, k):
        return MobiusMap(0, 1, 1, k)

    return thermo.SystemSpec("cf", (0,), {0: thermo.Interval(0.0, 1.0)}, build, letter_map, K, m, False,
                             0.5 if tail is not None else 0.0, degree, info={"digits": digits})


def cf_words_matrices(digits, depth, K):
    """Coefficient arrays (A, B, C, D) for all words of given depth, digits <= K."""
    ks = digits.upto(K).astype(float)
    A = np.array([1.0]); B = np.array([0.0]); C = np.array([0.0]); D = np.array([1.0])
    for _ in range(depth):
        # phi_w o phi_k = [[B, A + kB], [D, C + kD]]
        A, B, C, D = (np.repeat(B, ks.size), (A[:, None] + ks[None, :] * B[:, None]).ravel(),
                      np.repeat(D, ks.size), (C[:, None] + ks[None, :] * D[:, None]).ravel())
    return A, B, C, D


def _image_length(A, B, C, D, a, b):
    """|phi([a, b])| for phi = (A x + B)/(C x + D) with det +-1."""
    return np.abs(b - a) / np.abs((C * a + D) * (C * b + D))


def cf_covering_dimension(digits: DigitSet, r1=1e-3, r2=1e-6, cap=2 * 10 ** 7):
    """Root of S_s(r1) = S_s(r2) with S_s(r) = sum of |I|^s over a stopping partition at scale r.

    Children too small for the partition are summed in closed form via |I_wk| ~ |phi_w'(0)| / k^2.
    """

    def leaves(r):
        A, B, C, D = (np.array([1.0]), np.array([0.0]), np.array([0.0]), np.array([1.0]))
        out, tails, total = [], [], 0
        while A.size:
            L = _image_length(A, B, C, D, 0.0, 1.0)
            stop = L < r
            out.append(L[stop])
            A, B, C, D = A[~stop], B[~stop], C[~stop], D[~stop]
            if not A.size:
                break
            d0 = 1.0 / D ** 2  # |phi_w'(0)|
            kmax = (2 * np.sqrt(d0 / r)).astype(int) + 2
            if digits.is_finite:
                kmax = np.full_like(kmax, digits.finite[-1])
            else:
                first = np.array([digits.tail_start(int(k)) for k in kmax])
                tails.append((d0, first))
                kmax = first - 1
            cand = np.arange(1, kmax.max() + 1)
            cand = cand[[k in digits for k in cand]].astype(float)
            owner, kk = np.nonzero(cand[None, :] <= kmax[:, None])
            ks = cand[kk]
            A, B, C, D = B[owner], A[owner] + ks * B[owner], D[owner], C[owner] + ks * D[owner]
            total += A.size
            if total > cap:
                raise thermo.NoConvergence("covering budget exhausted")
        return np.concatenate(out), tails

    def tail_sum(first, s):
        # sum over progression j >= first of (j (j + 1))^-s, per node; integral beyond 200 terms
        st = digits.step
        n = 200
        j = first[:, None] + st * np.arange(n)[None, :]
        head = np.sum((j * (j + 1.0)) ** (-s), axis=1)
        end = first + st * n - 0.5 * st
        return head + end ** (1 - 2 * s) / ((2 * s - 1) * st)

    def S(s, data):
        L, tails = data
        tot = np.sum(L ** s)
        for d0, first in tails:
            tot += np.sum(d0 ** s * tail_sum(first, s))
        return tot

    d1, d2 = leaves(r1), leaves(r2)
    lo, hi = (0.01 if digits.is_finite else 0.55), 1.0
    f = lambda s: math.log(S(s, d2)) - math.log(S(s, d1))
    if f(lo) < 0 or f(hi) > 0:
        raise NoRoot("covering estimate has no sign change")
    while hi - lo > 1e-7:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class CFContent:
    digits: str
    D: float
    D_bracket: tuple
    lyapunov: float
    entropy: float
    gap_limit: float
    gap_limit_error: float
    content: float
    levels: list

    def to_json(self):
        return {"digits": self.digits, "D": self.D, "D_bracket": list(self.D_bracket), "lyapunov": self.lyapunov,
                "entropy": self.entropy, "gap_limit": self.gap_limit, "gap_limit_error": self.gap_limit_error,
                "content": self.content, "levels": self.levels}


def _excluded_list(digits: DigitSet, amax):
    return [a for a in range(1, amax + 1) if a not in digits]


def cf_gap_sum(D, digits: DigitSet, ed: thermo.EigenData, depth=1, K=400, amax=None, n_quad=30):
    """lim_m sum_a sum_{|w|=m} |Phi_w(gap_a)|^D by pushing the gaps ``depth`` levels in and
    replacing each leaf by |J|^D h(mid J).

    Digits above K at each level are summed with the continuous-kappa integral.
    """
    if amax is None:
        amax = max(digits.exclude, default=0) if digits.step == 1 else 4000
    ex = _excluded_list(digits, amax)
    a = np.array([1.0 / (x + 1) for x in ex])
    b = np.array([1.0 / x for x in ex])
    tail_excl = 0.0
    if digits.step > 1:
        # excluded a > amax: gaps ~ 1/a^2 near 0 where h ~ h(0); sum of (1/(a(a+1)))^D
        j = np.arange(amax + 1, amax + 20001, dtype=float)
        j = j[[x not in digits for x in j.astype(int)]]
        tail_excl = float(np.sum((1 / (j * (j + 1))) ** D) * ed.h_at(0, np.array([0.0]))[0])
    heads = digits.upto(K).astype(float)
    first = digits.tail_start(K)
    if first is not None:
        heads = digits.upto(first - 1).astype(float)
    u, wq = np.polynomial.laguerre.laggauss(n_quad)

    def push(a, b):
        # apply every digit k: x -> 1/(x + k) reverses orientation
        A = 1.0 / (b[:, None] + heads[None, :])
        B = 1.0 / (a[:, None] + heads[None, :])
        return A.ravel(), B.ravel()

    def leaf(a, b):
        mid = 0.5 * (a + b)
        return np.sum((b - a) ** D * ed.h_at(0, mid))

    def tail_part(a, b):
        if first is None:
            return 0.0
        al = 2 * D - 1
        k0 = first - 0.5 * digits.step
        kap = k0 * np.exp(u / al)
        c = wq * np.exp(u) * kap / al / digits.step
        A = 1.0 / (b[:, None] + kap[None, :])
        B = 1.0 / (a[:, None] + kap[None, :])
        val = (B - A) ** D * ed.h_at(0, (0.5 * (A + B)).ravel()).reshape(A.shape)
        return float(np.sum(val * c[None, :]))

    total = tail_excl
    la, lb = a, b
    for _ in range(depth):
        total_tail = tail_part(la, lb)
        total += total_tail
        la, lb = push(la, lb)
    return float(total + leaf(la, lb))


def cf_content(digits: DigitSet, K=100, degree=24, depths=None):
    """Minkowski content of F_Lambda from the gap-sum limit and the entropy at the root."""
    if not digits.neighbor_condition():
        raise ConditionViolated(f"neighbour condition fails for {digits.label()}")
    spec = cf_system(digits, K, degree=degree)
    lo, hi, op = thermo.bowen_dimension(spec, tol=1e-11, return_op=True)
    D = thermo.pressure_root(spec, op, (lo - 1e-6, hi + 1e-6))
    if D >= 1:
        raise DomainError("content formula needs D < 1")
    lyap = thermo.lyapunov_exponent(spec, D, op=op)
    h = D * lyap
    ed = thermo.eigen_data(spec, D, op=op)
    if depths is None:
        depths = (1, 2) if digits.step == 1 else (0, 1)
    levels = [cf_gap_sum(D, digits, ed, depth=j) for j in depths]
    S = levels[-1]
    M = 2 ** (1 - D) / ((1 - D) * h) * S
    return CFContent(digits.label(), D, (lo, hi), lyap, h, S, abs(levels[-1] - levels[0]), float(M), levels)


def cf_neighborhood_length(digits: DigitSet, eps, cap=2 * 10 ** 7):
    """Exact lambda_1((F_Lambda)_eps) for a cofinite digit set: hull [0, 1] minus oversized gaps."""
    if digits.is_finite or digits.step != 1:
        raise DomainError("the interval oracle handles cofinite digit sets")
    ex = np.array(_excluded_list(digits, max(digits.exclude, default=0)), dtype=float)
    two = 2 * eps
    excess, nbig = 0.0, 0
    A, B, C, D = (np.array([1.0]), np.array([0.0]), np.array([0.0]), np.array([1.0]))
    seen = 0
    while A.size:
        # gaps of this level
        for a in ex:
            g = _image_length(A, B, C, D, 1 / (a + 1), 1 / a)
            big = g > two
            excess += float(np.sum(g[big] - two))
            nbig += int(big.sum())
        L = _image_length(A, B, C, D, 0.0, 1.0)
        keep = L > two
        A, B, C, D, L = A[keep], B[keep], C[keep], D[keep], L[keep]
        if not A.size:
            break
        # |phi_w phi_k [0,1]| <= L_w * max(distortion) / k(k+1): children beyond kmax are all small
        kmax = int(np.sqrt(4 * L.max() / two)) + 2
        ks = digits.upto(kmax).astype(float)
        nA = np.repeat(B, ks.size)
        nB = (A[:, None] + ks[None, :] * B[:, None]).ravel()
        nC = np.repeat(D, ks.size)
        nD = (C[:, None] + ks[None, :] * D[:, None]).ravel()
        Lc = _image_length(nA, nB, nC, nD, 0.0, 1.0)
        keep = Lc > two
        A, B, C, D = nA[keep], nB[keep], nC[keep], nD[keep]
        seen += A.size
        if seen > cap:
            raise thermo.NoConvergence("node budget exhausted")
    return 1.0 + two - excess


def cf_direct(digits: DigitSet, D, eps):
    return eps ** (D - 1) * cf_neighborhood_length(digits, eps)

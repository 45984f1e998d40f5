"""Renewal functions of finite similarity systems.

For maps with ratios r_i, weights e^{eta_i} and a counting weight kappa_i on
the first symbol, the renewal function at a point whose first symbol is x is

    N(t, x) = kappa_x f(t) + sum over words w != empty of kappa_{w_1} e^{S eta(w)} f(t - S xi(w)),

with S xi(w) = -sum log r_{w_j}.  The potentials are locally constant, so N
depends on a word only through its letter counts and its first letter; the
sum runs over count vectors with multinomial multiplicities.  A direct
depth-first enumeration is kept as the brute-force oracle.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import InconsistentVerdict, NoRoot, TailNotBounded
from . import thermo


# f-families: all vanish for T < 0, which makes N(t, x) a finite sum
def _f_indicator(T, beta=0.0):
    return np.where(np.asarray(T) >= 0, 1.0, 0.0)


def _f_exp(T, beta=1.0):
    T = np.asarray(T, dtype=float)
    return np.where(T >= 0, np.exp(-beta * np.maximum(T, 0)), 0.0)


F_FAMILIES = {"indicator": _f_indicator, "exp": _f_exp}


@dataclass
class RenewalProblem:
    ratios: np.ndarray
    kappa: np.ndarray = None
    eta: np.ndarray = None
    f: str = "indicator"
    beta: float = 1.0
    delta: float = field(default=float("nan"))

    def __post_init__(self):
        self.ratios = np.asarray(self.ratios, dtype=float)
        n = len(self.ratios)
        self.kappa = np.ones(n) if self.kappa is None else np.asarray(self.kappa, dtype=float)
        self.eta = np.zeros(n) if self.eta is None else np.asarray(self.eta, dtype=float)
        if np.any(self.kappa < 0):
            raise ValueError("kappa must be nonnegative")
        if self.f not in F_FAMILIES:
            raise TailNotBounded(f"no closed-form control for f-family {self.f!r}")
        self.xi = -np.log(self.ratios)
        if math.isnan(self.delta):
            self.delta = self._root()

    @classmethod
    def from_spec(cls, spec: thermo.SystemSpec, **kw):
        return cls(np.abs(spec.info["ratios"]), **kw)

    def _root(self):
        g = lambda d: math.log(np.sum(np.exp(self.eta - d * self.xi)))
        lo, hi = -50.0, 50.0
        if g(lo) < 0 or g(hi) > 0:
            raise NoRoot("pressure has no zero")
        while hi - lo > 1e-15 * max(1, abs(hi)):
            mid = 0.5 * (lo + hi)
            if g(mid) > 0:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def fval(self, T):
        return F_FAMILIES[self.f](T, self.beta)

    @property
    def weights(self):
        """Gibbs (= conformal, here Bernoulli) weights of the potential eta - delta xi."""
        return np.exp(self.eta - self.delta * self.xi)

    def lyapunov(self):
        p = self.weights
        return float(np.sum(p * self.xi))

    def f_transform(self, quad=True):
        """int e^{-T delta} f(T) dT."""
        if quad:
            val, _ = integrate.quad(lambda T: math.exp(-T * self.delta) * float(self.fval(T)), 0, np.inf)
            return val
        return 1.0 / self.delta if self.f == "indicator" else 1.0 / (self.delta + self.beta)

    def limit_constant(self):
        """G = int kappa dnu * int e^{-T delta} f / int xi dmu; h = 1 for locally constant potentials."""
        p = self.weights
        return float(np.sum(p * self.kappa)) * self.f_transform() / self.lyapunov()


def _count_terms(prob: RenewalProblem, t):
    """All count vectors c != 0 with c . xi <= t: returns (S, log multiplicity weight per first symbol)."""
    xi = prob.xi
    k = len(xi)
    if t < 0:
        return np.zeros(0), np.zeros((0, k))
    maxc = [int(math.floor(t / x + 1e-12)) for x in xi]
    S_list, W_list = [], []
    # enumerate lexicographically with pruning
    def rec(i, c, S):
        if i == k:
            if sum(c) == 0:
                return
            n = sum(c)
            base = math.lgamma(n) - sum(math.lgamma(ci + 1) for ci in c)
            ceta = float(np.dot(c, prob.eta))
            w = np.full(k, -np.inf)
            for j in range(k):
                if c[j] > 0:
                    # words with first symbol j: (n-1)! / prod (c - e_j)!  = base + log c_j
                    w[j] = base + math.log(c[j]) + ceta
            S_list.append(S)
            W_list.append(w)
            return
        for ci in range(0, maxc[i] + 1):
            s2 = S + ci * xi[i]
            if s2 > t + 1e-12:
                break
            rec(i + 1, c + [ci], s2)

    rec(0, [], 0.0)
    return np.array(S_list), np.array(W_list).reshape(-1, k)


class RenewalEvaluator:
    """Caches the count-vector expansion up to a horizon t_max."""

    def __init__(self, prob: RenewalProblem, t_max):
        self.prob = prob
        self.t_max = t_max
        S, W = _count_terms(prob, t_max)
        order = np.argsort(S)
        self.S = S[order]
        # combine first-symbol weights with kappa
        with np.errstate(under="ignore"):
            self.w = np.sum(np.exp(W[order]) * prob.kappa[None, :], axis=1)
        self.cw = np.cumsum(self.w)

    def __call__(self, t, x=0):
        """N(t, x) with x the first symbol (0-based) of the anchor point."""
        p = self.prob
        if t > self.t_max + 1e-12:
            raise TailNotBounded("t beyond the precomputed horizon")
        base = p.kappa[x] * float(p.fval(t))
        if p.f == "indicator":
            i = np.searchsorted(self.S, t, side="right")
            return base + (self.cw[i - 1] if i > 0 else 0.0)
        i = np.searchsorted(self.S, t, side="right")
        return base + float(np.sum(self.w[:i] * p.fval(t - self.S[:i])))

    def normalized(self, t, x=0):
        return math.exp(-t * self.prob.delta) * self(t, x)

    def cesaro(self, T, x=0):
        """(1/T) int_0^T e^{-t delta} N(t, x) dt, exact for both f-families."""
        p = self.prob
        d = p.delta
        i = np.searchsorted(self.S, T, side="right")
        S = np.concatenate([[0.0], self.S[:i]])
        w = np.concatenate([[p.kappa[x]], self.w[:i]])
        if p.f == "indicator":
            vals = (np.exp(-S * d) - math.exp(-T * d)) / d
        else:
            b = p.beta
            # int_S^T e^{-t d} e^{-b (t - S)} dt
            vals = np.exp(-S * d) * (1 - np.exp(-(d + b) * (T - S))) / (d + b)
        return float(np.sum(w * vals)) / T


def renewal_function(prob: RenewalProblem, t, x=0, evaluator=None):
    """(N(t, x), tail_bound).  The tail is zero: every f-family vanishes on negative arguments."""
    ev = evaluator if evaluator is not None and evaluator.t_max >= t else RenewalEvaluator(prob, max(t, 0.0))
    return ev(t, x), 0.0


def brute_force_renewal(prob: RenewalProblem, t, x=0, depth=40):
    """Depth-first enumeration of all words with S xi <= t (up to ``depth`` letters)."""
    xi, eta, kap = prob.xi, prob.eta, prob.kappa
    total = kap[x] * float(prob.fval(t))
    stack = [(j, xi[j], eta[j], 1) for j in range(len(xi))]
    while stack:
        first, S, E, n = stack.pop()
        if S > t + 1e-12:
            continue
        total += kap[first] * math.exp(E) * float(prob.fval(t - S))
        if n < depth:
            for j in range(len(xi)):
                stack.append((first, S + xi[j], E + eta[j], n + 1))
    return total


def renewal_residual(prob: RenewalProblem, t, x=0, evaluator=None):
    """Relative residual of N(t, x) = sum_i e^{eta_i} N(t - xi_i, i) + kappa_x f(t)."""
    ev = evaluator if evaluator is not None else RenewalEvaluator(prob, t)
    lhs = ev(t, x)
    rhs = prob.kappa[x] * float(prob.fval(t))
    for i in range(len(prob.xi)):
        ti = t - prob.xi[i]
        if ti >= 0:
            rhs += math.exp(prob.eta[i]) * ev(ti, i)
    return abs(lhs - rhs) / max(abs(lhs), 1e-300)


@dataclass
class AsymptoticReport:
    lattice: bool
    G: float
    delta: float
    span: float | None
    t_grid: np.ndarray
    normalized: np.ndarray  # e^{-t delta} N(t, x) / h(x), h = 1
    rel_error: np.ndarray  # non-lattice: |value - G| / G
    cesaro: np.ndarray
    cesaro_error: float
    period: float | None = None
    amplitude: float | None = None
    profile: np.ndarray | None = None
    x_spread: float = 0.0

    def to_csv(self):
        lines = ["t,normalized,limit"]
        for t, v in zip(self.t_grid, self.normalized):
            lines.append(f"{t:.10g},{v:.12g},{self.G:.12g}")
        return "\n".join(lines) + "\n"

    def to_json(self):
        return {"lattice": self.lattice, "G": self.G, "delta": self.delta, "span": self.span,
                "max_rel_error_tail": float(self.rel_error[-len(self.rel_error) // 4:].max()),
                "cesaro_error": self.cesaro_error, "period": self.period, "amplitude": self.amplitude,
                "x_spread": self.x_spread}


def jump_points(ev: RenewalEvaluator, t0, t1):
    """Discontinuities of t -> N(t, x) in (t0, t1]; for the indicator family these are the S-values."""
    i0 = np.searchsorted(ev.S, t0, side="right")
    i1 = np.searchsorted(ev.S, t1, side="right")
    return np.unique(np.round(ev.S[i0:i1], 12))


def measure_period(ev: RenewalEvaluator, t0, t1):
    """Period of the profile from the spacing of its jumps (indicator family)."""
    J = jump_points(ev, t0, t1)
    if len(J) < 3:
        return None
    d = np.diff(J)
    if d.max() - d.min() > 1e-6 * d.mean():
        return None
    return float((J[-1] - J[0]) / (len(J) - 1))


def verify_asymptotics(prob: RenewalProblem, t_grid, lattice=None, x=0):
    t_grid = np.asarray(t_grid, dtype=float)
    T = float(t_grid.max())
    ev = RenewalEvaluator(prob, T)
    G = prob.limit_constant()
    verdict = thermo.lattice_from_sums(prob.xi) if len(prob.xi) > 1 else None
    is_lat = verdict is not None and verdict.verdict == "lattice"
    if lattice is not None and lattice != is_lat:
        raise InconsistentVerdict("declared lattice class contradicts the Birkhoff sums")
    vals = np.array([ev.normalized(t, x) for t in t_grid])
    rel = np.abs(vals - G) / G
    ces = np.array([ev.cesaro(t, x) for t in t_grid])
    ces_err = abs(ces[-1] - G) / G
    spread = 0.0
    if len(prob.xi) > 1:
        others = np.array([ev.normalized(t, j) for t in t_grid[-8:] for j in range(len(prob.xi))]).reshape(8, -1)
        spread = float(np.max(np.ptp(others, axis=1)) / G)
    rep = AsymptoticReport(is_lat, G, prob.delta, verdict.a if is_lat else None, t_grid, vals, rel, ces, ces_err,
                           x_spread=spread)
    if is_lat:
        a = verdict.a
        rep.period = measure_period(ev, T - 6 * a, T) if prob.f == "indicator" else a
        ts = T - a + a * (np.arange(256) + 0.5) / 256
        prof = np.array([ev.normalized(t, x) for t in ts])
        prev = np.array([ev.normalized(t - a, x) for t in ts])
        rep.profile = prof
        rep.amplitude = float(prof.max() - prof.min())
        if np.max(np.abs(prof - prev)) > 0.05 * prof.mean():
            raise InconsistentVerdict("profile is not periodic with the lattice span")
    elif rel[-1] > 0.2:
        raise InconsistentVerdict("non-lattice residuals do not settle")
    return rep

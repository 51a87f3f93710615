"""Explicit constant ledger for the certified eigenvalue lower bound.

Every quantity the certification pipeline needs is computed here in
closed form from six user-facing inputs (dimension n, norm exponent p,
diameter bound D, closeness parameter delta, Sobolev constant C_s, and
a rough spectral lower bound Lambda_rough), plus the measured or
a-priori value of the ground-state shift sigma.  C_s and Lambda_rough
are deliberately inputs rather than computed: their explicit expressions
live in the isoperimetric literature and hard-coding a formula here
would invent one.

The chain is

    delta  ->  tau, A(delta), B(delta)        (transform bookkeeping)
           ->  C1, C2, b                      (gradient-estimate slopes)
           ->  alpha = (1-delta)^2 / b        (certified fraction of the
                                               flat-model eigenvalue)

and, independently,

    (n, p, D, delta, C_s, Lambda_rough)
           ->  four admissibility terms whose minimum eps_max is the
               integral-curvature threshold: measured kbar(p, 0) below
               eps_max activates every downstream estimate.

The Moser-iteration constant A_moser is an infinite product; it is
evaluated with a certified geometric tail bound so the returned value is
always an upper bound (conservative for eps_max, which divides by it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

from .errors import BadExponent, DeltaTooLarge, NoConvergence, Unreachable
from .modelode import z_sup

DELTA_MAX = math.sqrt(10.0) - 3.0
# admissible deltas stay a hair inside the analytic root of
# delta^2 + 6 delta - 1 = 0, keeping 1 - sqrt(B(delta)) bounded away
# from zero
DELTA_CAP = DELTA_MAX - 1e-6


@dataclass(frozen=True)
class LedgerInput:
    """User-facing inputs of the constant pipeline.

    sigma is the ground-state shift to use for C2; None means "derive
    the a-priori bound 4 * eps_max(delta)" wherever a value is needed.
    """

    n: int
    p: float
    D: float
    delta: float
    C_s: float
    Lambda_rough: float
    sigma: Optional[float] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ValueError(f"n = {self.n} must be an integer >= 2")
        if self.p <= self.n / 2.0:
            raise BadExponent(f"p = {self.p} must exceed n/2 = {self.n / 2}")
        if self.D <= 0.0:
            raise ValueError(f"D = {self.D} must be positive")
        if not (0.0 < self.delta <= DELTA_CAP):
            raise DeltaTooLarge(
                f"delta = {self.delta} outside (0, {DELTA_CAP:.9f}]")
        if self.C_s <= 0.0:
            raise ValueError(f"C_s = {self.C_s} must be positive")
        if self.Lambda_rough <= 0.0:
            raise ValueError(
                f"Lambda_rough = {self.Lambda_rough} must be positive")
        if self.sigma is not None and self.sigma < 0.0:
            raise ValueError(f"sigma = {self.sigma} must be >= 0")


@dataclass(frozen=True)
class GradientConstants:
    """Slope/offset pair (and friends) of the gradient-estimate line.

    The certified pointwise estimate takes the form
    J |grad u|^2 <= lambda_tilde (1 - u^2) + ... with
    lambda_tilde = C1 * lambda1 + C2, so C1 is a slope, C2 an offset,
    and alpha = (1-delta)^2 / b is the certified fraction of the
    flat-model eigenvalue pi^2/D^2.
    """

    tau: float
    A: float
    B: float
    z_peak: float      # sup of the model function at eta = 1 + delta
    C1: float
    C2: float
    b: float
    alpha: float

    @property
    def lambda_tilde_slope(self) -> float:
        return self.C1

    @property
    def lambda_tilde_offset(self) -> float:
        return self.C2

    def lambda_tilde(self, lambda1: float) -> float:
        return self.C1 * lambda1 + self.C2


def gradient_constants(inp: LedgerInput,
                       sigma: Optional[float] = None) -> GradientConstants:
    """Closed-form constants of the gradient estimate for one delta.

    sigma overrides inp.sigma; if both are None the a-priori bound
    4 * eps_max is derived on the spot (one extra pipeline evaluation).
    """
    d = inp.delta
    if sigma is None:
        sigma = inp.sigma
    if sigma is None:
        sigma = 4.0 * epsilon_max(inp).eps_max
    if sigma < 0.0:
        raise ValueError(f"sigma = {sigma} must be >= 0")
    tau = (3.0 + 4.0 * d) / (2.0 * d)
    A = 2.0 * d * (1.0 + d)
    B = d * (5.0 + d) / (1.0 - d)
    if B >= 1.0:
        raise DeltaTooLarge(f"B({d}) = {B} >= 1")
    _, z_peak = z_sup(1.0 + d)
    root_B = math.sqrt(B)
    C1 = (1.0 + d + math.sqrt(A)) / (1.0 - root_B)
    C2 = sigma / (2.0 * (1.0 - root_B)) * (z_peak / math.sqrt(A)
                                           + 1.0 / (2.0 * root_B))
    b = C1 + C2 / inp.Lambda_rough
    alpha = (1.0 - d) ** 2 / b
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha = {alpha} left (0, 1); inputs inconsistent")
    return GradientConstants(tau=tau, A=A, B=B, z_peak=z_peak,
                             C1=C1, C2=C2, b=b, alpha=alpha)


def moser_constant(C_s: float, p: float, n: int, psi_norm: float,
                   tail_tol: float = 1e-10) -> float:
    """Upper bound on the iteration constant A_moser.

    The constant is the infinite product
        prod_{j>=1} ((2 A_{l_{j-1} - 1})^gamma + 2)^(2 / l_j),
    A_l = C_s (l+1) / (2 sqrt(l)) * sqrt(psi_norm),  l_j = 2 mu^j,
    gamma = s/(s-r), s = 2p/n, r = (s+1)/2, mu = r n/(r n - 2).

    Factors are accumulated in log space until the remainder is covered
    by a certified geometric tail: A_{l-1} <= C_s sqrt(psi_norm * l) for
    l >= 4/3 and log(x + 2) <= max(log x, 0) + log 3 turn every later
    factor into P + Q*(j-1) times mu^{-j}, which sums in closed form.
    The returned value (truncated product times exp of the tail bound)
    is therefore always an upper bound, within tail_tol relative of the
    true constant.
    """
    if p <= n / 2.0:
        raise BadExponent(f"p = {p} must exceed n/2 = {n / 2}")
    if psi_norm < 1.0:
        raise ValueError(f"psi_norm = {psi_norm} must be >= 1")
    if C_s <= 0.0:
        raise ValueError("C_s must be positive")
    s = 2.0 * p / n
    r = (s + 1.0) / 2.0
    mu = r * n / (r * n - 2.0)
    gamma = s / (s - r)
    root_psi = math.sqrt(psi_norm)

    def a_coeff(l: float) -> float:
        return C_s * (l + 1.0) / (2.0 * math.sqrt(l)) * root_psi

    x = 1.0 / mu
    c0 = gamma * math.log(2.0 * C_s * root_psi)
    c1 = gamma / 2.0
    P = c0 + c1 * math.log(2.0) + math.log(3.0)
    Q = c1 * math.log(mu)

    log_sum = 0.0
    l_prev = 2.0  # l_0
    for j in range(1, 100_000):
        l_j = 2.0 * mu ** j
        contrib = (2.0 / l_j) * math.log(
            (2.0 * a_coeff(l_prev - 1.0)) ** gamma + 2.0)
        log_sum += contrib
        # tail over j' > j, valid once the log argument bound is >= 1
        # (c0 + c1 log l_j >= 0) so max(log, 0) drops
        if l_prev >= 4.0 / 3.0 and c0 + c1 * math.log(l_j) >= 0.0:
            xp = x ** (j + 1)
            tail = (P * xp / (1.0 - x)
                    + Q * xp * (j - (j - 1) * x) / (1.0 - x) ** 2)
            if 0.0 <= tail <= tail_tol and contrib <= tail_tol * (1.0 - x):
                return math.exp(log_sum + tail)
        l_prev = l_j
    raise NoConvergence("Moser product tail failed to certify")


@dataclass(frozen=True)
class EpsilonBreakdown:
    """The four admissibility terms and the derived quantities."""

    terms: tuple
    eps_max: float
    A_moser: float
    K1: float
    K2: float
    C3: float
    B_pn: float
    alpha_tilde: float
    psi_norm: float


def _b_exponent_constant(p: float, n: int) -> float:
    """The diameter-scaling constant of the comparison volume bound."""
    return (((2.0 * p - 1.0) / p) ** 0.5
            * (n - 1.0) ** (1.0 - 1.0 / (2.0 * p))
            * ((2.0 * p - 2.0) / (2.0 * p - n)) ** ((p - 1.0) / (2.0 * p)))


def epsilon_max(inp: LedgerInput) -> EpsilonBreakdown:
    """Largest certified integral-curvature threshold for these inputs.

    Terms one and two do not involve the Moser constant; their minimum
    seeds the worst-case norm psi_norm = 1 + 6 (tau - 1) * eps used to
    evaluate A_moser for terms three and four.  Seeding with the larger
    provisional eps only inflates A_moser, which only shrinks terms
    three and four, so the returned minimum is conservative (valid).
    """
    n, p, D, d = inp.n, inp.p, inp.D, inp.delta
    B_pn = _b_exponent_constant(p, n)
    alpha_tilde = math.log1p(2.0 ** (-(p + 1.0))) / (B_pn * D)
    term1 = (n - 1.0) * alpha_tilde ** 2
    term2 = d / (12.0 * inp.C_s ** 2 * (3.0 + 2.0 * d))

    tau = (3.0 + 4.0 * d) / (2.0 * d)
    psi_norm = 1.0 + 6.0 * (tau - 1.0) * min(term1, term2)
    A_moser = moser_constant(inp.C_s, p, n, psi_norm)
    K1 = math.sqrt(6.0 / inp.Lambda_rough * (2.0 + 3.0 / d))
    K2 = A_moser * (K1 + (9.0 + 6.0 * d) / d)
    term3 = ((math.sqrt(7.0) - 2.0) / K2) ** 2
    # the exponent (9+6d)/(3+2d) is identically 3
    term4 = 1.0 / (8.0 * K2 * (4.0 / (3.0 + 2.0 * d)) ** 3)
    C3 = (4.0 / (3.0 + 2.0 * d)) ** ((3.0 + 2.0 * d) / (3.0 + 4.0 * d))

    terms = (term1, term2, term3, term4)
    if min(terms) <= 0.0:
        raise ValueError(f"non-positive admissibility term: {terms}")
    return EpsilonBreakdown(terms=terms, eps_max=min(terms),
                            A_moser=A_moser, K1=K1, K2=K2, C3=C3,
                            B_pn=B_pn, alpha_tilde=alpha_tilde,
                            psi_norm=psi_norm)


def gallot_feasible(eps: float, n: int, p: float, D: float):
    """Whether eps is admissible for the comparison volume estimate.

    Evaluates the closed-form right side at the prescribed exponent rate
    alpha_tilde = log(1 + 2^-(p+1)) / (B_pn D) and compares; the first
    admissibility term of epsilon_max is this bound evaluated exactly,
    so it sits on the boundary (a small relative slack absorbs the
    different floating-point routes to the same number).

    Returns (feasible, alpha_tilde).
    """
    if p <= n / 2.0:
        raise BadExponent(f"p = {p} must exceed n/2 = {n / 2}")
    if D <= 0.0:
        raise ValueError("D must be positive")
    B_pn = _b_exponent_constant(p, n)
    alpha_tilde = math.log1p(2.0 ** (-(p + 1.0))) / (B_pn * D)
    grow = math.expm1(B_pn * alpha_tilde * D)
    rhs = (n - 1.0) * alpha_tilde ** 2 * (
        1.0 / (2.0 ** (1.0 / p) * grow ** (1.0 / p)) - 1.0)
    return eps <= rhs * (1.0 + 1e-12), alpha_tilde


@dataclass(frozen=True)
class ConstantLedger:
    """Full flattened ledger: gradient constants plus the eps pipeline."""

    inputs: LedgerInput
    sigma_used: float
    tau: float
    A: float
    B: float
    z_peak: float
    C1: float
    C2: float
    b: float
    alpha: float
    A_moser: float
    K1: float
    K2: float
    C3: float
    B_pn: float
    alpha_tilde: float
    eps_terms: tuple
    eps_max: float

    def to_dict(self) -> dict:
        return {
            "n": self.inputs.n, "p": self.inputs.p, "D": self.inputs.D,
            "delta": self.inputs.delta, "C_s": self.inputs.C_s,
            "Lambda_rough": self.inputs.Lambda_rough,
            "sigma_used": self.sigma_used,
            "tau": self.tau, "A": self.A, "B": self.B,
            "z_peak": self.z_peak, "C1": self.C1, "C2": self.C2,
            "b": self.b, "alpha": self.alpha, "A_moser": self.A_moser,
            "K1": self.K1, "K2": self.K2, "C3": self.C3,
            "B_pn": self.B_pn, "alpha_tilde": self.alpha_tilde,
            "term1": self.eps_terms[0], "term2": self.eps_terms[1],
            "term3": self.eps_terms[2], "term4": self.eps_terms[3],
            "eps_max": self.eps_max,
        }


def build_ledger(inp: LedgerInput) -> ConstantLedger:
    """Evaluate the whole pipeline once for nominal inputs.

    inp.sigma = None uses the a-priori shift bound 4 * eps_max.
    """
    eps = epsilon_max(inp)
    sigma = inp.sigma if inp.sigma is not None else 4.0 * eps.eps_max
    grad = gradient_constants(inp, sigma=sigma)
    return ConstantLedger(
        inputs=inp, sigma_used=sigma, tau=grad.tau, A=grad.A, B=grad.B,
        z_peak=grad.z_peak, C1=grad.C1, C2=grad.C2, b=grad.b,
        alpha=grad.alpha, A_moser=eps.A_moser, K1=eps.K1, K2=eps.K2,
        C3=eps.C3, B_pn=eps.B_pn, alpha_tilde=eps.alpha_tilde,
        eps_terms=eps.terms, eps_max=eps.eps_max)


_DELTA_GRID_LO = 1e-4
_DELTA_GRID_POINTS = 64


def delta_for_alpha(alpha_target: float, n: int, p: float, D: float,
                    C_s: float, Lambda_rough: float,
                    sigma: Optional[float] = None,
                    refine_rel: float = 1e-12):
    """Largest admissible delta certifying at least alpha_target.

    For each delta on a logarithmic grid the self-consistent chain
    delta -> eps_max(delta) -> sigma bound 4 eps_max -> alpha(delta) is
    evaluated (sigma, when given, short-circuits the bound, e.g. 0 for
    exact-solution studies).  No global monotonicity of alpha(delta) is
    assumed: the scan keeps the largest qualifying grid point and
    bisects against its larger neighbor.  Returns (delta, alpha_there).

    Raises Unreachable -- carrying best_alpha and best_delta -- when no
    grid point reaches the target.
    """
    if not (0.0 < alpha_target < 1.0):
        raise ValueError(f"alpha_target = {alpha_target} not in (0, 1)")

    def alpha_of(d: float) -> float:
        li = LedgerInput(n=n, p=p, D=D, delta=d, C_s=C_s,
                         Lambda_rough=Lambda_rough, sigma=sigma)
        return gradient_constants(li).alpha

    grid = [_DELTA_GRID_LO * (DELTA_CAP / _DELTA_GRID_LO) ** (i / (
        _DELTA_GRID_POINTS - 1.0)) for i in range(_DELTA_GRID_POINTS)]
    alphas = [alpha_of(d) for d in grid]
    qualifying = [i for i, a in enumerate(alphas) if a >= alpha_target]
    if not qualifying:
        i_best = max(range(len(grid)), key=lambda i: alphas[i])
        raise Unreachable(
            f"target alpha {alpha_target} unreachable; best "
            f"{alphas[i_best]:.9g} at delta = {grid[i_best]:.6g}",
            best_alpha=alphas[i_best], best_delta=grid[i_best])
    i = max(qualifying)
    lo, a_lo = grid[i], alphas[i]
    if i + 1 >= len(grid):
        return lo, a_lo
    hi = grid[i + 1]  # alpha there < target
    while hi - lo > refine_rel * hi:
        mid = 0.5 * (lo + hi)
        a_mid = alpha_of(mid)
        if a_mid >= alpha_target:
            lo, a_lo = mid, a_mid
        else:
            hi = mid
    return lo, a_lo


def reference_bounds(n: int, H: float, D: float, s: float = 0.5) -> dict:
    """Classical first-eigenvalue lower bounds for comparison plots.

    Returns a dict with keys lichnerowicz (None unless H > 0),
    zhong_yang, yang (None unless H < 0), shi_zhang.
    """
    if D <= 0.0:
        raise ValueError("D must be positive")
    if not (0.0 < s < 1.0):
        raise ValueError("s must lie in (0, 1)")
    base = math.pi ** 2 / D ** 2
    out = {
        "zhong_yang": base,
        "lichnerowicz": n * H if H > 0.0 else None,
        "yang": None,
        "shi_zhang": 4.0 * (s - s * s) * base + s * (n - 1.0) * H,
    }
    if H < 0.0:
        c_n = max(math.sqrt(n - 1.0), math.sqrt(2.0))
        out["yang"] = base * math.exp(-c_n * math.sqrt((n - 1.0) * abs(H)) * D)
    return out

"""Probabilistic coherence-based recovery conditions for z = A x + B e.

Every condition is written as an interval for the free parameter delta: the
smallest-singular-value condition gives a lower end ``delta_min`` and the
support conditions give an upper end ``delta_max``. A guarantee holds exactly
when that interval is non-empty inside (0, 1) (or, with both supports known,
when ``delta_min <= 1``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .dictionary import CoherenceProfile

E_QUARTER = math.exp(0.25)
BETA_RTOL = 1e-12


class Program(enum.Enum):
    L0 = "l0"
    L1 = "l1"
    PSEUDOINVERSE = "pinv"


class Binding(enum.Enum):
    SIGMA_MIN = "sigma_min"
    SUPPORT_E = "support_e"
    SUPPORT_X = "support_x"
    OUT_OF_SCOPE = "out_of_scope"


class BetaRule(enum.Enum):
    LOG_M = "log-m"
    LOG_M_OVER_3 = "log-m-over-3"


class BetaFloorError(ValueError):
    pass


@dataclass(frozen=True)
class Scenario:
    """Which supports are known, which are random, and which program recovers."""

    x_known: bool
    e_known: bool
    x_random: bool
    e_random: bool
    program: Program

    def __post_init__(self):
        both = self.x_known and self.e_known
        if self.program is Program.PSEUDOINVERSE and not both:
            raise ValueError("pseudo-inverse recovery needs both supports known")
        if both and self.program is not Program.PSEUDOINVERSE:
            raise ValueError("with both supports known the recovery program is the pseudo-inverse")

    @property
    def randomness(self) -> str | None:
        """'ra' (X random, E arbitrary), 'ar', 'rr', or None when both are arbitrary."""
        return {(True, False): "ra", (False, True): "ar", (True, True): "rr"}.get(
            (self.x_random, self.e_random))

    @property
    def case(self) -> str:
        """Label of the matching summary-table cell; a trailing ' (swapped)' marks mirrored cells."""
        col = {(False, False): 0, (True, False): 1, (False, True): 2, (True, True): 3}[
            (self.x_random, self.e_random)]
        if self.x_known and self.e_known:
            row = ["1a", "1b", "1b (swapped)", "1c"]
        elif self.e_known:
            row = ["2a", "2b", "2c (swapped)", "2d"]
        elif self.x_known:
            row = ["2a (swapped)", "2c", "2b (swapped)", "2d (swapped)"]
        else:
            row = ["3a", "3b", "3b (swapped)", "3c"]
        return row[col]

    def swapped(self) -> "Scenario":
        return Scenario(self.e_known, self.x_known, self.e_random, self.x_random, self.program)


@dataclass(frozen=True)
class SparsityPoint:
    nx: int
    ne: int
    beta: float

    def __post_init__(self):
        if self.nx < 0 or self.ne < 0:
            raise ValueError("sparsities must be non-negative")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    def swapped(self) -> "SparsityPoint":
        return SparsityPoint(self.ne, self.nx, self.beta)


@dataclass(frozen=True)
class GuaranteeResult:
    feasible: bool
    delta_min: float
    delta_max: float
    binding: Binding
    success_probability_bound: float
    case: str = ""
    in_scope: bool = True

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "delta_min": self.delta_min,
            "delta_max": self.delta_max,
            "binding": self.binding.value,
            "success_probability_bound": self.success_probability_bound,
            "case": self.case,
            "in_scope": self.in_scope,
        }


def _log(n: int) -> float:
    return math.log(n) if n > 0 else -math.inf


def check_beta_floor(randomness: str | None, pt: SparsityPoint) -> None:
    """Raise BetaFloorError when beta is below log(n) of a randomly drawn support."""
    floors = []
    if randomness in ("ra", "rr"):
        floors.append(("log(nx)", _log(pt.nx)))
    if randomness in ("ar", "rr"):
        floors.append(("log(ne)", _log(pt.ne)))
    for name, value in floors:
        if pt.beta < value * (1 - BETA_RTOL):
            raise BetaFloorError(f"beta={pt.beta:.6g} is below the floor {name}={value:.6g}")


def _indicator_term(mu, k, n, norm):
    return 2.0 * k / n * norm * norm if mu != 0 else 0.0


def smin_rhs_ra(p: CoherenceProfile, pt: SparsityPoint) -> float:
    """Right-hand side of the sigma_min condition for X random, E arbitrary."""
    nx, ne, beta = pt.nx, pt.ne, pt.beta
    return (p.norm_a * p.norm_b * math.sqrt(nx / p.n_a)
            + 12.0 * p.mu_a * math.sqrt(beta * nx)
            + max(ne - 1, 0) * p.mu_b
            + _indicator_term(p.mu_a, nx, p.n_a, p.norm_a)
            + 3.0 * p.mu_m * math.sqrt(2.0 * beta * ne))


def smin_rhs_ar(p: CoherenceProfile, pt: SparsityPoint) -> float:
    """Same as :func:`smin_rhs_ra` with the roles of (A, x) and (B, e) swapped."""
    nx, ne, beta = pt.nx, pt.ne, pt.beta
    return (p.norm_a * p.norm_b * math.sqrt(ne / p.n_b)
            + 12.0 * p.mu_b * math.sqrt(beta * ne)
            + max(nx - 1, 0) * p.mu_a
            + _indicator_term(p.mu_b, ne, p.n_b, p.norm_b)
            + 3.0 * p.mu_m * math.sqrt(2.0 * beta * nx))


def smin_rhs_rr(p: CoherenceProfile, pt: SparsityPoint) -> float:
    nx, ne, beta = pt.nx, pt.ne, pt.beta
    cross = min(
        3.0 * p.mu_m * math.sqrt(2.0 * beta * nx) + math.sqrt(ne / p.n_b) * p.norm_ab,
        3.0 * p.mu_m * math.sqrt(2.0 * beta * ne) + math.sqrt(nx / p.n_a) * p.norm_ab,
    )
    return (12.0 * math.sqrt(beta) * (p.mu_a * math.sqrt(nx) + p.mu_b * math.sqrt(ne))
            + _indicator_term(p.mu_a, nx, p.n_a, p.norm_a)
            + _indicator_term(p.mu_b, ne, p.n_b, p.norm_b)
            + cross)


_SMIN = {"ra": smin_rhs_ra, "ar": smin_rhs_ar, "rr": smin_rhs_rr}


def xi_values(p: CoherenceProfile, nx: int, ne: int) -> tuple[float, float, float]:
    xi_e = math.sqrt(p.mu_a ** 2 * nx + p.mu_m ** 2 * ne)
    xi_x = math.sqrt(p.mu_m ** 2 * nx + p.mu_b ** 2 * ne)
    return xi_e, xi_x, max(xi_e, xi_x)


def _support_delta_max(xi_sq: float, n_cols: int, beta: float, program: Program) -> float:
    l0 = 1.0 - xi_sq
    if program is not Program.L1:
        return l0
    # the l1 guarantees also carry the l0 condition, which only binds when xi^2 > 2 (log n + beta)
    return min(l0, 1.0 - math.sqrt(2.0 * xi_sq * (math.log(n_cols) + beta)))


def support_condition_E(p: CoherenceProfile, pt: SparsityPoint, program: Program) -> float:
    """Upper end delta_max of the support condition when E is known (columns of A compete)."""
    xi_e = p.mu_a ** 2 * pt.nx + p.mu_m ** 2 * pt.ne
    return _support_delta_max(xi_e, p.n_a, pt.beta, program)


def support_condition_X(p: CoherenceProfile, pt: SparsityPoint, program: Program) -> float:
    """Upper end delta_max of the support condition when X is known (columns of B compete)."""
    xi_x = p.mu_m ** 2 * pt.nx + p.mu_b ** 2 * pt.ne
    return _support_delta_max(xi_x, p.n_b, pt.beta, program)


def success_probability_bound(program: Program, beta: float) -> float:
    failure = 3.0 * math.exp(-beta) if program is Program.L1 else math.exp(-beta)
    return max(0.0, 1.0 - failure)


def check_guarantee(scenario: Scenario, profile: CoherenceProfile,
                    pt: SparsityPoint) -> GuaranteeResult:
    prob = success_probability_bound(scenario.program, pt.beta)
    kind = scenario.randomness
    if kind is None:
        # both supports arbitrary: covered by deterministic prior results only
        return GuaranteeResult(False, math.nan, math.nan, Binding.OUT_OF_SCOPE, prob,
                               scenario.case, in_scope=False)
    check_beta_floor(kind, pt)
    delta_min = E_QUARTER * _SMIN[kind](profile, pt)

    if scenario.x_known and scenario.e_known:
        return GuaranteeResult(delta_min <= 1.0, delta_min, 1.0, Binding.SIGMA_MIN, prob,
                               scenario.case)

    candidates = []
    if not scenario.x_known:
        candidates.append((support_condition_E(profile, pt, scenario.program), Binding.SUPPORT_E))
    if not scenario.e_known:
        candidates.append((support_condition_X(profile, pt, scenario.program), Binding.SUPPORT_X))
    delta_max, support_binding = min(candidates, key=lambda c: c[0])
    feasible = delta_min < delta_max and delta_max > 0.0
    # room left below delta = 1 for the sigma_min condition vs room above delta = 0 for support
    binding = Binding.SIGMA_MIN if 1.0 - delta_min < delta_max else support_binding
    return GuaranteeResult(feasible, delta_min, delta_max, binding, prob, scenario.case)


def resolve_beta(rule, m: float) -> float:
    """Turn a BetaRule, its string value, or an explicit number into beta."""
    if isinstance(rule, str):
        rule = BetaRule(rule)
    if rule is BetaRule.LOG_M:
        return math.log(m)
    if rule is BetaRule.LOG_M_OVER_3:
        return math.log(m) / 3.0
    beta = float(rule)
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {rule!r}")
    return beta


def default_beta_rule(program: Program) -> BetaRule:
    return BetaRule.LOG_M_OVER_3 if program is Program.L1 else BetaRule.LOG_M


def is_feasible(scenario: Scenario, profile: CoherenceProfile, pt: SparsityPoint) -> bool:
    """Like check_guarantee(...).feasible but a beta-floor violation counts as infeasible."""
    try:
        return check_guarantee(scenario, profile, pt).feasible
    except BetaFloorError:
        return False


def max_recoverable_nx(scenario: Scenario, profile: CoherenceProfile, ne: int, beta_rule) -> int:
    """Largest nx in [0, n_a] with a feasible guarantee, by bisection.

    Feasibility is non-increasing in nx (every term of every condition grows
    with nx, and so does the floor log(nx)), which makes bisection exact.
    """
    beta = resolve_beta(beta_rule, profile.m)

    def ok(nx):
        return is_feasible(scenario, profile, SparsityPoint(nx, ne, beta))

    if not ok(1):
        return 0
    lo, hi = 1, profile.n_a
    if ok(hi):
        return hi
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _max_t_below(a: float, b: float, c: float) -> float:
    """Supremum of t >= 0 with a t^2 + b t + c < 0, for a >= 0 (0 if the set is empty)."""
    if c >= 0 and b >= 0:
        return 0.0
    if a == 0.0:
        if b <= 0:
            return math.inf
        return -c / b
    disc = b * b - 4 * a * c
    if disc <= 0:
        return 0.0
    # stable form of the larger root
    root = (2 * -c) / (b + math.sqrt(disc)) if b > 0 else (-b + math.sqrt(disc)) / (2 * a)
    return max(root, 0.0)


def _beta_cap(beta: float) -> int:
    """Largest integer n with log(n) <= beta (within the floor tolerance)."""
    if beta > 700:
        return 2 ** 62
    n = int(math.floor(math.exp(beta)))
    while n > 1 and math.log(n) * (1 - BETA_RTOL) > beta:
        n -= 1
    while math.log(n + 1) * (1 - BETA_RTOL) <= beta:
        n += 1
    return n


def closed_form_max_nx(scenario: Scenario, profile: CoherenceProfile, ne: int, beta: float) -> int:
    """Max nx for Cases 2b/2d from the quadratic in sqrt(nx).

    With E known and X unknown, each condition has the form
    a nx + b sqrt(nx) + c < 0. This holds for the l0 program in general and for
    the l1 program whenever mu_a = 0 (the support condition then does not
    depend on nx). The random-random case is the union of the two branches of
    the cross-term minimum.
    """
    if not (scenario.e_known and not scenario.x_known and scenario.x_random):
        raise ValueError("closed form applies to E known, X unknown and random")
    p = profile
    if scenario.program is Program.L1 and p.mu_a != 0:
        raise ValueError("the l1 support condition is not quadratic in sqrt(nx) when mu_a != 0")
    if scenario.e_random and beta < _log(ne) * (1 - BETA_RTOL):
        return 0
    e = E_QUARTER
    ind = 2.0 / p.n_a * p.norm_a ** 2 if p.mu_a != 0 else 0.0
    if scenario.program is Program.L0:
        quad_support = p.mu_a ** 2
        const_support = 1.0 - p.mu_m ** 2 * ne
    else:
        quad_support = 0.0
        const_support = support_condition_E(p, SparsityPoint(0, ne, beta), Program.L1)

    # e^{1/4} (a' nx + b' sqrt(nx) + c') < const_support - quad_support nx
    branches = []
    if scenario.e_random:
        base_b = 12.0 * math.sqrt(beta) * p.mu_a
        base_c = 12.0 * math.sqrt(beta) * p.mu_b * math.sqrt(ne) + _indicator_term(p.mu_b, ne, p.n_b, p.norm_b)
        branches.append((ind, base_b + 3.0 * p.mu_m * math.sqrt(2.0 * beta),
                         base_c + math.sqrt(ne / p.n_b) * p.norm_ab))
        branches.append((ind, base_b + p.norm_ab / math.sqrt(p.n_a),
                         base_c + 3.0 * p.mu_m * math.sqrt(2.0 * beta * ne)))
    else:
        branches.append((ind, p.norm_a * p.norm_b / math.sqrt(p.n_a) + 12.0 * p.mu_a * math.sqrt(beta),
                         max(ne - 1, 0) * p.mu_b + 3.0 * p.mu_m * math.sqrt(2.0 * beta * ne)))
    t = max(_max_t_below(e * a + quad_support, e * b, e * c - const_support) for a, b, c in branches)
    if const_support <= 0:
        return 0
    bound = t * t
    nx = p.n_a if math.isinf(bound) else min(p.n_a, math.ceil(bound) - 1)
    return max(0, min(nx, _beta_cap(beta)))


def scaling_condition(m: float, nx: float, ne: float) -> bool:
    """Combined sigma_min and support condition for unitary, maximally incoherent pairs."""
    if m < 2:
        raise ValueError("m must be at least 2")
    lhs = math.exp(-0.25) * math.sqrt(m)
    rhs = math.sqrt(nx) + (3.0 * math.sqrt(2.0) + 2.0 * math.exp(-0.25)) * math.sqrt(ne * math.log(m))
    return lhs > rhs


def no_error_condition(profile_a: CoherenceProfile, nx: int, beta: float, program: Program) -> bool:
    """Recovery condition without interference (ne = 0); only the A-side fields are used."""
    p = profile_a
    rhs = p.norm_a * math.sqrt(nx / p.n_a) + 12.0 * p.mu_a * math.sqrt(beta * nx)
    c = nx * p.mu_a ** 2
    if program is Program.L1:
        lhs = math.exp(-0.25) * (1.0 - math.sqrt(2.0 * c * (math.log(p.n_a) + beta)))
    else:
        lhs = math.exp(-0.25) * (1.0 - c)
    return lhs >= rhs

"""Randomized rounding of segment borders onto the 1/k inventory grid.

An item holding k units only ever has a fraction sold that is a multiple of
1/k, so the ideal value function is replaced by a random perturbation whose
borders are comonotonically rounded to the grid using a single uniform seed.
The module also provides the optimal single-unit randomized procedure and a
numeric verifier for the two conditions (per-step optimality and
feasibility-in-expectation) that certify a competitive ratio c.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field

from .errors import DomainError, ValidationError
from .valuefn import PriceSet, ValueFunction, build_value_function

# fractional parts this close to an integer are treated as exact multiples
_FRAC_SNAP = 1e-12


def _as_vf(vf_or_prices):
    if isinstance(vf_or_prices, ValueFunction):
        return vf_or_prices
    return build_value_function(vf_or_prices)


@dataclass(frozen=True)
class PerturbedValueFunction:
    """A realized rounding of the segment borders, with the induced value
    function tabulated on the grid {0, 1/k, ..., 1}."""

    k: int
    tilde_borders: tuple  # length m + 1, multiples of 1/k
    grid_values: tuple  # length k + 1
    seed_w: float | None = None

    @property
    def m(self):
        return len(self.tilde_borders) - 1

    def value(self, q):
        """Value at grid point q = N/k."""
        idx = int(round(q * self.k))
        if abs(q * self.k - idx) > 1e-9 or not 0 <= idx <= self.k:
            raise DomainError("q=%r is not a grid point of 1/%d" % (q, self.k))
        return self.grid_values[idx]

    def value_at_count(self, n_sold):
        return self.grid_values[n_sold]

    def border_value(self, j):
        """Value at the rounded border of price level j."""
        return self.value(self.tilde_borders[j])


def round_borders(vf, k, w_seed):
    """Comonotone rounding of all borders to multiples of 1/k: border j
    moves up to (floor(L(j) k) + 1)/k exactly when the shared seed falls
    below its fractional part, else down.  Exact multiples never move."""
    vf = _as_vf(vf)
    if not isinstance(k, int) or k < 1:
        raise DomainError("k must be a positive integer")
    if not 0.0 <= w_seed < 1.0:
        raise DomainError("seed must lie in [0, 1)")
    out = []
    for lj in vf.borders:
        x = lj * k
        fl = math.floor(x)
        frac = x - fl
        if frac <= _FRAC_SNAP:
            out.append(fl / k)
        elif frac >= 1.0 - _FRAC_SNAP:
            out.append((fl + 1) / k)
        elif w_seed < frac:
            out.append((fl + 1) / k)
        else:
            out.append(fl / k)
    out[0] = 0.0
    out[-1] = 1.0
    return out


def _grid_from_borders(vf, k, tilde_borders):
    """Tabulate the perturbed value function: per realized segment, the same
    exponential shape as the ideal curve but over the realized span, with
    the ideal booking limit in the denominator.  Empty segments add 0."""
    prices = vf.priceset
    seg_terms = [0.0]
    for j in range(1, vf.m + 1):
        span = tilde_borders[j] - tilde_borders[j - 1]
        seg_terms.append(
            (prices.price(j) - prices.price(j - 1))
            * math.expm1(span)
            / math.expm1(vf.alphas[j - 1])
        )
    prefix = [0.0]
    for term in seg_terms[1:]:
        prefix.append(prefix[-1] + term)

    values = []
    for n_sold in range(k + 1):
        q = n_sold / k
        # segment index: smallest j with q < border(j); top grid point -> m
        j = bisect.bisect_right(tilde_borders, q)
        j = min(j, vf.m)
        partial = (
            (prices.price(j) - prices.price(j - 1))
            * math.expm1(q - tilde_borders[j - 1])
            / math.expm1(vf.alphas[j - 1])
        )
        values.append(prefix[j - 1] + partial)
    return values


def build_perturbed(vf, k, w_seed):
    vf = _as_vf(vf)
    borders = round_borders(vf, k, w_seed)
    grid = _grid_from_borders(vf, k, borders)
    return PerturbedValueFunction(
        k=k, tilde_borders=tuple(borders), grid_values=tuple(grid), seed_w=w_seed
    )


@dataclass(frozen=True)
class RandomizedProcedure:
    """A finite-support distribution over perturbed value functions."""

    priceset: PriceSet
    k: int
    configurations: tuple  # of (probability, PerturbedValueFunction)

    def __post_init__(self):
        total = sum(rho for rho, _ in self.configurations)
        if abs(total - 1.0) > 1e-12:
            raise ValidationError("support probabilities sum to %r, not 1" % total)
        if any(rho < 0 for rho, _ in self.configurations):
            raise ValidationError("negative support probability")


def enumerate_seed_support(vf, k):
    """Exact support of the comonotone rounding: the outcome is a step
    function of the seed with breakpoints at the distinct fractional parts
    of L(j) k, so at most m + 1 seed intervals.  Interval lengths are the
    exact probabilities; no sampling involved."""
    vf = _as_vf(vf)
    fracs = set()
    for lj in vf.borders:
        x = lj * k
        frac = x - math.floor(x)
        if _FRAC_SNAP < frac < 1.0 - _FRAC_SNAP:
            fracs.add(frac)
    cuts = [0.0] + sorted(fracs) + [1.0]
    configs = []
    for lo, hi in zip(cuts, cuts[1:]):
        if hi - lo <= 0.0:
            continue
        configs.append((hi - lo, build_perturbed(vf, k, lo)))
    return RandomizedProcedure(
        priceset=vf.priceset, k=k, configurations=tuple(configs)
    )


def single_unit_procedure(priceset):
    """Optimal randomized procedure for a single unit of inventory: with
    probability sigma(d) place every border at 0 up to level d and at 1
    from level d on, valuing the unit at r(d)/sigma(1).  Certifies the
    ratio sigma(1)/2."""
    vf = _as_vf(priceset)
    m = vf.m
    sigma1 = vf.sigmas[0]
    configs = []
    for d in range(1, m + 1):
        borders = tuple(0.0 if j < d else 1.0 for j in range(m + 1))
        top = vf.priceset.price(d) / sigma1
        pvf = PerturbedValueFunction(
            k=1, tilde_borders=borders, grid_values=(0.0, top), seed_w=None
        )
        configs.append((vf.sigmas[d - 1], pvf))
    return RandomizedProcedure(priceset=vf.priceset, k=1, configurations=tuple(configs))


def verify_conditions(proc, priceset, k, c, rel_tol=1e-9):
    """Check the two certification conditions at ratio c.

    Per-step optimality must hold for every configuration, price level j,
    and sold count N below the rounded border; feasibility must hold in
    expectation over the support.  Returns (ok, report) where the report
    carries the minimum slack of each condition (negative slack = violated).
    """
    if not isinstance(priceset, PriceSet):
        priceset = PriceSet(priceset)
    if c <= 0:
        raise DomainError("c must be positive")
    m = priceset.m
    tol = rel_tol * priceset.price(m)

    min_opt = math.inf
    for _, pvf in proc.configurations:
        grid = pvf.grid_values
        for j in range(1, m + 1):
            border_val = pvf.border_value(j)
            n_max = int(round(pvf.tilde_borders[j] * k))
            for n_sold in range(n_max):
                lhs = k * (grid[n_sold + 1] - grid[n_sold]) + border_val - grid[n_sold]
                min_opt = min(min_opt, priceset.price(j) / c - lhs)

    min_feas = math.inf
    feas_slacks = []
    for j in range(1, m + 1):
        expected = sum(rho * pvf.border_value(j) for rho, pvf in proc.configurations)
        slack = expected - priceset.price(j)
        feas_slacks.append(slack)
        min_feas = min(min_feas, slack)

    ok = min_opt >= -tol and min_feas >= -tol
    report = {
        "ok": ok,
        "c": c,
        "optimality_min_slack": min_opt,
        "feasibility_min_slack": min_feas,
        "feasibility_slacks": feas_slacks,
    }
    return ok, report


def certified_lower_bounds(priceset, k):
    """The three certified lower bounds on the best achievable ratio for an
    item with inventory k: the rounding-based bound, the single-unit bound
    G/2, and the improved single-price bound.  Returns a dict; the overall
    certificate is the max of the applicable values."""
    vf = _as_vf(priceset)
    bounds = {
        "perturbation": vf.F / ((1.0 + k) * math.expm1(1.0 / k)),
        "single_unit": vf.G / 2.0,
    }
    if vf.m == 1:
        bounds["single_price"] = (1.0 - 1.0 / math.e) / ((1.0 + k) * -math.expm1(-1.0 / k))
    bounds["best"] = max(v for key, v in bounds.items() if key != "best")
    return bounds

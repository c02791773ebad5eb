"""Online allocation policies over arrival streams.

Implements the two competitive policies (balance over multi-unit items,
ranking over single units), the classic benchmark policies (myopic,
conservative, inventory-balancing), the forecasting bid-price policies,
and the hybrid that follows a forecast but falls back on the
forecast-independent value functions when the forecast looks too greedy.

All policies consume a Setup (items with inventories and price sets) and an
ArrivalSequence, and are deterministic given their seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .choice import choice_probs, optimize_assortment, sample_choice
from .errors import DomainError, ValidationError
from .perturb import build_perturbed
from .valuefn import PriceSet, build_value_function

# minimum pseudorevenue for an offer to be made
POSITIVITY_EPS = 1e-12

PSI_DENOM = math.e - 1.0


@lru_cache(maxsize=4096)
def _vf_for(prices):
    """Value functions are pure in the price tuple; memoize across items
    and runs (many instances share one price set)."""
    return build_value_function(PriceSet(prices))


def psi(w):
    """Inventory-balancing discount (e - e^w)/(e - 1)."""
    return (math.e - math.exp(w)) / PSI_DENOM


@dataclass(frozen=True)
class Item:
    k: int
    priceset: PriceSet

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError("inventory must be >= 1")


@dataclass(frozen=True)
class Setup:
    items: tuple

    def __post_init__(self):
        if len(self.items) < 1:
            raise ValidationError("need at least one item")

    @property
    def n(self):
        return len(self.items)


@dataclass(frozen=True)
class ArrivalSequence:
    """A stream of T customers.

    kind "deterministic": willing[t, i] = highest acceptable price index
    (0 = not interested).  kind "single_offer"/"fractional": probs[t] is a
    per-item tuple of per-price probabilities.  kind "assortment": types[t]
    indexes into model; products maps model product indices to (item,
    price index) pairs.
    """

    kind: str
    willing: object = None  # T x n integer array
    probs: tuple = None
    types: tuple = None
    model: object = None
    products: tuple = None
    days_out: tuple = None  # optional, days before the occupancy date

    def __post_init__(self):
        if self.kind not in ("deterministic", "single_offer", "fractional", "assortment"):
            raise ValidationError("unknown arrival kind %r" % (self.kind,))

    @property
    def T(self):
        if self.kind == "deterministic":
            return len(self.willing)
        if self.kind == "assortment":
            return len(self.types)
        return len(self.probs)


@dataclass
class RunResult:
    revenue: float
    sales_log: list  # (t, item, price index, price, pseudorevenue)
    final_inventory: list
    duals_trace: list = None
    meta: dict = field(default_factory=dict)


def _check_dims(setup, arrivals):
    n = setup.n
    if arrivals.kind == "deterministic":
        if np.asarray(arrivals.willing).shape[1] != n:
            raise DomainError("arrival/setup dimension mismatch")
    elif arrivals.kind in ("single_offer", "fractional"):
        for row in arrivals.probs:
            if len(row) != n:
                raise DomainError("arrival/setup dimension mismatch")
    elif arrivals.kind == "assortment":
        for i, _ in arrivals.products:
            if not 0 <= i < n:
                raise DomainError("product references unknown item")


def _spawn_streams(setup, rng_seed):
    """One independent stream per item plus one shared choice stream."""
    root = np.random.SeedSequence(rng_seed)
    children = root.spawn(setup.n + 1)
    item_rngs = [np.random.default_rng(c) for c in children[: setup.n]]
    choice_rng = np.random.default_rng(children[setup.n])
    return item_rngs, choice_rng


def _init_item_state(setup, item_rngs, perturbed):
    """Per item: bid values at the (rounded) borders and the grid of the
    (perturbed) value function over sold counts."""
    bid_rows = []  # bid value per price index, index 0 unused
    grids = []
    vfs = []
    for item, rng in zip(setup.items, item_rngs):
        vf = _vf_for(item.priceset.prices)
        vfs.append(vf)
        if perturbed:
            pvf = build_perturbed(vf, item.k, rng.random())
            bids = [0.0] + [pvf.border_value(j) for j in range(1, vf.m + 1)]
            grids.append(np.array(pvf.grid_values))
        else:
            bids = [0.0] + [item.priceset.price(j) for j in range(1, vf.m + 1)]
            grids.append(np.array([vf.phi(s / item.k) for s in range(item.k + 1)]))
        bid_rows.append(bids)
    return vfs, bid_rows, grids


def run_balance(setup, arrivals, rng_seed, perturbed=True, duals_trace=False):
    """Balance policy: offer the (item, price) with the largest expected
    pseudorevenue, where an item's unit is valued by its perturbed value
    function at the rounded price border minus at the current sold level."""
    _check_dims(setup, arrivals)
    if arrivals.kind not in ("deterministic", "single_offer"):
        raise DomainError("balance expects deterministic or single_offer arrivals")
    n = setup.n
    item_rngs, choice_rng = _spawn_streams(setup, rng_seed)
    _, bid_rows, grids = _init_item_state(setup, item_rngs, perturbed)
    ks = np.array([it.k for it in setup.items])
    sold = np.zeros(n, dtype=int)
    cur_phi = np.array([g[0] for g in grids])
    revenue = 0.0
    log = []
    trace = [] if duals_trace else None

    if arrivals.kind == "deterministic":
        willing = np.asarray(arrivals.willing, dtype=int)
        m_max = max(it.priceset.m for it in setup.items)
        bid_mat = np.full((n, m_max + 1), -np.inf)
        bid_mat[:, 0] = 0.0
        for i, bids in enumerate(bid_rows):
            bid_mat[i, 1 : len(bids)] = bids[1:]
        row_idx = np.arange(n)
        # the bid value is nondecreasing in the price index, so the best
        # price for each item is the customer's willingness index; look all
        # of them up once.  cost folds in stock-outs (+inf when exhausted);
        # an uninterested customer indexes bid 0, giving z <= 0, so no
        # extra mask is needed for jt == 0.
        bid_per_t = bid_mat[row_idx[None, :], willing]
        cost = cur_phi.copy()
        for t in range(arrivals.T):
            jt = willing[t]
            z = bid_per_t[t] - cost
            i_star = int(np.argmax(z))
            z_star = z[i_star]
            if z_star <= POSITIVITY_EPS:
                continue
            j_star = int(jt[i_star])
            price = setup.items[i_star].priceset.price(j_star)
            if duals_trace:
                delta = ks[i_star] * (
                    grids[i_star][sold[i_star] + 1] - grids[i_star][sold[i_star]]
                )
                trace.append((t, i_star, float(delta), float(z_star), price))
            sold[i_star] += 1
            cur_phi[i_star] = grids[i_star][sold[i_star]]
            cost[i_star] = np.inf if sold[i_star] >= ks[i_star] else cur_phi[i_star]
            revenue += price
            log.append((t, i_star, j_star, price, float(z_star)))
    else:
        for t, row in enumerate(arrivals.probs):
            best = (POSITIVITY_EPS, -1, -1)
            for i in range(n):
                if sold[i] >= ks[i]:
                    continue
                bids = bid_rows[i]
                for j in range(len(row[i]), 0, -1):
                    p = row[i][j - 1]
                    if p <= 0.0:
                        continue
                    z = p * (bids[j] - cur_phi[i])
                    if z > best[0]:
                        best = (z, i, j)
            z_star, i_star, j_star = best
            if i_star < 0:
                continue
            p = row[i_star][j_star - 1]
            if choice_rng.random() < p:
                price = setup.items[i_star].priceset.price(j_star)
                if duals_trace:
                    delta = ks[i_star] * (
                        grids[i_star][sold[i_star] + 1] - grids[i_star][sold[i_star]]
                    )
                    trace.append((t, i_star, float(delta), float(z_star), price))
                sold[i_star] += 1
                cur_phi[i_star] = grids[i_star][sold[i_star]]
                revenue += price
                log.append((t, i_star, j_star, price, float(z_star)))

    assert np.all(sold <= ks)
    return RunResult(
        revenue=revenue,
        sales_log=log,
        final_inventory=list(ks - sold),
        duals_trace=trace,
    )


def run_ranking(setup, arrivals, rng_seed, check_assignments=False):
    """Ranking policy: items are split into single units, each unit gets a
    fixed uniform seed W, and every customer is assigned the available unit
    maximizing her willingness price minus the unit's value Phi(W)."""
    _check_dims(setup, arrivals)
    if arrivals.kind != "deterministic":
        raise DomainError("ranking expects deterministic arrivals")
    item_rngs, _ = _spawn_streams(setup, rng_seed)
    vfs = [_vf_for(it.priceset.prices) for it in setup.items]

    unit_item = []
    unit_w = []
    for i, (item, rng) in enumerate(zip(setup.items, item_rngs)):
        for w in rng.random(item.k):
            unit_item.append(i)
            unit_w.append(w)
    unit_item = np.array(unit_item, dtype=int)
    unit_w = np.array(unit_w)
    unit_phi = np.array([vfs[i].phi(w) for i, w in zip(unit_item, unit_w)])

    willing = np.asarray(arrivals.willing, dtype=int)
    n = setup.n
    m_max = max(it.priceset.m for it in setup.items)
    price_mat = np.zeros((n, m_max + 1))
    for i, item in enumerate(setup.items):
        for j in range(1, item.priceset.m + 1):
            price_mat[i, j] = item.priceset.price(j)

    available = np.ones(len(unit_item), dtype=bool)
    # cost folds in matched units (+inf); price 0 for uninterested
    # customers makes their value nonpositive without an explicit mask
    cost = unit_phi.copy()
    revenue = 0.0
    log = []
    price_per_t = price_mat[unit_item[None, :], willing[:, unit_item]]
    for t in range(arrivals.T):
        jt = willing[t]
        val = price_per_t[t] - cost
        u_star = int(np.argmax(val))
        z = val[u_star]
        if z <= POSITIVITY_EPS:
            continue
        i_star = int(unit_item[u_star])
        j_star = int(jt[i_star])
        price = price_mat[i_star, j_star]
        if check_assignments:
            vf = vfs[i_star]
            lhs = (1.0 - math.exp(-vf.alphas[0])) * (vf.phi_prime(unit_w[u_star]) + z)
            assert lhs <= price + 1e-9, "assignment bound violated"
        available[u_star] = False
        cost[u_star] = np.inf
        revenue += price
        log.append((t, i_star, j_star, price, float(z)))

    final = [int(np.sum(available[unit_item == i])) for i in range(n)]
    return RunResult(revenue=revenue, sales_log=log, final_inventory=final)


def _run_static_weight(setup, arrivals, rng_seed, discount, high_only=False):
    """Shared runner for policies whose offer value is the price times a
    discount that depends only on the item's sold fraction."""
    _check_dims(setup, arrivals)
    if arrivals.kind == "fractional":
        raise DomainError("fractional arrivals not supported here")
    n = setup.n
    _, choice_rng = _spawn_streams(setup, rng_seed)
    ks = np.array([it.k for it in setup.items])
    sold = np.zeros(n, dtype=int)
    revenue = 0.0
    log = []

    def offer_value(i, j):
        return setup.items[i].priceset.price(j) * discount(sold[i] / ks[i])

    if arrivals.kind == "deterministic":
        # the offer value is increasing in the price for a fixed item, so
        # the best price per item is the customer's willingness index
        willing = np.asarray(arrivals.willing, dtype=int)
        m_max = max(it.priceset.m for it in setup.items)
        m_vec = np.array([it.priceset.m for it in setup.items])
        price_mat = np.zeros((n, m_max + 1))
        for i, item in enumerate(setup.items):
            for j in range(1, item.priceset.m + 1):
                price_mat[i, j] = item.priceset.price(j)
        row_idx = np.arange(n)
        # disc is zeroed when an item stocks out; a price of 0 at jt = 0
        # already keeps uninterested customers out of the argmax
        disc = np.full(n, discount(0.0))
        price_per_t = price_mat[row_idx[None, :], willing]
        if high_only:
            price_per_t = price_per_t * (willing == m_vec[None, :])
        for t in range(arrivals.T):
            jt = willing[t]
            v = price_per_t[t] * disc
            i_star = int(np.argmax(v))
            if v[i_star] <= POSITIVITY_EPS:
                continue
            j_star = int(jt[i_star])
            price = price_mat[i_star, j_star]
            sold[i_star] += 1
            disc[i_star] = (
                0.0 if sold[i_star] >= ks[i_star]
                else discount(sold[i_star] / ks[i_star])
            )
            revenue += price
            log.append((t, i_star, j_star, price, float(v[i_star])))
    elif arrivals.kind == "single_offer":
        for t, row in enumerate(arrivals.probs):
            best = (POSITIVITY_EPS, -1, -1)
            for i in range(n):
                if sold[i] >= ks[i]:
                    continue
                m_i = setup.items[i].priceset.m
                js = [m_i] if high_only else range(m_i, 0, -1)
                for j in js:
                    p = row[i][j - 1]
                    if p <= 0.0:
                        continue
                    v = p * offer_value(i, j)
                    if v > best[0]:
                        best = (v, i, j)
            _, i_star, j_star = best
            if i_star < 0:
                continue
            p = row[i_star][j_star - 1]
            if choice_rng.random() < p:
                price = setup.items[i_star].priceset.price(j_star)
                sold[i_star] += 1
                revenue += price
                log.append((t, i_star, j_star, price, best[0]))
    else:  # assortment
        model = arrivals.model
        products = arrivals.products
        for t, a in enumerate(arrivals.types):
            pi = []
            for p_idx, (i, j) in enumerate(products):
                if sold[i] >= ks[i] or (high_only and j != setup.items[i].priceset.m):
                    pi.append(0.0)
                else:
                    pi.append(offer_value(i, j))
            s, _ = optimize_assortment(model, a, pi)
            if not s:
                continue
            chosen = sample_choice(model, a, s, choice_rng)
            if chosen is None:
                continue
            i_star, j_star = products[chosen]
            price = setup.items[i_star].priceset.price(j_star)
            sold[i_star] += 1
            revenue += price
            log.append((t, i_star, j_star, price, pi[chosen]))

    return RunResult(
        revenue=revenue, sales_log=log, final_inventory=list(ks - sold)
    )


def run_myopic(setup, arrivals, rng_seed):
    """Maximize immediate expected revenue, ignoring inventory value."""
    return _run_static_weight(setup, arrivals, rng_seed, lambda w: 1.0)


def run_gnr(setup, arrivals, rng_seed):
    """Inventory balancing: weight each offer by price times psi(sold fraction)."""
    return _run_static_weight(setup, arrivals, rng_seed, psi)


def run_conservative(setup, arrivals, rng_seed):
    """Offer items only at their highest price, balanced by psi."""
    return _run_static_weight(setup, arrivals, rng_seed, psi, high_only=True)


def run_balance_fractional(setup, arrivals, rng_seed):
    """Balance in the fluid regime: deterministic value functions, bids pay
    and consume fractionally, bids overshooting capacity are truncated."""
    _check_dims(setup, arrivals)
    if arrivals.kind != "fractional":
        raise DomainError("expected fractional arrivals")
    n = setup.n
    vfs = [_vf_for(it.priceset.prices) for it in setup.items]
    ks = [it.k for it in setup.items]
    w = np.zeros(n)
    revenue = 0.0
    log = []
    truncations = 0
    for t, row in enumerate(arrivals.probs):
        best = (POSITIVITY_EPS, -1, -1)
        for i in range(n):
            if w[i] >= 1.0 - 1e-15:
                continue
            phi_w = vfs[i].phi(w[i])
            for j in range(len(row[i]), 0, -1):
                p = row[i][j - 1]
                if p <= 0.0:
                    continue
                z = p * (setup.items[i].priceset.price(j) - phi_w)
                if z > best[0]:
                    best = (z, i, j)
        z_star, i_star, j_star = best
        if i_star < 0:
            continue
        p = row[i_star][j_star - 1]
        accept = min(p, (1.0 - w[i_star]) * ks[i_star])
        if accept < p:
            truncations += 1
        price = setup.items[i_star].priceset.price(j_star)
        w[i_star] = min(1.0, w[i_star] + accept / ks[i_star])
        revenue += accept * price
        log.append((t, i_star, j_star, accept * price, float(z_star)))
    final = [k * (1.0 - wi) for k, wi in zip(ks, w)]
    return RunResult(
        revenue=revenue,
        sales_log=log,
        final_inventory=final,
        meta={"truncations": truncations},
    )


def run_balance_assortment(setup, arrivals, rng_seed, family="unconstrained",
                           perturbed=True):
    """Balance over assortment arrivals: offer the assortment maximizing
    expected pseudorevenue under the perturbed value functions."""
    _check_dims(setup, arrivals)
    if arrivals.kind != "assortment":
        raise DomainError("expected assortment arrivals")
    n = setup.n
    item_rngs, choice_rng = _spawn_streams(setup, rng_seed)
    _, bid_rows, grids = _init_item_state(setup, item_rngs, perturbed)
    ks = [it.k for it in setup.items]
    sold = [0] * n
    model = arrivals.model
    products = arrivals.products
    revenue = 0.0
    log = []
    for t, a in enumerate(arrivals.types):
        pi = []
        for i, j in products:
            if sold[i] >= ks[i]:
                pi.append(0.0)
            else:
                pi.append(bid_rows[i][j] - grids[i][sold[i]])
        s, _ = optimize_assortment(model, a, pi, family=family)
        if not s:
            continue
        chosen = sample_choice(model, a, s, choice_rng)
        if chosen is None:
            continue
        i_star, j_star = products[chosen]
        price = setup.items[i_star].priceset.price(j_star)
        sold[i_star] += 1
        revenue += price
        log.append((t, i_star, j_star, price, pi[chosen]))
    return RunResult(
        revenue=revenue,
        sales_log=log,
        final_inventory=[k - s for k, s in zip(ks, sold)],
    )


@dataclass(frozen=True)
class ForecastCurve:
    """Cumulative fraction of eventual arrivals booked, as a piecewise-linear
    function of days before the occupancy date.  Defaults to 50% booked by
    25 days out, reaching 100% on the day itself."""

    expected_total: float
    knots: tuple = ((35.0, 0.0), (25.0, 0.5), (0.0, 1.0))

    def fraction(self, days_out):
        pts = sorted(self.knots, key=lambda p: -p[0])
        if days_out >= pts[0][0]:
            return pts[0][1]
        for (d_hi, f_hi), (d_lo, f_lo) in zip(pts, pts[1:]):
            if d_lo <= days_out <= d_hi:
                if d_hi == d_lo:
                    return f_lo
                t = (d_hi - days_out) / (d_hi - d_lo)
                return f_hi + t * (f_lo - f_hi)
        return 1.0


def _forecast_counts(mode, model, arrivals, t, forecast):
    """Remaining customers per type under the given forecasting mode."""
    A = model.n_types
    if mode == "clairvoyant":
        counts = [0.0] * A
        for a in arrivals.types[t:]:
            counts[a] += 1.0
        return counts
    if forecast is None:
        raise DomainError("forecasting mode %r needs a ForecastCurve" % (mode,))
    if t == 0 or arrivals.days_out is None:
        remaining = max(forecast.expected_total - t, 0.0)
    else:
        frac = forecast.fraction(arrivals.days_out[t])
        if frac <= 1e-9:
            remaining = max(forecast.expected_total - t, 0.0)
        else:
            remaining = max(t / frac - t, 0.0)
    if mode == "learning" and t > 0:
        seen = [0.0] * A
        for a in arrivals.types[:t]:
            seen[a] += 1.0
        shares = [s / t for s in seen]
    else:
        shares = list(model.type_shares)
    return [remaining * s for s in shares]


def run_bidprice(setup, arrivals, mode="resolving", resolve_every=100,
                 forecast=None, rng_seed=0):
    """Forecasting bid-price policy over assortment arrivals.

    Solves the choice LP with forecasted remaining type counts and offers
    each customer the assortment maximizing expected fare minus bid price.
    Modes differ only in the forecast: one_shot (solve once), resolving
    (booking-curve forecast, aggregate type shares), learning (empirical
    type shares), clairvoyant (true remaining counts).
    """
    from .lp import ColumnPool, solve_choice_lp

    pool = ColumnPool()

    _check_dims(setup, arrivals)
    if arrivals.kind != "assortment":
        raise DomainError("expected assortment arrivals")
    if mode not in ("one_shot", "resolving", "learning", "clairvoyant"):
        raise DomainError("unknown mode %r" % (mode,))
    n = setup.n
    _, choice_rng = _spawn_streams(setup, rng_seed)
    ks = [it.k for it in setup.items]
    sold = [0] * n
    model = arrivals.model
    products = arrivals.products
    fares = [setup.items[i].priceset.price(j) for i, j in products]
    revenue = 0.0
    log = []
    y = [0.0] * n
    lp_solves = 0
    for t, a in enumerate(arrivals.types):
        if t == 0 or (mode != "one_shot" and t % resolve_every == 0):
            counts = _forecast_counts(mode, model, arrivals, t, forecast)
            counts = [max(c, 0.0) for c in counts]
            caps = [k - s for k, s in zip(ks, sold)]
            sol = solve_choice_lp(
                setup, counts, model, products, capacities=caps, pool=pool
            )
            y = sol.duals_items
            lp_solves += 1
        pi = []
        for p_idx, (i, j) in enumerate(products):
            if sold[i] >= ks[i]:
                pi.append(0.0)
            else:
                pi.append(fares[p_idx] - y[i])
        s, _ = optimize_assortment(model, a, pi)
        if not s:
            continue
        chosen = sample_choice(model, a, s, choice_rng)
        if chosen is None:
            continue
        i_star, j_star = products[chosen]
        sold[i_star] += 1
        revenue += fares[chosen]
        log.append((t, i_star, j_star, fares[chosen], pi[chosen]))
    return RunResult(
        revenue=revenue,
        sales_log=log,
        final_inventory=[k - s for k, s in zip(ks, sold)],
        meta={"lp_solves": lp_solves},
    )


def run_hybrid(setup, arrivals, base="resolving", gamma=1.5, resolve_every=100,
               forecast=None, rng_seed=0):
    """Follow the forecast assortment unless its pseudorevenue (under the
    deterministic value functions) falls below 1/gamma of the best
    achievable, in which case offer the pseudorevenue maximizer instead."""
    from .lp import ColumnPool, solve_choice_lp

    pool = ColumnPool()

    _check_dims(setup, arrivals)
    if arrivals.kind != "assortment":
        raise DomainError("expected assortment arrivals")
    if gamma <= 1.0:
        raise DomainError("gamma must exceed 1")
    n = setup.n
    _, choice_rng = _spawn_streams(setup, rng_seed)
    vfs = [_vf_for(it.priceset.prices) for it in setup.items]
    ks = [it.k for it in setup.items]
    sold = [0] * n
    model = arrivals.model
    products = arrivals.products
    fares = [setup.items[i].priceset.price(j) for i, j in products]
    revenue = 0.0
    log = []
    y = [0.0] * n
    overrides = 0
    offers = 0
    for t, a in enumerate(arrivals.types):
        if t == 0 or (base != "one_shot" and t % resolve_every == 0):
            counts = _forecast_counts(base, model, arrivals, t, forecast)
            counts = [max(c, 0.0) for c in counts]
            caps = [k - s for k, s in zip(ks, sold)]
            sol = solve_choice_lp(
                setup, counts, model, products, capacities=caps, pool=pool
            )
            y = sol.duals_items
        pi_fcst = []
        pi_bal = []
        for p_idx, (i, j) in enumerate(products):
            if sold[i] >= ks[i]:
                pi_fcst.append(0.0)
                pi_bal.append(0.0)
            else:
                pi_fcst.append(fares[p_idx] - y[i])
                pi_bal.append(
                    setup.items[i].priceset.price(j) - vfs[i].phi(sold[i] / ks[i])
                )
        s_fcst, _ = optimize_assortment(model, a, pi_fcst)
        s_bal, v_max = optimize_assortment(model, a, pi_bal)
        v_fcst = sum(
            prob * pi_bal[p]
            for p, prob in choice_probs(model, a, s_fcst)[0].items()
        )
        if v_fcst + POSITIVITY_EPS >= v_max / gamma:
            s = s_fcst
        else:
            s = s_bal
            overrides += 1
        offers += 1
        if not s:
            continue
        chosen = sample_choice(model, a, s, choice_rng)
        if chosen is None:
            continue
        i_star, j_star = products[chosen]
        sold[i_star] += 1
        revenue += fares[chosen]
        log.append((t, i_star, j_star, fares[chosen], pi_bal[chosen]))
    return RunResult(
        revenue=revenue,
        sales_log=log,
        final_inventory=[k - s for k, s in zip(ks, sold)],
        meta={"override_fraction": overrides / offers if offers else 0.0},
    )

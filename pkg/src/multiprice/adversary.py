"""Tight adversarial instance family.

n identical items, nk customers arriving in n groups of k; group g is
interested in the items with permuted labels g..n, and the groups are
partitioned into m phases whose customers accept exactly price r(j).  The
hindsight optimum is the same for every permutation, while no online
policy can beat F times it in expectation over permutations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import ArrivalSequence, Item, Setup
from .errors import DomainError
from .valuefn import PriceSet, build_value_function


def solve_betas(priceset):
    """Phase fractions: tail sums follow the recursion
    B_j = B_{j-1} * r(j-1) e^{-alpha(j-1)} / (r(j) e^{-alpha(j)}), B_1 = 1;
    beta_j = B_j - B_{j+1} with B_{m+1} = 0."""
    if not isinstance(priceset, PriceSet):
        priceset = PriceSet(priceset)
    vf = build_value_function(priceset)
    m = priceset.m
    B = [1.0]
    for j in range(2, m + 1):
        prev = B[-1]
        num = priceset.price(j - 1) * math.exp(-vf.alphas[j - 2])
        den = priceset.price(j) * math.exp(-vf.alphas[j - 1])
        B.append(prev * num / den)
    B.append(0.0)
    betas = [B[j] - B[j + 1] for j in range(m)]
    return B[:-1], betas


@dataclass(frozen=True)
class AdversarialInstance:
    priceset: PriceSet
    n: int
    k: int
    betas: tuple
    B: tuple
    setup: Setup
    arrivals: ArrivalSequence
    permutation: tuple
    group_phases: tuple  # phase index (1-based price level) per group

    @property
    def realized_opt(self):
        """Exact hindsight optimum of this instance: the nested interest
        sets admit a perfect group-to-item matching, so every customer is
        served at her phase price."""
        return self.k * sum(self.priceset.price(j) for j in self.group_phases)


def build_instance(priceset, n, k, rng_seed):
    """One permuted instance: customer group g (of k identical customers)
    is interested in items pi[g-1..n-1] and pays the price of its phase."""
    if not isinstance(priceset, PriceSet):
        priceset = PriceSet(priceset)
    if k < 1 or n < priceset.m:
        raise DomainError("need k >= 1 and n >= m")
    B, betas = solve_betas(priceset)
    m = priceset.m

    # phase boundaries in whole groups, round-half-even on the tail sums
    bounds = [0]
    acc = 0.0
    for j in range(m):
        acc += betas[j]
        bounds.append(n if j == m - 1 else int(round(acc * n)))
    for j in range(m):
        if bounds[j + 1] <= bounds[j]:
            raise DomainError("n too small for the phase partition")

    rng = np.random.default_rng(rng_seed)
    perm = rng.permutation(n)

    willing = np.zeros((n * k, n), dtype=int)
    group_phases = []
    for g in range(n):
        phase = next(j for j in range(m) if bounds[j] <= g < bounds[j + 1])
        group_phases.append(phase + 1)
        willing[g * k : (g + 1) * k, perm[g:]] = phase + 1

    setup = Setup(items=tuple(Item(k=k, priceset=priceset) for _ in range(n)))
    arrivals = ArrivalSequence(kind="deterministic", willing=willing)
    return AdversarialInstance(
        priceset=priceset,
        n=n,
        k=k,
        betas=tuple(betas),
        B=tuple(B),
        setup=setup,
        arrivals=arrivals,
        permutation=tuple(int(p) for p in perm),
        group_phases=tuple(group_phases),
    )


def analytic_bounds(priceset, n, k):
    """Closed-form hindsight optimum, online upper bound, and their ratio
    (which equals F of the price set exactly)."""
    if not isinstance(priceset, PriceSet):
        priceset = PriceSet(priceset)
    vf = build_value_function(priceset)
    B, betas = solve_betas(priceset)
    m = priceset.m
    opt = n * k * sum(priceset.price(j + 1) * betas[j] for j in range(m))
    online_ub = n * k * sum(
        priceset.price(j + 1) * B[j] * (1.0 - math.exp(-vf.alphas[j]))
        for j in range(m)
    )
    return {"opt": opt, "online_ub": online_ub, "ratio": online_ub / opt}

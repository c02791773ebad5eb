"""Multinomial-logit choice: evaluation, sampling, and the single-shot
assortment optimization oracle.

A model holds mean utilities per (customer type, product); a utility of
-inf marks a product the type never chooses.  Optimization over
unconstrained assortments uses the standard prefix argument: the optimum is
an upper set of products ordered by adjusted value, so only the prefixes of
the sorted positive-value products need evaluating.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from importlib import resources

from .errors import DomainError, SolverLimitError, ValidationError

NEVER = float("-inf")


@dataclass(frozen=True)
class MnlModel:
    """Mean utilities of each customer type over a fixed product list.

    utilities[a][p] may be -inf; u0[a] is the no-purchase utility.
    """

    n_products: int
    type_shares: tuple
    u0: tuple
    utilities: tuple  # tuple per type, aligned with product indices
    type_labels: tuple = ()
    product_items: tuple = ()  # optional item index per product

    def __post_init__(self):
        if abs(sum(self.type_shares) - 1.0) > 1e-12:
            raise ValidationError("type shares must sum to 1")
        if any(s < 0 for s in self.type_shares):
            raise ValidationError("negative type share")
        for row in self.utilities:
            if len(row) != self.n_products:
                raise ValidationError("utility row length mismatch")

    @property
    def n_types(self):
        return len(self.type_shares)

    def _check_type(self, a):
        if not 0 <= a < self.n_types:
            raise DomainError("unknown customer type %r" % (a,))


def choice_probs(model, a, assortment):
    """Choice probability of each offered product and of no-purchase.

    Returns (probs, p0) where probs is a dict product -> probability.
    """
    model._check_type(a)
    us = model.utilities[a]
    weights = {}
    total = math.exp(model.u0[a])
    for p in assortment:
        u = us[p]
        if u == NEVER:
            weights[p] = 0.0
            continue
        w = math.exp(u)
        weights[p] = w
        total += w
    probs = {p: w / total for p, w in weights.items()}
    return probs, math.exp(model.u0[a]) / total


def assortment_value(model, a, assortment, pi):
    """Expected adjusted value sum_{p in S} P(p | S) * pi[p]."""
    probs, _ = choice_probs(model, a, assortment)
    return sum(prob * pi[p] for p, prob in probs.items())


def optimize_assortment(model, a, pi, family="unconstrained"):
    """Best assortment for customer type a under adjusted values pi.

    family "unconstrained" uses prefix enumeration over products sorted by
    decreasing pi (only positive-value, choosable products can help);
    "one_price_per_item" enumerates one-option-per-item combinations and
    needs model.product_items; "explicit" expects pi to be accompanied by
    an iterable of candidate assortments via optimize_explicit instead.
    Returns (assortment tuple, objective); the empty assortment scores 0.
    """
    model._check_type(a)
    if len(pi) != model.n_products:
        raise DomainError("pi length mismatch")
    if family == "unconstrained":
        cands = [
            p
            for p in range(model.n_products)
            if pi[p] > 0.0 and model.utilities[a][p] != NEVER
        ]
        cands.sort(key=lambda p: -pi[p])
        best_s, best_v = (), 0.0
        weight_sum = math.exp(model.u0[a])
        value_sum = 0.0
        for end in range(1, len(cands) + 1):
            p = cands[end - 1]
            w = math.exp(model.utilities[a][p])
            weight_sum += w
            value_sum += w * pi[p]
            v = value_sum / weight_sum
            if v > best_v + 1e-15:
                best_s, best_v = tuple(sorted(cands[:end])), v
        return best_s, best_v
    if family == "one_price_per_item":
        if len(model.product_items) != model.n_products:
            raise DomainError("one_price_per_item needs product_items")
        groups = {}
        for p in range(model.n_products):
            groups.setdefault(model.product_items[p], []).append(p)
        option_lists = [[None] + ps for ps in groups.values()]
        total = 1
        for opts in option_lists:
            total *= len(opts)
        if total > 1 << 20:
            raise SolverLimitError("one_price_per_item family too large")
        best_s, best_v = (), 0.0
        for combo in itertools.product(*option_lists):
            s = tuple(sorted(p for p in combo if p is not None))
            v = assortment_value(model, a, s, pi)
            if v > best_v + 1e-15:
                best_s, best_v = s, v
        return best_s, best_v
    raise DomainError("unsupported family %r" % (family,))


def optimize_explicit(model, a, pi, assortments):
    """Best among an explicit candidate list (plus the empty assortment)."""
    if len(assortments) > 1 << 20:
        raise SolverLimitError("explicit family too large")
    best_s, best_v = (), 0.0
    for s in assortments:
        v = assortment_value(model, a, tuple(s), pi)
        if v > best_v + 1e-15:
            best_s, best_v = tuple(sorted(s)), v
    return best_s, best_v


def sample_choice(model, a, assortment, rng):
    """Sample one choice; returns a product index or None for no-purchase."""
    probs, _ = choice_probs(model, a, assortment)
    u = rng.random()
    acc = 0.0
    for p, prob in probs.items():
        acc += prob
        if u < acc:
            return p
    return None


def sample_type(model, rng):
    """Sample a customer type index from the share distribution."""
    u = rng.random()
    acc = 0.0
    for a, s in enumerate(model.type_shares):
        acc += s
        if u < acc:
            return a
    return model.n_types - 1


def _model_from_dict(raw, fare_diff=False):
    shift = raw.get("no_purchase_shift_fare_diff", 0.0) if fare_diff else 0.0
    utilities = []
    u0 = []
    shares = []
    labels = []
    for t in raw["types"]:
        utilities.append(
            tuple(NEVER if u is None else float(u) for u in t["utilities"])
        )
        u0.append(float(t["u0"]) + shift)
        shares.append(float(t["share"]))
        labels.append(t.get("label", ""))
    items = tuple(p["room"] for p in raw["products"])
    return MnlModel(
        n_products=len(raw["products"]),
        type_shares=tuple(shares),
        u0=tuple(u0),
        utilities=tuple(utilities),
        type_labels=tuple(labels),
        product_items=items,
    )


def load_model(path, fare_diff=False):
    """Load an MNL model from a JSON file (null utility = never chosen)."""
    with open(path) as fh:
        raw = json.load(fh)
    return _model_from_dict(raw, fare_diff=fare_diff)


@dataclass(frozen=True)
class HotelCatalog:
    """The bundled 4-room / 8-product hotel instance."""

    model: MnlModel
    room_names: tuple
    inventory_shares: tuple
    product_labels: tuple
    product_rooms: tuple  # room index per product
    product_levels: tuple  # price level per product (1 = low, 2 = high)
    fares: tuple  # fare per product
    fare_diff: bool

    @property
    def n_rooms(self):
        return len(self.room_names)

    def room_prices(self, room):
        """Strictly increasing fares of one room."""
        out = sorted(
            self.fares[p] for p in range(len(self.fares)) if self.product_rooms[p] == room
        )
        return out


def default_hotel_model(fare_diff=False):
    """The bundled hotel catalog; fare_diff doubles every high fare and
    raises each type's no-purchase utility accordingly."""
    raw = json.loads(
        resources.files("multiprice.data").joinpath("hotel_mnl.json").read_text()
    )
    model = _model_from_dict(raw, fare_diff=fare_diff)
    fares = []
    for p in raw["products"]:
        room = raw["rooms"][p["room"]]
        if p["level"] == 1:
            fares.append(float(room["low_fare"]))
        else:
            fares.append(float(room["high_fare_diff" if fare_diff else "high_fare"]))
    return HotelCatalog(
        model=model,
        room_names=tuple(r["name"] for r in raw["rooms"]),
        inventory_shares=tuple(r["inventory_share"] for r in raw["rooms"]),
        product_labels=tuple(p["label"] for p in raw["products"]),
        product_rooms=tuple(p["room"] for p in raw["products"]),
        product_levels=tuple(p["level"] for p in raw["products"]),
        fares=tuple(fares),
        fare_diff=fare_diff,
    )

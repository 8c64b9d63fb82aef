"""Epsilon-matchings, exact bottleneck distance and interleaving checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .persistence_core import (
    Bar,
    Barcode,
    FinitePM,
    interval_morphism_exists,
)

__all__ = [
    "Matching",
    "matching_feasible",
    "bottleneck_distance",
    "lower_bound_opt_matching",
    "interleaving_check",
    "exhaustive_interleaving",
    "exhaustive_interleaving_threshold",
    "IsometryMismatch",
]


@dataclass(frozen=True)
class Matching:
    pairs: tuple[tuple[Bar, Bar], ...]
    erased1: tuple[Bar, ...]
    erased2: tuple[Bar, ...]
    epsilon: float

    def cost(self) -> float:
        """Smallest epsilon for which this particular matching is admissible."""
        worst = 0.0
        for p, q in self.pairs:
            worst = max(worst, _pair_cost(p, q))
        for b in self.erased1 + self.erased2:
            worst = max(worst, b.length / 2)
        return worst


def _pair_cost(p: Bar, q: Bar) -> float:
    if p.is_infinite != q.is_infinite:
        return math.inf
    if p.is_infinite:
        return abs(p.birth - q.birth)
    return max(abs(p.birth - q.birth), abs(p.death - q.death))


def _admissible(p: Bar, q: Bar, eps: float) -> bool:
    if p.is_infinite != q.is_infinite:
        return False
    if abs(p.birth - q.birth) > eps:
        return False
    return p.is_infinite or abs(p.death - q.death) <= eps


def _erasable(b: Bar, eps: float) -> bool:
    return not b.is_infinite and b.length <= 2 * eps


def _match_degree(bars1: Sequence[Bar], bars2: Sequence[Bar], eps: float):
    """Perfect matching on the graph with one erase node per bar.

    Left side: bars1 followed by erase nodes for bars2. Right side: bars2
    followed by erase nodes for bars1. Erase nodes are mutually adjacent.
    """
    n1, n2 = len(bars1), len(bars2)
    size = n1 + n2
    if size == 0:
        return [], [], []
    rows, cols = [], []
    for i, p in enumerate(bars1):
        for j, q in enumerate(bars2):
            if _admissible(p, q, eps):
                rows.append(i)
                cols.append(j)
        if _erasable(p, eps):
            rows.append(i)
            cols.append(n2 + i)
    for j, q in enumerate(bars2):
        if _erasable(q, eps):
            rows.append(n1 + j)
            cols.append(j)
        for i in range(n1):
            rows.append(n1 + j)
            cols.append(n2 + i)
    graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(size, size))
    match = maximum_bipartite_matching(graph, perm_type="column")
    if np.any(match < 0):
        return None
    pairs, erased1, erased2 = [], [], []
    for i in range(n1):
        j = int(match[i])
        if j < n2:
            pairs.append((bars1[i], bars2[j]))
        else:
            erased1.append(bars1[i])
    for j in range(n2):
        if int(match[n1 + j]) == j:
            erased2.append(bars2[j])
    return pairs, erased1, erased2


def _split(barcode: Barcode) -> dict[int, list[Bar]]:
    out: dict[int, list[Bar]] = {}
    for b in barcode:
        out.setdefault(b.degree, []).append(b)
    return out


def matching_feasible(B1: Barcode, B2: Barcode, eps: float) -> Optional[Matching]:
    """A witness epsilon-matching, or ``None`` when none exists.

    Bars are matched only within their degree.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    by1, by2 = _split(B1), _split(B2)
    pairs, erased1, erased2 = [], [], []
    for d in sorted(set(by1) | set(by2)):
        found = _match_degree(by1.get(d, []), by2.get(d, []), eps)
        if found is None:
            return None
        pairs += found[0]
        erased1 += found[1]
        erased2 += found[2]
    return Matching(tuple(pairs), tuple(erased1), tuple(erased2), eps)


def _candidates(bars1: Sequence[Bar], bars2: Sequence[Bar]) -> list[float]:
    values = {0.0}
    for p in itertools.chain(bars1, bars2):
        if not p.is_infinite:
            values.add(p.length / 2)
    for p in bars1:
        for q in bars2:
            cost = _pair_cost(p, q)
            if math.isfinite(cost):
                values.add(cost)
    return sorted(values)


def _degree_distance(bars1: Sequence[Bar], bars2: Sequence[Bar]) -> float:
    inf1 = sum(b.is_infinite for b in bars1)
    inf2 = sum(b.is_infinite for b in bars2)
    if inf1 != inf2:
        return math.inf
    cands = _candidates(bars1, bars2)
    lo, hi = 0, len(cands) - 1
    # The largest candidate always admits a matching: infinite bars pair up
    # in birth order and everything finite can be erased or paired.
    while lo < hi:
        mid = (lo + hi) // 2
        if _match_degree(bars1, bars2, cands[mid]) is not None:
            hi = mid
        else:
            lo = mid + 1
    return cands[lo]


def bottleneck_distance(B1: Barcode, B2: Barcode) -> float:
    """Exact bottleneck distance, ``math.inf`` if infinite-bar counts differ."""
    by1, by2 = _split(B1), _split(B2)
    worst = 0.0
    for d in set(by1) | set(by2):
        worst = max(worst, _degree_distance(by1.get(d, []), by2.get(d, [])))
    return worst


def _smallest_left(bars: Sequence[Bar], n: int) -> list[Bar]:
    # Among equal births prefer longer bars so the hypothesis is easiest to meet.
    ordered = sorted(bars, key=lambda b: (b.birth, -(b.length)))
    return ordered[:n]


def lower_bound_opt_matching(B1: Barcode, B2: Barcode, n: int, degree: Optional[int] = None) -> Optional[float]:
    """Combinatorial lower bound ``|a - b|_inf / 2`` on the bottleneck distance.

    ``a`` and ``b`` are the ``n`` smallest left endpoints of each barcode in
    descending order. The bound applies when every chosen bar dies after
    ``max(a_1, b_1)``; otherwise ``None`` is returned.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if degree is not None:
        B1, B2 = B1.in_degree(degree), B2.in_degree(degree)
    if len(B1) < n or len(B2) < n:
        raise ValueError(f"both barcodes need at least {n} bars")
    chosen1 = _smallest_left(B1.bars, n)
    chosen2 = _smallest_left(B2.bars, n)
    a = sorted((b.birth for b in chosen1), reverse=True)
    b = sorted((x.birth for x in chosen2), reverse=True)
    top = max(a[0], b[0])
    deaths = [math.inf if x.death is None else x.death for x in chosen1 + chosen2]
    if not min(deaths) > top:
        return None
    return 0.5 * max(abs(u - v) for u, v in zip(a, b))


# --- interleavings -----------------------------------------------------------


class IsometryMismatch(RuntimeError):
    """The exhaustive interleaving search disagreed with the bottleneck route."""


def _legal_pairs(src: Sequence[Bar], tgt: Sequence[Bar], amount: float) -> list[tuple[int, int]]:
    """Index pairs ``(i, j)`` with a nonzero map ``src[j] -> tgt[i][amount]``."""
    out = []
    for i, t in enumerate(tgt):
        c = t.birth - amount
        d = None if t.death is None else t.death - amount
        for j, s in enumerate(src):
            if interval_morphism_exists(s.birth, s.death, c, d):
                out.append((i, j))
    return out


def _solve_gf2(rows: list[int], nvars: int) -> bool:
    """Consistency of a GF(2) system; each row is a bitmask with the rhs at bit ``nvars``."""
    var_mask = (1 << nvars) - 1
    pivots: list[tuple[int, int]] = []
    for row in rows:
        for lead, p in pivots:
            if row & lead:
                row ^= p
        low = row & var_mask
        if low == 0:
            if row:
                return False
            continue
        pivots.append((low & -low, row))
    return True


def _interleaving_exists(m1: Sequence[Bar], m2: Sequence[Bar], delta: float) -> bool:
    phi = _legal_pairs(m1, m2, delta)  # m1 -> m2[delta]
    psi = _legal_pairs(m2, m1, delta)  # m2 -> m1[delta]
    if len(psi) > len(phi):
        m1, m2 = m2, m1
        phi, psi = psi, phi
    # equations indexed by (target, source) pairs where the composite may be nonzero
    eq1 = _legal_pairs(m1, m1, 2 * delta)
    eq2 = _legal_pairs(m2, m2, 2 * delta)
    psi_index = {pair: k for k, pair in enumerate(psi)}
    nvars = len(psi)
    keep1 = [m1[j].length > 2 * delta for j in range(len(m1))]
    keep2 = [m2[j].length > 2 * delta for j in range(len(m2))]
    # A comparison entry that is nonzero always has a legal slot, so it is
    # covered by eq1/eq2; off-slot entries are zero on both sides.
    for mask in range(1 << len(phi)):
        phi_on = {phi[k] for k in range(len(phi)) if mask >> k & 1}
        rows = []
        # (Psi o Phi)_{ik} = sum_j Psi_{ij} Phi_{jk}
        for i, k in eq1:
            row = 0
            for j in range(len(m2)):
                if (j, k) in phi_on and (i, j) in psi_index:
                    row ^= 1 << psi_index[(i, j)]
            if i == k and keep1[k]:
                row ^= 1 << nvars
            rows.append(row)
        # (Phi o Psi)_{ik} = sum_j Phi_{ij} Psi_{jk}
        for i, k in eq2:
            row = 0
            for j in range(len(m1)):
                if (i, j) in phi_on and (j, k) in psi_index:
                    row ^= 1 << psi_index[(j, k)]
            if i == k and keep2[k]:
                row ^= 1 << nvars
            rows.append(row)
        if _solve_gf2(rows, nvars):
            return True
    return False


def exhaustive_interleaving(M1: FinitePM, M2: FinitePM, delta: float) -> bool:
    """Search every morphism pattern for a ``delta``-interleaving.

    One morphism is enumerated; the other then solves a linear system over
    the two-element field. Exponential in the number of legal entries.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    return _interleaving_exists(list(M1.summands), list(M2.summands), delta)


def _interleaving_events(m1: Sequence[Bar], m2: Sequence[Bar]) -> list[float]:
    """Shifts where some legality pattern can change.

    Cross-module endpoint gaps govern the maps between the modules; halved
    gaps inside one module govern the composites compared at twice the shift.
    """

    def gaps(p: Bar, q: Bar):
        for u, v in ((p.birth, q.birth), (p.death, q.death), (p.birth, q.death)):
            if u is not None and v is not None and v - u >= 0:
                yield v - u

    events = {0.0}
    for p, q in itertools.chain(itertools.product(m1, m2), itertools.product(m2, m1)):
        events.update(gaps(p, q))
    for module in (m1, m2):
        for p, q in itertools.product(module, module):
            events.update(g / 2 for g in gaps(p, q))
    return sorted(events)


def exhaustive_interleaving_threshold(M1: FinitePM, M2: FinitePM) -> float:
    """Least shift admitting an interleaving, by exhaustive pattern search."""
    m1, m2 = list(M1.summands), list(M2.summands)
    if sum(b.is_infinite for b in m1) != sum(b.is_infinite for b in m2):
        return math.inf
    events = _interleaving_events(m1, m2)
    lo, hi = 0, len(events) - 1
    if not _interleaving_exists(m1, m2, events[hi]):
        raise IsometryMismatch("no interleaving at the largest event shift")
    while lo < hi:
        mid = (lo + hi) // 2
        if _interleaving_exists(m1, m2, events[mid]):
            hi = mid
        else:
            lo = mid + 1
    return events[lo]


def interleaving_check(M1: FinitePM, M2: FinitePM, delta: float, cross_check_limit: int = 4) -> bool:
    """Whether ``M1`` and ``M2`` are ``delta``-interleaved.

    Decided through the bottleneck distance. Small instances are also searched
    exhaustively and any disagreement raises :class:`IsometryMismatch`.
    """
    answer = bottleneck_distance(M1.barcode(), M2.barcode()) <= delta
    if max(len(M1), len(M2)) <= cross_check_limit:
        brute = exhaustive_interleaving(M1, M2, delta)
        if brute != answer:
            raise IsometryMismatch(f"bottleneck says {answer}, exhaustive search says {brute}")
    return answer

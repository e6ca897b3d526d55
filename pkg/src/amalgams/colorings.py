"""Ordinal arithmetic in Cantor normal form, ladder systems, walks, and
the derived subadditive colorings.

The desk-scale instance works with ordinals below a configurable bound
under epsilon_0 and a canonical ladder system from fundamental
sequences. The coloring e comes from the walk recursion; its binding
contract is subadditivity (both inequalities) plus local smallness on
every materialized triple, which the test suite checks exhaustively.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import total_ordering
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple


@total_ordering
@dataclass(frozen=True)
class OrdinalCNF:
    """Ordinal below epsilon_0 as a Cantor-normal-form term list.

    terms is a tuple of (exponent, coefficient) pairs with strictly
    decreasing exponents and positive coefficients; the empty tuple is 0.
    """

    terms: Tuple[Tuple["OrdinalCNF", int], ...] = ()

    def __post_init__(self):
        prev = None
        for exp, coeff in self.terms:
            if coeff <= 0:
                raise ValueError("CNF coefficients must be positive")
            if prev is not None and ord_cmp(exp, prev) >= 0:
                raise ValueError("CNF exponents must strictly decrease")
            prev = exp

    def is_zero(self) -> bool:
        return not self.terms

    def is_successor(self) -> bool:
        return bool(self.terms) and self.terms[-1][0].is_zero()

    def is_limit(self) -> bool:
        return bool(self.terms) and not self.terms[-1][0].is_zero()

    def natural_part(self) -> int:
        if self.is_successor():
            return self.terms[-1][1]
        return 0

    def __lt__(self, other: "OrdinalCNF") -> bool:
        return ord_cmp(self, other) < 0

    def __repr__(self) -> str:
        return f"Ord({ord_to_str(self)})"


ZERO = OrdinalCNF()
ONE = OrdinalCNF((( ZERO, 1),))
OMEGA = OrdinalCNF(((ONE, 1),))


def from_int(n: int) -> OrdinalCNF:
    if n < 0:
        raise ValueError("ordinals are nonnegative")
    if n == 0:
        return ZERO
    return OrdinalCNF(((ZERO, n),))


def omega_power(exp: OrdinalCNF, coeff: int = 1) -> OrdinalCNF:
    return OrdinalCNF(((exp, coeff),))


def ord_cmp(a: OrdinalCNF, b: OrdinalCNF) -> int:
    for (ea, ca), (eb, cb) in zip(a.terms, b.terms):
        c = ord_cmp(ea, eb)
        if c != 0:
            return c
        if ca != cb:
            return -1 if ca < cb else 1
    if len(a.terms) != len(b.terms):
        return -1 if len(a.terms) < len(b.terms) else 1
    return 0


def ord_add(a: OrdinalCNF, b: OrdinalCNF) -> OrdinalCNF:
    """Ordinal sum: the low tail of a below b's leading exponent is
    absorbed."""
    if b.is_zero():
        return a
    lead_exp, lead_coeff = b.terms[0]
    kept = []
    for exp, coeff in a.terms:
        c = ord_cmp(exp, lead_exp)
        if c > 0:
            kept.append((exp, coeff))
        elif c == 0:
            kept.append((exp, coeff + lead_coeff))
            return OrdinalCNF(tuple(kept) + b.terms[1:])
        else:
            break
    return OrdinalCNF(tuple(kept) + b.terms)


def successor(a: OrdinalCNF) -> OrdinalCNF:
    return ord_add(a, ONE)


def predecessor(a: OrdinalCNF) -> OrdinalCNF:
    if not a.is_successor():
        raise ValueError(f"{a!r} is not a successor ordinal")
    head = a.terms[:-1]
    exp, coeff = a.terms[-1]
    if coeff > 1:
        return OrdinalCNF(head + ((exp, coeff - 1),))
    return OrdinalCNF(head)


def fundamental_seq(delta: OrdinalCNF, n: int) -> OrdinalCNF:
    """The n-th point (0-based) of the canonical fundamental sequence of
    a limit ordinal."""
    if not delta.is_limit():
        raise ValueError(f"{delta!r} is not a limit ordinal")
    if n < 0:
        raise ValueError("index must be nonnegative")
    head = delta.terms[:-1]
    exp, coeff = delta.terms[-1]
    if coeff > 1:
        head = head + ((exp, coeff - 1),)
    # remaining part is omega^exp with exp > 0
    if exp.is_successor():
        step = omega_power(predecessor(exp), n + 1)
    else:
        step = omega_power(fundamental_seq(exp, n))
    return OrdinalCNF(head + step.terms)


# ---------------------------------------------------------------------------
# parsing and formatting (JSON keys)


def ord_to_str(a: OrdinalCNF) -> str:
    if a.is_zero():
        return "0"
    parts = []
    for exp, coeff in a.terms:
        if exp.is_zero():
            parts.append(str(coeff))
            continue
        if ord_cmp(exp, ONE) == 0:
            base = "w"
        else:
            base = f"w^({ord_to_str(exp)})"
        parts.append(base if coeff == 1 else f"{base}*{coeff}")
    return "+".join(parts)


def ord_from_str(s: str) -> OrdinalCNF:
    text = s.replace(" ", "")
    value, pos = _parse_sum(text, 0)
    if pos != len(text):
        raise ValueError(f"trailing characters in ordinal {s!r}")
    return value


def _parse_sum(text: str, pos: int) -> Tuple[OrdinalCNF, int]:
    total = ZERO
    while True:
        term, pos = _parse_term(text, pos)
        total = ord_add(total, term)
        if pos < len(text) and text[pos] == "+":
            pos += 1
            continue
        return total, pos


def _parse_term(text: str, pos: int) -> Tuple[OrdinalCNF, int]:
    if pos >= len(text):
        raise ValueError("unexpected end of ordinal string")
    if text[pos].isdigit():
        end = pos
        while end < len(text) and text[end].isdigit():
            end += 1
        return from_int(int(text[pos:end])), end
    if text[pos] != "w":
        raise ValueError(f"unexpected character {text[pos]!r} in ordinal")
    pos += 1
    exp = ONE
    if pos < len(text) and text[pos] == "^":
        if pos + 1 >= len(text) or text[pos + 1] != "(":
            raise ValueError("exponent must be parenthesized")
        depth = 1
        end = pos + 2
        while end < len(text) and depth:
            if text[end] == "(":
                depth += 1
            elif text[end] == ")":
                depth -= 1
            end += 1
        if depth:
            raise ValueError("unbalanced parentheses in ordinal")
        exp = ord_from_str(text[pos + 2:end - 1])
        pos = end
    coeff = 1
    if pos < len(text) and text[pos] == "*":
        end = pos + 1
        while end < len(text) and text[end].isdigit():
            end += 1
        coeff = int(text[pos + 1:end])
        pos = end
    return omega_power(exp, coeff), pos


# ---------------------------------------------------------------------------
# ladder systems and walks


class LadderSystem:
    """Cofinal sequences C_delta: the canonical fundamental sequence at
    limits, the singleton predecessor at successors."""

    def __init__(self, custom: Optional[Dict[str, Sequence[OrdinalCNF]]] = None,
                 step_guard: int = 100_000):
        self.custom = custom or {}
        self.step_guard = step_guard

    def point(self, delta: OrdinalCNF, n: int) -> Optional[OrdinalCNF]:
        """n-th ladder point of delta, or None past the end of a finite
        custom ladder. Custom entries are sequences or callables n -> point.
        Successor ladders have the single point delta-1."""
        key = ord_to_str(delta)
        if key in self.custom:
            seq = self.custom[key]
            if callable(seq):
                return seq(n)
            return seq[n] if n < len(seq) else None
        if delta.is_successor():
            return predecessor(delta) if n == 0 else None
        if delta.is_limit():
            return fundamental_seq(delta, n)
        raise ValueError("zero has no ladder")

    def step(self, delta: OrdinalCNF, alpha: OrdinalCNF) -> Tuple[OrdinalCNF, int]:
        """(min(C_delta minus alpha), otp(C_delta intersect alpha)).

        Requires alpha < delta; cofinality of the ladder guarantees the
        minimum exists.
        """
        if not alpha < delta:
            raise ValueError("step requires alpha < delta")
        n = 0
        while n < self.step_guard:
            p = self.point(delta, n)
            if p is None:
                raise ValueError(
                    f"ladder of {ord_to_str(delta)} is not cofinal")
            if not p < alpha:
                return p, n
            n += 1
        raise ValueError("ladder step guard exhausted")

    def members_below(self, delta: OrdinalCNF,
                      alpha: OrdinalCNF) -> List[OrdinalCNF]:
        """C_delta intersect alpha, in increasing order."""
        out = []
        n = 0
        while n < self.step_guard:
            p = self.point(delta, n)
            if p is None or not p < alpha:
                return out
            out.append(p)
            n += 1
        raise ValueError("ladder member guard exhausted")


def walk(alpha: OrdinalCNF, beta: OrdinalCNF,
         C: LadderSystem) -> List[OrdinalCNF]:
    """Descending trace of the walk from beta down to alpha."""
    if not alpha < beta:
        raise ValueError("walk requires alpha < beta")
    trace = [beta]
    cur = beta
    guard = C.step_guard
    while ord_cmp(cur, alpha) > 0 and guard:
        guard -= 1
        cur, _ = C.step(cur, alpha)
        trace.append(cur)
    if ord_cmp(cur, alpha) != 0:
        raise ValueError("walk did not reach alpha")
    return trace


class WalkColoring:
    """The coloring e from the walk recursion.

    e(alpha, beta) = max of: otp(C_beta intersect alpha),
    e(alpha, min(C_beta minus alpha)), and e(xi, alpha) for xi in
    C_beta intersect alpha; with e(alpha, alpha) = 0.
    """

    def __init__(self, C: Optional[LadderSystem] = None,
                 depth_guard: int = 10_000):
        self.C = C or LadderSystem()
        self.depth_guard = depth_guard
        self._memo: Dict[Tuple[str, str], int] = {}

    def e(self, alpha: OrdinalCNF, beta: OrdinalCNF) -> int:
        c = ord_cmp(alpha, beta)
        if c == 0:
            return 0
        if c > 0:
            raise ValueError("e requires alpha <= beta")
        key = (ord_to_str(alpha), ord_to_str(beta))
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if len(self._memo) > self.depth_guard * 10:
            raise ValueError("coloring memo guard exhausted")
        nxt, otp = self.C.step(beta, alpha)
        value = otp
        value = max(value, self.e(alpha, nxt))
        for xi in self.C.members_below(beta, alpha):
            value = max(value, self.e(xi, alpha))
        self._memo[key] = value
        return value

    def __call__(self, alpha: OrdinalCNF, beta: OrdinalCNF) -> int:
        return self.e(alpha, beta)


# ---------------------------------------------------------------------------
# D-sets


def d_set(gamma: OrdinalCNF, i: int, mode: str,
          e: Callable[[OrdinalCNF, OrdinalCNF], int],
          scope: Sequence[OrdinalCNF]) -> List[OrdinalCNF]:
    """{beta in scope below gamma | e(beta, gamma) < i (strict) or
    <= i (weak)}, in increasing order."""
    if mode not in ("strict", "weak"):
        raise ValueError("mode must be strict or weak")
    out = []
    for beta in scope:
        if not beta < gamma:
            continue
        v = e(beta, gamma)
        if (mode == "strict" and v < i) or (mode == "weak" and v <= i):
            out.append(beta)
    return sorted(out, key=ord_sort_key)


def ord_sort_key(a: OrdinalCNF):
    return _rank(a)


def _rank(a: OrdinalCNF) -> Tuple:
    return tuple((_rank(exp), coeff) for exp, coeff in a.terms)


# ---------------------------------------------------------------------------
# the composed coloring c


def cantor_pair(x: int, y: int) -> int:
    return (x + y) * (x + y + 1) // 2 + y


def cantor_unpair(n: int) -> Tuple[int, int]:
    if n < 0:
        raise ValueError("pairing is defined on naturals")
    s = (math.isqrt(8 * n + 1) - 1) // 2
    y = n - s * (s + 1) // 2
    return s - y, y


def c_pair(
    alpha: OrdinalCNF,
    beta: OrdinalCNF,
    d: Callable[[OrdinalCNF, OrdinalCNF], int],
    pairing: Callable[[int], Tuple[int, int]] = cantor_unpair,
) -> Tuple[int, int]:
    """The composition pairing(d(alpha, beta))."""
    if not alpha < beta:
        raise ValueError("c_pair requires alpha < beta")
    return pairing(d(alpha, beta))


def default_d(C: Optional[LadderSystem] = None):
    """A walks-derived pair coloring with a spread-out range: combines
    the walk length and the first ladder position."""
    C = C or LadderSystem()

    def d(alpha: OrdinalCNF, beta: OrdinalCNF) -> int:
        trace = walk(alpha, beta, C)
        _, otp = C.step(beta, alpha)
        return cantor_pair(len(trace) - 1, otp)

    return d


# ---------------------------------------------------------------------------
# coloring tables


class ColoringTable:
    """Frozen sparse maps e, c0, c1 over ordered pairs of ordinals.

    This is the only interface through which the stage engine consumes
    colorings, so hand-built tables and walks-derived ones are
    interchangeable.
    """

    def __init__(self, e: Dict[Tuple[str, str], int],
                 c0: Dict[Tuple[str, str], int],
                 c1: Dict[Tuple[str, str], int],
                 scope: Sequence[OrdinalCNF]):
        self.e_map = dict(e)
        self.c0_map = dict(c0)
        self.c1_map = dict(c1)
        self.scope = sorted(scope, key=ord_sort_key)

    @staticmethod
    def _key(alpha: OrdinalCNF, beta: OrdinalCNF) -> Tuple[str, str]:
        return (ord_to_str(alpha), ord_to_str(beta))

    def e(self, alpha: OrdinalCNF, beta: OrdinalCNF) -> int:
        return self.e_map[self._key(alpha, beta)]

    def c0(self, alpha: OrdinalCNF, beta: OrdinalCNF) -> int:
        return self.c0_map[self._key(alpha, beta)]

    def c1(self, alpha: OrdinalCNF, beta: OrdinalCNF) -> int:
        return self.c1_map[self._key(alpha, beta)]

    @classmethod
    def from_walks(cls, scope: Sequence[OrdinalCNF],
                   C: Optional[LadderSystem] = None) -> "ColoringTable":
        C = C or LadderSystem()
        coloring = WalkColoring(C)
        d = default_d(C)
        e_map: Dict[Tuple[str, str], int] = {}
        c0_map: Dict[Tuple[str, str], int] = {}
        c1_map: Dict[Tuple[str, str], int] = {}
        ordered = sorted(scope, key=ord_sort_key)
        for a, b in itertools.combinations(ordered, 2):
            key = cls._key(a, b)
            e_map[key] = coloring.e(a, b)
            xi0, xi1 = c_pair(a, b, d)
            c0_map[key] = xi0
            c1_map[key] = xi1
        return cls(e_map, c0_map, c1_map, ordered)

    def check_contract(self) -> dict:
        """Exhaustive subadditivity (both inequalities) and local
        smallness over the materialized scope; raises on violation."""
        import numpy as np

        n = len(self.scope)
        E = np.zeros((n, n), dtype=np.int64)
        for (ia, a), (ib, b) in itertools.combinations(
                enumerate(self.scope), 2):
            E[ia, ib] = self.e(a, b)
        triples = 0
        for j in range(1, n - 1):
            left = E[:j, j]          # e(a, b) for a < b
            right = E[j, j + 1:]     # e(b, c) for b < c
            bound = np.maximum.outer(left, right)
            block = E[:j, j + 1:]    # e(a, c)
            bad1 = np.argwhere(block > bound)
            if bad1.size:
                ia, ic = bad1[0]
                raise ValueError(
                    f"subadditivity (1) fails at ({ord_to_str(self.scope[ia])},"
                    f"{ord_to_str(self.scope[j])},"
                    f"{ord_to_str(self.scope[j + 1 + ic])})")
            bound2 = np.maximum(block, right[np.newaxis, :])
            bad2 = np.argwhere(left[:, np.newaxis] > bound2)
            if bad2.size:
                ia, ic = bad2[0]
                raise ValueError(
                    f"subadditivity (2) fails at ({ord_to_str(self.scope[ia])},"
                    f"{ord_to_str(self.scope[j])},"
                    f"{ord_to_str(self.scope[j + 1 + ic])})")
            triples += j * (n - 1 - j)
        # local smallness: every weak D-set over the materialized scope
        # is finite by construction; record the largest one
        max_d = 0
        for k in range(1, n):
            col = E[:k, k]
            max_d = max(max_d, int(np.max(np.sum(
                col[np.newaxis, :] <= np.unique(col)[:, np.newaxis],
                axis=1))))
        return {"triples": triples, "max_weak_d_size": max_d}

    def to_json(self) -> dict:
        def dump(m):
            return {f"{a}|{b}": v for (a, b), v in sorted(m.items())}

        return {"scope": [ord_to_str(a) for a in self.scope],
                "e": dump(self.e_map), "c0": dump(self.c0_map),
                "c1": dump(self.c1_map)}

    @classmethod
    def from_json(cls, data: dict) -> "ColoringTable":
        def load(m):
            out = {}
            for key, v in m.items():
                a, b = key.split("|")
                out[(a, b)] = int(v)
            return out

        scope = [ord_from_str(s) for s in data["scope"]]
        return cls(load(data["e"]), load(data["c0"]), load(data["c1"]),
                   scope)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)

    @classmethod
    def load(cls, path) -> "ColoringTable":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


# ---------------------------------------------------------------------------
# scopes and scans


def omega_sq_scope(count: int, width: int = 0) -> List[OrdinalCNF]:
    """The first ``count`` ordinals below omega^2 in a square
    enumeration: omega*a + b over a growing square grid, sorted."""
    side = width or (math.isqrt(count) + 2)
    out = []
    for a in range(side):
        for b in range(side):
            w = omega_power(ONE, a) if a else ZERO
            out.append(ord_add(w, from_int(b)))
    out.sort(key=ord_sort_key)
    return out[:count]


def hitting_scan(
    A: Sequence[OrdinalCNF],
    targets: Sequence[Tuple[int, int, int]],
    c0: Callable[[OrdinalCNF, OrdinalCNF], int],
    c1: Callable[[OrdinalCNF, OrdinalCNF], int],
    e: Callable[[OrdinalCNF, OrdinalCNF], int],
) -> dict:
    """Witness counts per (beta, target): how many alpha < beta in A
    satisfy c0 = xi0, c1 = xi1 and e > i. Reporting only; the
    club-quantified property is not decidable at this scale."""
    ordered = sorted(A, key=ord_sort_key)
    report: Dict[str, Dict[str, int]] = {}
    hit_targets = 0
    for xi0, xi1, i in targets:
        tkey = f"{xi0},{xi1},>{i}"
        counts: Dict[str, int] = {}
        any_hit = False
        for bi, beta in enumerate(ordered):
            n = 0
            for alpha in ordered[:bi]:
                if c0(alpha, beta) == xi0 and c1(alpha, beta) == xi1 and \
                        e(alpha, beta) > i:
                    n += 1
            if n:
                counts[ord_to_str(beta)] = n
                any_hit = True
        report[tkey] = counts
        if any_hit:
            hit_targets += 1
    return {"targets": len(targets), "targets_hit": hit_targets,
            "witnesses": report}

"""Independent brute-force oracles used by the test suite.

Everything here is deliberately implemented with different algorithms
and conventions than the package (right-to-left transversal rewriting,
naive DP scans, exhaustive chain search) so agreement is meaningful.
"""

from __future__ import annotations

from typing import Dict, List, Sequence, Tuple


def naive_free_reduce(word: Sequence[int]) -> List[int]:
    """Repeated single-pass cancellation until a fixed point."""
    cur = list(word)
    while True:
        for i in range(len(cur) - 1):
            if cur[i] == -cur[i + 1]:
                cur = cur[:i] + cur[i + 2:]
                break
        else:
            return cur


def naive_longest_common_run(a: Sequence[int], b: Sequence[int]) -> int:
    """O(n*m) dynamic program; returns only the length."""
    best = 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0] * (len(b) + 1)
        for j, y in enumerate(b):
            if x == y:
                cur[j + 1] = prev[j] + 1
                best = max(best, cur[j + 1])
        prev = cur
    return best


def naive_runs_at_least(a: Sequence[int], b: Sequence[int], k: int):
    """All maximal diagonal runs of length >= k by direct diagonal walk."""
    out = []
    for i in range(len(a)):
        for j in range(len(b)):
            if a[i] != b[j]:
                continue
            if i > 0 and j > 0 and a[i - 1] == b[j - 1]:
                continue  # not a run start
            length = 0
            while (i + length < len(a) and j + length < len(b)
                   and a[i + length] == b[j + length]):
                length += 1
            if length >= k:
                out.append((i, j, length))
    return sorted(out)


def rho_letter_sequence(x: str, y: str) -> str:
    """The pumping word over single-character generators, as a string."""
    return "".join(x * i + y for i in range(1, 81))


# ---------------------------------------------------------------------------
# transversal normal forms for finite amalgams
#
# Every element of K *_H L is uniquely h * t1 * ... * tn with the t_i
# nontrivial right-coset representatives whose sides alternate. We build
# the form by right-to-left multiplication, the opposite direction to
# the package's left-absorption pass, and with min-code representatives
# where the package keeps raw syllable values.


class FiniteAmalgamOracle:
    def __init__(self, k_table, l_table, h_pairs: Sequence[Tuple[int, int]]):
        self.tables = {"K": [list(r) for r in k_table],
                       "L": [list(r) for r in l_table]}
        self.h_sets = {"K": sorted(k for k, _ in h_pairs),
                       "L": sorted(l for _, l in h_pairs)}
        self.k2l = {k: l for k, l in h_pairs}
        self.l2k = {l: k for k, l in h_pairs}
        self.identity = {"K": self._find_identity("K"),
                         "L": self._find_identity("L")}
        self.rep = {side: self._coset_reps(side) for side in ("K", "L")}

    def _find_identity(self, side: str) -> int:
        table = self.tables[side]
        for e in range(len(table)):
            if all(table[e][g] == g for g in range(len(table))):
                return e
        raise AssertionError("no identity")

    def _coset_reps(self, side: str) -> Dict[int, int]:
        """Map g -> min of the right coset H g."""
        table = self.tables[side]
        return {
            g: min(table[h][g] for h in self.h_sets[side])
            for g in range(len(table))
        }

    def transfer(self, h: int, from_side: str, to_side: str) -> int:
        if from_side == to_side:
            return h
        return self.k2l[h] if from_side == "K" else self.l2k[h]

    def _decompose(self, side: str, g: int) -> Tuple[int, int]:
        """g = h * t with t the min-code coset representative."""
        t = self.rep[side][g]
        table = self.tables[side]
        h = next(h for h in self.h_sets[side] if table[h][t] == g)
        return h, t

    def _mul_left(self, side: str, g: int, form):
        """Multiply g (on the given side) onto the left of a normal form."""
        h_side, h, tail = form
        table = self.tables[side]
        y = table[g][self.transfer(h, h_side, side)]
        tail = list(tail)
        if y in self.h_sets[side]:
            return side, y, tail
        h2, t = self._decompose(side, y)
        if tail and tail[0][0] == side:
            # same-side head: merge t into it and redecompose
            z = table[t][tail.pop(0)[1]]
            if z in self.h_sets[side]:
                return side, table[h2][z], tail
            h3, t2 = self._decompose(side, z)
            return side, table[h2][h3], [(side, t2)] + tail
        return side, h2, [(side, t)] + tail

    def normal_form(self, syllables: Sequence[Tuple[str, int]]):
        form = ("K", self.identity["K"], [])
        for side, g in reversed(list(syllables)):
            form = self._mul_left(side, g, form)
        return form

    def forms_equal(self, f1, f2) -> bool:
        s1, h1, t1 = f1
        s2, h2, t2 = f2
        return (self.transfer(h1, s1, "K") == self.transfer(h2, s2, "K")
                and list(t1) == list(t2))

    def length(self, form) -> int:
        return len(form[2])


def exhaustive_chain_equal(oracle: FiniteAmalgamOracle,
                           u: Sequence[Tuple[str, int]],
                           v: Sequence[Tuple[str, int]]) -> bool:
    """Search all interleaving H-chains with h0 = hn = id directly."""
    if len(u) != len(v):
        return False
    n = len(u)
    if n == 0:
        return True
    if [s for s, _ in u] != [s for s, _ in v]:
        return False
    id_k = oracle.identity["K"]

    def step(i: int, h_k: int) -> bool:
        # h_k is the chain value h_i, coded on the K side
        if i == n:
            return h_k == id_k
        side, gu = u[i]
        gv = v[i][1]
        table = oracle.tables[side]
        ident = oracle.identity[side]
        h_here = oracle.transfer(h_k, "K", side)
        h_inv = next(x for x in range(len(table)) if table[h_here][x] == ident)
        for h_next in oracle.h_sets[side]:
            # require gv = h_i^-1 * gu * h_{i+1}
            if table[h_inv][table[gu][h_next]] == gv:
                if step(i + 1, oracle.transfer(h_next, side, "K")):
                    return True
        return False

    return step(0, id_k)


def double_coset(table, h_set, g: int):
    """The set H g H by direct enumeration."""
    return {table[u][table[g][v]] for u in h_set for v in h_set}

"""Admissible words over the edge alphabet.

A letter ``(w, k)`` stands for the map ``f_w^k``; a word
``((w1, k1), ..., (wn, kn))`` with terminal vertex ``v`` is the composition
``f_{w1}^{k1} o ... o f_{wn}^{kn}`` restricted to the domain of vertex ``v``.
In edge notation the j-th letter is ``e^{k_j}_{u, w_j}`` where ``u`` is the
vertex of the next letter (or the terminal one).
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class Word:
    letters: tuple = ()
    terminal: int | None = None
    alternating: bool = True

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple((int(v), int(k)) for v, k in self.letters))
        if self.alternating:
            vs = [v for v, _ in self.letters]
            if self.terminal is not None:
                vs.append(self.terminal)
            for a, b in zip(vs, vs[1:]):
                if a == b:
                    raise ValueError(f"inadmissible word: repeated vertex {a}")
        for _, k in self.letters:
            if k < 1:
                raise ValueError("powers must be positive")

    def __len__(self):
        return len(self.letters)

    @property
    def initial(self):
        return self.letters[0][0] if self.letters else self.terminal

    @property
    def vertices(self):
        return tuple(v for v, _ in self.letters)

    def concat(self, other: "Word") -> "Word":
        return Word(self.letters + other.letters, other.terminal, self.alternating)

    def rotate(self, n=1) -> "Word":
        """Cyclic rotation of a periodic word (terminal follows the new first letter)."""
        L = self.letters[n:] + self.letters[:n]
        return Word(L, L[0][0] if self.alternating else self.terminal, self.alternating)

    def to_json(self):
        return [list(x) for x in self.letters]


def edge_word(edges) -> Word:
    """Build a word from edge triples ``(t, i, k)`` meaning e^k_{t,i}.

    Consecutive edges must chain: the initial vertex of the next edge equals the
    terminal vertex of the current one.
    """
    edges = list(edges)
    for (t, i, k), (t2, i2, k2) in zip(edges, edges[1:]):
        if i2 != t:
            raise ValueError("edges do not chain")
    letters = tuple((i, k) for t, i, k in edges)
    return Word(letters, edges[-1][0] if edges else None)


def periodic_edge_word(edges) -> Word:
    """Primitive period of a periodic edge word; the terminal closes the cycle."""
    w = edge_word(edges)
    if w.letters and edges[-1][0] != edges[0][1]:
        raise ValueError("edge word does not close up")
    return w

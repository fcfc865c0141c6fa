"""Partitions of parties into blocks, and their enumeration.

A split groups the parties ``1..N`` into ``k >= 2`` disjoint blocks.  The
canonical form sorts each block's members ascending and orders the blocks
by their smallest member, so equal partitions compare equal.
"""

from __future__ import annotations

from itertools import combinations

from .errors import InputError


class Split:
    """A set partition of the parties ``1..n_parties`` into ``k`` blocks.

    Parameters
    ----------
    blocks : iterable of iterables of int
        1-based party indices.  Blocks must be disjoint, non-empty, and
        jointly cover ``{1, ..., n_parties}``.
    n_parties : int, optional
        Total number of parties.  Inferred from the blocks when omitted.
    """

    __slots__ = ("blocks", "n_parties")

    def __init__(self, blocks, n_parties: int | None = None):
        blocks = tuple(tuple(sorted(int(p) for p in b)) for b in blocks)
        if any(len(b) == 0 for b in blocks):
            raise InputError("empty block in split")
        blocks = tuple(sorted(blocks, key=lambda b: b[0]))
        members = [p for b in blocks for p in b]
        n = max(members) if n_parties is None else int(n_parties)
        if sorted(members) != list(range(1, n + 1)):
            raise InputError(
                f"blocks {blocks} do not partition parties 1..{n}")
        if len(blocks) < 2:
            raise InputError("a split needs at least two blocks (k >= 2)")
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "n_parties", n)

    def __setattr__(self, *_):
        raise AttributeError("Split is immutable")

    @classmethod
    def full(cls, n_parties: int) -> "Split":
        """The finest split: every party its own block."""
        return cls([(p,) for p in range(1, n_parties + 1)])

    @property
    def k(self) -> int:
        return len(self.blocks)

    def axes_order(self) -> list[int]:
        """0-based party axes in block-canonical order (for transposes)."""
        return [p - 1 for block in self.blocks for p in block]

    def block_dims(self, layout) -> tuple[int, ...]:
        return tuple(layout.block_dim(b) for b in self.blocks)

    def merge(self, i: int, j: int) -> "Split":
        """Coarsen by merging blocks at positions ``i`` and ``j``."""
        if i == j:
            raise InputError("cannot merge a block with itself")
        keep = [b for t, b in enumerate(self.blocks) if t not in (i, j)]
        merged = tuple(sorted(self.blocks[i] + self.blocks[j]))
        return Split(keep + [merged], self.n_parties)

    def bipartition_coarsenings(self):
        """All 2-splits obtained by merging the blocks into two groups.

        For a 2-split this yields the split itself.  Order is deterministic.
        """
        k = self.k
        out = []
        for r in range(1, k // 2 + 1):
            for subset in combinations(range(k), r):
                if r * 2 == k and 0 not in subset:
                    continue   # avoid double-counting complements
                left = tuple(sorted(p for t in subset for p in self.blocks[t]))
                right = tuple(sorted(p for t in range(k) if t not in subset
                              for p in self.blocks[t]))
                out.append(Split([left, right], self.n_parties))
        return out

    def __eq__(self, other):
        return (isinstance(other, Split) and self.blocks == other.blocks
                and self.n_parties == other.n_parties)

    def __hash__(self):
        return hash((self.blocks, self.n_parties))

    def __str__(self):
        if self.n_parties <= 9:
            return "|".join("".join(str(p) for p in b) for b in self.blocks)
        return "|".join(",".join(str(p) for p in b) for b in self.blocks)

    def __repr__(self):
        return f"Split({str(self)!r})"


def parse_split(spec: str, n_parties: int) -> Split:
    """Parse ``"12|3|4"`` (digit form) or ``"1,2|3,4"`` (comma form)."""
    spec = spec.strip()
    if not spec:
        raise InputError("empty split spec")
    blocks = []
    for token in spec.split("|"):
        token = token.strip()
        if not token:
            raise InputError(f"empty block in split spec {spec!r}")
        if "," in token:
            parts = [t.strip() for t in token.split(",")]
        else:
            parts = list(token)
        try:
            blocks.append([int(t) for t in parts])
        except ValueError:
            raise InputError(f"bad party index in split spec {spec!r}") from None
    return Split(blocks, n_parties)


def _partitions(items: list[int]):
    """Yield all set partitions of ``items`` (each a list of tuples)."""
    if len(items) == 1:
        yield [(items[0],)]
        return
    head, rest = items[0], items[1:]
    for part in _partitions(rest):
        for i in range(len(part)):
            yield part[:i] + [(head,) + part[i]] + part[i + 1:]
        yield [(head,)] + part


def enumerate_splits(n_parties: int, k: int | None = None) -> list[Split]:
    """All splits of ``n_parties`` parties, optionally restricted to ``k``
    blocks.  Deterministic order: by block count, then lexicographically.

    Brute-force enumeration; fine for the desk scale (N <= 12 means at
    most a few million partitions, and callers stay far below that).
    """
    if n_parties < 2:
        raise InputError("need at least two parties to split")
    if k is not None and not (2 <= k <= n_parties):
        raise InputError(f"k must satisfy 2 <= k <= {n_parties}, got {k}")
    found = []
    for part in _partitions(list(range(1, n_parties + 1))):
        if len(part) < 2:
            continue
        if k is not None and len(part) != k:
            continue
        found.append(Split(part, n_parties))
    found.sort(key=lambda s: (s.k, s.blocks))
    return found

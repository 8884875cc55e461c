"""Torus geometry: spin configurations, lattice symmetries, sublattices and cosets.

Sites of the N x N torus are pairs (x, y) with 0 <= x, y < N, addition mod N.
Spins live in {-1, +1} and are stored as an int8 array indexed ``spins[x, y]``.
All coset algebra is integer-exact; block magnetizations are exact rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

Site = tuple[int, int]

#: Block-size sentinel: average over the whole torus instead of a centered block.
FULL = "full"


class TorusCompatibilityError(ValueError):
    """Raised when a sublattice does not tile the requested torus."""


def _as_site(v) -> Site:
    x, y = v
    return (int(x), int(y))


class SpinConfig:
    """Immutable spin configuration on an N x N torus.

    Parameters
    ----------
    spins:
        Square array-like of +-1 values, indexed [x, y].
    """

    __slots__ = ("spins",)

    def __init__(self, spins) -> None:
        arr = np.array(spins, dtype=np.int8)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"spins must be square, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("torus side must be at least 1")
        if not np.all(np.abs(arr) == 1):
            raise ValueError("spins must be +1 or -1")
        arr.setflags(write=False)
        object.__setattr__(self, "spins", arr)

    def __setattr__(self, name, value):
        raise AttributeError("SpinConfig is immutable")

    @property
    def side(self) -> int:
        return self.spins.shape[0]

    def __getitem__(self, site: Site) -> int:
        x, y = site
        n = self.side
        return int(self.spins[x % n, y % n])

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpinConfig):
            return NotImplemented
        return self.side == other.side and bool(np.array_equal(self.spins, other.spins))

    def __hash__(self) -> int:
        return hash((self.side, self.spins.tobytes()))

    def __repr__(self) -> str:
        return f"SpinConfig(side={self.side}, sum={int(self.spins.sum())})"

    def flipped(self) -> "SpinConfig":
        """Global spin flip: every spin negated."""
        return SpinConfig(-self.spins)

    @classmethod
    def all_plus(cls, side: int) -> "SpinConfig":
        return cls(np.ones((side, side), dtype=np.int8))

    @classmethod
    def all_minus(cls, side: int) -> "SpinConfig":
        return cls(-np.ones((side, side), dtype=np.int8))

    @classmethod
    def random(cls, side: int, rng: np.random.Generator) -> "SpinConfig":
        """Uniform random configuration drawn from ``rng``."""
        return cls(rng.choice(np.array([-1, 1], dtype=np.int8), size=(side, side)))

    def to_text(self) -> str:
        """Serialize: first line the side N, then N rows of '+'/'-' characters.

        Row y is printed on line y+1 (y = 0 first), with x increasing left to
        right within a row.
        """
        n = self.side
        lines = [str(n)]
        for y in range(n):
            lines.append("".join("+" if self.spins[x, y] > 0 else "-" for x in range(n)))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SpinConfig":
        """Inverse of :meth:`to_text`. Raises ValueError on malformed input."""
        lines = [ln for ln in text.splitlines() if ln.strip() != ""]
        if not lines:
            raise ValueError("empty spin configuration text")
        try:
            n = int(lines[0].strip())
        except ValueError as exc:
            raise ValueError(f"first line must be the torus side, got {lines[0]!r}") from exc
        if n < 1:
            raise ValueError(f"torus side must be positive, got {n}")
        if len(lines) != n + 1:
            raise ValueError(f"expected {n} spin rows, got {len(lines) - 1}")
        arr = np.empty((n, n), dtype=np.int8)
        for y, row in enumerate(lines[1:]):
            row = row.strip()
            if len(row) != n:
                raise ValueError(f"row {y} has length {len(row)}, expected {n}")
            for x, ch in enumerate(row):
                if ch == "+":
                    arr[x, y] = 1
                elif ch == "-":
                    arr[x, y] = -1
                else:
                    raise ValueError(f"bad spin character {ch!r} at ({x}, {y})")
        return cls(arr)


def apply_symmetry(config: SpinConfig, translation: Site, flip: bool) -> SpinConfig:
    """Translate by ``translation`` and optionally negate every spin.

    The result has spins ``s * config[i - v]`` at site i, where v is the
    translation and s = -1 if ``flip`` else +1. Composition order is
    irrelevant since the flip commutes with translations.
    """
    vx, vy = _as_site(translation)
    rolled = np.roll(config.spins, shift=(vx, vy), axis=(0, 1))
    return SpinConfig(-rolled if flip else rolled)


def block_magnetization(config: SpinConfig, block: int | str) -> Fraction:
    """Mean spin over the centered block [-n, n]^2 (wrapped), as an exact rational.

    ``block`` is the radius n with 2n+1 <= side, or :data:`FULL` for the mean
    over the whole torus.
    """
    n_side = config.side
    if block == FULL:
        return Fraction(int(config.spins.sum()), n_side * n_side)
    n = int(block)
    if n < 0:
        raise ValueError(f"block radius must be >= 0, got {n}")
    width = 2 * n + 1
    if width > n_side:
        raise ValueError(f"block width {width} exceeds torus side {n_side}")
    idx = [(d % n_side) for d in range(-n, n + 1)]
    sub = config.spins[np.ix_(idx, idx)]
    return Fraction(int(sub.sum()), width * width)


@dataclass(frozen=True)
class SublatticeSpec:
    """Full-rank sublattice of Z^2 generated by the columns of a 2x2 integer matrix.

    ``basis`` stores the matrix rows, so the generators are
    (basis[0][0], basis[1][0]) and (basis[0][1], basis[1][1]).
    """

    basis: tuple[tuple[int, int], tuple[int, int]]

    def __post_init__(self) -> None:
        rows = tuple(tuple(int(v) for v in row) for row in self.basis)
        if len(rows) != 2 or any(len(r) != 2 for r in rows):
            raise ValueError("basis must be a 2x2 integer matrix")
        object.__setattr__(self, "basis", rows)
        if self.determinant == 0:
            raise ValueError("basis must be nonsingular")

    @property
    def determinant(self) -> int:
        (a, b), (c, d) = self.basis
        return a * d - b * c

    @property
    def index(self) -> int:
        """Number of cosets of the sublattice in Z^2 (= |det|)."""
        return abs(self.determinant)

    @property
    def adjugate(self) -> tuple[tuple[int, int], tuple[int, int]]:
        (a, b), (c, d) = self.basis
        return ((d, -b), (-c, a))

    def contains(self, vector: Site) -> bool:
        """Whether ``vector`` lies in the sublattice (exact integer test)."""
        x, y = _as_site(vector)
        (p, q), (r, s) = self.adjugate
        det = abs(self.determinant)
        return (p * x + q * y) % det == 0 and (r * x + s * y) % det == 0

    def coset_label(self, site: Site) -> tuple[int, int]:
        """Integer label constant on cosets and distinct across them.

        Labels are the adjugate image of the site reduced mod |det|; adding a
        lattice vector shifts the image by det * (integer vector), which
        vanishes mod |det|.
        """
        x, y = _as_site(site)
        (p, q), (r, s) = self.adjugate
        det = abs(self.determinant)
        return ((p * x + q * y) % det, (r * x + s * y) % det)

    @property
    def minimal_torus_side(self) -> int:
        """Smallest N >= 1 with both N*e1 and N*e2 in the sublattice."""
        det = abs(self.determinant)
        sides = []
        for row in self.adjugate:
            for entry in row:
                sides.append(det // math.gcd(det, entry))
        return math.lcm(*sides)

    def torus_compatible(self, side: int) -> bool:
        return side % self.minimal_torus_side == 0

    def canonical_representatives(self) -> tuple[Site, ...]:
        """One site per coset: the lexicographically smallest in [0, M)^2.

        M is the minimal torus side; because M*e1 and M*e2 lie in the
        sublattice, this representative is also the lex-least coset site on
        every compatible torus, so it is stable across torus sizes.
        """
        return _canonical_reps(self.basis)

    def coset_of(self, site: Site) -> Site:
        """Canonical representative of the coset containing ``site``."""
        reps = self.canonical_representatives()
        labels = {self.coset_label(r): r for r in reps}
        return labels[self.coset_label(site)]


@lru_cache(maxsize=None)
def _canonical_reps(basis) -> tuple[Site, ...]:
    spec = SublatticeSpec(basis)
    m = spec.minimal_torus_side
    seen: dict[tuple[int, int], Site] = {}
    for x in range(m):
        for y in range(m):
            label = spec.coset_label((x, y))
            if label not in seen:
                seen[label] = (x, y)
    if len(seen) != spec.index:
        raise AssertionError("coset count disagrees with |det|")
    return tuple(sorted(seen.values()))


def coset_index_map(lattice: SublatticeSpec, side: int) -> tuple[np.ndarray, tuple[Site, ...]]:
    """Map every torus site to its coset index.

    Returns ``(index_map, reps)`` where ``index_map[x, y]`` is the position of
    site (x, y)'s coset in ``reps`` (the canonical representatives, lex
    order). Raises TorusCompatibilityError when the sublattice does not tile
    the torus.
    """
    if not lattice.torus_compatible(side):
        raise TorusCompatibilityError(
            f"side {side} is not a multiple of the minimal torus side "
            f"{lattice.minimal_torus_side}"
        )
    reps = lattice.canonical_representatives()
    xs = np.arange(side)
    (p, q), (r, s) = lattice.adjugate
    det = lattice.index
    a1 = (p * xs[:, None] + q * xs[None, :]) % det
    a2 = (r * xs[:, None] + s * xs[None, :]) % det
    # Dense lookup over the det^2 possible (a1, a2) labels; every torus site
    # carries one of the det labels realized by the representatives.
    lut = np.empty(det * det, dtype=np.int64)
    for i, rep in enumerate(reps):
        label = lattice.coset_label(rep)
        lut[label[0] * det + label[1]] = i
    index_map = lut[a1 * det + a2]
    return index_map, reps


def enumerate_cosets(lattice: SublatticeSpec, side: int) -> list[list[Site]]:
    """All cosets on the N x N torus, each as a list of sites.

    Cosets are ordered by canonical representative; sites within a coset are
    in lexicographic order. Every coset has exactly side^2 / index sites.
    """
    index_map, reps = coset_index_map(lattice, side)
    cosets: list[list[Site]] = [[] for _ in reps]
    for x in range(side):
        for y in range(side):
            cosets[index_map[x, y]].append((x, y))
    return cosets

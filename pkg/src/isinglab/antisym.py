"""Periodic antisymmetric configurations.

A configuration is antisymmetric for (L, u) when it is invariant under
translations by the sublattice L and translating by u equals the global spin
flip. Such configurations are constant on L-cosets, u pairs the cosets without
fixed points, and paired cosets carry opposite values, so every compatible
torus instantiation has exactly zero mean on the fundamental domain.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import (
    Site,
    SpinConfig,
    SublatticeSpec,
    apply_symmetry,
    coset_index_map,
)

__all__ = [
    "AntisymSpec",
    "verify_antisymmetric",
    "instantiate_on_torus",
    "build_from_cylinder",
]


@dataclass(frozen=True)
class AntisymSpec:
    """Finite description of a periodic antisymmetric configuration.

    ``cell_values`` assigns +-1 to every canonical coset representative of
    ``lattice``; translating by ``flip_vector`` must negate the assignment.
    Construction validates the whole contract.
    """

    lattice: SublatticeSpec
    flip_vector: Site
    cell_values: tuple[tuple[Site, int], ...]

    def __post_init__(self) -> None:
        u = (int(self.flip_vector[0]), int(self.flip_vector[1]))
        object.__setattr__(self, "flip_vector", u)
        values = tuple(
            ((int(s[0]), int(s[1])), int(v)) for s, v in self.cell_values
        )
        object.__setattr__(self, "cell_values", tuple(sorted(values)))

        lat = self.lattice
        if lat.contains(u):
            raise ValueError("flip vector must lie outside the sublattice")
        if not lat.contains((2 * u[0], 2 * u[1])):
            raise ValueError("twice the flip vector must lie in the sublattice")

        reps = lat.canonical_representatives()
        assigned = dict(self.cell_values)
        if set(assigned) != set(reps):
            raise ValueError("cell values must cover exactly the canonical representatives")
        if any(v not in (-1, 1) for v in assigned.values()):
            raise ValueError("cell values must be +1 or -1")
        for rep in reps:
            partner = lat.coset_of((rep[0] + u[0], rep[1] + u[1]))
            if partner == rep:
                raise ValueError("flip vector pairs a coset with itself")
            if assigned[partner] != -assigned[rep]:
                raise ValueError(f"cosets {rep} and {partner} must carry opposite values")
        if sum(assigned.values()) != 0:
            raise AssertionError("paired opposite values cannot have nonzero sum")

    def value_of(self, site: Site) -> int:
        """Spin assigned to the coset of ``site``."""
        return dict(self.cell_values)[self.lattice.coset_of(site)]

    def negated(self) -> "AntisymSpec":
        """The globally flipped configuration (same lattice and flip vector)."""
        return AntisymSpec(
            lattice=self.lattice,
            flip_vector=self.flip_vector,
            cell_values=tuple((s, -v) for s, v in self.cell_values),
        )

    def to_record(self) -> dict:
        """JSON-friendly record: basis rows, flip vector, coset values."""
        return {
            "basis": [list(row) for row in self.lattice.basis],
            "u": list(self.flip_vector),
            "cell_values": [[list(site), value] for site, value in self.cell_values],
        }

    @classmethod
    def from_record(cls, record: dict) -> "AntisymSpec":
        try:
            basis = tuple(tuple(int(v) for v in row) for row in record["basis"])
            u = (int(record["u"][0]), int(record["u"][1]))
            values = tuple(
                ((int(site[0]), int(site[1])), int(value))
                for site, value in record["cell_values"]
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise ValueError(f"malformed antisymmetric record: {exc}") from exc
        return cls(lattice=SublatticeSpec(basis), flip_vector=u, cell_values=values)


def verify_antisymmetric(config: SpinConfig, lattice: SublatticeSpec, u: Site) -> bool:
    """Check L-periodicity and the flip identity on a compatible torus.

    True iff ``config`` is invariant under translation by both basis columns
    of ``lattice`` and translating by ``u`` equals negating every spin.
    Raises TorusCompatibilityError when the lattice does not tile the torus
    (the check would be meaningless there).
    """
    coset_index_map(lattice, config.side)  # compatibility gate
    (a, b), (c, d) = lattice.basis
    for gen in ((a, c), (b, d)):
        if apply_symmetry(config, gen, flip=False) != config:
            return False
    return apply_symmetry(config, u, flip=True) == config


def instantiate_on_torus(spec: AntisymSpec, side: int) -> SpinConfig:
    """Realize the periodic configuration on an N x N torus.

    Raises TorusCompatibilityError unless ``side`` is a multiple of the
    lattice's minimal torus side.
    """
    index_map, reps = coset_index_map(spec.lattice, side)
    assigned = dict(spec.cell_values)
    values = np.array([assigned[rep] for rep in reps], dtype=np.int8)
    return SpinConfig(values[index_map])


def build_from_cylinder(
    footprint: list[Site] | tuple[Site, ...],
    pattern: dict[Site, int],
    fill_seed: int,
    invert_fill: bool = False,
) -> AntisymSpec:
    """Extend a finite spin pattern to a periodic antisymmetric configuration.

    ``footprint`` is a finite set of sites F carrying the prescribed values
    ``pattern``; the construction picks the smallest horizontal flip vector
    u = (k, 0) whose classes 0 and k mod 2k avoid the horizontal differences
    of F (those conflicts cannot be cured vertically), then the smallest
    vertical period making L = <2u, (0, m)> avoid conflicts, imposes the
    pattern on the F-cosets and its negation on the (F+u)-cosets, and fills
    the remaining coset pairs pseudorandomly from ``fill_seed`` with partners
    negated. ``invert_fill`` negates the pseudorandom fill, so building from
    the negated pattern with ``invert_fill=True`` yields the exact global
    flip of the original.
    """
    sites = tuple((int(s[0]), int(s[1])) for s in footprint)
    if len(sites) == 0:
        raise ValueError("footprint must be nonempty")
    if len(set(sites)) != len(sites):
        raise ValueError("footprint sites must be distinct")
    values = {(int(s[0]), int(s[1])): int(v) for s, v in pattern.items()}
    if set(values) != set(sites):
        raise ValueError("pattern must assign exactly the footprint sites")
    if any(v not in (-1, 1) for v in values.values()):
        raise ValueError("pattern values must be +1 or -1")

    diffs = {(a[0] - b[0], a[1] - b[1]) for a in sites for b in sites}

    def k_admissible(k: int) -> bool:
        # dy = 0 conflicts are permanent: (2k, 0) lies in L for every vertical
        # period, so horizontal diffs must avoid 0 and k mod 2k from the start.
        for dx, dy in diffs:
            if dy == 0 and dx != 0 and dx % (2 * k) == 0:
                return False
            if dy == 0 and (dx - k) % (2 * k) == 0:
                return False
        return True

    k = 1
    while not k_admissible(k):
        k += 1
    u = (k, 0)

    def conflict_free(m: int) -> bool:
        # L = <(2k, 0), (0, m)>. Reject when a nonzero lattice vector or any
        # vector of u + L lands in F - F: either would force two footprint
        # sites into the same coset pair with inconsistent values.
        for dx, dy in diffs:
            if dy % m == 0:
                if dx % (2 * k) == 0 and (dx, dy) != (0, 0):
                    return False
                if (dx - k) % (2 * k) == 0:
                    return False
        return True

    m = 1
    while not conflict_free(m):
        m += 1

    lattice = SublatticeSpec(((2 * k, 0), (0, m)))
    assigned: dict[Site, int] = {}

    def assign(site: Site, value: int) -> None:
        rep = lattice.coset_of(site)
        if assigned.get(rep, value) != value:
            raise AssertionError("conflicting assignment; period search is broken")
        assigned[rep] = value

    for site in sites:
        assign(site, values[site])
        assign((site[0] + k, site[1]), -values[site])

    rng = np.random.default_rng(fill_seed)
    reps = lattice.canonical_representatives()
    for rep in reps:
        if rep in assigned:
            continue
        partner = lattice.coset_of((rep[0] + k, rep[1]))
        sign = 1 if rng.integers(0, 2) == 1 else -1
        if invert_fill:
            sign = -sign
        assign(rep, sign)
        assign(partner, -sign)

    return AntisymSpec(
        lattice=lattice,
        flip_vector=u,
        cell_values=tuple(assigned.items()),
    )

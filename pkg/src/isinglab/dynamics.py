"""Continuous-time heat-bath Glauber dynamics driven by explicit noise.

Every site of the torus carries an independent rate-1 Poisson clock; each
ring comes with a uniform mark U in (0, 1). When site i rings at time t the
spin is resampled: with h the sum of the four neighbor spins just before t,
the new spin is +1 exactly when U < p(h) = 1 / (1 + exp(-2*beta*h)).
Trajectories are deterministic functions of (initial state, noise), so lattice
symmetries of the dynamics become exact bitwise couplings once the noise is
transported: relabeling sites realizes translations, reflecting marks
(U -> 1 - U) realizes the global flip.

The probability table stores p(h) for h >= 0 and defines p(-h) := 1.0 - p(h),
which is exact because p(h) lies in [0.5, 1). Under mark reflection the
decision "U < p(h)" then maps to the exact complement of "1-U < p(-h)" except
when a mark collides bitwise with a table entry; that raises
MarkBoundaryError instead of silently degrading the coupling.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .lattice import Site, SpinConfig, apply_symmetry

__all__ = [
    "UpdateRule",
    "NoiseStream",
    "Trajectory",
    "TieError",
    "MarkBoundaryError",
    "heat_bath_prob",
    "generate_noise",
    "transform_noise",
    "evolve",
    "match_under_symmetry",
    "check_translation_covariance",
    "check_flip_covariance",
    "check_antisym_coupling",
]

#: Marks are kept inside [2^-53, 1 - 2^-53] so that mark reflection stays in
#: the same interval and the complement arithmetic below is exact.
MARK_LO = 2.0**-53
MARK_HI = 1.0 - 2.0**-53

ALLOWED_FIELDS = (-4, -2, 0, 2, 4)


class TieError(RuntimeError):
    """Two clock rings share the same time; the event order is ambiguous."""


class MarkBoundaryError(RuntimeError):
    """A mark equals a probability table entry bitwise; the update is ambiguous
    under mark reflection."""


def heat_bath_prob(beta: float, h: int) -> float:
    """Probability that the resampled spin is +1 given neighbor sum ``h``.

    ``h`` must be one of -4, -2, 0, 2, 4 (four neighbors on the square torus).
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if h not in ALLOWED_FIELDS:
        raise ValueError(f"neighbor sum must be in {ALLOWED_FIELDS}, got {h}")
    return 1.0 / (1.0 + math.exp(-2.0 * beta * h))


@dataclass(frozen=True)
class UpdateRule:
    """Heat-bath update rule at inverse temperature ``beta``."""

    beta: float

    def __post_init__(self) -> None:
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")

    def prob_table(self) -> dict[int, float]:
        """p(h) for every allowed h, with p(-h) the exact complement of p(h)."""
        table = {h: heat_bath_prob(self.beta, h) for h in (0, 2, 4)}
        for h in (2, 4):
            table[-h] = 1.0 - table[h]
        return table


@dataclass
class NoiseStream:
    """Materialized per-site Poisson rings and uniform marks on (0, horizon].

    ``times[i]`` and ``marks[i]`` belong to the site with flat index
    i = x * side + y. Times are strictly increasing within a site; marks lie
    in [2^-53, 1 - 2^-53]. ``provenance`` records (master_seed, replica_id)
    for streams produced by :func:`generate_noise`, None for transformed ones.
    """

    side: int
    horizon: float
    times: list[np.ndarray]
    marks: list[np.ndarray]
    provenance: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if self.side < 1:
            raise ValueError("side must be at least 1")
        if not self.horizon >= 0:
            raise ValueError(f"horizon must be nonnegative, got {self.horizon}")
        if len(self.times) != self.side**2 or len(self.marks) != self.side**2:
            raise ValueError("need one time and one mark array per site")
        for i, (t, m) in enumerate(zip(self.times, self.marks)):
            if t.shape != m.shape:
                raise ValueError(f"site {i}: times and marks differ in length")
            if t.size and not (t[0] > 0 and t[-1] <= self.horizon):
                raise ValueError(f"site {i}: ring times must lie in (0, horizon]")
            if t.size > 1 and not np.all(np.diff(t) > 0):
                raise ValueError(f"site {i}: ring times must be strictly increasing")
            if m.size and not (m.min() >= MARK_LO and m.max() <= MARK_HI):
                raise ValueError(f"site {i}: marks must lie in [2^-53, 1 - 2^-53]")

    def total_events(self) -> int:
        return sum(int(t.size) for t in self.times)

    def site_events(self, site: Site) -> tuple[np.ndarray, np.ndarray]:
        x, y = site
        i = (x % self.side) * self.side + (y % self.side)
        return self.times[i], self.marks[i]


def _site_stream(
    master_seed: int, replica_id: int, site_index: int, horizon: float
) -> tuple[np.ndarray, np.ndarray]:
    # Counter-based: the stream is a pure function of its three labels, so
    # site relabeling is an index remap rather than a re-draw.
    seq = np.random.SeedSequence(entropy=master_seed, spawn_key=(replica_id, site_index))
    gen = np.random.Generator(np.random.Philox(seq))
    while True:
        count = int(gen.poisson(horizon))
        times = np.sort(gen.uniform(0.0, horizon, size=count))
        marks = gen.uniform(size=count)
        if times.size and not (times[0] > 0 and np.all(np.diff(times) > 0)):
            continue  # coincident or zero ring times; probability ~2^-50
        if marks.size and not (marks.min() >= MARK_LO and marks.max() <= MARK_HI):
            continue  # mark at the edge of (0,1); probability ~2^-52
        return times, marks


def generate_noise(master_seed: int, replica_id: int, side: int, horizon: float) -> NoiseStream:
    """Draw the full noise field for one replica.

    Each site's stream comes from an independent counter-based generator keyed
    by (master_seed, replica_id, flat site index); regenerating with the same
    labels reproduces the stream bitwise.
    """
    if side < 1:
        raise ValueError("side must be at least 1")
    if not horizon >= 0:
        raise ValueError(f"horizon must be nonnegative, got {horizon}")
    if master_seed < 0 or replica_id < 0:
        raise ValueError("seeds and replica ids must be nonnegative")
    times = []
    marks = []
    for i in range(side * side):
        t, m = _site_stream(master_seed, replica_id, i, horizon)
        times.append(t)
        marks.append(m)
    return NoiseStream(
        side=side,
        horizon=horizon,
        times=times,
        marks=marks,
        provenance=(master_seed, replica_id),
    )


def transform_noise(noise: NoiseStream, translation: Site, reflect_marks: bool) -> NoiseStream:
    """Relabel sites by a translation and optionally reflect every mark.

    The stream of site s moves to site s + translation; reflection replaces
    each mark U by 1 - U (exact on the allowed mark interval, see module
    docstring). Both operations preserve the noise law, which is what turns
    the corresponding state symmetries into couplings.
    """
    n = noise.side
    vx, vy = int(translation[0]) % n, int(translation[1]) % n
    times: list[np.ndarray | None] = [None] * (n * n)
    marks: list[np.ndarray | None] = [None] * (n * n)
    for x in range(n):
        for y in range(n):
            src = x * n + y
            dst = ((x + vx) % n) * n + ((y + vy) % n)
            times[dst] = noise.times[src]
            marks[dst] = (1.0 - noise.marks[src]) if reflect_marks else noise.marks[src]
    return NoiseStream(
        side=n, horizon=noise.horizon, times=times, marks=marks, provenance=None
    )


@dataclass(frozen=True)
class Trajectory:
    """Deterministic trajectory: initial state plus the ordered event list.

    Event k resampled the spin at flat site index ``sites[k]`` at time
    ``times[k]``; ``old``/``new`` are the spin before/after, ``fields[k]`` the
    neighbor sum used, ``marks[k]`` the uniform mark consumed. The state at
    any time is a pure function of these records.
    """

    initial: SpinConfig
    horizon: float
    times: np.ndarray
    sites: np.ndarray
    old: np.ndarray
    new: np.ndarray
    fields: np.ndarray
    marks: np.ndarray

    def __post_init__(self) -> None:
        for arr in (self.times, self.sites, self.old, self.new, self.fields, self.marks):
            arr.setflags(write=False)

    @property
    def side(self) -> int:
        return self.initial.side

    @property
    def n_events(self) -> int:
        return int(self.times.size)

    @property
    def site_x(self) -> np.ndarray:
        return self.sites // self.side

    @property
    def site_y(self) -> np.ndarray:
        return self.sites % self.side

    def state_at(self, t: float) -> SpinConfig:
        """Configuration after all events with time <= t (right-continuous)."""
        if not 0 <= t <= self.horizon:
            raise ValueError(f"time {t} outside [0, {self.horizon}]")
        k = int(np.searchsorted(self.times, t, side="right"))
        return self._state_after(k)

    def final_state(self) -> SpinConfig:
        return self._state_after(self.n_events)

    def _state_after(self, k: int) -> SpinConfig:
        flat = self.initial.spins.reshape(-1).copy()
        if k:
            rev_sites = self.sites[:k][::-1]
            rev_new = self.new[:k][::-1]
            uniq, first = np.unique(rev_sites, return_index=True)
            flat[uniq] = rev_new[first]
        return SpinConfig(flat.reshape(self.side, self.side))

    def states_at(self, sample_times) -> list[SpinConfig]:
        """States at several times, single replay pass; times need not be sorted."""
        order = np.argsort(sample_times, kind="stable")
        out: list[SpinConfig | None] = [None] * len(sample_times)
        flat = self.initial.spins.reshape(-1).copy()
        k = 0
        for pos in order:
            t = sample_times[pos]
            if not 0 <= t <= self.horizon:
                raise ValueError(f"time {t} outside [0, {self.horizon}]")
            k_new = int(np.searchsorted(self.times, t, side="right"))
            for j in range(k, k_new):
                flat[self.sites[j]] = self.new[j]
            k = k_new
            out[pos] = SpinConfig(flat.reshape(self.side, self.side))
        return out  # type: ignore[return-value]

    def write_event_csv(self, path) -> None:
        """Dump the event log: time,site_x,site_y,old,new,h,mark."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["time", "site_x", "site_y", "old", "new", "h", "mark"])
            sx, sy = self.site_x, self.site_y
            for k in range(self.n_events):
                writer.writerow(
                    [
                        repr(float(self.times[k])),
                        int(sx[k]),
                        int(sy[k]),
                        int(self.old[k]),
                        int(self.new[k]),
                        int(self.fields[k]),
                        repr(float(self.marks[k])),
                    ]
                )


def _neighbor_table(n: int) -> list[tuple[int, int, int, int]]:
    table = []
    for x in range(n):
        for y in range(n):
            table.append(
                (
                    ((x + 1) % n) * n + y,
                    ((x - 1) % n) * n + y,
                    x * n + (y + 1) % n,
                    x * n + (y - 1) % n,
                )
            )
    return table


def evolve(initial: SpinConfig, noise: NoiseStream, rule: UpdateRule) -> Trajectory:
    """Run the dynamics from ``initial`` under ``noise``: the deterministic map
    (state, noise) -> trajectory.

    Raises TieError when two rings (any sites) share a time and
    MarkBoundaryError when a mark hits a probability table entry bitwise;
    both are ambiguities that would silently break couplings if resolved
    arbitrarily, so they abort instead (callers retry with fresh noise).
    """
    n = initial.side
    if noise.side != n:
        raise ValueError(f"noise side {noise.side} does not match state side {n}")

    all_times = np.concatenate(noise.times) if noise.times else np.empty(0)
    counts = [t.size for t in noise.times]
    all_sites = np.repeat(np.arange(n * n, dtype=np.int64), counts)
    all_marks = np.concatenate(noise.marks)

    order = np.argsort(all_times, kind="stable")
    times = all_times[order]
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise TieError("coincident ring times in the noise field")
    sites = all_sites[order]
    marks = all_marks[order]

    table = rule.prob_table()
    prob = [0.0] * 9
    for h, p in table.items():
        prob[h + 4] = p

    neighbors = _neighbor_table(n)
    spins = [int(s) for s in initial.spins.reshape(-1)]

    site_list = sites.tolist()
    mark_list = marks.tolist()
    old_rec = np.empty(times.size, dtype=np.int8)
    new_rec = np.empty(times.size, dtype=np.int8)
    field_rec = np.empty(times.size, dtype=np.int8)

    for k in range(times.size):
        s = site_list[k]
        a, b, c, d = neighbors[s]
        h = spins[a] + spins[b] + spins[c] + spins[d]
        p = prob[h + 4]
        u = mark_list[k]
        if u == p:
            raise MarkBoundaryError(
                f"mark {u!r} equals p({h}) at event {k} (site {s // n}, {s % n})"
            )
        new = 1 if u < p else -1
        old_rec[k] = spins[s]
        new_rec[k] = new
        field_rec[k] = h
        spins[s] = new

    return Trajectory(
        initial=initial,
        horizon=noise.horizon,
        times=times,
        sites=sites,
        old=old_rec,
        new=new_rec,
        fields=field_rec,
        marks=marks,
    )


def match_under_symmetry(
    base: Trajectory,
    other: Trajectory,
    translation: Site,
    flip: bool,
    reflect_marks: bool,
) -> int:
    """Count bitwise mismatches between ``other`` and the transformed ``base``.

    Zero means ``other`` is exactly the image of ``base`` under "translate
    sites by ``translation``, optionally negate spins, optionally reflect
    marks" at every event and therefore at every time (states are determined
    by the initial state plus the event records). Event times must agree
    bitwise.
    """
    n = base.side
    if other.side != n:
        raise ValueError("trajectories live on different tori")
    mismatches = 0
    if not np.array_equal(base.times, other.times):
        mismatches += 1
    if apply_symmetry(base.initial, translation, flip) != other.initial:
        mismatches += 1
    vx, vy = int(translation[0]) % n, int(translation[1]) % n
    mapped_sites = ((base.site_x + vx) % n) * n + (base.site_y + vy) % n
    sign = -1 if flip else 1
    mismatches += int(np.count_nonzero(mapped_sites != other.sites))
    mismatches += int(np.count_nonzero(sign * base.old != other.old))
    mismatches += int(np.count_nonzero(sign * base.new != other.new))
    mismatches += int(np.count_nonzero(sign * base.fields != other.fields))
    expected_marks = (1.0 - base.marks) if reflect_marks else base.marks
    mismatches += int(np.count_nonzero(expected_marks != other.marks))
    return mismatches


def check_translation_covariance(
    initial: SpinConfig, noise: NoiseStream, rule: UpdateRule, v: Site
) -> int:
    """Mismatch count for: evolve(translate(eta), translate(noise)) vs
    translate(evolve(eta, noise)). Zero for every initial state."""
    base = evolve(initial, noise, rule)
    moved = evolve(
        apply_symmetry(initial, v, flip=False),
        transform_noise(noise, v, reflect_marks=False),
        rule,
    )
    return match_under_symmetry(base, moved, v, flip=False, reflect_marks=False)


def check_flip_covariance(initial: SpinConfig, noise: NoiseStream, rule: UpdateRule) -> int:
    """Mismatch count for: evolve(flip(eta), reflect(noise)) vs
    flip(evolve(eta, noise)). Zero for every initial state."""
    base = evolve(initial, noise, rule)
    flipped = evolve(
        initial.flipped(), transform_noise(noise, (0, 0), reflect_marks=True), rule
    )
    return match_under_symmetry(base, flipped, (0, 0), flip=True, reflect_marks=True)


def check_antisym_coupling(
    initial: SpinConfig, noise: NoiseStream, rule: UpdateRule, u: Site
) -> int:
    """Mismatch count for the antisymmetric coupling.

    For an initial state with translate-by-u equal to the global flip,
    evolving under the u-relabeled, mark-reflected noise equals the state-wise
    flip-translate of the original trajectory:

        evolve(eta, relabel_u(reflect(noise))) = flip . translate_u . evolve(eta, noise)

    Both sides start from eta (translate_u then flip fixes an antisymmetric
    state). This is the pathwise identity behind the distributional statement
    "translating the time-t law by u equals flipping it".
    """
    if apply_symmetry(initial, u, flip=True) != initial:
        raise ValueError("initial state is not antisymmetric for the given flip vector")
    base = evolve(initial, noise, rule)
    coupled = evolve(initial, transform_noise(noise, u, reflect_marks=True), rule)
    return match_under_symmetry(base, coupled, u, flip=True, reflect_marks=True)

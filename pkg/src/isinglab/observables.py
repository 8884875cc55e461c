"""Observables on trajectories and ensembles.

Block magnetizations are exact rationals; the mesh audit compares its
pathwise bound in integer arithmetic, so a reported violation is a real
counterexample and not a rounding artifact. Statistical summaries (standard
errors, permutation tests) treat one replica as one observation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exactref import BETA_CRITICAL, onsager_magnetization
from .lattice import (
    FULL,
    Site,
    SpinConfig,
    SublatticeSpec,
    coset_index_map,
)
from .dynamics import Trajectory

__all__ = [
    "MagnetizationSeries",
    "StepSeries",
    "magnetization_series",
    "cesaro_time_average",
    "batch_means",
    "CosetMeanEstimate",
    "coset_means",
    "MeshAuditRecord",
    "mesh_audit",
    "sector_proxy",
    "sign_symmetry_test",
    "two_point_correlation",
    "two_point_series",
    "two_point_time_average",
]


@dataclass(frozen=True)
class StepSeries:
    """Right-continuous piecewise-constant series on [0, horizon].

    ``values`` has one more entry than ``breakpoints``: values[k] holds on
    [breakpoints[k-1], breakpoints[k]).
    """

    breakpoints: np.ndarray
    values: np.ndarray
    horizon: float

    def __post_init__(self) -> None:
        if len(self.values) != len(self.breakpoints) + 1:
            raise ValueError("need exactly one more value than breakpoints")
        if len(self.breakpoints) and not (
            self.breakpoints[0] >= 0 and self.breakpoints[-1] <= self.horizon
        ):
            raise ValueError("breakpoints must lie in [0, horizon]")

    def value_at(self, t: float):
        idx = int(np.searchsorted(self.breakpoints, t, side="right"))
        return self.values[idx]


@dataclass(frozen=True)
class MagnetizationSeries:
    """Block magnetization along a trajectory, with exact rational values."""

    block: int | str
    breakpoints: np.ndarray
    values: tuple[Fraction, ...]
    horizon: float

    def __post_init__(self) -> None:
        if len(self.values) != len(self.breakpoints) + 1:
            raise ValueError("need exactly one more value than breakpoints")

    def value_at(self, t: float) -> Fraction:
        idx = int(np.searchsorted(self.breakpoints, t, side="right"))
        return self.values[idx]

    def as_floats(self) -> StepSeries:
        return StepSeries(
            breakpoints=self.breakpoints,
            values=np.array([float(v) for v in self.values]),
            horizon=self.horizon,
        )


def _block_flat_indices(side: int, block: int | str) -> np.ndarray:
    """Flat indices of the centered block [-n, n]^2 (wrapped), or all sites."""
    if block == FULL:
        return np.arange(side * side)
    n = int(block)
    if n < 0:
        raise ValueError(f"block radius must be >= 0, got {n}")
    if 2 * n + 1 > side:
        raise ValueError(f"block width {2 * n + 1} exceeds torus side {side}")
    coords = np.array([(d % side) for d in range(-n, n + 1)])
    return (coords[:, None] * side + coords[None, :]).reshape(-1)


def magnetization_series(traj: Trajectory, block: int | str) -> MagnetizationSeries:
    """Exact block magnetization after every spin flip inside the block.

    Breakpoints are the event times at which the block mean changes; the
    values are Fractions with denominator |block|.
    """
    side = traj.side
    flat = _block_flat_indices(side, block)
    denom = int(flat.size)
    member = np.zeros(side * side, dtype=bool)
    member[flat] = True

    total = int(traj.initial.spins.reshape(-1)[flat].sum())
    relevant = member[traj.sites] & (traj.new != traj.old)
    deltas = (traj.new.astype(np.int64) - traj.old.astype(np.int64))[relevant]
    sums = total + np.cumsum(deltas)
    values = (Fraction(total, denom),) + tuple(Fraction(int(s), denom) for s in sums)
    return MagnetizationSeries(
        block=block,
        breakpoints=traj.times[relevant],
        values=values,
        horizon=traj.horizon,
    )


def _float_series(series) -> tuple[np.ndarray, np.ndarray, float]:
    if isinstance(series, MagnetizationSeries):
        flat = series.as_floats()
        return flat.breakpoints, flat.values, flat.horizon
    return (
        np.asarray(series.breakpoints, dtype=float),
        np.asarray(series.values, dtype=float),
        float(series.horizon),
    )


def _integral_at(bps: np.ndarray, vals: np.ndarray, cum: np.ndarray, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    idx = np.searchsorted(bps, t, side="right")
    left_time = np.where(idx > 0, bps[np.maximum(idx - 1, 0)], 0.0)
    left_cum = np.where(idx > 0, cum[np.maximum(idx - 1, 0)], 0.0)
    return left_cum + vals[idx] * (t - left_time)


def cesaro_time_average(series, horizon: float | None = None) -> float:
    """Time average (1/T) * integral_0^T of a piecewise-constant series.

    ``series`` is any object with breakpoints / values / horizon attributes;
    ``horizon`` defaults to the series horizon and must lie in (0, horizon].
    Summation is exactly rounded (math.fsum).
    """
    bps, vals, series_horizon = _float_series(series)
    T = series_horizon if horizon is None else float(horizon)
    if not 0 < T <= series_horizon:
        raise ValueError(f"averaging window must lie in (0, {series_horizon}], got {T}")
    cut = int(np.searchsorted(bps, T, side="left"))
    edges = np.concatenate([[0.0], bps[:cut], [T]])
    widths = np.diff(edges)
    return math.fsum(v * w for v, w in zip(vals[: cut + 1], widths)) / T


def batch_means(series, n_batches: int, horizon: float | None = None) -> tuple[float, float]:
    """Batch-means estimate of a time average and its standard error.

    Splits [0, T] into ``n_batches`` equal windows, time-averages each, and
    returns (mean of batch averages, stderr across batches).
    """
    if n_batches < 2:
        raise ValueError("need at least two batches")
    bps, vals, series_horizon = _float_series(series)
    T = series_horizon if horizon is None else float(horizon)
    if not 0 < T <= series_horizon:
        raise ValueError(f"averaging window must lie in (0, {series_horizon}], got {T}")
    widths = np.diff(np.concatenate([[0.0], bps]))
    cum = np.cumsum(vals[: len(bps)] * widths)
    edges = np.linspace(0.0, T, n_batches + 1)
    integrals = _integral_at(bps, vals, cum, edges)
    means = np.diff(integrals) / (T / n_batches)
    return float(means.mean()), float(means.std(ddof=1) / math.sqrt(n_batches))


@dataclass(frozen=True)
class CosetMeanEstimate:
    """Ensemble means of the spin over each sublattice coset.

    ``replica_sums[r, a]`` is the integer spin sum of replica r over coset a
    (canonical representative ``reps[a]``), which makes the decomposition
    identities exact. Standard errors are across replicas (NaN for a single
    replica).
    """

    lattice: SublatticeSpec
    flip_vector: Site
    side: int
    reps: tuple[Site, ...]
    replica_sums: np.ndarray
    coset_sizes: np.ndarray

    @property
    def n_replicas(self) -> int:
        return int(self.replica_sums.shape[0])

    @property
    def counts(self) -> np.ndarray:
        """Sample counts per coset: replicas x coset size."""
        return self.n_replicas * self.coset_sizes

    @property
    def replica_means(self) -> np.ndarray:
        return self.replica_sums / self.coset_sizes[None, :]

    @property
    def means(self) -> np.ndarray:
        return self.replica_means.mean(axis=0)

    @property
    def std_errors(self) -> np.ndarray:
        r = self.n_replicas
        if r < 2:
            return np.full(len(self.reps), np.nan)
        return self.replica_means.std(axis=0, ddof=1) / math.sqrt(r)

    def pair_indices(self) -> np.ndarray:
        """index of the coset of rep + flip_vector, for each coset."""
        rep_pos = {rep: i for i, rep in enumerate(self.reps)}
        u = self.flip_vector
        out = np.empty(len(self.reps), dtype=np.int64)
        for i, rep in enumerate(self.reps):
            out[i] = rep_pos[self.lattice.coset_of((rep[0] + u[0], rep[1] + u[1]))]
        return out

    def pair_stats(self) -> list[dict]:
        """Per unordered coset pair {a, a+u}: the pair-sum estimate, its
        replica-level standard error, and the studentized magnitude."""
        pairs = self.pair_indices()
        means = self.means
        rmeans = self.replica_means
        r = self.n_replicas
        out = []
        for a in range(len(self.reps)):
            b = int(pairs[a])
            if b <= a:
                continue
            pair_sum = float(means[a] + means[b])
            if r < 2:
                se = float("nan")
            else:
                samples = rmeans[:, a] + rmeans[:, b]
                se = float(samples.std(ddof=1) / math.sqrt(r))
            if se > 0:
                stud = abs(pair_sum) / se
            else:
                stud = 0.0 if pair_sum == 0 else float("inf")
            out.append(
                {
                    "rep_a": self.reps[a],
                    "rep_b": self.reps[b],
                    "pair_sum": pair_sum,
                    "se": se,
                    "studentized": stud,
                }
            )
        return out

    def full_torus_decomposition(self) -> tuple[Fraction, Fraction]:
        """(sum_a c_hat_a * |coset|/N^2, ensemble-mean full-torus M), exactly.

        The two rationals are equal by construction; returning both lets
        callers assert the identity without floating-point slack.
        """
        n_sites = self.side**2
        r = self.n_replicas
        lhs = sum(
            (
                Fraction(int(self.replica_sums[:, a].sum()), r * int(self.coset_sizes[a]))
                * Fraction(int(self.coset_sizes[a]), n_sites)
                for a in range(len(self.reps))
            ),
            Fraction(0),
        )
        rhs = Fraction(int(self.replica_sums.sum()), r * n_sites)
        return lhs, rhs


def coset_means(
    states: list[SpinConfig], lattice: SublatticeSpec, u: Site
) -> CosetMeanEstimate:
    """Ensemble coset means of the spin field at a fixed time.

    ``states`` is one configuration per replica (all on the same torus);
    ``u`` is the flip vector used for pairing diagnostics.
    """
    if not states:
        raise ValueError("need at least one replica state")
    side = states[0].side
    if any(s.side != side for s in states):
        raise ValueError("replica states live on different tori")
    index_map, reps = coset_index_map(lattice, side)
    flat_idx = index_map.reshape(-1)
    n_cosets = len(reps)
    sizes = np.bincount(flat_idx, minlength=n_cosets)
    sums = np.empty((len(states), n_cosets), dtype=np.int64)
    for r, state in enumerate(states):
        flat = state.spins.reshape(-1)
        plus = np.bincount(flat_idx[flat > 0], minlength=n_cosets)
        minus = np.bincount(flat_idx[flat < 0], minlength=n_cosets)
        sums[r] = plus - minus
    return CosetMeanEstimate(
        lattice=lattice,
        flip_vector=(int(u[0]), int(u[1])),
        side=side,
        reps=reps,
        replica_sums=sums,
        coset_sizes=sizes,
    )


@dataclass(frozen=True)
class MeshAuditRecord:
    """Confinement audit of one mesh interval [k*delta, (k+1)*delta).

    All three statistics are exact rationals over the audited block:
    ring_fraction counts distinct block sites whose clock rang during the
    interval, max_deviation is the largest |M(t) - M(anchor)| over event
    times t in the interval (anchor = state entering the interval), and
    bound = 2 * ring_fraction. ``full_width`` marks intervals of the nominal
    width delta (the trailing interval can be shorter).
    """

    interval: int
    delta: float
    block: int | str
    ring_sites: int
    block_size: int
    max_deviation_numerator: int
    full_width: bool

    @property
    def ring_fraction(self) -> Fraction:
        return Fraction(self.ring_sites, self.block_size)

    @property
    def max_deviation(self) -> Fraction:
        return Fraction(self.max_deviation_numerator, self.block_size)

    @property
    def bound(self) -> Fraction:
        return 2 * self.ring_fraction

    @property
    def violated(self) -> bool:
        return self.max_deviation > self.bound


def mesh_audit(traj: Trajectory, delta: float, block: int | str = FULL) -> list[MeshAuditRecord]:
    """Audit the pathwise confinement bound on every mesh interval.

    For each interval [k*delta, (k+1)*delta) the block magnetization can move
    away from its value at the interval start by at most twice the fraction
    of block sites that rang during the interval; every record carries the
    exact integer data needed to check that inequality.
    """
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    horizon = traj.horizon
    if horizon == 0:
        return []
    n_intervals = max(1, int(math.ceil(horizon / delta - 1e-12)))

    side = traj.side
    flat = _block_flat_indices(side, block)
    block_size = int(flat.size)
    member = np.zeros(side * side, dtype=bool)
    member[flat] = True

    times = traj.times.tolist()
    sites = traj.sites.tolist()
    changed = (traj.new != traj.old)
    deltas = (traj.new.astype(np.int64) - traj.old.astype(np.int64)).tolist()
    in_block = member[traj.sites].tolist()
    changed = changed.tolist()

    def width_ok(k: int) -> bool:
        hi = min(horizon, (k + 1) * delta)
        return (hi - k * delta) >= delta * (1.0 - 1e-9)

    records: list[MeshAuditRecord] = []
    rings: set[int] = set()
    current = int(traj.initial.spins.reshape(-1)[flat].sum())
    anchor = current
    max_dev = 0
    k_cur = 0

    def close_interval(k: int) -> None:
        records.append(
            MeshAuditRecord(
                interval=k,
                delta=delta,
                block=block,
                ring_sites=len(rings),
                block_size=block_size,
                max_deviation_numerator=max_dev,
                full_width=width_ok(k),
            )
        )

    for idx in range(len(times)):
        k = min(int(times[idx] // delta), n_intervals - 1)
        while k_cur < k:
            close_interval(k_cur)
            k_cur += 1
            rings = set()
            max_dev = 0
            anchor = current
        site = sites[idx]
        if in_block[idx]:
            rings.add(site)
            if changed[idx]:
                current += deltas[idx]
            dev = abs(current - anchor)
            if dev > max_dev:
                max_dev = dev
    while k_cur < n_intervals:
        close_interval(k_cur)
        k_cur += 1
        rings = set()
        max_dev = 0
        anchor = current
    return records


def sector_proxy(m: float, beta: float, epsilon: float) -> str:
    """Classify a magnetization level against the spontaneous values.

    Returns "plus" / "minus" when m is within epsilon of +-m(beta),
    "centered" when |m| <= epsilon, and "other" outside every band. Requires
    beta above the critical point and 0 < epsilon < m(beta)/2 so that the
    three bands are disjoint.
    """
    if beta <= BETA_CRITICAL:
        raise ValueError(
            f"beta={beta} is not above the critical point {BETA_CRITICAL:.6f}; "
            "there is no spontaneous magnetization to compare against"
        )
    m_beta = onsager_magnetization(beta)
    if not 0 < epsilon < m_beta / 2:
        raise ValueError(f"epsilon must lie in (0, {m_beta / 2}), got {epsilon}")
    if abs(m - m_beta) <= epsilon:
        return "plus"
    if abs(m + m_beta) <= epsilon:
        return "minus"
    if abs(m) <= epsilon:
        return "centered"
    return "other"


def _ks_distance(sample: np.ndarray) -> float:
    """Two-sample Kolmogorov distance between the sample and its negation."""
    xs = np.sort(sample)
    ys = np.sort(-sample)
    grid = np.concatenate([xs, ys])
    n = len(sample)
    fx = np.searchsorted(xs, grid, side="right") / n
    fy = np.searchsorted(ys, grid, side="right") / n
    return float(np.max(np.abs(fx - fy)))


def sign_symmetry_test(samples, n_permutations: int = 1000, seed: int = 0) -> float:
    """Permutation p-value for "the sample distribution is symmetric about 0".

    The statistic is the Kolmogorov distance between the sample and its
    negation; the null distribution is simulated by random sign flips. The
    p-value uses the add-one rule, so an exactly sign-symmetric multiset
    returns exactly 1.0, and the smallest attainable value is
    1 / (1 + n_permutations).
    """
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 1 or arr.size < 20:
        raise ValueError("need a flat sample of at least 20 values")
    if not np.all(np.isfinite(arr)):
        raise ValueError("samples must be finite")
    observed = _ks_distance(arr)
    rng = np.random.default_rng(seed)
    exceed = 0
    for _ in range(n_permutations):
        signs = rng.choice([-1.0, 1.0], size=arr.size)
        if _ks_distance(arr * signs) >= observed:
            exceed += 1
    return (1 + exceed) / (1 + n_permutations)


def _check_displacement(side: int, displacement: Site) -> tuple[int, int]:
    dx, dy = int(displacement[0]) % side, int(displacement[1]) % side
    if (dx, dy) == (0, 0):
        raise ValueError("displacement must be nonzero on the torus")
    return dx, dy


def two_point_correlation(states: list[SpinConfig], displacement: Site) -> tuple[float, float]:
    """Translation-averaged pair correlation over an ensemble of states.

    Returns (estimate, stderr across replicas); the stderr is NaN for a
    single replica.
    """
    if not states:
        raise ValueError("need at least one replica state")
    side = states[0].side
    dx, dy = _check_displacement(side, displacement)
    vals = []
    for state in states:
        shifted = np.roll(state.spins, shift=(-dx, -dy), axis=(0, 1))
        total = int((state.spins.astype(np.int16) * shifted).sum())
        vals.append(total / side**2)
    arr = np.array(vals)
    se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else float("nan")
    return float(arr.mean()), se


def two_point_series(traj: Trajectory, displacement: Site) -> StepSeries:
    """Translation-averaged pair correlation along a trajectory.

    Maintained incrementally: a flip at site i changes the correlation sum by
    (new - old) * (sigma[i + x] + sigma[i - x]), which holds for every nonzero
    displacement including 2x = 0.
    """
    side = traj.side
    dx, dy = _check_displacement(side, displacement)
    spins2d = traj.initial.spins.astype(np.int16)
    total = int((spins2d * np.roll(spins2d, shift=(-dx, -dy), axis=(0, 1))).sum())
    denom = side**2

    xs = np.arange(side * side) // side
    ys = np.arange(side * side) % side
    plus_idx = (((xs + dx) % side) * side + (ys + dy) % side).tolist()
    minus_idx = (((xs - dx) % side) * side + (ys - dy) % side).tolist()

    spins = [int(s) for s in traj.initial.spins.reshape(-1)]
    changed = traj.new != traj.old
    ev_sites = traj.sites[changed].tolist()
    ev_new = traj.new[changed].tolist()
    ev_old = traj.old[changed].tolist()

    values = [total]
    for k in range(len(ev_sites)):
        i = ev_sites[k]
        total += (ev_new[k] - ev_old[k]) * (spins[plus_idx[i]] + spins[minus_idx[i]])
        spins[i] = ev_new[k]
        values.append(total)
    return StepSeries(
        breakpoints=traj.times[changed],
        values=np.array(values, dtype=float) / denom,
        horizon=traj.horizon,
    )


def two_point_time_average(
    traj: Trajectory, displacement: Site, n_batches: int = 20
) -> tuple[float, float]:
    """Cesaro average of the pair correlation with a batch-means stderr."""
    series = two_point_series(traj, displacement)
    return batch_means(series, n_batches)

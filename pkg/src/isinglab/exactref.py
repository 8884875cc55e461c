"""Independent exact references: closed forms and brute-force enumeration.

Everything here is computed without running the dynamics, so it can serve as
an oracle for the simulator: the critical coupling and spontaneous
magnetization in closed form, exact Gibbs expectations on tiny tori by
summing all 2^(N^2) states, and a direct check that the heat-bath generator
is stationary and reversible for that Gibbs measure.

The energy convention counts, for every site, its right and up bonds:
H = -sum_s sigma_s (sigma_{s+e1} + sigma_{s+e2}). On the 2x2 torus this gives
each physical pair multiplicity two, which is exactly the convention the
four-slot neighbor sums of the dynamics correspond to; the detailed-balance
check validates that consistency numerically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .lattice import SpinConfig

__all__ = [
    "BETA_CRITICAL",
    "onsager_magnetization",
    "ExactGibbsTable",
    "exact_gibbs_table",
    "exact_gibbs_expectation",
    "GeneratorCheck",
    "generator_check",
    "compute_oracle_entries",
    "write_oracles",
    "load_oracles",
    "packaged_oracles_path",
    "DEFAULT_ORACLE_GRID",
]

#: Critical inverse temperature of the square-lattice Ising model,
#: log(1 + sqrt(2)) / 2.
BETA_CRITICAL = math.log(1.0 + math.sqrt(2.0)) / 2.0

MAX_ENUMERATION_SIDE = 4


def onsager_magnetization(beta: float) -> float:
    """Spontaneous magnetization: 0 up to the critical point, then
    (1 - sinh(2*beta)^-4)^(1/8)."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    if beta <= BETA_CRITICAL:
        return 0.0
    return (1.0 - math.sinh(2.0 * beta) ** -4) ** 0.125


def _right_up_indices(side: int) -> tuple[np.ndarray, np.ndarray]:
    idx = np.arange(side * side)
    x, y = idx // side, idx % side
    right = ((x + 1) % side) * side + y
    up = x * side + (y + 1) % side
    return right, up


@dataclass(frozen=True)
class ExactGibbsTable:
    """All 2^(N^2) states with their exact-enumeration Gibbs probabilities.

    ``spins[s]`` is the flat +-1 configuration of state s (bit i of s is site
    i = x * side + y); probabilities are normalized with exactly rounded
    summation, so flip-odd observables average to exactly +-0.0.
    """

    side: int
    beta: float
    spins: np.ndarray
    energies: np.ndarray
    probabilities: np.ndarray

    @property
    def n_states(self) -> int:
        return int(self.spins.shape[0])

    def observable_values(self, observable) -> np.ndarray:
        """Vector of observable values per state.

        ``observable`` is a registry name ("magnetization",
        "abs_magnetization", "pair_<dx>_<dy>") or a callable on SpinConfig.
        """
        if callable(observable):
            side = self.side
            return np.array(
                [
                    float(observable(SpinConfig(row.reshape(side, side))))
                    for row in self.spins
                ]
            )
        name = str(observable)
        n_sites = self.side**2
        if name == "magnetization":
            return self.spins.sum(axis=1, dtype=np.int64) / n_sites
        if name == "abs_magnetization":
            return np.abs(self.spins.sum(axis=1, dtype=np.int64)) / n_sites
        if name.startswith("pair_"):
            parts = name.split("_")
            if len(parts) == 3:
                dx, dy = int(parts[1]) % self.side, int(parts[2]) % self.side
                if (dx, dy) == (0, 0):
                    raise ValueError("pair displacement must be nonzero on the torus")
                idx = np.arange(n_sites)
                x, y = idx // self.side, idx % self.side
                shifted = ((x + dx) % self.side) * self.side + (y + dy) % self.side
                prods = (self.spins.astype(np.int16) * self.spins[:, shifted]).sum(
                    axis=1, dtype=np.int64
                )
                return prods / n_sites
        raise ValueError(f"unknown observable {name!r}")

    def expectation(self, observable) -> float:
        """Exact Gibbs expectation, summed with math.fsum."""
        values = self.observable_values(observable)
        return math.fsum(p * v for p, v in zip(self.probabilities, values))


@lru_cache(maxsize=8)
def exact_gibbs_table(side: int, beta: float) -> ExactGibbsTable:
    """Enumerate the Gibbs measure on the side x side torus (side <= 4)."""
    if not 2 <= side <= MAX_ENUMERATION_SIDE:
        raise ValueError(
            f"exact enumeration supports sides 2..{MAX_ENUMERATION_SIDE}, got {side}"
        )
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    n_sites = side * side
    n_states = 1 << n_sites
    states = np.arange(n_states, dtype=np.uint32)
    bits = (states[:, None] >> np.arange(n_sites, dtype=np.uint32)[None, :]) & 1
    spins = (2 * bits.astype(np.int8) - 1).astype(np.int8)

    right, up = _right_up_indices(side)
    inter = (
        spins.astype(np.int16) * spins[:, right] + spins.astype(np.int16) * spins[:, up]
    ).sum(axis=1, dtype=np.int64)
    energies = -inter

    # Shift by the ground state energy before exponentiating; the shift
    # cancels in the normalization and keeps every weight finite.
    shifted = -beta * (energies - energies.min())
    weights = np.exp(shifted)
    z = math.fsum(weights)
    probabilities = weights / z

    for arr in (spins, energies, probabilities):
        arr.setflags(write=False)
    return ExactGibbsTable(
        side=side, beta=beta, spins=spins, energies=energies, probabilities=probabilities
    )


def exact_gibbs_expectation(side: int, beta: float, observable) -> float:
    """Convenience wrapper: enumerate (cached) and take the expectation."""
    return exact_gibbs_table(side, beta).expectation(observable)


@dataclass(frozen=True)
class GeneratorCheck:
    """Residuals of stationarity (pi Q = 0) and detailed balance for the
    heat-bath generator against the exact Gibbs measure."""

    side: int
    beta: float
    stationarity_residual: float
    detailed_balance_residual: float


def generator_check(side: int, beta: float) -> GeneratorCheck:
    """Build the full jump-rate structure on the enumerated state space and
    measure how far the Gibbs vector is from stationarity and reversibility.

    Rates: a ring at site i flips the spin with probability of landing on the
    opposite sign, so the sigma -> sigma^i rate is 1 / (1 + exp(2 beta h_i
    sigma_i)) with h_i the four-slot neighbor sum.
    """
    table = exact_gibbs_table(side, beta)
    spins = table.spins
    pi = table.probabilities
    n_sites = side * side

    idx = np.arange(n_sites)
    x, y = idx // side, idx % side
    neighbor_idx = np.stack(
        [
            ((x + 1) % side) * side + y,
            ((x - 1) % side) * side + y,
            x * side + (y + 1) % side,
            x * side + (y - 1) % side,
        ]
    )

    states = np.arange(table.n_states, dtype=np.uint32)
    inflow = np.zeros(table.n_states)
    outflow = np.zeros(table.n_states)
    db_residual = 0.0
    for i in range(n_sites):
        h = spins[:, neighbor_idx[:, i]].sum(axis=1, dtype=np.int16)
        s_i = spins[:, i].astype(np.int16)
        rate = 1.0 / (1.0 + np.exp(2.0 * beta * h * s_i))
        rate_back = 1.0 / (1.0 + np.exp(-2.0 * beta * h * s_i))
        targets = states ^ np.uint32(1 << i)
        flow = pi * rate
        inflow[targets] += flow
        outflow += flow
        db_residual = max(db_residual, float(np.max(np.abs(flow - pi[targets] * rate_back))))
    stationarity = float(np.max(np.abs(inflow - outflow)))
    return GeneratorCheck(
        side=side,
        beta=beta,
        stationarity_residual=stationarity,
        detailed_balance_residual=db_residual,
    )


DEFAULT_ORACLE_GRID = {
    "sides": (2, 3, 4),
    "betas": (0.3, 0.6, 1.0),
    "observables": ("magnetization", "abs_magnetization", "pair_1_0", "pair_1_1"),
}

#: Absolute tolerance recorded with every oracle entry; regenerated values on
#: any platform must agree to this much.
ORACLE_TOLERANCE = 1e-10


def compute_oracle_entries(sides=None, betas=None, observables=None) -> list[dict]:
    """Exact-enumeration expectations for the oracle grid."""
    sides = DEFAULT_ORACLE_GRID["sides"] if sides is None else sides
    betas = DEFAULT_ORACLE_GRID["betas"] if betas is None else betas
    observables = (
        DEFAULT_ORACLE_GRID["observables"] if observables is None else observables
    )
    entries = []
    for side in sides:
        for beta in betas:
            table = exact_gibbs_table(int(side), float(beta))
            for obs in observables:
                entries.append(
                    {
                        "side": int(side),
                        "beta": float(beta),
                        "observable": str(obs),
                        "value": table.expectation(obs),
                        "tolerance": ORACLE_TOLERANCE,
                    }
                )
    return entries


def write_oracles(path, entries: list[dict]) -> None:
    payload = {
        "description": "exact-enumeration Gibbs expectations on tiny tori",
        "entries": entries,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def packaged_oracles_path():
    return resources.files("isinglab").joinpath("data/oracles.json")


def load_oracles(path=None) -> dict[tuple[int, float, str], tuple[float, float]]:
    """Oracle entries keyed by (side, beta, observable) -> (value, tolerance)."""
    if path is None:
        text = packaged_oracles_path().read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    payload = json.loads(text)
    out = {}
    for entry in payload["entries"]:
        key = (int(entry["side"]), float(entry["beta"]), str(entry["observable"]))
        out[key] = (float(entry["value"]), float(entry["tolerance"]))
    return out

"""Random covers of the executing parties by preprocessing parties, and the odds that a cover is secure.

A cover assigns every O-party exactly ``l`` E-parties. It is secure when some
honest O-party serves some honest E-party. Corruptions are placed uniformly
at random, independently of the cover.
"""
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, NamedTuple

import numpy as np
from scipy.stats import norm

from utils.constants import MC_TRIALS
from utils.exceptions import DomainError, InfeasibleCoverError
from utils.logger_config import configure_logger

logger = configure_logger(__name__)

CONFIDENCE = 0.95


@dataclass(frozen=True)
class Cover:
    n_e: int
    n_o: int
    l: int
    assignment: tuple[frozenset[int], ...]

    def unserved(self) -> list[int]:
        served = set().union(*self.assignment) if self.assignment else set()
        return [e for e in range(self.n_e) if e not in served]

    def is_secure(self, corrupt_e: Iterable[int], corrupt_o: Iterable[int]) -> bool:
        corrupt_e, corrupt_o = set(corrupt_e), set(corrupt_o)
        return any(o not in corrupt_o and any(e not in corrupt_e for e in served) for o, served in enumerate(self.assignment))

    def to_dict(self) -> dict:
        return {
            "n_e": self.n_e,
            "n_o": self.n_o,
            "l": self.l,
            "adjacency": {str(o): sorted(served) for o, served in enumerate(self.assignment)},
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "Cover":
        adjacency = raw["adjacency"]
        assignment = tuple(frozenset(adjacency[str(o)]) for o in range(raw["n_o"]))
        return cls(raw["n_e"], raw["n_o"], raw["l"], assignment)


def dump_cover(cover: Cover) -> str:
    return json.dumps(cover.to_dict(), indent=2)


def load_cover(text: str) -> Cover:
    return Cover.from_dict(json.loads(text))


def step_one_quota(n_e: int, n_o: int) -> int:
    return -(-n_e // n_o)


def _check_shape(n_e: int, n_o: int, l: int):
    if n_e < 1 or n_o < 1:
        raise InfeasibleCoverError(f"cover needs parties on both sides, got n_E={n_e}, n_O={n_o}")
    quota = step_one_quota(n_e, n_o)
    if not quota <= l <= n_e:
        raise InfeasibleCoverError(f"fan-out l={l} must lie in [{quota}, {n_e}] for n_E={n_e}, n_O={n_o}")


def _check_corruption(n_e: int, n_o: int, t_e: int, t_o: int):
    if not 0 <= t_e < n_e or not 0 <= t_o < n_o:
        raise DomainError(f"need 0 <= t_E < n_E and 0 <= t_O < n_O, got t_E={t_e}, t_O={t_o}")


def _rng(seed: int | bytes | None) -> np.random.Generator:
    if isinstance(seed, bytes):
        seed = int.from_bytes(seed, "big")
    return np.random.default_rng(seed)


def _sample_adjacency(n_e: int, n_o: int, l: int, trials: int, rng: np.random.Generator) -> np.ndarray:
    """Runs the two-step assignment for many covers at once; returns a (trials, n_O, n_E) boolean array."""
    quota = step_one_quota(n_e, n_o)
    rows = np.arange(trials)
    loads = np.zeros((trials, n_o), dtype=np.int64)
    adjacency = np.zeros((trials, n_o, n_e), dtype=bool)

    # step 1: each E-party goes to a uniformly random O-party that is still below quota
    for e in range(n_e):
        open_slots = loads < quota
        pick = np.floor(rng.random(trials) * open_slots.sum(axis=1)).astype(np.int64)
        chosen = np.argmax(np.cumsum(open_slots, axis=1) > pick[:, None], axis=1)
        loads[rows, chosen] += 1
        adjacency[rows, chosen, e] = True

    # step 2: each O-party tops up with distinct random E-parties
    for o in range(n_o):
        keys = rng.random((trials, n_e))
        keys[adjacency[:, o, :]] = np.inf
        ranks = keys.argsort(axis=1).argsort(axis=1)
        adjacency[:, o, :] |= ranks < (l - loads[:, o])[:, None]
    return adjacency


def assign_cover(n_e: int, n_o: int, l: int, seed: int | bytes | None = None) -> Cover:
    _check_shape(n_e, n_o, l)
    adjacency = _sample_adjacency(n_e, n_o, l, 1, _rng(seed))[0]
    cover = Cover(n_e, n_o, l, tuple(frozenset(int(e) for e in np.flatnonzero(row)) for row in adjacency))
    logger.debug(f"assigned cover {cover.to_dict()['adjacency']}")
    return cover


def _falling(n: int, k: int) -> int:
    return math.perm(n, k) if 0 <= k <= n else 0


def _load_distribution(n_e: int, n_o: int) -> dict[tuple[int, ...], Fraction]:
    """Distribution of the sorted step-one loads."""
    quota = step_one_quota(n_e, n_o)
    states = {(0,) * n_o: Fraction(1)}
    for _ in range(n_e):
        following: dict[tuple[int, ...], Fraction] = {}
        for loads, weight in states.items():
            open_slots = [o for o, load in enumerate(loads) if load < quota]
            for o in open_slots:
                bumped = list(loads)
                bumped[o] += 1
                key = tuple(sorted(bumped))
                following[key] = following.get(key, Fraction(0)) + weight / len(open_slots)
        states = following
    return states


def exact_cover_probability(n_e: int, n_o: int, t_e: int, t_o: int, l: int) -> Fraction:
    """Exact probability of a secure cover under assign_cover and uniform corruptions."""
    _check_shape(n_e, n_o, l)
    _check_corruption(n_e, n_o, t_e, t_o)
    honest = n_o - t_o
    insecure = Fraction(0)
    for loads, weight in _load_distribution(n_e, n_o).items():
        subsets = list(combinations(loads, honest))
        total = Fraction(0)
        for chosen in subsets:
            union = sum(chosen)
            if union > t_e:
                continue
            term = Fraction(_falling(t_e, union), _falling(n_e, union))
            for load in chosen:
                term *= Fraction(math.comb(t_e - load, l - load), math.comb(n_e - load, l - load))
            total += term
        insecure += weight * total / len(subsets)
    return 1 - insecure


def closed_form_cover_probability(n_e: int, n_o: int, t_e: int, t_o: int, l: int) -> Fraction | None:
    """The factorial/binomial closed form, counting every honest O-party; None outside its domain."""
    honest, quota = n_o - t_o, step_one_quota(n_e, n_o)
    arguments = (t_e - honest * quota, n_e - honest * quota, t_e - quota, l - quota)
    if min(arguments) < 0:
        return None
    first = Fraction(math.factorial(t_e) * math.factorial(n_e - honest * quota), math.factorial(n_e) * math.factorial(t_e - honest * quota))
    padding = Fraction(math.comb(t_e - quota, l - quota), math.comb(n_e - quota, l - quota))
    return 1 - first * padding**honest


class CoverProbability(NamedTuple):
    value: float
    fallback: bool = False


def cover_secure_probability(n_e: int, n_o: int, t_e: int, t_o: int, l: int) -> CoverProbability:
    """The closed form where it holds; otherwise the exact enumeration, flagged as a fallback."""
    _check_shape(n_e, n_o, l)
    _check_corruption(n_e, n_o, t_e, t_o)
    if t_e == 0:
        return CoverProbability(1.0)
    closed = closed_form_cover_probability(n_e, n_o, t_e, t_o, l)
    if closed is None:
        logger.warning(f"closed form has negative factorial arguments at {(n_e, n_o, t_e, t_o, l)}; using exact enumeration")
        return CoverProbability(float(exact_cover_probability(n_e, n_o, t_e, t_o, l)), fallback=True)
    if n_e % n_o and n_o - t_o > 1:
        logger.warning(f"closed form assumes full step-one quotas, n_O={n_o} does not divide n_E={n_e}; using exact enumeration")
        return CoverProbability(float(exact_cover_probability(n_e, n_o, t_e, t_o, l)), fallback=True)
    return CoverProbability(float(min(1, max(0, closed))))


class McEstimate(NamedTuple):
    estimate: float
    low: float
    high: float
    trials: int

    @property
    def stderr(self) -> float:
        return math.sqrt(self.estimate * (1 - self.estimate) / self.trials)

    def within(self, value: float, sigmas: float = 3.0) -> bool:
        slack = sigmas * max(self.stderr, 1 / self.trials)
        return abs(value - self.estimate) <= slack


def wilson_interval(successes: int, trials: int, confidence: float = CONFIDENCE) -> tuple[float, float]:
    z = norm.ppf(0.5 + confidence / 2)
    p = successes / trials
    centre = (p + z * z / (2 * trials)) / (1 + z * z / trials)
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / (1 + z * z / trials)
    return max(0.0, centre - half), min(1.0, centre + half)


def _uniform_honest(trials: int, size: int, corrupt: int, rng: np.random.Generator) -> np.ndarray:
    return rng.random((trials, size)).argsort(axis=1) >= corrupt


def mc_cover_probability(
    n_e: int, n_o: int, t_e: int, t_o: int, l: int, trials: int = MC_TRIALS, seed: int | bytes | None = None
) -> McEstimate:
    _check_shape(n_e, n_o, l)
    _check_corruption(n_e, n_o, t_e, t_o)
    if trials < 1:
        raise DomainError("Monte Carlo needs at least one trial")
    rng = _rng(seed)
    adjacency = _sample_adjacency(n_e, n_o, l, trials, rng)
    honest_e = _uniform_honest(trials, n_e, t_e, rng)
    honest_o = _uniform_honest(trials, n_o, t_o, rng)
    secure = (adjacency & honest_o[:, :, None] & honest_e[:, None, :]).any(axis=(1, 2))
    successes = int(secure.sum())
    low, high = wilson_interval(successes, trials)
    logger.info(f"Monte Carlo cover estimate {successes}/{trials} for {(n_e, n_o, t_e, t_o, l)}")
    return McEstimate(successes / trials, low, high, trials)

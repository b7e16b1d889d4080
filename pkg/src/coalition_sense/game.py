"""Coalitional game layer: coalition values, payoffs, the Pareto order, the
adjunct 0/1 voting utility, minimal winning coalitions and the adjust rule.

The game is non-transferable: every SU in a coalition S receives the coalition
value

    v(S) = (1 - Q_m,S) - C(Q_f,S, alpha),
    C(q, alpha) = -alpha^2 * ln(1 - (q/alpha)^2)   for q < alpha, +inf otherwise,

so a coalition whose false alarm reaches alpha is worth -inf and can never
form. -inf/+inf appear only as returned sentinels and in comparisons, never
inside arithmetic.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from . import detection
from .detection import ChannelModel, DetectionParams, SecondaryUser

__all__ = [
    "PARETO_EPSILON",
    "UNBOUNDED_COALITION_SIZE",
    "Coalition",
    "Partition",
    "DetectionRequirement",
    "SensingContext",
    "barrier_cost",
    "coalition_value",
    "pareto_preferred",
    "adjunct_utility",
    "is_minimal_winning",
    "adjust",
    "max_coalition_size",
]

# Deadband for the strict half of the Pareto order; payoffs closer than this
# are treated as equal so round-off cannot drive merge/split cycles.
PARETO_EPSILON = 1e-12

# max_coalition_size sentinel once the Theorem-2 bound stops being informative.
UNBOUNDED_COALITION_SIZE = 10**9


@dataclass(frozen=True)
class DetectionRequirement:
    """Target detection probability chi imposed by the PU; the corresponding
    desired miss probability is gamma = 1 - chi."""

    chi: float

    def __post_init__(self) -> None:
        if not 0.0 < self.chi < 1.0:
            raise ValueError("chi must be in (0, 1)")

    @property
    def gamma_target(self) -> float:
        return 1.0 - self.chi


@dataclass(frozen=True)
class Coalition:
    """A coalition with its head and cached OR-fusion probabilities."""

    members: frozenset[int]
    head: int
    q_miss: float
    q_false_alarm: float
    value: float = field(compare=False)

    def __post_init__(self) -> None:
        if self.head not in self.members:
            raise ValueError("coalition head must be a member")

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(sorted(self.members))

    @property
    def q_detect(self) -> float:
        return 1.0 - self.q_miss


@dataclass(frozen=True)
class Partition:
    """Disjoint coalitions covering the SU universe; the game state."""

    coalitions: tuple[Coalition, ...]
    universe: frozenset[int]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for c in self.coalitions:
            if seen & c.members:
                raise ValueError("coalitions in a partition must be disjoint")
            seen |= c.members
        if seen != self.universe:
            raise ValueError("coalitions must cover the universe exactly")

    def __iter__(self):
        return iter(self.coalitions)

    def __len__(self) -> int:
        return len(self.coalitions)

    def member_sets(self) -> frozenset[frozenset[int]]:
        return frozenset(c.members for c in self.coalitions)

    def coalition_of(self, su_id: int) -> Coalition:
        for c in self.coalitions:
            if su_id in c.members:
                return c
        raise KeyError(su_id)


def barrier_cost(q_false_alarm: float, alpha: float) -> float:
    """Logarithmic barrier false-alarm cost; +inf once q_false_alarm >= alpha."""
    if not 0.0 <= q_false_alarm <= 1.0:
        raise ValueError("q_false_alarm must be in [0, 1]")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    if q_false_alarm >= alpha:
        return math.inf
    ratio = q_false_alarm / alpha
    return -(alpha * alpha) * math.log1p(-(ratio * ratio))


def coalition_value(q_miss: float, q_false_alarm: float, alpha: float) -> float:
    """v(S) = (1 - Q_m) - C(Q_f, alpha); -inf iff Q_f >= alpha."""
    if q_false_alarm >= alpha:
        return -math.inf
    return (1.0 - q_miss) - barrier_cost(q_false_alarm, alpha)


def pareto_preferred(
    r_payoffs: dict[int, float],
    s_payoffs: dict[int, float],
    epsilon: float = PARETO_EPSILON,
) -> bool:
    """Pareto order over per-SU payoffs: nobody loses, somebody strictly gains.

    Strictness requires a margin of epsilon; -inf compares below every finite
    value and equal to itself.
    """
    if r_payoffs.keys() != s_payoffs.keys():
        raise ValueError("payoff vectors must cover the identical SU id set")
    strict = False
    for su_id, r in r_payoffs.items():
        s = s_payoffs[su_id]
        if r < s:
            return False
        if r > s + epsilon:
            strict = True
    return strict


def adjunct_utility(
    q_detect: float, q_false_alarm: float, requirement: DetectionRequirement, alpha: float
) -> int:
    """Voting-game utility: 1 iff Q_d >= chi and Q_f <= alpha."""
    return int(q_detect >= requirement.chi and q_false_alarm <= alpha)


def max_coalition_size(alpha: float, pf: float) -> int:
    """Theorem-2 cap floor(ln(1-alpha)/ln(1-P_f)); 1 when pf >= alpha (no
    cooperation possible), UNBOUNDED_COALITION_SIZE once the bound exceeds it."""
    if not 0.0 < alpha < 1.0 or not 0.0 < pf < 1.0:
        raise ValueError("alpha and pf must be in (0, 1)")
    if pf >= alpha:
        return 1
    bound = math.log1p(-alpha) / math.log1p(-pf)
    if bound > UNBOUNDED_COALITION_SIZE:
        return UNBOUNDED_COALITION_SIZE
    return max(1, math.floor(bound))


class SensingContext:
    """A fixed network snapshot: SU positions, channel, detector operating
    point and optional detection requirement, with cached per-SU miss
    probabilities, pairwise reporting errors, and memoized coalitions.

    Coalition probabilities, values, and the adjunct utility are all derived
    from this object, so one context pins one game instance.
    """

    def __init__(
        self,
        sus: Iterable[SecondaryUser],
        pu_position: tuple[float, float],
        channel: ChannelModel,
        params: DetectionParams,
        requirement: Optional[DetectionRequirement] = None,
        head_tie_break: str = "lowest-id",
        head_rng: Optional[random.Random] = None,
    ):
        self.sus = {su.id: su for su in sus}
        if len(self.sus) == 0:
            raise ValueError("a context needs at least one SU")
        if len(self.sus) != len(list(self.sus)):
            raise ValueError("SU ids must be unique")
        self.ids: tuple[int, ...] = tuple(sorted(self.sus))
        self.pu_position = (float(pu_position[0]), float(pu_position[1]))
        self.channel = channel
        self.params = params
        self.requirement = requirement
        if head_tie_break not in ("lowest-id", "seeded-random"):
            raise ValueError("head_tie_break must be 'lowest-id' or 'seeded-random'")
        self.head_tie_break = head_tie_break
        self._head_rng = head_rng or random.Random(0)

        self.pf = detection.prob_false_alarm_noncoop(params)
        self._index = {su_id: i for i, su_id in enumerate(self.ids)}
        pos = np.array([self.sus[i].position for i in self.ids], dtype=float)
        self._positions = pos
        pu = np.asarray(self.pu_position, dtype=float)
        self._pu_dist = np.hypot(*(pos - pu).T)
        self.pm = {
            su_id: detection.prob_miss_noncoop(
                detection.avg_snr(channel.pu_tx_power, float(d), channel), params
            )
            for su_id, d in zip(self.ids, self._pu_dist)
        }
        # pe[i, k]: reporting error from SU ids[i] to head ids[k].
        n = len(self.ids)
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        powers = np.array([self.sus[i].report_tx_power for i in self.ids])
        with np.errstate(divide="ignore"):
            snr = powers[:, None] * channel.kappa / (dist**channel.mu * channel.noise_power)
        ratio = snr / (1.0 + snr)
        pe = 0.5 * (1.0 - np.sqrt(np.where(np.isfinite(ratio), ratio, 1.0)))
        np.fill_diagonal(pe, 0.0)
        self._pe = pe
        self._coalitions: dict[frozenset[int], Coalition] = {}
        self._mwc: dict[frozenset[int], bool] = {}

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def alpha(self) -> float:
        return self.params.alpha

    def position_of(self, su_id: int) -> tuple[float, float]:
        return self.sus[su_id].position

    def distance(self, a: int, b: int) -> float:
        pa, pb = self.sus[a].position, self.sus[b].position
        return math.hypot(pa[0] - pb[0], pa[1] - pb[1])

    def distance_to_pu(self, su_id: int) -> float:
        return float(self._pu_dist[self._index[su_id]])

    def reporting_error(self, su_id: int, head_id: int) -> float:
        return float(self._pe[self._index[su_id], self._index[head_id]])

    def select_head(self, members: frozenset[int]) -> int:
        pairs = [(i, self.pm[i]) for i in members]
        if self.head_tie_break == "lowest-id":
            return detection.select_head(pairs)
        best = min(pm for _, pm in pairs)
        tied = sorted(i for i, pm in pairs if pm == best)
        return tied[0] if len(tied) == 1 else self._head_rng.choice(tied)

    def make_coalition(self, members: Iterable[int]) -> Coalition:
        key = frozenset(members)
        if not key:
            raise ValueError("a coalition must be non-empty")
        cached = self._coalitions.get(key)
        if cached is not None:
            return cached
        head = self.select_head(key)
        others = sorted(key - {head})
        q_m = detection.coalition_miss(
            self.pm[head],
            [self.pm[i] for i in others],
            [self.reporting_error(i, head) for i in others],
        )
        q_f = detection.coalition_false_alarm(
            self.pf, [self.reporting_error(i, head) for i in others]
        )
        coalition = Coalition(
            members=key,
            head=head,
            q_miss=q_m,
            q_false_alarm=q_f,
            value=coalition_value(q_m, q_f, self.alpha),
        )
        self._coalitions[key] = coalition
        return coalition

    def u(self, coalition: Coalition) -> int:
        if self.requirement is None:
            raise ValueError("context has no detection requirement; u is undefined")
        return adjunct_utility(
            coalition.q_detect, coalition.q_false_alarm, self.requirement, self.alpha
        )

    def singleton_partition(self) -> Partition:
        return self.partition_from_sets([{i} for i in self.ids])

    def partition_from_sets(self, blocks: Iterable[Iterable[int]]) -> Partition:
        coalitions = tuple(
            sorted((self.make_coalition(b) for b in blocks), key=lambda c: min(c.members))
        )
        return Partition(coalitions=coalitions, universe=frozenset(self.ids))

    def payoff_vector(self, partition: Partition) -> dict[int, float]:
        """Property 1: every SU's payoff equals its coalition's value."""
        return {i: c.value for c in partition for i in c.members}

    def collection_payoffs(self, blocks: Iterable[Coalition]) -> dict[int, float]:
        return {i: c.value for c in blocks for i in c.members}


def is_minimal_winning(coalition: Coalition, context: SensingContext) -> bool:
    """True iff u(S)=1 and every proper subset is losing (u(empty)=0), with
    heads and probabilities recomputed per subset."""
    key = coalition.members
    cached = context._mwc.get(key)
    if cached is not None:
        return cached
    result = _is_minimal_winning(coalition, context)
    context._mwc[key] = result
    return result


def _is_minimal_winning(coalition: Coalition, context: SensingContext) -> bool:
    from itertools import combinations

    if context.u(coalition) != 1:
        return False
    members = sorted(coalition.members)
    for size in range(1, len(members)):
        for subset in combinations(members, size):
            if context.u(context.make_coalition(subset)) == 1:
                return False
    return True


def adjust(
    coalition: Coalition, context: SensingContext
) -> tuple[Coalition, list[Coalition]]:
    """Adjust rule: prune a winning coalition down to a minimal winning one.

    Losing coalitions pass through unchanged. Otherwise members i satisfying
    u(S \\ {i}) = 1 are excluded sequentially by increasing non-cooperative
    miss probability (lowest P_m first, ties by id), with the head and all
    probabilities recomputed after every exclusion; the scan restarts on the
    reduced coalition until no single removal keeps it winning. Returns the
    pruned coalition and the excluded SUs as singleton coalitions.
    """
    if context.u(coalition) == 0:
        return coalition, []
    current = coalition
    excluded: list[Coalition] = []
    while len(current) > 1:
        for su_id in sorted(current.members, key=lambda i: (context.pm[i], i)):
            reduced = context.make_coalition(current.members - {su_id})
            if context.u(reduced) == 1:
                excluded.append(context.make_coalition({su_id}))
                current = reduced
                break
        else:
            break
    return current, excluded

"""Energy-detection probability model for a single secondary user and for a
coalition fusing hard decisions through its head with the OR rule.

All distances are in meters and all powers in watts. Under Rayleigh fading the
single-user statistics are

    P_f         = Gamma(m, lam/2) / Gamma(m)                     (threshold only)
    P_m(snr)    = sum_{n >= m-1} pois(n; lam/2) * (1 - beta^(n-m+1)),
                  beta = snr / (1 + snr)

where the miss probability is the exact rearrangement of the classical
incomplete-gamma closed form into a series with nonnegative terms, so it stays
accurate for m up to 1000 without catastrophic cancellation. The reporting
channel between a member and its coalition head is BPSK over Rayleigh fading:

    P_e(snr) = (1 - sqrt(snr / (1 + snr))) / 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import gammaincc

__all__ = [
    "ChannelModel",
    "DetectionParams",
    "SecondaryUser",
    "path_gain",
    "avg_snr",
    "regularized_upper_gamma",
    "prob_false_alarm_noncoop",
    "prob_miss_noncoop",
    "prob_reporting_error",
    "select_head",
    "coalition_miss",
    "coalition_false_alarm",
    "threshold_for_false_alarm",
]

# Eq (1)/(3)/(4) must land in [0, 1]; anything farther out than this is a bug,
# not round-off.
_ROUNDOFF = 1e-12


@dataclass(frozen=True)
class ChannelModel:
    """Propagation and noise constants: gain = kappa / d^mu, snr = P*gain/noise."""

    kappa: float = 1.0
    mu: float = 3.0
    noise_power: float = 1e-12  # watts (-90 dBm)
    pu_tx_power: float = 0.1  # watts (100 mW)

    def __post_init__(self) -> None:
        for name in ("kappa", "mu", "noise_power", "pu_tx_power"):
            if getattr(self, name) <= 0:
                raise ValueError(f"ChannelModel.{name} must be positive")


@dataclass(frozen=True)
class DetectionParams:
    """Energy detector operating point: time-bandwidth product m, threshold lam
    (lambda in the equations), and the per-coalition false alarm cap alpha."""

    m: int = 5
    lam: float = 20.0
    alpha: float = 0.1

    def __post_init__(self) -> None:
        if not isinstance(self.m, int) or self.m < 2:
            raise ValueError("DetectionParams.m must be an integer >= 2")
        if self.lam < 0:
            raise ValueError("DetectionParams.lam must be >= 0")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("DetectionParams.alpha must be in (0, 1)")


@dataclass(frozen=True)
class SecondaryUser:
    """One SU transmitter: integer id, planar position, reporting power P_i."""

    id: int
    position: tuple[float, float]
    report_tx_power: float = 0.01  # watts (10 mW)

    def __post_init__(self) -> None:
        if self.report_tx_power <= 0:
            raise ValueError("SecondaryUser.report_tx_power must be positive")


def path_gain(distance: float, channel: ChannelModel) -> float:
    """Large-scale path gain h = kappa / d^mu."""
    if distance <= 0:
        raise ValueError("distance must be positive")
    return channel.kappa / distance**channel.mu


def avg_snr(tx_power: float, distance: float, channel: ChannelModel) -> float:
    """Average received SNR = P * h(d) / sigma^2."""
    if tx_power <= 0:
        raise ValueError("tx_power must be positive")
    return tx_power * path_gain(distance, channel) / channel.noise_power


def regularized_upper_gamma(m: int, x: float) -> float:
    """Gamma(m, x)/Gamma(m); for integer m this equals e^-x * sum_{n<m} x^n/n!."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if x < 0:
        raise ValueError("x must be >= 0")
    return float(gammaincc(m, x))


def prob_false_alarm_noncoop(params: DetectionParams) -> float:
    """Non-cooperative false alarm P_f = Gamma(m, lam/2)/Gamma(m); location-free."""
    return regularized_upper_gamma(params.m, params.lam / 2.0)


def prob_miss_noncoop(snr_pu: float, params: DetectionParams) -> float:
    """Non-cooperative miss probability of an energy detector over Rayleigh fading.

    Evaluates the series form quoted in the module docstring; each term is
    generated in log space and the sum is fsum-compensated, so the result is
    accurate to ~1e-12 for m in [2, 1000] and any positive snr.
    """
    if snr_pu <= 0:
        raise ValueError("snr_pu must be positive")
    m, x = params.m, params.lam / 2.0
    if x == 0.0:
        return 0.0  # zero threshold always alarms, hence never misses
    log_beta = -math.log1p(1.0 / snr_pu)  # log(snr/(1+snr)), exact for large snr
    n = m - 1
    term = math.exp(n * math.log(x) - x - math.lgamma(n + 1))
    contribs = []
    total = 0.0
    while True:
        weight = -math.expm1((n - m + 1) * log_beta)  # 1 - beta^(n-m+1) >= 0
        contribs.append(term * weight)
        total += term * weight
        n += 1
        term *= x / n
        if n > x and (term == 0.0 or term < 1e-18 * (total + 1e-300)):
            break
    value = math.fsum(contribs)
    if not -_ROUNDOFF <= value <= 1.0 + _ROUNDOFF:
        raise AssertionError(f"miss probability {value} outside [0,1] beyond round-off")
    return min(max(value, 0.0), 1.0)


def prob_reporting_error(snr_link: float) -> float:
    """Average BPSK bit error over Rayleigh fading: (1 - sqrt(snr/(1+snr)))/2."""
    if snr_link < 0:
        raise ValueError("snr_link must be >= 0")
    if snr_link == 0.0:
        return 0.5
    return 0.5 * (1.0 - math.sqrt(snr_link / (1.0 + snr_link)))


def select_head(members: list[tuple[int, float]]) -> int:
    """Coalition head: the member with the lowest non-cooperative miss
    probability, ties broken by lowest id."""
    if not members:
        raise ValueError("cannot select a head from an empty coalition")
    return min(members, key=lambda item: (item[1], item[0]))[0]


def _check_probs(values, what: str) -> None:
    for v in values:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{what} {v} outside [0, 1]")


def coalition_miss(head_pm: float, member_pms: list[float], report_errors: list[float]) -> float:
    """OR-rule coalition miss probability.

    Q_m = P_m,head * prod_j [P_m,j (1-P_e,j) + (1-P_m,j) P_e,j], where j ranges
    over the non-head members and the head's own reporting error is 0 (it does
    not transmit its bit).
    """
    if len(member_pms) != len(report_errors):
        raise ValueError("member_pms and report_errors must have equal length")
    _check_probs([head_pm, *member_pms, *report_errors], "probability")
    q = head_pm
    for pm, pe in zip(member_pms, report_errors):
        q *= pm * (1.0 - pe) + (1.0 - pm) * pe
    return q


def coalition_false_alarm(pf: float, report_errors: list[float]) -> float:
    """OR-rule coalition false alarm probability.

    Q_f = 1 - (1-P_f) * prod_j [(1-P_f)(1-P_e,j) + P_f P_e,j] with the leading
    (1-P_f) factor contributed by the head (its own reporting error is 0).
    """
    _check_probs([pf, *report_errors], "probability")
    stay_quiet = 1.0 - pf
    for pe in report_errors:
        stay_quiet *= (1.0 - pf) * (1.0 - pe) + pf * pe
    return 1.0 - stay_quiet


def threshold_for_false_alarm(m: int, pf_target: float, tol: float = 1e-12) -> float:
    """Invert Eq (2): find lam such that Gamma(m, lam/2)/Gamma(m) = pf_target.

    Monotone bisection on lam (P_f is strictly decreasing in the threshold).
    """
    if not 0.0 < pf_target < 1.0:
        raise ValueError("pf_target must be in (0, 1)")
    lo, hi = 0.0, 4.0 * m + 8.0
    while regularized_upper_gamma(m, hi / 2.0) > pf_target:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if regularized_upper_gamma(m, mid / 2.0) > pf_target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * max(1.0, hi):
            break
    return 0.5 * (lo + hi)

"""
Closed-form rate arithmetic for the source, detectors, coincidence unit and
polarizer actuators.
"""

from typing import List, NamedTuple, Tuple

from .models import (
    AccidentalConvention, ApparatusParams, ChshAngles, CoincidenceWindow, ExperimentPlan,
    MeasurementRecord, MeasurementRecordSet, SettingPair, OUTCOME_SIGNS, SETTINGS_PER_SET,
)
from .quantum import chsh_combination, model_correlation


class SettingRates(NamedTuple):
    """Rates (1/s) for one setting."""
    singles_a: float
    singles_b: float
    true_coinc: float
    accidental_coinc: float

    @property
    def coincidences(self) -> float:
        return self.true_coinc + self.accidental_coinc


def accidental_rate(ra: float, rb: float, window: CoincidenceWindow,
                    convention: AccidentalConvention = AccidentalConvention.HALF) -> float:
    """ra * rb * tau_eff with tau_eff = 2*half_width (full) or half_width (half)."""
    tau_eff = 2.0 * window.half_width if convention is AccidentalConvention.FULL else window.half_width
    return ra * rb * tau_eff


def dead_time_throughput(rate_in: float, dead_time: float) -> float:
    """Registered rate of a non-paralyzable detector."""
    return rate_in / (1.0 + rate_in * dead_time)


def live_fraction(rate_in: float, dead_time: float) -> float:
    """Fraction of time a non-paralyzable detector is sensitive."""
    return 1.0 / (1.0 + rate_in * dead_time)


def expected_setting_rates(params: ApparatusParams, setting: SettingPair) -> SettingRates:
    """Rates arriving at the detectors for one analyzer orientation pair, before dead time.

    Marginals behind a polarizer are exactly 1/2, so p++ = (1 + E)/4.
    """
    e = model_correlation(params.model, setting)
    w_a = params.actuator.transmission(setting.a)
    w_b = params.actuator.transmission(setting.b)
    singles_a = params.source.singles_rate_a * w_a / 2.0 + params.det_a.dark_rate
    singles_b = params.source.singles_rate_b * w_b / 2.0 + params.det_b.dark_rate
    true_coinc = max(params.source.pair_rate * w_a * w_b * (1.0 + e) / 4.0, 0.0)
    accidental = accidental_rate(singles_a, singles_b, params.window, params.convention)
    return SettingRates(singles_a, singles_b, true_coinc, accidental)


def registered_setting_rates(params: ApparatusParams, setting: SettingPair) -> SettingRates:
    """expected_setting_rates after dead-time losses on both detectors."""
    rates = expected_setting_rates(params, setting)
    live = (live_fraction(rates.singles_a, params.det_a.dead_time)
            * live_fraction(rates.singles_b, params.det_b.dead_time))
    return SettingRates(
        singles_a=dead_time_throughput(rates.singles_a, params.det_a.dead_time),
        singles_b=dead_time_throughput(rates.singles_b, params.det_b.dead_time),
        true_coinc=rates.true_coinc * live,
        accidental_coinc=rates.accidental_coinc * live,
    )


def expected_records(params: ApparatusParams, plan: ExperimentPlan) -> MeasurementRecordSet:
    """Noise-free record set: registered expected counts rounded to integers."""
    angles = plan.angles.quantized(params.actuator.resolution)
    records: List[MeasurementRecord] = []
    for set_index in range(plan.sets):
        for setting in plan.setting_order:
            pair = angles.orientation(setting)
            rates = registered_setting_rates(params, pair)
            records.append(MeasurementRecord(
                set_index=set_index,
                setting=setting,
                alice_deg=pair.a.theta,
                bob_deg=pair.b.theta,
                duration=plan.interval,
                singles_a=int(round(rates.singles_a * plan.interval)),
                singles_b=int(round(rates.singles_b * plan.interval)),
                coincidences=int(round(rates.coincidences * plan.interval)),
            ))
    return MeasurementRecordSet(tuple(records))


def max_min_coincidence_rates(params: ApparatusParams, plan: ExperimentPlan) -> List[float]:
    """Lowest and highest registered coincidence rate across the 16 settings."""
    angles = plan.angles.quantized(params.actuator.resolution)
    rates = [registered_setting_rates(params, angles.orientation(s)).coincidences
             for s in range(SETTINGS_PER_SET)]
    return [min(rates), max(rates)]


def expected_chsh(params: ApparatusParams, angles: ChshAngles) -> float:
    """S expected from the registered rates, accidentals included, at quantized angles."""
    angles = angles.quantized(params.actuator.resolution)
    correlations = []
    for j in range(4):
        counts = [registered_setting_rates(params, angles.orientation(4 * j + k)).coincidences for k in range(4)]
        total = sum(counts)
        correlations.append(sum(sign * n for sign, n in zip(OUTCOME_SIGNS, counts)) / total if total > 0 else 0.0)
    return chsh_combination(correlations)


def mean_singles(params: ApparatusParams, angles: ChshAngles) -> Tuple[float, float]:
    """Singles arriving at each detector (before dead time), averaged over the 16 settings."""
    angles = angles.quantized(params.actuator.resolution)
    rates = [expected_setting_rates(params, angles.orientation(s)) for s in range(SETTINGS_PER_SET)]
    return (sum(r.singles_a for r in rates) / len(rates), sum(r.singles_b for r in rates) / len(rates))

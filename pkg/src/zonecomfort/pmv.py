"""Fanger's PMV/PPD heat-balance model, evaluated per sensor reading.

The clothing-surface temperature is solved by damped fixed-point iteration;
PMV follows from the thermal load at the solved surface temperature and PPD
from the standard dissatisfaction curve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .core import SensorReading

CLO_TO_M2KW = 0.155  # 1 clo in m^2 K / W
MET_TO_WM2 = 58.2  # 1 met in W / m^2


class HeatBalanceError(RuntimeError):
    """Clothing-temperature iteration failed to converge."""

    def __init__(self, message: str, last_iterate: float, residual: float):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


@dataclass(frozen=True)
class PmvInputs:
    air_temperature: float  # deg C
    mean_radiant_temperature: float  # deg C
    air_velocity: float  # m/s
    relative_humidity: float  # %
    metabolic_rate: float = 1.1 * MET_TO_WM2  # W/m^2
    external_work: float = 0.0  # W/m^2
    clothing_insulation: float = 1.0 * CLO_TO_M2KW  # m^2 K / W

    def __post_init__(self):
        if not -40.0 <= self.air_temperature <= 60.0:
            raise ValueError(f"air_temperature out of [-40, 60]: {self.air_temperature}")
        if not 0.0 <= self.air_velocity <= 5.0:
            raise ValueError(f"air_velocity out of [0, 5]: {self.air_velocity}")
        if not 0.0 <= self.relative_humidity <= 100.0:
            raise ValueError(f"relative_humidity out of [0, 100]: {self.relative_humidity}")
        if not 40.0 <= self.metabolic_rate <= 400.0:
            raise ValueError(f"metabolic_rate out of [40, 400]: {self.metabolic_rate}")
        if self.external_work < 0 or self.external_work > self.metabolic_rate:
            raise ValueError("external_work must be in [0, metabolic_rate]")
        if self.clothing_insulation < 0:
            raise ValueError("clothing_insulation must be >= 0")


@dataclass(frozen=True)
class PmvResult:
    pmv: float
    ppd: float
    clothing_temperature: float  # deg C
    iterations: int
    residual: float  # deg C, |t_cl - rhs(t_cl)| at the returned iterate


@dataclass(frozen=True)
class PmvAssumptions:
    """Fixed personal/flow parameters for sensor-driven PMV.

    Sensors measure only temperature and humidity; the remaining Fanger
    inputs default to seated office work in winter clothing, still air,
    radiant temperature equal to air temperature.
    """

    metabolic_rate: float = 1.1 * MET_TO_WM2
    external_work: float = 0.0
    clothing_insulation: float = 1.0 * CLO_TO_M2KW
    air_velocity: float = 0.1
    radiant_offset: float = 0.0  # t_r = t_a + offset


DEFAULT_ASSUMPTIONS = PmvAssumptions()


def saturation_vapor_pressure(air_temperature: float) -> float:
    """Saturation vapor pressure in Pa, Magnus form."""
    if not -40.0 <= air_temperature <= 60.0:
        raise ValueError(f"air_temperature out of [-40, 60]: {air_temperature}")
    return 610.5 * math.exp(17.27 * air_temperature / (237.7 + air_temperature))


def ambient_vapor_pressure(air_temperature: float, relative_humidity: float) -> float:
    return (relative_humidity / 100.0) * saturation_vapor_pressure(air_temperature)


def clothing_area_factor(clothing_insulation: float) -> float:
    if clothing_insulation <= 0.078:
        return 1.00 + 1.290 * clothing_insulation
    return 1.05 + 0.645 * clothing_insulation


def _convective_coefficient(t_cl: float, t_a: float, v: float) -> float:
    return max(2.38 * abs(t_cl - t_a) ** 0.25, 12.1 * math.sqrt(v))


def _surface_balance_rhs(t_cl: float, inputs: PmvInputs) -> float:
    t_a = inputs.air_temperature
    t_r = inputs.mean_radiant_temperature
    i_cl = inputs.clothing_insulation
    f_cl = clothing_area_factor(i_cl)
    h_c = _convective_coefficient(t_cl, t_a, inputs.air_velocity)
    radiation = 3.96e-8 * f_cl * ((t_cl + 273.0) ** 4 - (t_r + 273.0) ** 4)
    convection = f_cl * h_c * (t_cl - t_a)
    mw = inputs.metabolic_rate - inputs.external_work
    return 35.7 - 0.028 * mw - i_cl * (radiation + convection)


def solve_clothing_temperature(
    inputs: PmvInputs, tolerance: float = 1e-4, max_iterations: int = 150
) -> tuple[float, int, float]:
    """Solve the clothing-surface heat balance for t_cl.

    Returns (t_cl, iterations, residual); residual is |t_cl - rhs(t_cl)| in
    deg C. Damped fixed-point iteration, start halfway between air and skin
    temperature.
    """
    mw = inputs.metabolic_rate - inputs.external_work
    if inputs.clothing_insulation == 0.0:
        # Insulation term vanishes; the balance is closed-form.
        return 35.7 - 0.028 * mw, 1, 0.0
    t_a = inputs.air_temperature
    i_cl = inputs.clothing_insulation
    f_cl = clothing_area_factor(i_cl)
    t_cl = t_a + 0.5 * (35.7 - t_a)
    for iteration in range(1, max_iterations + 1):
        rhs = _surface_balance_rhs(t_cl, inputs)
        residual = abs(rhs - t_cl)
        if residual < tolerance:
            return t_cl, iteration, residual
        # Newton step on rhs(t) - t = 0 with h_c frozen at the current
        # iterate; plain averaging stalls when f_cl*h_c is large.
        h_c = _convective_coefficient(t_cl, t_a, inputs.air_velocity)
        slope = -i_cl * f_cl * (4.0 * 3.96e-8 * (t_cl + 273.0) ** 3 + h_c)
        t_cl = t_cl + (rhs - t_cl) / (1.0 - slope)
    raise HeatBalanceError(
        f"clothing-temperature iteration did not converge in {max_iterations} steps "
        f"(residual {residual:.3g} deg C)",
        last_iterate=t_cl,
        residual=residual,
    )


def compute_ppd(pmv: float) -> float:
    """Predicted percentage of dissatisfied for a given PMV."""
    if not math.isfinite(pmv):
        raise ValueError(f"pmv must be finite, got {pmv!r}")
    return 100.0 - 95.0 * math.exp(-0.03353 * pmv**4 - 0.2179 * pmv**2)


def compute_pmv(
    inputs: PmvInputs, tolerance: float = 1e-4, max_iterations: int = 150
) -> PmvResult:
    """Predicted mean vote from the heat balance at the solved t_cl."""
    t_cl, iterations, residual = solve_clothing_temperature(inputs, tolerance, max_iterations)
    t_a = inputs.air_temperature
    t_r = inputs.mean_radiant_temperature
    m = inputs.metabolic_rate
    mw = m - inputs.external_work
    p_a = ambient_vapor_pressure(t_a, inputs.relative_humidity)
    f_cl = clothing_area_factor(inputs.clothing_insulation)
    h_c = _convective_coefficient(t_cl, t_a, inputs.air_velocity)

    skin_diffusion = 3.05e-3 * (5733.0 - 6.99 * mw - p_a)
    sweating = max(0.42 * (mw - 58.15), 0.0)
    latent_respiration = 1.7e-5 * m * (5867.0 - p_a)
    dry_respiration = 0.0014 * m * (34.0 - t_a)
    radiation = 3.96e-8 * f_cl * ((t_cl + 273.0) ** 4 - (t_r + 273.0) ** 4)
    convection = f_cl * h_c * (t_cl - t_a)

    load = mw - skin_diffusion - sweating - latent_respiration - dry_respiration
    load -= radiation + convection
    pmv = (0.303 * math.exp(-0.036 * m) + 0.028) * load
    return PmvResult(
        pmv=pmv,
        ppd=compute_ppd(pmv),
        clothing_temperature=t_cl,
        iterations=iterations,
        residual=residual,
    )


def inputs_from_reading(
    reading: SensorReading, assumptions: PmvAssumptions = DEFAULT_ASSUMPTIONS
) -> PmvInputs:
    return PmvInputs(
        air_temperature=reading.temperature,
        mean_radiant_temperature=reading.temperature + assumptions.radiant_offset,
        air_velocity=assumptions.air_velocity,
        relative_humidity=reading.relative_humidity,
        metabolic_rate=assumptions.metabolic_rate,
        external_work=assumptions.external_work,
        clothing_insulation=assumptions.clothing_insulation,
    )


def pmv_from_sensor(
    reading: SensorReading, assumptions: PmvAssumptions = DEFAULT_ASSUMPTIONS
) -> tuple[float, float]:
    """PMV and PPD for one sensor reading under the fixed assumption set."""
    result = compute_pmv(inputs_from_reading(reading, assumptions))
    return result.pmv, result.ppd


def with_radiant_temperature(inputs: PmvInputs, t_r: float) -> PmvInputs:
    return replace(inputs, mean_radiant_temperature=t_r)

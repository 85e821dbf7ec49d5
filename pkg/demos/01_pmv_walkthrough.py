"""Walk through the Fanger PMV/PPD computation for a seated office occupant.

Shows how predicted mean vote and dissatisfaction react to air temperature
and relative humidity under the default assumptions (1.1 met, 1.0 clo,
0.1 m/s air speed, radiant temperature equal to air temperature).
"""

from zonecomfort.pmv import DEFAULT_ASSUMPTIONS, PmvInputs, compute_pmv

print("Assumptions:", DEFAULT_ASSUMPTIONS)
print()
print(f"{'t_air':>6} {'RH':>4} {'PMV':>7} {'PPD %':>7} {'t_clothing':>10}")
for temperature in (18.0, 20.0, 22.0, 24.0, 26.0, 28.0):
    for humidity in (30.0, 50.0, 70.0):
        inputs = PmvInputs(
            air_temperature=temperature,
            mean_radiant_temperature=temperature,
            air_velocity=DEFAULT_ASSUMPTIONS.air_velocity,
            relative_humidity=humidity,
            metabolic_rate=DEFAULT_ASSUMPTIONS.metabolic_rate,
            external_work=0.0,
            clothing_insulation=DEFAULT_ASSUMPTIONS.clothing_insulation,
        )
        result = compute_pmv(inputs)
        print(
            f"{temperature:6.1f} {humidity:4.0f} {result.pmv:7.3f} "
            f"{result.ppd:7.1f} {result.clothing_temperature:10.2f}"
        )
print()
print("PPD bottoms out at 5% when PMV = 0: even a perfectly neutral room")
print("leaves one in twenty people dissatisfied.")

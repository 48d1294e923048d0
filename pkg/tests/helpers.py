"""Shared generators for small random programs."""

import numpy as np

from ewgopt.linprog import LinearProgram

RELS = ("<=", "==", ">=")


def random_lp(rng, max_vars=6, max_rows=6, integer=False):
    """Small bounded LP with integer-valued data; relations drawn at random."""
    n = int(rng.integers(1, max_vars + 1))
    m = int(rng.integers(0, max_rows + 1))
    c = rng.integers(-5, 6, n).astype(float)
    A = rng.integers(-4, 5, (m, n)).astype(float)
    rels = tuple(RELS[k] for k in rng.choice(3, m, p=[0.6, 0.15, 0.25]))
    # rhs built around a random interior point so a good share are feasible
    x0 = rng.uniform(0, 3, n)
    b = np.round(A @ x0 + rng.integers(-2, 3, m))
    lower = rng.integers(-2, 1, n).astype(float)
    upper = lower + rng.integers(1, 5, n)
    flags = rng.random(n) < 0.5 if integer else np.zeros(n, bool)
    return LinearProgram(c, A, rels, b, lower, upper, flags)


def make_scenario(water_load, gas_load, residential, **overrides):
    """Small scenario with roomy bounds; keyword overrides go per section.

    Override keys look like ``water__r_w=0`` or ``power__gen_cap=40``.
    """
    from ewgopt.model import (GasParams, Horizon, LoadProfiles, PowerParams, Scenario,
                              WaterParams, default_transport_cap)

    n = len(water_load)
    sections = {
        "water": dict(h_w=1.0, r_w=0.01, storage_init=5.0, storage_min=0.0, storage_max=50.0,
                      flow_max=30.0),
        "gas": dict(h_g=0.5, r_g=0.01, r_p=0.001, r_s=1.0, unit_volume=5.0, pressure_ref=100.0,
                    pipe_storage_ref=20.0, tank_init=5.0, tank_min=0.0, tank_max=50.0, pipe_init=5.0,
                    pipe_min=0.0, pipe_max=50.0, flow_max=30.0, transport_max_units=None),
        "power": dict(c1=0.01, c2=1.0, c3=0.5, gen_cap=100.0, n_breakpoints=11),
        "misc": dict(pseudo_rate=0.25, step_hours=1.0),
    }
    for key, value in overrides.items():
        sec, name = key.split("__")
        sections[sec][name] = value
    g = sections["gas"]
    if g["transport_max_units"] is None:
        g["transport_max_units"] = default_transport_cap(max(gas_load), sections["misc"]["step_hours"],
                                                         g["unit_volume"])
    return Scenario(
        Horizon(n, sections["misc"]["step_hours"]),
        LoadProfiles(water_load, gas_load, residential),
        WaterParams(**sections["water"]),
        GasParams(**g),
        PowerParams(**sections["power"]),
        sections["misc"]["pseudo_rate"],
    )

#!/usr/bin/env python3
"""Regenerates the bundled synthetic systems under data/.

    python3 tools/make_fixtures.py [data_dir]
"""

import csv
import math
import sys
from datetime import datetime, timedelta
from pathlib import Path

import numpy as np

START = datetime(2020, 7, 17)
HOURS = 48
GEN_HEADER = ["gen_id", "bus_id", "category", "pmin_mw", "pmax_mw", "ramp_mw_per_h", "c2", "c1",
              "c0", "startup_cost", "shutdown_cost", "min_up_h", "min_down_h", "committable",
              "fast_start", "variable"]
# standard normal quantiles at (k + 0.5) / 10
Z10 = [-1.6449, -1.0364, -0.6745, -0.3853, -0.1257, 0.1257, 0.3853, 0.6745, 1.0364, 1.6449]


def stamp(h):
    return (START + timedelta(hours=h)).strftime("%Y-%m-%dT%H:%M")


def fmt(x):
    return f"{x:.1f}" if isinstance(x, float) else str(x)


def write(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in r])


def gen_row(gid, bus, cat, pmin, pmax, ramp, c2, c1, c0, su, sd, up, down, commit, fast, var):
    return [gid, bus, cat, f"{pmin:g}", f"{pmax:g}", f"{ramp:g}", f"{c2:g}", f"{c1:g}", f"{c0:g}",
            f"{su:g}", f"{sd:g}", up, down, int(commit), int(fast), int(var)]


def wind_fan(rng, nameplate, mean, spread):
    """Ten scenarios per hour: mean + spread * z, with slowly drifting ranks."""
    traces = []
    for k in range(10):
        drift = 0.0
        trace = []
        for h in range(HOURS):
            drift = 0.8 * drift + 0.1 * rng.standard_normal()
            v = mean[h] + spread[h] * (Z10[k] + drift)
            trace.append(round(min(max(v, 0.0), nameplate), 1))
        traces.append(trace)
    return traces


def scenario_rows(gen_id, traces):
    rows = []
    for k, trace in enumerate(traces):
        for h, v in enumerate(trace):
            rows.append([gen_id, f"S{k + 1:02d}", stamp(h), f"{v:.1f}"])
    return rows


def five_bus(root):
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(20200717)
    write(root / "buses.csv", ["bus_id", "name"], [[b, f"Bus {b}"] for b in range(1, 6)])
    branches = [("L12", 1, 2, 0.0281, 400), ("L14", 1, 4, 0.0304, 400), ("L15", 1, 5, 0.0064, 400),
                ("L23", 2, 3, 0.0108, 400), ("L34", 3, 4, 0.0297, 400), ("L45", 4, 5, 0.0297, 240)]
    write(root / "branches.csv", ["branch_id", "from_bus", "to_bus", "reactance_pu", "capacity_mw"],
          [[i, f, t, f"{x:g}", c] for i, f, t, x, c in branches])
    gens = [
        gen_row("W1", 3, "wind", 0, 400, 400, 0, 0, 0, 0, 0, 0, 0, False, False, True),
        gen_row("G1", 1, "coal", 80, 300, 120, 0.002, 19, 200, 1500, 0, 4, 4, True, False, False),
        gen_row("G2", 4, "gas_cc", 50, 250, 150, 0.006, 27, 120, 600, 0, 3, 2, True, False, False),
        gen_row("G3", 5, "gas_ct", 10, 350, 350, 0.01, 45, 40, 80, 0, 1, 1, True, True, False),
    ]
    write(root / "generators.csv", GEN_HEADER, gens)
    loads = []
    for h in range(HOURS):
        total = 560.0 + 100.0 * math.sin(2 * math.pi * (h - 11) / 24)
        if h >= 24:
            total *= 1.03
        for bus, share in ((2, 0.3), (3, 0.3), (4, 0.4)):
            loads.append([bus, stamp(h), f"{total * share:.1f}"])
    write(root / "loads.csv", ["bus_id", "timestamp", "load_mw"], loads)

    mean = [200.0 + 60.0 * math.cos(2 * math.pi * h / 24) for h in range(HOURS)]
    spread = [30.0 + 55.0 * (1 + math.cos(2 * math.pi * (h - 4) / 24)) for h in range(HOURS)]
    traces = wind_fan(rng, 400.0, mean, spread)
    write(root / "scenarios.csv", ["gen_id", "scenario_id", "timestamp", "available_mw"],
          scenario_rows("W1", traces))


RTS_BRANCHES = [(1, 2), (1, 3), (1, 5), (2, 4), (2, 6), (3, 9), (3, 24), (4, 9), (5, 10), (6, 10),
                (7, 8), (8, 9), (8, 10), (9, 11), (9, 12), (10, 11), (10, 12), (11, 13), (11, 14),
                (12, 13), (12, 23), (13, 23), (14, 16), (15, 16), (15, 21), (15, 21), (15, 24),
                (16, 17), (16, 19), (17, 18), (17, 22), (18, 21), (18, 21), (19, 20), (19, 20),
                (20, 23), (20, 23), (21, 22)]
RTS_LOAD_SHARE = {1: 3.8, 2: 3.4, 3: 6.3, 4: 2.6, 5: 2.5, 6: 4.8, 7: 4.4, 8: 6.0, 9: 6.1, 10: 6.8,
                  13: 9.3, 14: 6.8, 15: 11.1, 16: 3.5, 18: 11.7, 19: 6.4, 20: 4.5}


def rts_like(root):
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(96)
    buses = [100 + b for b in range(1, 25)]
    write(root / "buses.csv", ["bus_id", "name"], [[b, f"Bus {b}"] for b in buses])
    rows = []
    for i, (f, t) in enumerate(RTS_BRANCHES):
        x = round(0.02 + 0.12 * rng.random(), 4)
        rows.append([f"A{i + 1}", 100 + f, 100 + t, f"{x:g}", 500 if i % 5 else 800])
    write(root / "branches.csv", ["branch_id", "from_bus", "to_bus", "reactance_pu", "capacity_mw"], rows)

    gens = []
    thermal_buses = [101, 102, 107, 113, 115, 116, 118, 121, 122, 123]

    def bus_for(i):
        return thermal_buses[i % len(thermal_buses)]

    n = 0
    for i in range(10):
        gens.append(gen_row(f"CC_{i + 1}", bus_for(n), "gas_cc", 170, 355, 200, 0.004, 27 + 0.3 * i, 400,
                            5000, 0, 8, 6, True, False, False)); n += 1
    for i, cap in enumerate([76] * 4 + [155] * 7 + [185.6] * 5):
        gens.append(gen_row(f"COAL_{i + 1}", bus_for(n), "coal", round(cap * 0.4, 1), cap, cap * 0.5,
                            0.003, 19 + 0.2 * i, 200, 3000, 0, 12, 8, True, False, False)); n += 1
    for i in range(27):
        gens.append(gen_row(f"CT_{i + 1}", bus_for(n), "gas_ct", 22, 55, 55, 0.01, 45 + 0.2 * i, 60,
                            100, 0, 1, 1, True, True, False)); n += 1
    for i in range(19):
        gens.append(gen_row(f"HYDRO_{i + 1}", bus_for(n), "hydro", 0, 50, 50, 0, 2, 0, 0, 0, 0, 0,
                            False, False, False)); n += 1
    gens.append(gen_row("NUC_1", 121, "nuclear", 396, 400, 20, 0, 6, 800, 40000, 0, 24, 48,
                        True, False, False))
    for i in range(12):
        gens.append(gen_row(f"OILCT_{i + 1}", bus_for(n), "oil_ct", 8, 20, 20, 0.02, 80 + i, 30, 50,
                            0, 1, 1, True, True, False)); n += 1
    for i in range(7):
        gens.append(gen_row(f"OILST_{i + 1}", bus_for(n), "oil_steam", 5, 12, 6, 0.02, 70 + i, 40,
                            300, 0, 4, 4, True, False, False)); n += 1
    winds = [("122_WIND_1", 122, 714), ("103_WIND_1", 103, 847), ("109_WIND_1", 109, 148),
             ("117_WIND_1", 117, 799)]
    for gid, bus, cap in winds:
        gens.append(gen_row(gid, bus, "wind", 0, cap, cap, 0, 0, 0, 0, 0, 0, 0, False, False, True))
    write(root / "generators.csv", GEN_HEADER, gens)

    loads = []
    total_share = sum(RTS_LOAD_SHARE.values())
    for h in range(HOURS):
        total = 6800.0 + 1700.0 * math.sin(2 * math.pi * (h - 11) / 24)
        for b, share in RTS_LOAD_SHARE.items():
            loads.append([100 + b, stamp(h), f"{total * share / total_share:.1f}"])
    write(root / "loads.csv", ["bus_id", "timestamp", "load_mw"], loads)

    rows = []
    for gid, _, cap in winds:
        mean = [cap * (0.45 + 0.15 * math.cos(2 * math.pi * h / 24)) for h in range(HOURS)]
        spread = [cap * (0.06 + 0.12 * (1 + math.cos(2 * math.pi * (h - 4) / 24))) for h in range(HOURS)]
        rows += scenario_rows(gid, wind_fan(rng, float(cap), mean, spread))
    write(root / "scenarios.csv", ["gen_id", "scenario_id", "timestamp", "available_mw"], rows)


def main():
    data = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data"
    five_bus(data / "five_bus")
    rts_like(data / "rts_like")


if __name__ == "__main__":
    main()

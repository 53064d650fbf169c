#!/usr/bin/env python3
"""Writes the bundled data files under crates/core/data.

Everything is deterministic: rerunning the script reproduces the files byte
for byte. Run from the repository root.
"""

import json
import os

ROOT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "crates", "core", "data")

# One area of a three-area reliability test system: (from, to, x_pu, rate_mw).
RTS_BRANCHES = [
    (1, 2, 0.0139, 175), (1, 3, 0.2112, 175), (1, 5, 0.0845, 175),
    (2, 4, 0.1267, 175), (2, 6, 0.1920, 175), (3, 9, 0.1190, 175),
    (3, 24, 0.0839, 400), (4, 9, 0.1037, 175), (5, 10, 0.0883, 175),
    (6, 10, 0.0605, 175), (7, 8, 0.0614, 175), (8, 9, 0.1651, 175),
    (8, 10, 0.1651, 175), (9, 11, 0.0839, 400), (9, 12, 0.0839, 400),
    (10, 11, 0.0839, 400), (10, 12, 0.0839, 400), (11, 13, 0.0476, 500),
    (11, 14, 0.0418, 500), (12, 13, 0.0476, 500), (12, 23, 0.0966, 500),
    (13, 23, 0.0865, 500), (14, 16, 0.0389, 500), (15, 16, 0.0173, 500),
    (15, 21, 0.0490, 500), (15, 21, 0.0490, 500), (15, 24, 0.0519, 500),
    (16, 17, 0.0259, 500), (16, 19, 0.0231, 500), (17, 18, 0.0144, 500),
    (17, 22, 0.1053, 500), (18, 21, 0.0259, 500), (18, 21, 0.0259, 500),
    (19, 20, 0.0396, 500), (19, 20, 0.0396, 500), (20, 23, 0.0216, 500),
    (20, 23, 0.0216, 500), (21, 22, 0.0678, 500),
]
TRANSFORMERS = {(3, 24), (9, 11), (9, 12), (10, 11), (10, 12)}

# Peak bus loads in MW; 2850 MW per region.
RTS_LOADS = {
    1: 108, 2: 97, 3: 180, 4: 74, 5: 71, 6: 136, 7: 125, 8: 171, 9: 175,
    10: 195, 13: 265, 14: 194, 15: 317, 16: 100, 18: 333, 19: 181, 20: 128,
}

# Unit capacities per bus in MW.
RTS_UNITS = {
    1: [20, 20, 76, 76], 2: [20, 20, 76, 76], 7: [100, 100, 100],
    13: [197, 197, 197], 15: [12, 12, 12, 12, 12, 155], 16: [155],
    18: [400], 21: [400], 22: [50, 50, 50, 50, 50, 50], 23: [155, 155, 350],
}

# Inter-region ties: (from, to, x_pu, rate_mw, length_km).
RTS_TIES = [
    (107, 203, 0.1610, 175, 68.0),
    (113, 215, 0.0750, 500, 84.0),
    (123, 217, 0.0740, 500, 82.0),
    (121, 325, 0.0970, 500, 107.0),
    (223, 318, 0.1040, 500, 116.0),
    (325, 323, 0.1050, 500, 117.0),
]

REGIONS = {1: "west", 2: "central", 3: "east"}

# Risk areas. The west has two (138 kV south, 230 kV north); central and
# east have eight each, grouping three consecutive buses. Wildland and
# foothill areas hold no buses and are only crossed by lines.
AREAS = [(1, "west-south"), (2, "west-north"), (3, "west-wildland"), (4, "central-foothills")]
AREAS += [(5 + k, f"central-{k + 1}") for k in range(8)]
AREAS += [(13 + k, f"east-{k + 1}") for k in range(8)]
RTS_RHO = {1: 2.0, 2: 1.0, 3: 4.0, 4: 1.0}
RTS_RHO.update({5 + k: r for k, r in enumerate([0, 1, 0, 1, 1, 1, 1, 1])})
RTS_RHO.update({13 + k: r for k, r in enumerate([0, 0, 0, 1, 1, 1, 1, 0])})
RTS_RHO = {a: float(r) for a, r in RTS_RHO.items()}
WILDLAND, FOOTHILLS = 3, 4

# Lines (in local numbering, region 1 only) whose right of way crosses the
# wildland, with the share of their length inside it.
WILDLAND_CROSSINGS = {(1, 3): 0.8, (1, 5): 0.7, (2, 6): 0.8, (3, 9): 0.6, (5, 10): 0.6, (8, 9): 0.7, (8, 10): 0.7}
FOOTHILL_CROSSINGS = {(201, 203): 0.5, (202, 206): 0.5, (203, 209): 0.5}


def dump(path, doc):
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as f:
        f.write(json.dumps(doc, indent=2))
        f.write("\n")


def bus_area(bus):
    region, local = divmod(bus, 100)
    if region == 1:
        return 1 if local <= 10 else 2
    group = min((local - 1) // 3, 7)
    return (5 if region == 2 else 13) + group


def bus_kv(bus):
    return 138.0 if bus % 100 <= 10 else 230.0


def rts73():
    buses, lines, gens, loads = [], [], [], []
    geography = []
    for region in (1, 2, 3):
        off = 100 * region
        for b in range(1, 25):
            buses.append({"id": off + b, "name": f"{REGIONS[region]}-{b}", "area_id": bus_area(off + b)})
    buses.append({"id": 325, "name": "east-25", "area_id": bus_area(325)})
    for region in (1, 2, 3):
        off = 100 * region
        for f, t, x, rate in RTS_BRANCHES:
            lid = len(lines) + 1
            transformer = (f, t) in TRANSFORMERS
            length = 1.0 if transformer else round(x * 400.0, 1)
            kv = 230.0 if transformer else min(bus_kv(f), bus_kv(t))
            lines.append({
                "id": lid, "from_bus": off + f, "to_bus": off + t,
                "susceptance_pu": round(1.0 / x, 6), "thermal_limit_mw": float(rate),
                "voltage_kv": kv, "length_km": length,
            })
            share = None
            area = None
            if region == 1 and (f, t) in WILDLAND_CROSSINGS:
                share, area = WILDLAND_CROSSINGS[(f, t)], WILDLAND
            if (off + f, off + t) in FOOTHILL_CROSSINGS:
                share, area = FOOTHILL_CROSSINGS[(off + f, off + t)], FOOTHILLS
            if share is not None:
                inside = round(length * share, 1)
                rest = round(length - inside, 1)
                geography.append({"line_id": lid, "segments": [
                    {"area_id": bus_area(off + f), "km": round(rest / 2, 2)},
                    {"area_id": area, "km": inside},
                    {"area_id": bus_area(off + t), "km": round(rest - round(rest / 2, 2), 2)},
                ]})
    for f, t, x, rate, km in RTS_TIES:
        lines.append({
            "id": len(lines) + 1, "from_bus": f, "to_bus": t,
            "susceptance_pu": round(1.0 / x, 6), "thermal_limit_mw": float(rate),
            "voltage_kv": 230.0, "length_km": km,
        })
    for region in (1, 2, 3):
        off = 100 * region
        for b, units in RTS_UNITS.items():
            for p in units:
                gens.append({"id": len(gens) + 1, "bus": off + b, "p_min_mw": 0.0, "p_max_mw": float(p)})
        for b, d in RTS_LOADS.items():
            loads.append({"id": off + b, "bus": off + b, "demand_mw": float(d), "weight": 1.0})
    case = {
        "format_version": 1, "base_mva": 100.0,
        "areas": [{"id": i, "name": n} for i, n in AREAS],
        "buses": buses, "lines": lines, "generators": gens, "loads": loads,
    }
    risk = {
        "format_version": 1,
        "area_risks": [{"area_id": a, "rho": r} for a, r in sorted(RTS_RHO.items())],
        "line_geography": geography,
    }
    return case, risk


def small(name, buses, lines, gens, loads, rho, areas=None):
    """buses: [(id, area)], lines: [(id, f, t, b, limit, kv, km)],
    gens: [(id, bus, pmin, pmax)], loads: [(id, bus, demand, weight)]."""
    area_ids = sorted({a for _, a in buses})
    case = {
        "format_version": 1, "base_mva": 100.0,
        "areas": [{"id": a, "name": (areas or {}).get(a, f"area {a}")} for a in area_ids],
        "buses": [{"id": i, "name": f"{name}-{i}", "area_id": a} for i, a in buses],
        "lines": [{"id": i, "from_bus": f, "to_bus": t, "susceptance_pu": b, "thermal_limit_mw": lim,
                   "voltage_kv": kv, "length_km": km} for i, f, t, b, lim, kv, km in lines],
        "generators": [{"id": i, "bus": b, "p_min_mw": lo, "p_max_mw": hi} for i, b, lo, hi in gens],
        "loads": [{"id": i, "bus": b, "demand_mw": d, "weight": w} for i, b, d, w in loads],
    }
    risk = {"format_version": 1, "area_risks": [{"area_id": a, "rho": rho[a]} for a in area_ids]}
    return name, case, risk


def corpus():
    hv, lv = 230.0, 115.0
    yield small("two_bus", [(1, 1), (2, 1)], [(1, 1, 2, 10.0, 100.0, hv, 20.0)],
                [(1, 1, 0.0, 100.0)], [(2, 2, 50.0, 1.0)], {1: 1.0})
    yield small("triangle", [(1, 1), (2, 1), (3, 1)],
                [(1, 1, 2, 10.0, 100.0, hv, 10.0), (2, 2, 3, 10.0, 100.0, hv, 10.0), (3, 1, 3, 10.0, 100.0, hv, 10.0)],
                [(1, 1, 0.0, 200.0)], [(1, 2, 60.0, 1.0), (2, 3, 40.0, 1.0)], {1: 2.0})
    yield small("five_bus", [(1, 1), (2, 1), (3, 2), (4, 2), (5, 1)],
                [(1, 1, 2, 35.5, 400.0, hv, 30.0), (2, 1, 4, 33.0, 300.0, hv, 35.0), (3, 1, 5, 155.0, 300.0, hv, 6.0),
                 (4, 2, 3, 92.0, 300.0, hv, 12.0), (5, 3, 4, 33.0, 240.0, hv, 35.0)],
                [(1, 1, 0.0, 210.0), (2, 3, 0.0, 520.0)],
                [(2, 2, 300.0, 1.0), (3, 3, 300.0, 1.0), (4, 4, 400.0, 1.0)], {1: 1.0, 2: 4.0})
    yield small("chain", [(1, 1), (2, 1), (3, 2), (4, 2)],
                [(1, 1, 2, 20.0, 150.0, hv, 15.0), (2, 2, 3, 20.0, 150.0, lv, 25.0), (3, 3, 4, 20.0, 150.0, lv, 10.0)],
                [(1, 1, 0.0, 150.0)], [(2, 2, 30.0, 1.0), (3, 3, 50.0, 1.0), (4, 4, 40.0, 1.0)], {1: 1.0, 2: 2.0})
    yield small("star", [(1, 1), (2, 1), (3, 2), (4, 3)],
                [(1, 1, 2, 15.0, 80.0, hv, 20.0), (2, 1, 3, 15.0, 80.0, hv, 40.0), (3, 1, 4, 15.0, 80.0, lv, 30.0)],
                [(1, 1, 0.0, 120.0), (2, 3, 10.0, 60.0)],
                [(2, 2, 50.0, 1.0), (3, 3, 40.0, 1.0), (4, 4, 60.0, 1.0)], {1: 1.0, 2: 2.0, 3: 4.0})
    yield small("parallel", [(1, 1), (2, 2)],
                [(1, 1, 2, 10.0, 60.0, hv, 30.0), (2, 1, 2, 20.0, 60.0, hv, 30.0), (3, 1, 2, 5.0, 60.0, lv, 30.0)],
                [(1, 1, 0.0, 200.0), (2, 2, 0.0, 40.0)], [(2, 2, 150.0, 1.0)], {1: 1.0, 2: 2.0})
    yield small("square_diag", [(1, 1), (2, 1), (3, 2), (4, 2)],
                [(1, 1, 2, 10.0, 90.0, hv, 12.0), (2, 2, 3, 10.0, 90.0, hv, 18.0), (3, 3, 4, 10.0, 90.0, hv, 12.0),
                 (4, 4, 1, 10.0, 90.0, hv, 18.0), (5, 1, 3, 8.0, 60.0, lv, 25.0)],
                [(1, 1, 0.0, 180.0), (2, 3, 0.0, 60.0)],
                [(2, 2, 40.0, 1.0), (3, 3, 70.0, 1.0), (4, 4, 60.0, 1.0)], {1: 1.0, 2: 4.0})
    yield small("congested", [(1, 1), (2, 1), (3, 1)],
                [(1, 1, 2, 10.0, 40.0, hv, 10.0), (2, 2, 3, 10.0, 40.0, hv, 10.0), (3, 1, 3, 10.0, 40.0, hv, 10.0)],
                [(1, 1, 0.0, 200.0), (2, 2, 0.0, 30.0)], [(2, 2, 50.0, 1.0), (3, 3, 70.0, 1.0)], {1: 1.0})
    yield small("weighted", [(1, 1), (2, 1), (3, 2), (4, 2)],
                [(1, 1, 2, 12.0, 100.0, hv, 15.0), (2, 2, 3, 12.0, 100.0, hv, 20.0), (3, 3, 4, 12.0, 100.0, lv, 15.0),
                 (4, 4, 1, 12.0, 100.0, hv, 20.0)],
                [(1, 1, 0.0, 100.0), (2, 3, 0.0, 50.0)],
                [(2, 2, 60.0, 3.0), (3, 3, 50.0, 1.0), (4, 4, 40.0, 0.5)], {1: 2.0, 2: 1.0})
    yield small("min_output", [(1, 1), (2, 1), (3, 2)],
                [(1, 1, 2, 10.0, 100.0, hv, 20.0), (2, 2, 3, 10.0, 100.0, hv, 30.0)],
                [(1, 1, 40.0, 120.0), (2, 3, 20.0, 50.0)],
                [(2, 2, 30.0, 1.0), (3, 3, 35.0, 1.0)], {1: 1.0, 2: 4.0})
    yield small("low_voltage", [(1, 1), (2, 2), (3, 3), (4, 3)],
                [(1, 1, 2, 8.0, 70.0, lv, 30.0), (2, 2, 3, 8.0, 70.0, lv, 30.0), (3, 3, 4, 8.0, 70.0, 69.0, 5.0),
                 (4, 1, 4, 6.0, 70.0, hv, 50.0)],
                [(1, 1, 0.0, 160.0)], [(2, 2, 40.0, 1.0), (3, 3, 45.0, 1.0), (4, 4, 30.0, 2.0)], {1: 1.0, 2: 2.0, 3: 4.0})
    yield small("two_generators", [(1, 1), (2, 1), (3, 2), (4, 2), (5, 2)],
                [(1, 1, 2, 10.0, 120.0, hv, 10.0), (2, 2, 3, 10.0, 120.0, hv, 40.0), (3, 3, 4, 10.0, 120.0, hv, 10.0),
                 (4, 4, 5, 10.0, 120.0, lv, 10.0)],
                [(1, 1, 0.0, 100.0), (2, 5, 0.0, 100.0)],
                [(2, 2, 40.0, 1.0), (3, 3, 30.0, 1.0), (4, 4, 50.0, 1.0)], {1: 1.0, 2: 3.0})


CASE9 = """function mpc = case9
mpc.version = '2';
mpc.baseMVA = 100;
%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin
mpc.bus = [
  1 3 0 0 0 0 1 1 0 345 1 1.1 0.9;
  2 2 0 0 0 0 1 1 0 345 1 1.1 0.9;
  3 2 0 0 0 0 2 1 0 345 1 1.1 0.9;
  4 1 0 0 0 0 1 1 0 345 1 1.1 0.9;
  5 1 90 30 0 0 1 1 0 345 1 1.1 0.9;
  6 1 0 0 0 0 2 1 0 345 1 1.1 0.9;
  7 1 100 35 0 0 2 1 0 345 1 1.1 0.9;
  8 1 0 0 0 0 2 1 0 345 1 1.1 0.9;
  9 1 125 50 0 0 1 1 0 345 1 1.1 0.9;
];
%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin
mpc.gen = [
  1 72.3 27.03 300 -300 1.04 100 1 250 10;
  2 163 6.54 300 -300 1.025 100 1 300 10;
  3 85 -10.95 300 -300 1.025 100 1 270 10;
];
%% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax
mpc.branch = [
  1 4 0 0.0576 0 250 250 250 0 0 1 -360 360;
  4 5 0.017 0.092 0.158 250 250 250 0 0 1 -360 360;
  5 6 0.039 0.17 0.358 150 150 150 0 0 1 -360 360;
  3 6 0 0.0586 0 300 300 300 0 0 1 -360 360;
  6 7 0.0119 0.1008 0.209 150 150 150 0 0 1 -360 360;
  7 8 0.0085 0.072 0.149 250 250 250 0 0 1 -360 360;
  8 2 0 0.0625 0 250 250 250 0 0 1 -360 360;
  8 9 0.032 0.161 0.306 250 250 250 0 0 1 -360 360;
  9 4 0.01 0.085 0.176 250 250 250 0 0 1 -360 360;
];
mpc.branch_length_km = [
  2; 40; 75; 2; 45; 30; 2; 70; 38;
];
"""

CASE14_LOADS = {2: 21.7, 3: 94.2, 4: 47.8, 5: 7.6, 6: 11.2, 9: 29.5, 10: 9.0, 11: 3.5, 12: 6.1, 13: 13.5, 14: 14.9}
CASE14_GENS = [(1, 332.4), (2, 140.0), (3, 100.0), (6, 100.0), (8, 100.0)]
CASE14_BRANCHES = [
    (1, 2, 0.05917), (1, 5, 0.22304), (2, 3, 0.19797), (2, 4, 0.17632), (2, 5, 0.17388),
    (3, 4, 0.17103), (4, 5, 0.04211), (4, 7, 0.20912), (4, 9, 0.55618), (5, 6, 0.25202),
    (6, 11, 0.1989), (6, 12, 0.25581), (6, 13, 0.13027), (7, 8, 0.17615), (7, 9, 0.11001),
    (9, 10, 0.0845), (9, 14, 0.27038), (10, 11, 0.19207), (12, 13, 0.19988), (13, 14, 0.34802),
]


def case14():
    rows = ["function mpc = case14", "mpc.version = '2';", "mpc.baseMVA = 100;", "mpc.bus = ["]
    for b in range(1, 15):
        kind = 3 if b == 1 else (2 if b in (2, 3, 6, 8) else 1)
        area = 1 if b <= 5 else 2
        kv = 138 if b <= 5 else 69
        rows.append(f"  {b} {kind} {CASE14_LOADS.get(b, 0)} 0 0 0 {area} 1 0 {kv} 1 1.06 0.94;")
    rows += ["];", "mpc.gen = ["]
    for b, pmax in CASE14_GENS:
        rows.append(f"  {b} 0 0 100 -100 1 100 1 {pmax} 0;")
    rows += ["];", "mpc.branch = ["]
    for f, t, x in CASE14_BRANCHES:
        rows.append(f"  {f} {t} 0 {x} 0 160 160 160 0 0 1 -360 360;")
    rows += ["];", "mpc.branch_length_km = ["]
    rows += [f"  {round(x * 150.0, 1)};" for _, _, x in CASE14_BRANCHES]
    rows += ["];", ""]
    return "\n".join(rows)


def main():
    case, risk = rts73()
    dump(os.path.join(ROOT, "rts73.json"), case)
    dump(os.path.join(ROOT, "rts73_risk.json"), risk)
    for name, case, risk in corpus():
        dump(os.path.join(ROOT, "corpus", f"{name}.json"), case)
        dump(os.path.join(ROOT, "corpus", f"{name}_risk.json"), risk)
    with open(os.path.join(ROOT, "corpus", "case9.m"), "w") as f:
        f.write(CASE9)
    dump(os.path.join(ROOT, "corpus", "case9_risk.json"),
         {"format_version": 1, "area_risks": [{"area_id": 1, "rho": 1.0}, {"area_id": 2, "rho": 2.0}]})
    with open(os.path.join(ROOT, "corpus", "case14.m"), "w") as f:
        f.write(case14())
    dump(os.path.join(ROOT, "corpus", "case14_risk.json"),
         {"format_version": 1, "area_risks": [{"area_id": 1, "rho": 2.0}, {"area_id": 2, "rho": 1.0}]})


if __name__ == "__main__":
    main()

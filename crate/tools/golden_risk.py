#!/usr/bin/env python3
"""Independent recomputation of the bundled case's risk table.

Reads the case and risk documents directly and writes
crates/core/data/golden/rts73_risk.json, which the Rust tests compare
against. Shares no code with the crate.
"""

import json
import os

DATA = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "crates", "core", "data")
KM_PER_SEGMENT = 10.0
AREA_THRESHOLD = 30.0


def main():
    case = json.load(open(os.path.join(DATA, "rts73.json")))
    risk = json.load(open(os.path.join(DATA, "rts73_risk.json")))
    rho = {a["id"]: 0.0 for a in case["areas"]}
    for ar in risk["area_risks"]:
        rho[ar["area_id"]] = ar["rho"]
    bus_area = {b["id"]: b["area_id"] for b in case["buses"]}
    geography = {g["line_id"]: g["segments"] for g in risk.get("line_geography", [])}

    # component -> list of (area, kappa * weight)
    terms = {}
    for b in case["buses"]:
        terms[("bus", b["id"])] = [(b["area_id"], 1.0)]
    for line in case["lines"]:
        kappa = 2.0 if line["voltage_kv"] < 230.0 else 1.0
        if line["id"] in geography:
            segs = [(s["area_id"], s["km"]) for s in geography[line["id"]]]
        else:
            half = line["length_km"] / 2.0
            segs = [(bus_area[line["from_bus"]], half), (bus_area[line["to_bus"]], half)]
        terms[("line", line["id"])] = [(a, kappa * km / KM_PER_SEGMENT) for a, km in segs if km > 0]
    for g in case["generators"]:
        terms[("generator", g["id"])] = [(bus_area[g["bus"]], 1.0)]
    for d in case["loads"]:
        terms[("load", d["id"])] = [(bus_area[d["bus"]], 1.0)]

    component_risk = {c: sum(w * rho[a] for a, w in ts) for c, ts in terms.items()}
    area_total = {a: 0.0 for a in rho}
    for ts in terms.values():
        for a, w in ts:
            area_total[a] += w * rho[a]
    hot = sorted(a for a, r in area_total.items() if r >= AREA_THRESHOLD)

    located = set()
    line_ends = {l["id"]: (l["from_bus"], l["to_bus"]) for l in case["lines"]}
    point_bus = {("generator", g["id"]): g["bus"] for g in case["generators"]}
    point_bus.update({("load", d["id"]): d["bus"] for d in case["loads"]})
    point_bus.update({("bus", b["id"]): b["id"] for b in case["buses"]})
    for c, ts in terms.items():
        if c[0] == "line":
            f, t = line_ends[c[1]]
            inside = bus_area[f] in hot or bus_area[t] in hot
        else:
            inside = bus_area[point_bus[c]] in hot
        if inside or any(a in hot for a, _ in ts):
            located.add(c)

    by_kind = {k: sum(v for c, v in component_risk.items() if c[0] == k) for k in ("bus", "line", "generator", "load")}
    order = {"bus": 0, "line": 1, "generator": 2, "load": 3}
    doc = {
        "total_risk": sum(component_risk.values()),
        "risk_by_kind": by_kind,
        "max_line_risk": max(v for c, v in component_risk.items() if c[0] == "line"),
        "area_totals": [{"area_id": a, "total": area_total[a]} for a in sorted(area_total)],
        "area_threshold": AREA_THRESHOLD,
        "triggered_areas": hot,
        "area_heuristic_components": [f"{k}:{i}" for k, i in sorted(located, key=lambda c: (order[c[0]], c[1]))],
        "components": [
            {"kind": k, "id": i, "risk": component_risk[(k, i)]}
            for k, i in sorted(component_risk, key=lambda c: (order[c[0]], c[1]))
        ],
    }
    os.makedirs(os.path.join(DATA, "golden"), exist_ok=True)
    with open(os.path.join(DATA, "golden", "rts73_risk.json"), "w") as f:
        f.write(json.dumps(doc, indent=2))
        f.write("\n")


if __name__ == "__main__":
    main()

#!/usr/bin/env python3
"""Writes the scenario fixtures under crates/core/fixtures/.

Region coordinates are synthesized: panels on a grid east of the base,
transformers in a column beyond them. Quadcopters fly straight lines,
ground vehicles follow axis-aligned roads.
"""
import itertools
import json
import math
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "fixtures"


def travel_table(coords, kinds):
    table = {}
    names = list(coords)
    for kind, (metric, speed) in kinds.items():
        legs = []
        for a, b in itertools.combinations(names, 2):
            (xa, ya), (xb, yb) = coords[a], coords[b]
            if metric == "line":
                d = math.hypot(xa - xb, ya - yb)
            else:
                d = abs(xa - xb) + abs(ya - yb)
            legs.append([a, b, round(d / speed, 1)])
        table[kind] = legs
    return table


def farm_coords(panels, transformers, pitch=(70.0, 45.0), cols=6):
    coords = {"b": (0.0, 0.0)}
    for i in range(1, panels + 1):
        r, c = divmod(i - 1, cols)
        coords[f"p{i}"] = (60.0 + pitch[0] * c, 40.0 + pitch[1] * r)
    for k in range(1, transformers + 1):
        coords[f"t{k}"] = (60.0 + pitch[0] * cols + 40.0, 30.0 + 45.0 * (k - 1))
    return coords


def agent(name, kind, local=None, collab=()):
    return {"id": name, "type": kind, "initial": "b", "local_actions": local or {}, "collab_actions": list(collab)}


FARM_LOCAL = {"Vf": {"temp": 10.0}, "Vl": {}, "Vs": {"sweep": 190.0, "mow": 190.0}}
FARM_COLLAB = {"Vf": ["scan", "wash"], "Vl": ["wash", "repair_l", "fix"], "Vs": ["repair_s", "fix"]}
FARM_BEHAVIORS = [
    {"name": "fix", "requires": ["fix", "fix"], "duration": 72.0},
    {"name": "repair", "requires": ["repair_s", "repair_s", "repair_l"], "duration": 576.0},
    {"name": "wash", "requires": ["wash", "wash"], "duration": 565.0},
    {"name": "scan", "requires": ["scan", "scan", "scan"], "duration": 95.0},
]


def farm(n_f, n_l, n_s, failures=()):
    coords = farm_coords(34, 7)
    agents = []
    for kind, n in (("Vf", n_f), ("Vl", n_l), ("Vs", n_s)):
        for i in range(1, n + 1):
            agents.append(agent(f"{kind.lower()}{i}", kind, FARM_LOCAL[kind], FARM_COLLAB[kind]))
    return {
        "regions": [{"id": i, "name": n} for i, n in enumerate(coords)],
        "distances": travel_table(coords, {"Vf": ("line", 10.0), "Vl": ("road", 4.0), "Vs": ("road", 4.0)}),
        "agents": agents,
        "behaviors": FARM_BEHAVIORS,
        "failures": [{"agent": a, "time": t} for a, t in failures],
    }


def hw_lab():
    # 4 x 5 m arena; the two ground vehicles are one of each kind.
    coords = {"b": (0.2, 0.2)}
    for i in range(1, 7):
        r, c = divmod(i - 1, 3)
        coords[f"p{i}"] = (1.0 + 1.2 * c, 1.5 + 1.6 * r)
    for k in range(1, 5):
        coords[f"t{k}"] = (3.7, 0.6 + 1.1 * (k - 1))
    agents = [agent(f"vf{i}", "Vf", {"temp": 4.0}, ["scan", "wash"]) for i in range(1, 5)]
    agents.append(agent("vl1", "Vl", {}, ["wash", "repair_l", "fix"]))
    agents.append(agent("vs1", "Vs", {"sweep": 12.0, "mow": 12.0}, ["repair_s", "fix"]))
    return {
        "regions": [{"id": i, "name": n} for i, n in enumerate(coords)],
        "distances": travel_table(coords, {"Vf": ("line", 0.3), "Vl": ("road", 0.2), "Vs": ("road", 0.2)}),
        "agents": agents,
        "behaviors": [
            {"name": "fix", "requires": ["fix", "fix"], "duration": 10.0},
            {"name": "repair", "requires": ["repair_s", "repair_l"], "duration": 20.0},
            {"name": "wash", "requires": ["wash", "wash"], "duration": 15.0},
            {"name": "scan", "requires": ["scan", "scan", "scan"], "duration": 8.0},
        ],
        "failures": [{"agent": "vf4", "time": 75.0}],
    }


def toy_2x2():
    return {
        "regions": [{"id": 0, "name": "b"}, {"id": 1, "name": "p1"}, {"id": 2, "name": "p2"}],
        "distances": {"R": [["b", "p1", 5.0], ["b", "p2", 8.0], ["p1", "p2", 4.0]]},
        "agents": [agent("r1", "R", {"sweep": 10.0}), agent("r2", "R", {"sweep": 10.0})],
        "behaviors": [],
    }


def toy_collab():
    return {
        "regions": [{"id": 0, "name": "b"}, {"id": 1, "name": "p1"}, {"id": 2, "name": "p2"}],
        "distances": {"R": [["b", "p1", 5.0], ["b", "p2", 6.0], ["p1", "p2", 3.0]]},
        "agents": [
            agent("r1", "R", {"sweep": 10.0}, ["lift"]),
            agent("r2", "R", {"sweep": 10.0}, ["lift"]),
            agent("r3", "R", {"sweep": 10.0}, ["lift"]),
        ],
        "behaviors": [{"name": "carry", "requires": ["lift", "lift"], "duration": 20.0}],
        "failures": [{"agent": "r1", "time": 12.0}],
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    fixtures = {
        "pv_farm_12": farm(6, 3, 3),
        "pv_farm_12_failures": farm(6, 3, 3, [("vf3", 200.0), ("vl1", 600.0), ("vs3", 600.0)]),
        "pv_farm_24": farm(12, 6, 6),
        "hw_lab_6": hw_lab(),
        "toy_2x2": toy_2x2(),
        "toy_collab": toy_collab(),
    }
    for name, scenario in fixtures.items():
        (OUT / f"{name}.json").write_text(json.dumps(scenario, indent=1) + "\n")


if __name__ == "__main__":
    main()

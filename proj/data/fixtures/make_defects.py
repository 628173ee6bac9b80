"""Derives the seeded-defect models from the gold model. Rerun after the gold model changes."""
import copy
import json
import pathlib

here = pathlib.Path(__file__).parent
gold = json.loads((here / "ecar.gold-model.json").read_text())


def dump(name, model):
    (here / name).write_text(json.dumps(model, indent=2, sort_keys=True, ensure_ascii=False) + "\n")


# producer of E-Car::position removed
m = copy.deepcopy(gold)
gone = next(i["id"] for i in m["invariants"] if i["key"] == "1(b)")
m["invariants"] = [i for i in m["invariants"] if i["id"] != gone]
for d in m["decompositions"]:
    d["children"] = [c for c in d["children"] if c != gone]
for t in m["traces"]:
    t["invariants"] = [c for c in t["invariants"] if c != gone]
dump("ecar.defect-missing-input.json", m)

# both plan writers under AND
m = copy.deepcopy(gold)
for d in m["decompositions"]:
    if d["kind"] == "OR":
        d["kind"] = "AND"
dump("ecar.defect-multiple-writers.json", m)

# attribute no requirement mentions
m = copy.deepcopy(gold)
ecar = next(c for c in m["components"] if c["name"] == "E-Car")
ecar["attributes"].append({
    "cluster": {"canonical": "color", "evidence": [], "members": ["color"], "status": "auto"},
    "ident": "color",
    "mentions": [],
    "name": "color",
})
dump("ecar.defect-unused-attribute.json", m)

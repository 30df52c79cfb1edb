#!/usr/bin/env python3
"""Generate the bundled synthetic wireless core-network KG schema.

The schema has 132 data-field, 40 procedure, 73 statistical-indicator and
2 algorithm-indicator entities. Procedures are grouped into ten families of
four. Data fields and indicators belong to a family and attach mostly inside
it, so the graph has the community structure of a real procedure/field/
indicator KG:

  * each data field is carried by 1-3 distinct procedures, usually 3;
  * each statistical indicator is conditioned on 1-2 data fields, usually 2,
    and a second field is one that shares a procedure with the first;
  * each algorithm indicator is computed from 3 statistical indicators.

Usage: gen_wireless_schema.py [output.json]
"""

import json
import random
import sys

SEED = 20211231

FAMILIES = [
    ("regis", ["1-Registration", "37-Mobility registration update",
               "38-Periodic registration update", "39-Emergency registration"]),
    ("security", ["11-Authentication", "12-Security mode control", "13-Identity request",
                  "10-UE configuration update"]),
    ("release", ["2-Deregistration", "40-Network-initiated deregistration", "9-AN release",
                 "20-UE context release"]),
    ("service", ["3-Service request", "14-NAS transport", "30-SMS over NAS",
                 "29-Network slice selection"]),
    ("paging", ["4-Paging", "23-Location reporting", "34-Event exposure",
                "27-Error indication"]),
    ("pdu", ["5-PDU session establishment", "6-PDU session modification",
             "7-PDU session release", "31-Policy association establishment"]),
    ("handover", ["8-Handover", "15-N2 handover preparation", "16-N2 handover execution",
                  "36-Inter-system handover"]),
    ("mobility", ["17-Xn handover", "18-Path switch", "35-EPS fallback", "28-NG reset"]),
    ("context", ["19-UE context setup", "21-UE context modification",
                 "22-Initial context setup", "33-Subscriber data management"]),
    ("mgmt", ["24-NG setup", "25-RAN configuration update", "26-AMF configuration update",
              "32-Policy update"]),
]

FIELD_SUFFIXES = [
    "cause code", "result", "request type", "timer value", "ue identity", "nssai",
    "access type", "message length", "retry count", "status code", "tracking area",
    "cell id", "reject cause", "start time", "end time", "duration", "bearer id",
]

STAT_METRICS = [
    "request cnt", "accept cnt", "reject cnt", "timeout cnt", "abnormal release cnt",
    "retry cnt", "attempt cnt", "complete cnt", "collision cnt", "drop cnt",
]

# Named entities that must appear, with their family index.
SEED_FIELDS = {
    "msgflag": 0, "auth type": 0, "rejected NSSAI number": 0,
    "procedure status": 3, "request cause group": 3,
}
SEED_STATS = {
    "regis request cnt": 0, "regis accept cnt": 0, "regis fail cnt": 0,
    "registration success cnt": 0, "registration fail cnt": 0,
}
ALGORITHMS = {
    "regis success rate": ["registration success cnt", "regis request cnt", "regis accept cnt"],
    "regis failure rate": ["registration fail cnt", "regis fail cnt", "regis request cnt"],
}

N_FIELDS, N_STATS = 132, 73
HOME_PROB = 0.98
FIELD_PROCS = ([1, 2, 3], [1, 3, 8])  # choices, weights
STAT_FIELDS = ([1, 2], [1, 6])


def main():
    rng = random.Random(SEED)
    out = sys.argv[1] if len(sys.argv) > 1 else "data/wireless_kg.json"
    nfam = len(FAMILIES)
    procedures = [p for _, procs in FAMILIES for p in procs]

    fields = dict(SEED_FIELDS)
    for suffix in FIELD_SUFFIXES:
        for f, (prefix, _) in enumerate(FAMILIES):
            name = f"{prefix} {suffix}"
            if len(fields) < N_FIELDS and name not in fields:
                fields[name] = f

    stats = dict(SEED_STATS)
    for metric in STAT_METRICS:
        for f, (prefix, _) in enumerate(FAMILIES):
            name = f"{prefix} {metric}"
            if len(stats) < N_STATS and name not in stats:
                stats[name] = f

    entities = []
    entities += [{"name": p, "category": "procedure_type"} for p in procedures]
    entities += [{"name": n, "category": "data_field_type"} for n in fields]
    entities += [{"name": n, "category": "statistical_indicator"} for n in stats]
    entities += [{"name": n, "category": "algorithm_indicator"} for n in ALGORITHMS]

    relations = []
    seen = set()
    procs_of = {name: set() for name in fields}
    fields_of = {name: [] for name in stats}

    def relate(head, tail, category):
        key = tuple(sorted((head, tail)))
        if key not in seen:
            seen.add(key)
            relations.append({"head": head, "tail": tail, "category": category})
        if category == "procedure_relation":
            procs_of[tail].add(head)
        elif category == "condition_relation" and tail not in fields_of[head]:
            fields_of[head].append(tail)

    # Relations named in the registration example.
    relate("1-Registration", "msgflag", "procedure_relation")
    relate("1-Registration", "auth type", "procedure_relation")
    relate("1-Registration", "rejected NSSAI number", "procedure_relation")
    relate("3-Service request", "msgflag", "procedure_relation")
    relate("4-Paging", "msgflag", "procedure_relation")
    relate("registration success cnt", "msgflag", "condition_relation")
    relate("registration fail cnt", "msgflag", "condition_relation")
    relate("registration fail cnt", "auth type", "condition_relation")
    relate("regis fail cnt", "rejected NSSAI number", "condition_relation")

    for name, fam in fields.items():
        want = rng.choices(*FIELD_PROCS)[0]
        while len(procs_of[name]) < want:
            home = fam if rng.random() < HOME_PROB else rng.randrange(nfam)
            relate(rng.choice(FAMILIES[home][1]), name, "procedure_relation")

    fields_by_family = [sorted(n for n, fam in fields.items() if fam == k) for k in range(nfam)]
    for name, fam in stats.items():
        want = rng.choices(*STAT_FIELDS)[0]
        if not fields_of[name]:
            home = fam if rng.random() < HOME_PROB else rng.randrange(nfam)
            relate(name, rng.choice(fields_by_family[home]), "condition_relation")
        if len(fields_of[name]) < want:
            first = fields_of[name][0]
            siblings = sorted(f for f in fields if f != first and procs_of[f] & procs_of[first])
            relate(name, rng.choice(siblings), "condition_relation")

    for algo, sources in ALGORITHMS.items():
        for s in sources:
            relate(s, algo, "algorithm_relation")

    with open(out, "w", encoding="utf-8") as fh:
        json.dump({"entities": entities, "relations": relations}, fh, indent=1)
        fh.write("\n")
    print(f"{out}: {len(entities)} entities, {len(relations)} relations")


if __name__ == "__main__":
    main()

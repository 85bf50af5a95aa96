#!/usr/bin/env python3
"""End-to-end checks of the mcar CLI: reports, schemas, determinism, exit codes.

Usage: cli_test.py <mcar binary> <schemas dir> <work dir>
"""

import csv
import json
import math
import os
import random
import subprocess
import sys
import time

import jsonschema

MCAR, SCHEMAS, WORK = sys.argv[1:4]
os.makedirs(WORK, exist_ok=True)
failures = []


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


def run(*args, timeout=300):
    p = subprocess.run([MCAR, *args], capture_output=True, text=True, timeout=timeout)
    return p.returncode, p.stdout, p.stderr


def schema(name):
    with open(os.path.join(SCHEMAS, name + ".schema.json")) as f:
        return json.load(f)


def valid(doc, name):
    try:
        jsonschema.validate(doc, schema(name))
        return True
    except jsonschema.ValidationError as e:
        print("     schema:", e.message)
        return False


def path(name):
    return os.path.join(WORK, name)


def write_rows(name, header, rows):
    with open(path(name), "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for r in rows:
            w.writerow(["NA" if v is None else repr(v) for v in r])
    return path(name)


def exact_pair(n, rho, rng):
    """Two columns with sample mean 0, variance 1 and correlation rho exactly."""
    a = [rng.gauss(0, 1) for _ in range(n)]
    b = [rng.gauss(0, 1) for _ in range(n)]

    def center(v):
        m = sum(v) / n
        return [x - m for x in v]

    def scale(v):
        s = math.sqrt(sum(x * x for x in v) / n)
        return [x / s for x in v]

    a = scale(center(a))
    b = center(b)
    proj = sum(x * y for x, y in zip(a, b)) / n
    b = scale([y - proj * x for x, y in zip(a, b)])
    return a, [rho * x + math.sqrt(1 - rho * rho) * y for x, y in zip(a, b)]


def cycle_rows(d, rho, n, rng):
    rows = []
    for j in range(d):
        x, y = exact_pair(n, rho[j], rng)
        for u, v in zip(x, y):
            r = [None] * d
            r[j], r[(j + 1) % d] = u, v
            rows.append(r)
    return rows


rng = random.Random(11)

# index on complete data: one pattern, R = 0.
full = [[rng.gauss(0, 1) for _ in range(3)] for _ in range(100)]
complete_csv = write_rows("complete.csv", ["a", "b", "c"], full)
rc, out, _ = run("index", complete_csv)
rep = json.loads(out)
check(rc == 0 and len(rep["patterns"]) == 1 and rep["R"]["R"] <= 1e-8, "index: complete data gives one pattern and R = 0")
check(valid(rep, "index"), "index: report validates")

# index on data realizing the rho = 0.6 incompatible three-cycle moments.
cyc_csv = write_rows("cycle3.csv", ["x1", "x2", "x3"], cycle_rows(3, [0.6, 0.6, -0.6], 200, rng))
rc, out, _ = run("index", cyc_csv, "--rtilde")
rep = json.loads(out)
check(rc == 0 and abs(rep["R"]["R"] - 0.2) <= 1e-6, "index: exact-moment (0.6, 0.6, -0.6) cycle gives R = 0.2")
check(valid(rep, "index") and "Rtilde" in rep, "index: --rtilde report validates")

# Byte-identical output across invocations, including files written with -o.
a, b = path("idx_a.json"), path("idx_b.json")
run("index", cyc_csv, "-o", a)
run("index", cyc_csv, "-o", b)
with open(a, "rb") as fa, open(b, "rb") as fb:
    check(fa.read() == fb.read(), "index: identical invocations give byte-identical JSON")

# test: null-conforming data, seeded, twice.
null_rows = cycle_rows(3, [0.3, 0.3, 0.3], 200, rng)
null_csv = write_rows("null3.csv", ["x1", "x2", "x3"], null_rows)
rc1, out1, _ = run("test", null_csv, "--B", "99", "--seed", "7", "--little")
rc2, out2, _ = run("test", null_csv, "--B", "99", "--seed", "7", "--little")
rep = json.loads(out1)
p = rep["bootstrap"]["p_value"]
check(rc1 == 0 and 0.01 <= p <= 1, f"test: B = 99 p-value in [0.01, 1] (p = {p:.3f})")
check(out1 == out2 and rc1 == rc2, "test: --seed 7 twice gives identical reports")
check(rep["little"]["applicable"] is True, "test: --little applies on a 3-cycle")
check(valid(rep, "test"), "test: report validates")

rc, out, _ = run("test", cyc_csv, "--B", "19", "--seed", "3", "--no-means", "--no-variances")
rep = json.loads(out)
check(rc == 0 and rep["bootstrap"]["reject"] in (True, False), "test: exit 0 regardless of the decision")

four_csv = write_rows("cycle4.csv", ["x1", "x2", "x3", "x4"], cycle_rows(4, [0.2, 0.2, 0.2, 0.2], 60, rng))
rc, out, _ = run("test", four_csv, "--B", "19", "--little", "--oracle", "--split")
rep = json.loads(out)
lit = rep.get("little", {})
check(rc == 0 and lit.get("applicable") is False and lit.get("reason"), "test: --little is inapplicable without pair coverage")
check(valid(rep, "test"), "test: report with optional tests validates")

# analyze-cycle
rc, out, _ = run("analyze-cycle", "--angles", "pi/3,pi/3,pi/3")
rep = json.loads(out)
check(rc == 0 and rep["barrett"]["feasible"] and rep["R_kkt"]["R"] <= 1e-9 and rep["R_sdp"]["R"] <= 1e-6,
      "analyze-cycle: (pi/3, pi/3, pi/3) feasible with R = 0 both ways")
check(valid(rep, "analyze_cycle"), "analyze-cycle: report validates")
rc, out, _ = run("analyze-cycle", "--angles", "5pi/6,pi/6,pi/6")
rep = json.loads(out)
ks = [t["K"] for t in rep["barrett"]["violated"]]
check(rc == 0 and not rep["barrett"]["feasible"] and [1] in ks, "analyze-cycle: (5pi/6, pi/6, pi/6) flags K = {1}")
check(rep["agreement"] == abs(rep["R_kkt"]["R"] - rep["R_sdp"]["R"]) and rep["agreement"] <= 1e-5,
      "analyze-cycle: agreement field is |R_kkt - R_sdp|")
rc, out, _ = run("analyze-cycle", "--rho", "0.99,0.99,-0.99")
rep = json.loads(out)
check(rc == 0 and rep["lower_bound"]["bound"] is None and rep["lower_bound"]["reason"],
      "analyze-cycle: lower bound reported inapplicable below cfloor")
check(valid(rep, "analyze_cycle"), "analyze-cycle: inapplicable-bound report validates")

# Exit codes.
rc, _, err = run("analyze-cycle", "--angles", "pi/3,banana,pi/3")
check(rc == 2 and err.strip(), "exit 2 on a bad angle")
rc, _, _ = run("index", path("does-not-exist.csv"))
check(rc == 2, "exit 2 on a missing input file")
bad_csv = path("bad.csv")
with open(bad_csv, "w") as f:
    f.write("a,b\n1,2\n3,x\n")
rc, _, _ = run("index", bad_csv)
check(rc == 2, "exit 2 on a non-numeric cell")
rc, _, _ = run("test", cyc_csv, "--alpha", "1.5")
check(rc == 2, "exit 2 on alpha outside (0, 1)")
rc, _, err = run("index", cyc_csv, "--max-iter", "1")
check(rc == 3 and err.strip(), "exit 3 when the solver fails")
rc, out, _ = run("--version")
check(rc == 0 and out.startswith("mcar 1.0.0"), "--version prints the tool version")

# simulate
t0 = time.time()
sim_json, sim_csv = path("sim.json"), path("sim.csv")
rc, _, _ = run("simulate", "--preset", "fig2-left", "--M", "1", "--B", "19", "-o", sim_json, "--csv", sim_csv)
elapsed = time.time() - t0
with open(sim_csv) as f:
    text = f.read()
boot_rows = [r for r in csv.DictReader(text.splitlines()) if r["curve"] == "bootstrap"]
check(rc == 0 and text.startswith("grid_value,rejection_rate,stderr") and len(boot_rows) == 5,
      "simulate: fig2-left gives a 5-point bootstrap curve CSV")
check(elapsed < 30, f"simulate: M = 1, B = 19 smoke run under 30 s ({elapsed:.2f} s)")
with open(sim_json) as f:
    check(valid(json.load(f), "simulate"), "simulate: report validates")

rc, out, _ = run("simulate", "--preset", "fig7-9", "--M", "1", "--B", "19")
rows = list(csv.DictReader(out.splitlines()))
tests = {r["test"] for r in rows}
mechs = {r["curve"].split("_")[0] for r in rows}
check(rc == 0 and {"bootstrap", "little_aug"} <= tests and {"mcar", "mar"} <= mechs,
      "simulate: fig7-9 gives bootstrap and Little curves across mechanisms")

bad_preset = path("bad_preset.json")
with open(bad_preset, "w") as f:
    json.dump({"name": "x", "curves": [{"generator": {"family": "gaussian_cycle"}, "grid": [1], "bogus": 1}]}, f)
rc, _, _ = run("simulate", "--preset", bad_preset)
check(rc == 2, "simulate: exit 2 on a preset with unknown keys")

# Every shipped preset matches the preset schema.
preset_dir = os.environ.get("MCAR_PRESET_DIR")
if preset_dir:
    for name in sorted(os.listdir(preset_dir)):
        if name.endswith(".json"):
            with open(os.path.join(preset_dir, name)) as f:
                check(valid(json.load(f), "preset"), f"preset {name} validates")

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)

"""End-to-end checks of the tiltdiff binary: cli_smoke.py TILTDIFF SOURCE_DIR."""
import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema
import numpy as np

BIN = sys.argv[1]
SRC = Path(sys.argv[2])
FAILURES = []


def run(*args, expect=0):
    proc = subprocess.run([BIN, *map(str, args)], capture_output=True, text=True)
    if proc.returncode != expect:
        FAILURES.append(f"{' '.join(map(str, args))}: exit {proc.returncode}, expected {expect}\n{proc.stderr}")
    return proc


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        FAILURES.append(what)


def write_json(path, doc):
    Path(path).write_text(json.dumps(doc))
    return path


def eval_sw(out, x, y, seed=0):
    run("--out-dir", out, "--seed", seed, "eval", "--x", x, "--y", y)
    return json.loads((Path(out) / "metrics.json").read_text())


def main():
    tmp = Path(tempfile.mkdtemp(prefix="tiltdiff_cli_"))

    # bounds on the fair coin, schema-valid, manifest lists the report
    out = tmp / "bounds"
    run("--config", SRC / "configs/bounds_coin.json", "--out-dir", out, "bounds")
    report = json.loads((out / "bounds_report.json").read_text())
    q = report["quantities"]
    check(abs(q["C_w"] - 1.5625) < 1e-12, "coin C_w = 1.5625")
    check(abs(q["W_2"] - 1.05409) < 1e-5, "coin W_2 = 1.05409")
    check(abs(q["V"] - 10 / 3) < 1e-12, "coin V = 10/3")
    schema = json.loads((SRC / "schemas/bounds_report.schema.json").read_text())
    jsonschema.validate(report, schema)
    check(True, "bounds report matches its schema")
    manifest = json.loads((out / "bounds.manifest.json").read_text())
    check(manifest["outputs"] == [str(out / "bounds_report.json")], "bounds manifest lists the report")

    # convergence: byte-identical across reruns and thread counts
    conv = write_json(tmp / "conv.json", {
        "experiment": "convergence", "seed": 2,
        "target": {"kind": "beta_mix", "d": 10, "seed": 7, "normalization": "row"},
        "tilt": {"family": "exponential", "theta": 2.0, "g": "identity", "g_max": "auto"},
        "N_grid": [100, 400], "seeds": 3, "metric": {"p": 2.0, "n_proj": 32},
        "bound": {"p": 2.0, "q": 4.0, "C": 1.0}, "n_ref": 5000})
    run("--config", conv, "--out-dir", tmp / "c1", "--threads", 1, "convergence")
    run("--config", conv, "--out-dir", tmp / "c2", "--threads", 3, "convergence")
    a = (tmp / "c1/convergence.csv").read_bytes()
    check(a == (tmp / "c2/convergence.csv").read_bytes(), "convergence CSV identical across thread counts")
    check(len(a.decode().strip().splitlines()) == 7, "convergence CSV has header + 6 rows")

    # error contract
    bad = write_json(tmp / "regime.json", {
        "experiment": "convergence", "target": {"kind": "beta_mix", "d": 3, "seed": 1},
        "bound": {"p": 2.0, "q": 4.0}})
    run("--config", bad, "--out-dir", tmp / "bad", "convergence", expect=2)
    run("--config", write_json(tmp / "unknown.json", {"experimnt": "x"}), "bounds", expect=2)
    blocker = tmp / "blocker"
    blocker.write_text("a file, not a directory")
    run("--config", SRC / "configs/bounds_coin.json", "--out-dir", blocker / "sub", "bounds", expect=4)
    run("--out-dir", tmp / "s", "sample", "--checkpoint", write_json(tmp / "ck.json", {"format": "?"}), expect=2)
    (tmp / "garbage.json").write_text("{ nope")
    run("--out-dir", tmp / "s", "sample", "--checkpoint", tmp / "garbage.json", expect=2)

    # score-gap battery (reduced size)
    sg = write_json(tmp / "sg.json", {"experiment": "scoregap", "seed": 3,
                                      "battery": {"instances": 20, "n_t": 400, "n_inner": 16}})
    run("--config", sg, "--out-dir", tmp / "sg", "scoregap")
    rows = (tmp / "sg/scoregap.csv").read_text().strip().splitlines()
    check(len(rows) == 1 + 80 and all(r.endswith(",true") for r in rows[1:]), "scoregap rows all hold")

    # train -> sample -> eval on the 1-D Gaussian fixture
    tr = tmp / "train"
    run("--config", SRC / "configs/train_gaussian.json", "--out-dir", tr, "train")
    trace = (tr / "loss_trace.csv").read_text().strip().splitlines()
    check(trace[0] == "step,loss" and len(trace) > 2, "loss trace written")
    ckpt = tr / "checkpoint.json"
    run("--out-dir", tr, "--seed", 1, "sample", "--checkpoint", ckpt, "--n", 10000)
    ref = np.random.default_rng(12345).standard_normal((10000, 1))
    np.savetxt(tr / "ref.csv", ref, delimiter=",", fmt="%.17g")
    m = eval_sw(tr, tr / "samples.csv", tr / "ref.csv")
    check(m["sw_p"] <= 0.1, f"train/sample/eval sw_2 = {m['sw_p']:.4f} <= 0.1")
    same = eval_sw(tr, tr / "ref.csv", tr / "ref.csv")
    check(same["sw_p"] == 0.0 and same["tv"] == 0.0, "eval(X, X) is zero")

    # more reverse steps is not worse (median over 5 seeds)
    err = {2: [], 500: []}
    for steps in err:
        for seed in range(5):
            path = tr / f"s{steps}_{seed}.csv"
            run("--out-dir", tr, "--seed", 100 + seed, "sample", "--checkpoint", ckpt, "--n", 4000,
                "--steps", steps, "--out", path)
            err[steps].append(eval_sw(tr, path, tr / "ref.csv", seed)["sw_p"])
    med2, med500 = np.median(err[2]), np.median(err[500])
    check(med500 <= med2, f"median sw_2 with 500 steps ({med500:.4f}) <= with 2 steps ({med2:.4f})")

    for name in ("train", "sample", "eval"):
        check((tr / f"{name}.manifest.json").exists(), f"{name} manifest written")

    if FAILURES:
        print("\n".join(FAILURES), file=sys.stderr)
        return 1
    shutil.rmtree(tmp)
    return 0


if __name__ == "__main__":
    sys.exit(main())

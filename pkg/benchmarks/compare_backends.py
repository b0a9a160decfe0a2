#!/usr/bin/env python3
"""Compare the GMP-backed Cython kernels against the pure-Python fallback.

Two parts:
  kernels     per-call timings of powmod, Miller-Rabin and MurmurHash3,
              both kernel sets loaded side by side in this process
  end-to-end  a fixed workload (accumulate, issue proofs, check them, build
              and query a Bloom filter) run once per backend in a fresh
              interpreter with ACCRL_BACKEND set, so every code path uses
              the selected kernels

The end-to-end runs also hash their outputs; the two backends must agree.

    python benchmarks/compare_backends.py --bits 2048 --iters 200
"""
import argparse
import csv
import json
import os
import subprocess
import sys

from accrl import _backend
from accrl.bench import bench_kernels

WORKLOAD = r"""
import hashlib, json, sys, time
from accrl import _backend
from accrl.accumulator import compute_acc, compute_non_revoked_proof, revocation_check
from accrl.baselines import bloom_build, bloom_params, bloom_query
from accrl.bench import _device_reps, _reps, cached_setup

bits, revoked_n, devices_n, entries = (int(a) for a in sys.argv[1:5])
params, secrets = cached_setup(bits, 0)
revoked, devices = _reps(revoked_n, 0), _device_reps(devices_n, 0)
h = hashlib.sha256()
phases = {}

t = time.perf_counter()
acc = compute_acc(revoked, params, None, secrets.r_k)
phases["accumulate_no_trapdoor"] = time.perf_counter() - t
h.update(acc.a.to_bytes(bits // 8, "big"))

t = time.perf_counter()
proofs = [compute_non_revoked_proof(x, revoked, params, secrets) for x in devices]
phases["issue_proofs"] = time.perf_counter() - t
for p in proofs:
    h.update(p.to_bytes(bits))

t = time.perf_counter()
ok = all(revocation_check(p, acc, params) for p in proofs)
phases["check_proofs"] = time.perf_counter() - t

keys = [i.to_bytes(8, "big") * 4 for i in range(entries)]
m, k = bloom_params(entries, 0.01)
t = time.perf_counter()
store = bloom_build(keys, m, k)
hits = sum(bloom_query(store, i.to_bytes(8, "big") * 4) for i in range(entries, 2 * entries))
phases["bloom_build_query"] = time.perf_counter() - t
h.update(hits.to_bytes(8, "big"))

print(json.dumps({"backend": _backend.BACKEND, "ok": ok, "digest": h.hexdigest(), "phases": phases}))
"""


def run_workload(backend, bits, revoked, devices, entries):
    env = dict(os.environ, ACCRL_BACKEND=backend)
    out = subprocess.run(
        [sys.executable, "-c", WORKLOAD, str(bits), str(revoked), str(devices), str(entries)],
        env=env, check=True, capture_output=True, text=True,
    ).stdout
    return json.loads(out.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bits", type=int, default=2048)
    ap.add_argument("--iters", type=int, default=200)
    ap.add_argument("--revoked", type=int, default=200, help="revoked set size for end-to-end")
    ap.add_argument("--devices", type=int, default=20, help="proofs issued and checked")
    ap.add_argument("--entries", type=int, default=20000, help="Bloom filter entries")
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args(argv)

    backends = _backend.available()
    if "native" not in backends:
        print("native kernels not built; only the pure-Python backend is available", file=sys.stderr)

    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["section", "name", "backend", "value", "unit"])
    rows = bench_kernels(args.iters, args.bits, backends)
    timing = {}
    for kernel, backend, _, us in rows:
        timing[kernel, backend] = float(us)
        w.writerow(["kernel", kernel, backend, us, "us/call"])
    if len(backends) == 2:
        for kernel in sorted({k for k, _ in timing}):
            ratio = timing[kernel, "python"] / timing[kernel, "native"]
            w.writerow(["kernel", kernel, "speedup", f"{ratio:.1f}", "x"])

    if args.skip_e2e:
        return 0
    results = {b: run_workload(b, args.bits, args.revoked, args.devices, args.entries) for b in backends}
    for b, res in results.items():
        for phase, sec in res["phases"].items():
            w.writerow(["e2e", phase, b, f"{sec:.4f}", "s"])
    if len(backends) == 2:
        nat, py = results["native"], results["python"]
        for phase in nat["phases"]:
            ratio = py["phases"][phase] / max(nat["phases"][phase], 1e-9)
            w.writerow(["e2e", phase, "speedup", f"{ratio:.1f}", "x"])
        same = nat["digest"] == py["digest"]
        w.writerow(["e2e", "outputs_identical", "both", str(same), ""])
        if not same:
            return 1
    return 0 if all(r["ok"] for r in results.values()) else 1


if __name__ == "__main__":
    sys.exit(main())

"""``accrl`` command line.

Exit codes: 0 success, 1 verification or semantic failure, 2 usage,
3 I/O or malformed input. Every command appends one JSON line to the run
manifest (``--manifest``, default ``accrl_runs.jsonl``) recording its
arguments, seed, input/output digests and per-phase wall time.
"""
import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from dataclasses import replace

from . import __version__
from .accumulator import TEST_BITS, compute_non_revoked_proof
from .baselines import DEFAULT_BLOOM_HASHES, rows_to_csv, storage_csv, storage_report
from .bench import (
    CHECK_HEADER,
    COMPUTE_HEADER,
    KERNEL_HEADER,
    bench_check,
    bench_compute,
    bench_kernels,
)
from .crl import CrlKind, decode_crl, encode_crl, generate_synthetic_crl
from .errors import AccrlError, FormatError, NotASquare
from .manager import (
    Device,
    decode_payload,
    encode_payload,
    persist,
    restore,
    setup_phase,
    update_phase,
)
from .meshsim import SimConfig, build_grid, results_csv, simulate_update, sweep
from .protocol import PeerCertificate, make_request, verify_peer
from .signing import key_from_seed, public_bytes

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
TAMPER_FIELDS = ("none", "sig", "serial", "length", "epoch", "nw1", "nw2", "x", "request", "replay")
DEFAULT_MANIFEST = "accrl_runs.jsonl"


class UsageError(Exception):
    pass


class Run:
    """Collects one manifest record while a command executes."""

    def __init__(self, args):
        self.args = args
        self.inputs = {}
        self.outputs = {}
        self.phases = {}
        self._t = time.perf_counter()

    def phase(self, name):
        now = time.perf_counter()
        self.phases[name] = round(now - self._t, 6)
        self._t = now

    def read(self, path):
        with open(path, "rb") as fh:
            data = fh.read()
        self.inputs[path] = hashlib.sha256(data).hexdigest()
        return data

    def write(self, path, data):
        with open(path, "wb") as fh:
            fh.write(data)
        self.outputs[path] = hashlib.sha256(data).hexdigest()

    def emit(self, text):
        sys.stdout.write(text)
        self.outputs["<stdout>"] = hashlib.sha256(text.encode("utf-8")).hexdigest()

    def record(self, status):
        args = {k: v for k, v in vars(self.args).items() if k != "func"}
        return {
            "command": " ".join(filter(None, [self.args.command, getattr(self.args, "bench_cmd", None)])),
            "arguments": args,
            "seed": getattr(self.args, "seed", None),
            "inputs": self.inputs,
            "outputs": self.outputs,
            "phases": self.phases,
            "exit": status,
            "version": __version__,
        }


def _seed(args):
    env = os.environ.get("ACCRL_SEED")
    if env is not None and env.strip():
        try:
            args.seed = int(env, 0)
        except ValueError:
            raise UsageError(f"ACCRL_SEED must be an integer, got {env!r}") from None
    return args.seed


def _int_list(text):
    try:
        out = [int(float(v)) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not out or min(out) < 0:
        raise argparse.ArgumentTypeError("need at least one non-negative value")
    return out


def _hexbytes(text):
    try:
        return bytes.fromhex(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not hex: {text!r}") from None


def read_devices(data):
    """Parse ``serial_hex,issuer_key_hash_hex`` rows; a header row is optional."""
    out = []
    for i, row in enumerate(csv.reader(io.StringIO(data.decode("utf-8")))):
        if not row or not "".join(row).strip():
            continue
        if i == 0 and row[0].strip().lower().startswith("serial"):
            continue
        if len(row) != 2:
            raise FormatError(f"device row {i + 1}: expected 2 columns")
        try:
            serial, issuer = bytes.fromhex(row[0].strip()), bytes.fromhex(row[1].strip())
        except ValueError:
            raise FormatError(f"device row {i + 1}: bad hex") from None
        if len(serial) != 20 or len(issuer) != 32:
            raise FormatError(f"device row {i + 1}: serial is 20 bytes, issuer hash 32")
        out.append(Device(serial, issuer))
    return out


def devices_csv(devices):
    return rows_to_csv(("serial_hex", "issuer_key_hash_hex"),
                       [(d.serial.hex(), d.issuer_key_hash.hex()) for d in devices])


def synthetic_devices(count, seed):
    xof = hashlib.shake_256(b"accrl-devices|%d" % seed).digest(count * 19 + 32)
    issuer = hashlib.sha256(b"accrl-device-ca|" + xof[-32:]).digest()
    return [Device(b"\x01" + xof[i * 19:(i + 1) * 19], issuer) for i in range(count)]


def _ca_key(args):
    return key_from_seed(args.ca_seed, b"accrl-ca")


def _device_key(serial):
    return key_from_seed(bytes(serial), b"accrl-device")


# -- commands -----------------------------------------------------------------

def cmd_gen_crl(args, run):
    seed = _seed(args)
    kind = CrlKind.FULL if args.kind == "full" else CrlKind.DELTA
    exclude = ()
    if args.base:
        exclude = decode_crl(run.read(args.base)).identities()
    signer = _ca_key(args)
    crl = generate_synthetic_crl(args.count, kind, seed, signer, args.base_epoch, exclude)
    run.phase("generate")
    run.write(args.out, encode_crl(crl))
    run.write(args.out + ".pub", public_bytes(signer))
    run.phase("write")
    print(f"wrote {args.out}: {args.kind} CRL, {len(crl)} entries", file=sys.stderr)
    return EXIT_OK


def cmd_gen_devices(args, run):
    seed = _seed(args)
    run.write(args.out, devices_csv(synthetic_devices(args.count, seed)).encode("utf-8"))
    return EXIT_OK


def _ca_pub(args, run, crl_path):
    path = args.ca_pub or crl_path + ".pub"
    if not os.path.exists(path):
        if args.ca_pub:
            raise FileNotFoundError(path)
        return None
    return run.read(path)


def cmd_setup(args, run):
    seed = _seed(args)
    bits = args.bits or (TEST_BITS if args.mode == "test" else 2048)
    crl = decode_crl(run.read(args.crl))
    ca_pub = _ca_pub(args, run, args.crl)
    devices = read_devices(run.read(args.devices))
    run.phase("read")
    manager_key = key_from_seed(seed, b"accrl-manager") if seed is not None else None
    state, payload = setup_phase(crl, devices, bits, args.mode, seed, ca_pub,
                                 manager_key=manager_key, workers=args.threads)
    run.phase("setup")
    run.write(args.out_state, persist(state))
    run.write(args.out_payload, encode_payload(payload))
    run.phase("write")
    print(f"epoch {state.acc.epoch}: {len(state.accumulated)} revoked, "
          f"{len(payload.proofs)} proofs", file=sys.stderr)
    return EXIT_OK


def cmd_update(args, run):
    state = restore(run.read(args.state))
    delta = decode_crl(run.read(args.delta))
    ca_pub = _ca_pub(args, run, args.delta)
    run.phase("read")
    state, payload = update_phase(state, delta, ca_pub, workers=args.threads)
    run.phase("update")
    run.write(args.out_state or args.state, persist(state))
    run.write(args.out_payload, encode_payload(payload))
    run.phase("write")
    print(f"epoch {state.acc.epoch}: {len(state.accumulated)} revoked, "
          f"{len(payload.proofs)} proofs", file=sys.stderr)
    return EXIT_OK


def cmd_prove(args, run):
    state = restore(run.read(args.state))
    rep = state.device_registry.get(args.serial)
    if rep is None:
        print(f"serial {args.serial.hex()} is not a registered device", file=sys.stderr)
        return EXIT_FAIL
    proof = compute_non_revoked_proof(rep, state.accumulated, state.params, state.secrets,
                                      state.r_k, state.signer, state.acc.epoch)
    run.phase("prove")
    run.emit(proof.to_bytes(state.params.bit_len_k).hex() + "\n")
    return EXIT_OK


def tamper(proof, field, params, manager_key=None):
    """Corrupt one proof field; re-sign with ``manager_key`` when given."""
    k = params.bit_len_k
    if field == "sig":
        sig = bytearray(proof.signature)
        sig[0] ^= 0x01
        return replace(proof, signature=bytes(sig))
    if field == "serial":
        s = bytearray(proof.serial)
        s[-1] ^= 0x01
        proof = replace(proof, serial=bytes(s))
    elif field == "length":
        proof = replace(proof, nw1=proof.x)
    elif field == "epoch":
        proof = replace(proof, epoch=proof.epoch + 1)
    elif field == "nw1":
        proof = replace(proof, nw1=(proof.nw1 + 1) % proof.x)
    elif field == "nw2":
        proof = replace(proof, nw2=proof.nw2 % (params.modulus_n - 1) + 1)
    elif field == "x":
        proof = replace(proof, x=proof.x + 2)
    else:
        return proof
    if manager_key is not None:
        proof = proof.signed(manager_key, k)
    return proof


def cmd_check(args, run):
    payload = decode_payload(run.read(args.payload))
    if not 0 <= args.proof_index < len(payload.proofs):
        raise UsageError(f"proof index {args.proof_index} out of range (0..{len(payload.proofs) - 1})")
    manager_key = None
    manager_pub = payload.manager_public_key
    if args.state:
        state = restore(run.read(args.state))
        manager_key = state.signer
        manager_pub = state.manager_public_key
    if not payload.signature_valid(manager_pub):
        run.emit("payload signature invalid\n")
        return EXIT_FAIL
    honest = payload.proofs[args.proof_index]
    proof = tamper(honest, args.tamper, payload.params, manager_key)
    owner = _device_key(honest.serial)
    cert = PeerCertificate(honest.serial, bytes(32), public_bytes(owner))
    body = b"accrl-check|" + honest.serial
    if args.tamper == "replay":
        # a thief presents the stolen proof but can only sign with its own key
        req = make_request(cert, proof, body, _device_key(b"thief" + honest.serial))
    else:
        req = make_request(cert, proof, body, owner)
        if args.tamper == "request":
            req = replace(req, request_body=body + b"!")
    outcome = verify_peer(req, payload.acc, payload.params, manager_pub)
    run.phase("verify")
    run.emit(f"{outcome}\n")
    return EXIT_OK if outcome.accepted else EXIT_FAIL


def cmd_bench(args, run):
    if args.bench_cmd == "compute":
        seed = _seed(args)
        rows = []
        for size in args.sizes:
            rows += bench_compute(args.bits, [size], not args.no_trapdoor, args.threads,
                                  args.devices, seed)
        text = rows_to_csv(COMPUTE_HEADER, rows)
    elif args.bench_cmd == "check":
        seed = _seed(args)
        text = rows_to_csv(CHECK_HEADER, bench_check(args.bits, args.iters, args.entries, seed))
    else:
        text = rows_to_csv(KERNEL_HEADER, bench_kernels(args.iters, args.bits))
    run.phase("bench")
    _output(args, run, text)
    return EXIT_OK


def cmd_storage(args, run):
    rows = storage_report(args.entries, args.bits, args.fpr, args.hash_count or None)
    _output(args, run, storage_csv(rows))
    return EXIT_OK


def cmd_simulate(args, run):
    seed = _seed(args)
    try:
        topo = build_grid(args.nodes)
    except NotASquare as exc:
        raise UsageError(str(exc)) from None
    config = SimConfig(args.link_rate, args.mtu, args.latency, args.loss, args.max_retries, seed)
    if args.update_delta:
        results = [simulate_update(m, args.crl_sizes[-1], args.update_delta, topo, config,
                                   args.bits, seed=seed, flood=args.flood)
                   for m in args.methods]
    else:
        results = sweep(args.methods, args.crl_sizes, topo, config, args.bits, seed=seed,
                        flood=args.flood)
    run.phase("simulate")
    _output(args, run, results_csv(results))
    return EXIT_OK


def _output(args, run, text):
    if getattr(args, "out", None):
        run.write(args.out, text.encode("utf-8"))
    else:
        run.emit(text)


# -- parser -------------------------------------------------------------------

def _methods(text):
    out = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in out if m not in ("acc", "crl", "bloom", "accumulator", "full_crl")]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; use acc,crl,bloom")
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="accrl", description="Accumulator-based certificate revocation toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--manifest", default=DEFAULT_MANIFEST, help="JSONL run log (empty string disables)")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen-crl", help="write a synthetic signed CRL")
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--kind", choices=("full", "delta"), default="full")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--ca-seed", type=int, default=0, help="seed of the issuing CA key")
    g.add_argument("--base", help="full CRL a delta must not overlap")
    g.add_argument("--base-epoch", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen_crl)

    d = sub.add_parser("gen-devices", help="write a synthetic device list CSV")
    d.add_argument("--count", type=int, required=True)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_gen_devices)

    s = sub.add_parser("setup", help="accumulate a full CRL and issue proofs")
    s.add_argument("--bits", type=int)
    s.add_argument("--mode", choices=("secure", "test"), default="secure")
    s.add_argument("--crl", required=True)
    s.add_argument("--devices", required=True)
    s.add_argument("--ca-pub", help="CA public key (default: <crl>.pub)")
    s.add_argument("--seed", type=int, help="make keys reproducible (default: OS randomness)")
    s.add_argument("--threads", type=int, default=1)
    s.add_argument("--out-state", required=True)
    s.add_argument("--out-payload", required=True)
    s.set_defaults(func=cmd_setup)

    u = sub.add_parser("update", help="apply a delta CRL and reissue proofs")
    u.add_argument("--state", required=True)
    u.add_argument("--delta", required=True)
    u.add_argument("--ca-pub")
    u.add_argument("--threads", type=int, default=1)
    u.add_argument("--out-state", help="default: overwrite --state")
    u.add_argument("--out-payload", required=True)
    u.set_defaults(func=cmd_update)

    pr = sub.add_parser("prove", help="print one device's proof as hex")
    pr.add_argument("--state", required=True)
    pr.add_argument("--serial", type=_hexbytes, required=True)
    pr.set_defaults(func=cmd_prove)

    c = sub.add_parser("check", help="verify one proof from a payload as a peer meter would")
    c.add_argument("--payload", required=True)
    c.add_argument("--proof-index", type=int, default=0)
    c.add_argument("--tamper", choices=TAMPER_FIELDS, default="none")
    c.add_argument("--state", help="manager state; tampered proofs are re-signed with its key")
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="benchmarks")
    bsub = b.add_subparsers(dest="bench_cmd", required=True)
    bc = bsub.add_parser("compute")
    bc.add_argument("--bits", type=int, default=2048)
    bc.add_argument("--sizes", type=_int_list, default=[1000])
    bc.add_argument("--no-trapdoor", action="store_true")
    bc.add_argument("--threads", type=int, default=1)
    bc.add_argument("--devices", type=int, default=10)
    bc.add_argument("--seed", type=int, default=0)
    bc.add_argument("--out")
    bk = bsub.add_parser("check")
    bk.add_argument("--bits", type=int, default=2048)
    bk.add_argument("--iters", type=int, default=1000)
    bk.add_argument("--entries", type=int, default=30000)
    bk.add_argument("--seed", type=int, default=0)
    bk.add_argument("--out")
    bn = bsub.add_parser("kernels")
    bn.add_argument("--bits", type=int, default=2048)
    bn.add_argument("--iters", type=int, default=200)
    bn.add_argument("--out")
    b.set_defaults(func=cmd_bench)

    st = sub.add_parser("storage", help="per-device storage by method")
    st.add_argument("--entries", type=int, required=True)
    st.add_argument("--bits", type=int, default=2048)
    st.add_argument("--fpr", type=float, default=0.01)
    st.add_argument("--hash-count", type=int, default=DEFAULT_BLOOM_HASHES,
                    help="Bloom hash functions (0: choose the optimum)")
    st.add_argument("--out")
    st.set_defaults(func=cmd_storage)

    sm = sub.add_parser("simulate", help="mesh distribution completion times")
    sm.add_argument("--nodes", type=int, default=81)
    sm.add_argument("--methods", type=_methods, default=["acc", "crl", "bloom"])
    sm.add_argument("--crl-sizes", type=_int_list, default=[1000, 10000, 30000])
    sm.add_argument("--update-delta", type=int, default=0,
                    help="simulate a delta of this size over the last --crl-sizes value")
    sm.add_argument("--bits", type=int, default=2048)
    sm.add_argument("--seed", type=int, default=0)
    sm.add_argument("--link-rate", type=float, default=SimConfig.link_rate)
    sm.add_argument("--mtu", type=int, default=SimConfig.frame_payload)
    sm.add_argument("--latency", type=float, default=SimConfig.per_hop_latency)
    sm.add_argument("--loss", type=float, default=SimConfig.loss_prob)
    sm.add_argument("--max-retries", type=int, default=SimConfig.max_retries)
    sm.add_argument("--flood", action="store_true", help="flood shared blobs instead of unicast")
    sm.add_argument("--out")
    sm.set_defaults(func=cmd_simulate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    run = Run(args)
    try:
        status = args.func(args, run)
    except UsageError as exc:
        print(f"accrl: {exc}", file=sys.stderr)
        status = EXIT_USAGE
    except (OSError, FormatError) as exc:
        print(f"accrl: {type(exc).__name__}: {exc}", file=sys.stderr)
        status = EXIT_IO
    except (AccrlError, ValueError) as exc:
        print(f"accrl: {type(exc).__name__}: {exc}", file=sys.stderr)
        status = EXIT_FAIL
    if args.manifest:
        try:
            with open(args.manifest, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(run.record(status), sort_keys=True, default=str) + "\n")
        except OSError as exc:
            print(f"accrl: could not append manifest: {exc}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())

import json

import pytest

from accrl.cli import main


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("ACCRL_SEED", raising=False)
    assert main(["gen-crl", "--count", "40", "--seed", "1", "--out", "full.acrl"]) == 0
    assert main(["gen-crl", "--count", "5", "--kind", "delta", "--base", "full.acrl", "--seed", "2",
                 "--out", "delta.acrl"]) == 0
    assert main(["gen-devices", "--count", "4", "--seed", "1", "--out", "dev.csv"]) == 0
    return tmp_path


def setup_test(mode="test", extra=()):
    return main(["setup", "--mode", mode, "--crl", "full.acrl", "--devices", "dev.csv", "--seed", "5",
                 "--out-state", "s.amgr", "--out-payload", "p.apay", *extra])


def manifest():
    return [json.loads(line) for line in open("accrl_runs.jsonl")]


def test_setup_then_check(work, capsys):
    assert setup_test() == 0
    capsys.readouterr()
    assert main(["check", "--payload", "p.apay", "--proof-index", "2"]) == 0
    assert capsys.readouterr().out.strip() == "accepted"


@pytest.mark.parametrize("field,step", [
    ("nw2", "RevocationCheck"), ("nw1", "RevocationCheck"), ("x", "RevocationCheck"),
    ("sig", "ProofSig"), ("serial", "SerialMismatch"), ("length", "LengthCheck"),
    ("epoch", "EpochMismatch"), ("request", "RequestSig"), ("replay", "RequestSig"),
])
def test_tamper_with_manager_key(work, capsys, field, step):
    assert setup_test() == 0
    capsys.readouterr()
    assert main(["check", "--payload", "p.apay", "--tamper", field, "--state", "s.amgr"]) == 1
    assert capsys.readouterr().out.strip() == f"failed_step={step}"


def test_tamper_without_manager_key_stops_at_signature(work, capsys):
    assert setup_test() == 0
    capsys.readouterr()
    assert main(["check", "--payload", "p.apay", "--tamper", "nw2"]) == 1
    assert capsys.readouterr().out.strip() == "failed_step=ProofSig"


def test_update_and_prove(work, capsys):
    assert setup_test() == 0
    assert main(["update", "--state", "s.amgr", "--delta", "delta.acrl", "--out-payload", "p1.apay"]) == 0
    assert main(["check", "--payload", "p1.apay"]) == 0
    # same delta again: the state has moved to epoch 1
    assert main(["update", "--state", "s.amgr", "--delta", "delta.acrl", "--out-payload", "p2.apay"]) == 1
    serial = open("dev.csv").read().splitlines()[1].split(",")[0]
    capsys.readouterr()
    assert main(["prove", "--state", "s.amgr", "--serial", serial]) == 0
    out = capsys.readouterr().out.strip()
    assert out.startswith(serial) and len(out) == 2 * (20 + 64 + 64 + 64 + 8 + 64)
    assert main(["prove", "--state", "s.amgr", "--serial", "00" * 20]) == 1


def test_secure_mode_setup(work, capsys):
    assert setup_test("secure", ["--bits", "1024"]) == 0
    capsys.readouterr()
    assert main(["check", "--payload", "p.apay", "--tamper", "nw2", "--state", "s.amgr"]) == 1
    assert capsys.readouterr().out.strip() == "failed_step=RevocationCheck"


def test_exit_codes(work, capsys):
    assert main(["check", "--payload", "missing.apay"]) == 3
    with open("junk.apay", "wb") as fh:
        fh.write(b"APAY\x01garbage")
    assert main(["check", "--payload", "junk.apay"]) == 3
    with open("bad.amgr", "wb") as fh:
        fh.write(b"\x00" * 64)
    assert main(["prove", "--state", "bad.amgr", "--serial", "00"]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["setup", "--bits"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--methods", "acc,foo"])
    assert exc.value.code == 2
    assert setup_test() == 0
    assert main(["check", "--payload", "p.apay", "--proof-index", "99"]) == 2


def test_manifest_and_reproducibility(work, monkeypatch):
    records = manifest()
    assert [r["command"] for r in records] == ["gen-crl", "gen-crl", "gen-devices"]
    first = records[0]
    assert first["seed"] == 1 and first["exit"] == 0
    assert set(first["outputs"]) == {"full.acrl", "full.acrl.pub"}
    assert "generate" in first["phases"]
    assert main(["gen-crl", "--count", "40", "--seed", "1", "--out", "again.acrl"]) == 0
    again = manifest()[-1]
    assert again["outputs"]["again.acrl"] == first["outputs"]["full.acrl"]
    monkeypatch.setenv("ACCRL_SEED", "99")
    assert main(["gen-crl", "--count", "40", "--seed", "1", "--out", "env.acrl"]) == 0
    env = manifest()[-1]
    assert env["seed"] == 99
    assert env["outputs"]["env.acrl"] != first["outputs"]["full.acrl"]
    assert main(["--manifest", "", "storage", "--entries", "10"]) == 0
    assert manifest()[-1] == env


def test_setup_reproducible(work):
    assert setup_test() == 0
    a = manifest()[-1]["outputs"]
    assert setup_test() == 0
    assert manifest()[-1]["outputs"] == a


def test_storage_csv(work, capsys):
    assert main(["storage", "--entries", "30000", "--bits", "2048", "--fpr", "0.01"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines == ["method,entries,bytes", "crl,30000,1800098", "bloom,30000,46366",
                     "accumulator,30000,924"]


def test_simulate_csv(work, capsys):
    assert main(["simulate", "--nodes", "9", "--methods", "acc,crl,bloom", "--crl-sizes", "100,200",
                 "--seed", "3"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "method,nodes,crl_entries,payload_bytes,completion_s,frames,retx"
    assert len(lines) == 7
    assert main(["simulate", "--nodes", "10"]) == 2
    assert main(["simulate", "--nodes", "9", "--crl-sizes", "300", "--update-delta", "20",
                 "--out", "u.csv"]) == 0
    assert open("u.csv").read().count("\n") == 4


def test_bench_commands(work, capsys):
    assert main(["bench", "kernels", "--iters", "5"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "kernel,backend,iterations,mean_us" and len(out) >= 4
    assert main(["bench", "compute", "--bits", "1024", "--sizes", "20", "--devices", "2",
                 "--threads", "2"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert rows[0] == "phase,bits,size,trapdoor,threads,seconds"
    assert [r.split(",")[0] for r in rows[1:]] == ["prime_rep", "accumulate", "proofs_x2"]
    assert main(["bench", "check", "--bits", "1024", "--iters", "100", "--entries", "500"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert [r.split(",")[0] for r in rows[1:]] == ["bloom", "crl", "accumulator"]

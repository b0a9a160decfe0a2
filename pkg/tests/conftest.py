import json
import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from accrl.accumulator import AccumulatorParams, ManagerSecrets, setup  # noqa: E402
from accrl.crl import synthetic_issuers  # noqa: E402
from accrl.numtheory import prime_representative  # noqa: E402
from accrl.signing import key_from_seed  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


def load_params(bits):
    d = json.loads((FIXTURES / f"params_{bits}.json").read_text())
    p, q = int(d["p"], 16), int(d["q"], 16)
    params = AccumulatorParams(int(d["N"], 16), int(d["g"], 16), d["bits"])
    return params, ManagerSecrets(p, q, (p - 1) * (q - 1), int(d["r_k"], 16)), d["seed"]


@pytest.fixture(scope="session")
def test_keys():
    return setup(32, "test")


@pytest.fixture(scope="session")
def keys_1024():
    params, secrets, _ = load_params(1024)
    return params, secrets


@pytest.fixture(scope="session")
def keys_2048():
    params, secrets, _ = load_params(2048)
    return params, secrets


@pytest.fixture(scope="session")
def manager_key():
    return key_from_seed(1, b"test-manager")


@pytest.fixture(scope="session")
def ca_key():
    return key_from_seed(1, b"test-ca")


def make_reps(count, seed=0):
    issuer = synthetic_issuers(seed, 1)[0]
    return [prime_representative(bytes([1]) + seed.to_bytes(3, "big") + i.to_bytes(16, "big"), issuer)
            for i in range(count)]


@pytest.fixture(scope="session")
def reps40():
    return make_reps(40)


# -- acceptance report --------------------------------------------------------

ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    ACCEPTANCE[number] = (ok, detail)
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} | {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if ok else 'FAIL'} | {detail}")

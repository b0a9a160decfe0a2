import pytest

from accrl.errors import NotASquare
from accrl.meshsim import (
    CSV_HEADER,
    SimConfig,
    accumulator_payload_bytes,
    build_grid,
    line,
    results_csv,
    simulate_distribution,
    simulate_update,
    sweep,
)

IDEAL = SimConfig(link_rate=1e6, frame_payload=1000, per_hop_latency=0.0, loss_prob=0.0)


def test_grid_depths():
    g81, g196 = build_grid(81), build_grid(196)
    assert 5 <= g81.mean_depth <= 7
    assert 8 <= g196.mean_depth <= 10
    assert g81.depth[g81.gateway] == 0
    assert all(d >= 1 for v, d in enumerate(g81.depth) if v != g81.gateway)
    assert max(g81.depth) == 8 and max(g196.depth) == 13


def test_grid_single_node():
    g = build_grid(1)
    assert g.node_count == 1 and g.depth == (0,) and g.gateway == 0 and g.mean_depth == 0
    r = simulate_distribution(g, IDEAL, 100)
    assert r.completion_time == 0 and r.bytes_delivered == 0


@pytest.mark.parametrize("n", [0, 2, 80, -4])
def test_grid_rejects_non_squares(n):
    with pytest.raises(NotASquare):
        build_grid(n)


def test_routing_tree_is_shortest_path():
    g = build_grid(49)
    for v in range(49):
        r, c = divmod(v, 7)
        assert g.depth[v] == max(r, c)
        if v:
            assert g.depth[g.parent[v]] == g.depth[v] - 1
            assert len(g.path(v)) == g.depth[v] + 1


def test_single_hop_base_case():
    r = simulate_distribution(line(1), IDEAL, 1000)
    assert r.completion_time == pytest.approx(8e-3)
    assert r.total_frames == 1 and r.retransmissions == 0


def test_linearity_at_zero_loss():
    a = simulate_distribution(line(1), IDEAL, 1000).completion_time
    b = simulate_distribution(line(1), IDEAL, 2000).completion_time
    assert b == pytest.approx(2 * a)


@pytest.mark.parametrize("hops,frames,delay", [(1, 1, 0.0), (5, 10, 0.001), (12, 37, 0.0005)])
def test_pipeline_oracle(hops, frames, delay):
    cfg = SimConfig(link_rate=2e6, frame_payload=500, per_hop_latency=delay, loss_prob=0.0)
    tau = 8 * 500 / 2e6
    expected = frames * tau + (hops - 1) * tau + hops * delay
    unicast = simulate_distribution(line(hops), cfg, frames * 500, dests=[hops])
    flooded = simulate_distribution(line(hops), cfg, frames * 500, shared=True, flood=True)
    assert unicast.completion_time == pytest.approx(expected, abs=tau)
    assert flooded.completion_time == pytest.approx(expected, abs=tau)


def test_determinism_and_conservation():
    g = build_grid(25)
    cfg = SimConfig(loss_prob=0.1, rng_seed=9)
    a = simulate_distribution(g, cfg, 5000)
    b = simulate_distribution(g, cfg, 5000)
    assert a == b
    assert a.retransmissions > 0
    assert not a.undeliverable
    assert a.bytes_delivered == 5000 * 24
    c = simulate_distribution(g, SimConfig(loss_prob=0.1, rng_seed=10), 5000)
    assert c.completion_time != a.completion_time


def test_undeliverable_reported():
    cfg = SimConfig(loss_prob=0.9, max_retries=0, rng_seed=3)
    r = simulate_distribution(build_grid(9), cfg, 3000)
    assert r.undeliverable
    assert r.bytes_delivered == 3000 * (8 - len(r.undeliverable))


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(loss_prob=1.0)
    with pytest.raises(ValueError):
        SimConfig(frame_payload=63)
    with pytest.raises(ValueError):
        simulate_distribution(line(1), IDEAL, 0)
    with pytest.raises(ValueError):
        simulate_distribution(line(1), IDEAL, 10, shared=False, flood=True)


def test_accumulator_payload_about_one_kb():
    assert 1000 < accumulator_payload_bytes(2048) < 1600


@pytest.fixture(scope="module")
def sweep81():
    return sweep(["acc", "crl", "bloom"], [1000, 10000, 30000], build_grid(81), SimConfig())


def test_sweep_shapes(sweep81):
    by = {(r.method, r.crl_entries): r for r in sweep81}
    acc = [by["accumulator", n].completion_time for n in (1000, 10000, 30000)]
    crl = [by["full_crl", n].completion_time for n in (1000, 10000, 30000)]
    assert max(acc) / min(acc) < 1.05
    assert crl[0] < crl[1] < crl[2]
    for n in (1000, 10000, 30000):
        assert by["accumulator", n].completion_time < by["bloom", n].completion_time
        assert by["bloom", n].completion_time < by["full_crl", n].completion_time
    assert acc[2] * 10 <= by["bloom", 30000].completion_time


def test_update_ordering():
    g = build_grid(81)
    res = {m: simulate_update(m, 30000, 1000, g, SimConfig()).completion_time
           for m in ("acc", "crl", "bloom")}
    assert res["acc"] < res["crl"] < res["bloom"]


def test_results_csv(sweep81):
    lines = results_csv(sweep81).splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 10

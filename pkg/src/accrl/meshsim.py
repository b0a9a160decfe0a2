"""Discrete-event store-and-forward model of payload distribution over a mesh.

The gateway holds every payload at t=0. Frames move hop by hop down a
gateway-rooted shortest-path tree. Each tree link carries one frame at a
time (transmission time ``8*size/link_rate``), then the frame arrives
``per_hop_latency`` later. Lost frames are retried immediately on the same
hop, up to ``max_retries`` times.

Every payload is zlib-compressed before transmission. By default every
meter gets its own unicast copy, shared blobs included; ``flood=True``
instead forwards one copy of a shared blob down each tree link.
"""
import functools
import hashlib
import heapq
import math
import random
import zlib
from collections import deque
from dataclasses import dataclass, field

from .accumulator import AccumulatorParams, AccumulatorValue, NonRevokedProof, SERIAL_LEN
from .baselines import DEFAULT_BLOOM_HASHES, bloom_params, bloom_build, rows_to_csv
from .crl import CrlKind, encode_crl, generate_synthetic_crl
from .errors import NotASquare
from .manager import DistributionPayload, encode_payload

METHODS = ("accumulator", "full_crl", "bloom")
ALIASES = {"acc": "accumulator", "crl": "full_crl", "bloom": "bloom",
           "accumulator": "accumulator", "full_crl": "full_crl"}
CSV_HEADER = ("method", "nodes", "crl_entries", "payload_bytes", "completion_s", "frames", "retx")


@dataclass(frozen=True)
class MeshTopology:
    node_count: int
    dims: tuple
    gateway: int
    parent: tuple  # parent[v] in the routing tree; None for the gateway
    depth: tuple
    edges: frozenset = field(repr=False)

    @property
    def children(self):
        kids = [[] for _ in range(self.node_count)]
        for v, p in enumerate(self.parent):
            if p is not None:
                kids[p].append(v)
        return kids

    def path(self, v):
        """Nodes from the gateway to ``v``, both included."""
        out = [v]
        while self.parent[out[-1]] is not None:
            out.append(self.parent[out[-1]])
        return out[::-1]

    @property
    def mean_depth(self):
        """Mean hop count over non-gateway nodes (0 for a lone gateway)."""
        d = [x for v, x in enumerate(self.depth) if v != self.gateway]
        return sum(d) / len(d) if d else 0.0


def _tree(n, edges, gateway, dims):
    adj = [[] for _ in range(n)]
    for a, b in sorted(edges):
        adj[a].append(b)
        adj[b].append(a)
    parent = [None] * n
    depth = [-1] * n
    depth[gateway] = 0
    queue = deque([gateway])
    while queue:
        u = queue.popleft()
        for v in sorted(adj[u]):
            if depth[v] < 0:
                depth[v] = depth[u] + 1
                parent[v] = u
                queue.append(v)
    if min(depth) < 0:
        raise ValueError("topology is not connected")
    return MeshTopology(n, dims, gateway, tuple(parent), tuple(depth), frozenset(edges))


def build_grid(n):
    """Square grid of ``n`` meters, 8-neighbour radio range, gateway at a corner."""
    side = math.isqrt(n) if n > 0 else 0
    if n < 1 or side * side != n:
        raise NotASquare(f"{n} is not a positive perfect square")
    edges = set()
    for r in range(side):
        for c in range(side):
            u = r * side + c
            for dr, dc in ((0, 1), (1, 0), (1, 1), (1, -1)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < side and 0 <= cc < side:
                    edges.add((u, rr * side + cc))
    return _tree(n, edges, 0, (side, side))


def line(hops):
    """Chain gateway -> 1 -> ... -> ``hops``; the analytic test topology."""
    if hops < 0:
        raise ValueError("hops must be non-negative")
    return _tree(hops + 1, {(i, i + 1) for i in range(hops)}, 0, (hops + 1, 1))


@dataclass(frozen=True)
class SimConfig:
    link_rate: float = 6_000_000.0
    frame_payload: int = 1024
    per_hop_latency: float = 0.002
    loss_prob: float = 0.02
    max_retries: int = 7
    rng_seed: int = 1

    def __post_init__(self):
        if not 0 <= self.loss_prob < 1:
            raise ValueError("loss_prob must be in [0, 1)")
        if self.frame_payload < 64:
            raise ValueError("frame_payload must be at least 64 bytes")
        if self.link_rate <= 0 or self.per_hop_latency < 0 or self.max_retries < 0:
            raise ValueError("link_rate > 0, per_hop_latency >= 0, max_retries >= 0")


@dataclass(frozen=True)
class SimResult:
    method: str
    completion_time: float
    total_frames: int
    retransmissions: int
    bytes_delivered: int
    nodes: int = 0
    crl_entries: int = 0
    payload_bytes: int = 0
    undeliverable: tuple = ()

    def csv_row(self):
        return (self.method, self.nodes, self.crl_entries, self.payload_bytes,
                f"{self.completion_time:.6f}", self.total_frames, self.retransmissions)


def _frames(payload_bytes, mtu):
    full, rest = divmod(payload_bytes, mtu)
    return [mtu] * full + ([rest] if rest else [])


def simulate_distribution(topo, config, payload_bytes_per_node, shared=False, method="accumulator",
                          flood=False, crl_entries=0, dests=None):
    """Deliver ``payload_bytes_per_node`` to every non-gateway node.

    ``dests`` restricts unicast delivery to the listed nodes.

    ``shared`` marks one identical blob for everyone; it only changes the
    traffic pattern when ``flood`` is set. Completion is the arrival time of
    the last frame at the last node that receives its whole payload. Nodes
    whose frames exhaust their retries are listed in ``undeliverable``.
    """
    if payload_bytes_per_node <= 0:
        raise ValueError("payload_bytes_per_node must be positive")
    if flood and not shared:
        raise ValueError("only a shared payload can be flooded")
    rng = random.Random(config.rng_seed)
    rate = config.link_rate
    delay = config.per_hop_latency
    frames = _frames(payload_bytes_per_node, config.frame_payload)
    if dests is None or flood:
        dests = [v for v in range(topo.node_count) if v != topo.gateway]
    elif topo.gateway in dests:
        raise ValueError("the gateway is the source, not a destination")
    kids = topo.children
    paths = {v: topo.path(v) for v in dests}

    # a frame is [dest, hop_index, size, attempts]; dest None means flooded
    queues = [deque() for _ in range(topo.node_count)]  # keyed by link child
    busy = [False] * topo.node_count
    got = [0] * topo.node_count
    done_at = [0.0] * topo.node_count
    failed = set()
    events = []
    seq = 0
    stats = {"tx": 0, "retx": 0}

    def push(t, kind, child, frame):
        nonlocal seq
        seq += 1
        heapq.heappush(events, (t, seq, kind, child, frame))

    def start(t, child):
        frame = queues[child].popleft()
        busy[child] = True
        stats["tx"] += 1
        push(t + 8 * frame[2] / rate, 0, child, frame)

    def enqueue(t, child, frame):
        queues[child].append(frame)
        if not busy[child]:
            start(t, child)

    if flood:
        for child in kids[topo.gateway]:
            for size in frames:
                queues[child].append([None, 0, size, 0])
    else:
        for v in dests:
            first = paths[v][1]
            for size in frames:
                queues[first].append([v, 1, size, 0])
    for child in range(topo.node_count):
        if queues[child]:
            start(0.0, child)

    while events:
        t, _, kind, child, frame = heapq.heappop(events)
        if kind == 0:  # transmission finished on the link into ``child``
            busy[child] = False
            if rng.random() < config.loss_prob:
                frame[3] += 1
                if frame[3] <= config.max_retries:
                    stats["retx"] += 1
                    queues[child].appendleft(frame)
                else:
                    failed.add(frame[0] if frame[0] is not None else child)
            else:
                push(t + delay, 1, child, frame)
            if queues[child] and not busy[child]:
                start(t, child)
        else:  # frame arrived at ``child``
            dest = frame[0]
            if dest is None:
                got[child] += 1
                done_at[child] = t
                for k in kids[child]:
                    enqueue(t, k, [None, 0, frame[2], 0])
            elif child == dest:
                got[dest] += 1
                done_at[dest] = t
            else:
                hop = frame[1] + 1
                enqueue(t, paths[dest][hop], [dest, hop, frame[2], 0])

    complete = [v for v in dests if got[v] == len(frames)]
    lost = tuple(sorted(set(dests) - set(complete)))
    return SimResult(
        method=method,
        completion_time=max((done_at[v] for v in complete), default=0.0),
        total_frames=stats["tx"],
        retransmissions=stats["retx"],
        bytes_delivered=payload_bytes_per_node * len(complete),
        nodes=topo.node_count,
        crl_entries=crl_entries,
        payload_bytes=payload_bytes_per_node,
        undeliverable=lost,
    )


# -- payload sizes ------------------------------------------------------------

def wire(blob):
    """Bytes on the air for one payload blob."""
    return len(zlib.compress(bytes(blob), 9))


@functools.lru_cache(maxsize=32)
def _crl(count, seed, kind=CrlKind.FULL, base_count=0):
    exclude = ()
    if kind == CrlKind.DELTA:
        exclude = _crl(base_count, seed).identities()
    return generate_synthetic_crl(count, kind, seed, base_epoch=0, exclude=exclude)


def accumulator_payload_bytes(bit_len_k=2048, seed=0):
    """Wire size of one device's unicast payload (accumulator + its own proof)."""
    nb = (bit_len_k + 7) // 8
    xof = hashlib.shake_256(b"accrl-sim|%d|%d" % (bit_len_k, seed))
    raw = xof.digest(4 * nb + SERIAL_LEN + 64 + 32)
    pos = 0

    def take(n):
        nonlocal pos
        pos += n
        return raw[pos - n:pos]

    n = int.from_bytes(take(nb), "big") | (1 << (bit_len_k - 1)) | 1
    params = AccumulatorParams(n, 4, bit_len_k)
    a = int.from_bytes(take(nb), "big") % n
    x = int.from_bytes(take(64), "big") | (1 << 511) | 1
    nw1 = int.from_bytes(take(nb), "big") % x
    nw2 = int.from_bytes(take(nb), "big") % n
    proof = NonRevokedProof(take(SERIAL_LEN), x, nw1, nw2, 0, bytes(64))
    payload = DistributionPayload(params, AccumulatorValue(a, 0), (proof,), take(32), bytes(64))
    return wire(encode_payload(payload))


def crl_payload_bytes(entries, seed=0):
    return wire(encode_crl(_crl(entries, seed)))


def bloom_payload_bytes(entries, fpr=0.01, seed=0, hash_count=DEFAULT_BLOOM_HASHES):
    crl = _crl(entries, seed)
    m, k = bloom_params(entries, fpr, hash_count)
    return wire(bloom_build(crl.entries, m, k).bits)


def method_payload(method, crl_entries, bit_len_k=2048, fpr=0.01, seed=0):
    """``(payload_bytes_per_node, shared)`` for distributing a full revocation set."""
    method = ALIASES[method]
    if method == "accumulator":
        return accumulator_payload_bytes(bit_len_k, seed), False
    if method == "full_crl":
        return crl_payload_bytes(crl_entries, seed), True
    return bloom_payload_bytes(crl_entries, fpr, seed), True


def update_payload(method, base_entries, delta_entries, bit_len_k=2048, fpr=0.01, seed=0):
    """Per-node bytes after a delta: fresh proofs, the delta CRL, or a rebuilt filter."""
    method = ALIASES[method]
    if method == "accumulator":
        return accumulator_payload_bytes(bit_len_k, seed + 1), False
    delta = _crl(delta_entries, seed, CrlKind.DELTA, base_entries)
    if method == "full_crl":
        return wire(encode_crl(delta)), True
    base = _crl(base_entries, seed)
    m, k = bloom_params(base_entries + delta_entries, fpr, DEFAULT_BLOOM_HASHES)
    rebuilt = bloom_build(base.entries + delta.entries, m, k)
    return wire(rebuilt.bits), True


def sweep(methods, crl_sizes, topo, config, bit_len_k=2048, fpr=0.01, seed=0, flood=False):
    results = []
    for method in methods:
        for size in crl_sizes:
            nbytes, shared = method_payload(method, size, bit_len_k, fpr, seed)
            results.append(simulate_distribution(topo, config, nbytes, shared, ALIASES[method],
                                                 flood=flood and shared, crl_entries=size))
    return results


def simulate_update(method, base_entries, delta_entries, topo, config, bit_len_k=2048, fpr=0.01,
                    seed=0, flood=False):
    nbytes, shared = update_payload(method, base_entries, delta_entries, bit_len_k, fpr, seed)
    return simulate_distribution(topo, config, nbytes, shared, ALIASES[method],
                                 flood=flood and shared, crl_entries=delta_entries)


def results_csv(results):
    return rows_to_csv(CSV_HEADER, [r.csv_row() for r in results])

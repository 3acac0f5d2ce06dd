"""Sequence-parallel multi-head attention on simulated workers.

The round runs in barrier-separated stages:

1. project   - worker i computes Q, K, V (all heads) for its own tokens
2. shuffle 1 - all-to-all; worker i ends up with Q, K, V for *all* tokens
               but only its own contiguous range of heads
3. attend    - full L x L scores per owned head, row softmax, times V
4. shuffle 2 - all-to-all back to token partitions
5. output    - concatenate heads for own tokens, apply the replicated W_O

Workers share nothing except the message exchange, so the result does not
depend on the order in which they are stepped.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bench import BenchRecord, time_call
from .errors import LayoutError, ProtocolError, ShapeError
from .mixers import AttnParams, as_seq, attend_heads, attention_mix

log = logging.getLogger(__name__)

__all__ = [
    "ShardLayout",
    "ShuffleMessage",
    "WorkerStats",
    "plan_layout",
    "check_tiling",
    "all_to_all",
    "distributed_attention",
    "max_feasible_length",
    "scaling_bench",
]

TO_HEADS = "to_heads"
TO_SEQUENCE = "to_sequence"


@dataclass(frozen=True)
class ShardLayout:
    workers: int
    heads: int
    seq_bounds: tuple[int, ...]
    head_ranges: tuple[tuple[int, int], ...]
    replicated: tuple[str, ...] = ("w_q", "w_k", "w_v", "w_o")

    @property
    def length(self) -> int:
        return self.seq_bounds[-1]

    def tokens(self, rank: int) -> tuple[int, int]:
        return self.seq_bounds[rank], self.seq_bounds[rank + 1]


def plan_layout(L: int, heads: int, workers: int) -> ShardLayout:
    """Near-equal token partitions (sizes differ by at most one) and equal head ranges."""
    if workers < 1:
        raise LayoutError(f"need at least one worker, got {workers}")
    if heads % workers:
        raise LayoutError(f"{heads} heads cannot be split evenly over {workers} workers")
    if L < workers:
        raise LayoutError(f"cannot split {L} tokens over {workers} workers")
    base, extra = divmod(L, workers)
    bounds = [0]
    for r in range(workers):
        bounds.append(bounds[-1] + base + (1 if r < extra else 0))
    per = heads // workers
    ranges = tuple((r * per, (r + 1) * per) for r in range(workers))
    return ShardLayout(workers, heads, tuple(bounds), ranges)


@dataclass(frozen=True)
class ShuffleMessage:
    """One block of a head x token tiled tensor travelling from ``src`` to ``dst``.

    ``payload`` is (3, nh, nt, d) for ``to_heads`` (Q, K, V stacked) and
    (nh, nt, d) for ``to_sequence``.
    """

    src: int
    dst: int
    tag: str
    heads: tuple[int, int]
    tokens: tuple[int, int]
    payload: np.ndarray = field(repr=False)

    @property
    def elements(self) -> int:
        return self.payload.size

    @property
    def key(self):
        return (self.src, self.heads, self.tokens)


@dataclass
class WorkerStats:
    worker: int
    peak_score_elements: int = 0
    bytes_sent: int = 0
    elements_shuffle1: int = 0
    elements_shuffle2: int = 0
    wall_time: float = 0.0


def check_tiling(messages: Sequence[ShuffleMessage], length: int, heads: int) -> None:
    """Raise ProtocolError unless the blocks cover heads x tokens exactly once."""
    cover = np.zeros((heads, length), dtype=np.int64)
    for m in messages:
        (h0, h1), (t0, t1) = m.heads, m.tokens
        if not (0 <= h0 < h1 <= heads and 0 <= t0 < t1 <= length):
            raise ProtocolError(f"block heads[{h0}:{h1}] tokens[{t0}:{t1}] from {m.src} is out of range")
        cover[h0:h1, t0:t1] += 1
    dup = np.argwhere(cover > 1)
    if dup.size:
        h, t = dup[0]
        raise ProtocolError(f"{_shuffle_name(messages)} duplicates (head {h}, token {t})")
    miss = np.argwhere(cover == 0)
    if miss.size:
        h, t = miss[0]
        raise ProtocolError(f"{_shuffle_name(messages)} is missing (head {h}, token {t})")


def _shuffle_name(messages) -> str:
    tags = sorted({m.tag for m in messages})
    return "shuffle " + "/".join(tags) if tags else "shuffle"


def all_to_all(messages: Sequence[ShuffleMessage], workers: int) -> dict[int, list[ShuffleMessage]]:
    """Deliver every message exactly once; each inbox is sorted by (src, heads, tokens)."""
    inbox: dict[int, list[ShuffleMessage]] = {r: [] for r in range(workers)}
    seen = {}
    for m in messages:
        if not 0 <= m.dst < workers or not 0 <= m.src < workers:
            raise ProtocolError(f"message {m.src}->{m.dst} addresses a worker outside 0..{workers - 1}")
        for other in seen.get(m.dst, ()):
            if _overlap(m, other):
                raise ProtocolError(
                    f"blocks heads{m.heads} tokens{m.tokens} from {m.src} and "
                    f"heads{other.heads} tokens{other.tokens} from {other.src} overlap at worker {m.dst}"
                )
        seen.setdefault(m.dst, []).append(m)
        inbox[m.dst].append(m)
    for r in inbox:
        inbox[r].sort(key=lambda m: m.key)
    return inbox


def _overlap(a: ShuffleMessage, b: ShuffleMessage) -> bool:
    return (a.heads[0] < b.heads[1] and b.heads[0] < a.heads[1]
            and a.tokens[0] < b.tokens[1] and b.tokens[0] < a.tokens[1])


class _Worker:
    def __init__(self, rank: int, layout: ShardLayout, params: AttnParams):
        self.rank = rank
        self.layout = layout
        self.p = params
        self.stats = WorkerStats(rank)
        self.t0, self.t1 = layout.tokens(rank)
        self.h0, self.h1 = layout.head_ranges[rank]

    def _timed(self, fn, *args):
        start = time.perf_counter()
        out = fn(*args)
        self.stats.wall_time += time.perf_counter() - start
        return out

    def project(self, x_part: np.ndarray) -> list[ShuffleMessage]:
        return self._timed(self._project, x_part)

    def _project(self, x_part):
        p = self.p
        d = p.head_dim
        nt = self.t1 - self.t0
        qkv = np.stack([x_part @ p.w_q, x_part @ p.w_k, x_part @ p.w_v])  # (3, nt, M)
        out = []
        for dst, (h0, h1) in enumerate(self.layout.head_ranges):
            blk = qkv[:, :, h0 * d:h1 * d].reshape(3, nt, h1 - h0, d).transpose(0, 2, 1, 3)
            out.append(ShuffleMessage(self.rank, dst, TO_HEADS, (h0, h1), (self.t0, self.t1),
                                      np.ascontiguousarray(blk)))
        self._account(out, 1)
        return out

    def attend(self, inbox: list[ShuffleMessage]) -> list[ShuffleMessage]:
        return self._timed(self._attend, inbox)

    def _attend(self, inbox):
        L, d, nh = self.layout.length, self.p.head_dim, self.h1 - self.h0
        qkv = np.empty((3, nh, L, d))
        for m in inbox:
            if m.tag != TO_HEADS or m.heads != (self.h0, self.h1):
                raise ProtocolError(f"worker {self.rank} got unexpected block {m.tag} heads{m.heads}")
            qkv[:, :, m.tokens[0]:m.tokens[1]] = m.payload
        self.stats.peak_score_elements = max(self.stats.peak_score_elements, nh * L * L)
        z = attend_heads(qkv[0], qkv[1], qkv[2], normalize=True, head_offset=self.h0)
        out = []
        for dst in range(self.layout.workers):
            t0, t1 = self.layout.tokens(dst)
            out.append(ShuffleMessage(self.rank, dst, TO_SEQUENCE, (self.h0, self.h1), (t0, t1),
                                      np.ascontiguousarray(z[:, t0:t1])))
        self._account(out, 2)
        return out

    def output(self, inbox: list[ShuffleMessage]) -> np.ndarray:
        return self._timed(self._output, inbox)

    def _output(self, inbox):
        H, d, nt = self.layout.heads, self.p.head_dim, self.t1 - self.t0
        heads = np.empty((H, nt, d))
        for m in inbox:
            if m.tag != TO_SEQUENCE or m.tokens != (self.t0, self.t1):
                raise ProtocolError(f"worker {self.rank} got unexpected block {m.tag} tokens{m.tokens}")
            heads[m.heads[0]:m.heads[1]] = m.payload
        z = heads.transpose(1, 0, 2).reshape(nt, H * d)
        if self.p.w_o is not None:
            z = z @ self.p.w_o
        return z

    def _account(self, msgs, stage):
        n = sum(m.elements for m in msgs)
        self.stats.bytes_sent += sum(m.payload.nbytes for m in msgs)
        if stage == 1:
            self.stats.elements_shuffle1 += n
        else:
            self.stats.elements_shuffle2 += n


def distributed_attention(x, p: AttnParams, layout: ShardLayout,
                          order: Sequence[int] | None = None) -> tuple[np.ndarray, list[WorkerStats]]:
    """Multi-head attention computed by ``layout.workers`` simulated workers.

    ``order`` is the sequence in which workers are stepped within each stage.
    """
    x = as_seq(x)
    L = x.shape[0]
    if layout.length != L or layout.heads != p.heads:
        raise LayoutError(
            f"layout planned for L={layout.length}, H={layout.heads}; got L={L}, H={p.heads}"
        )
    if x.shape[1] != p.dim:
        raise ShapeError(f"sequence dim {x.shape[1]} does not match projections ({p.dim})")
    order = list(range(layout.workers)) if order is None else list(order)
    if sorted(order) != list(range(layout.workers)):
        raise LayoutError(f"schedule {order} is not a permutation of the workers")
    workers = [_Worker(r, layout, p) for r in range(layout.workers)]

    sent = []
    for r in order:
        t0, t1 = layout.tokens(r)
        sent.extend(workers[r].project(x[t0:t1]))
    _check_shuffle(sent, layout)
    inbox = all_to_all(sent, layout.workers)

    sent = []
    for r in order:
        sent.extend(workers[r].attend(inbox[r]))
    _check_shuffle(sent, layout)
    inbox = all_to_all(sent, layout.workers)

    parts = {}
    for r in order:
        parts[r] = workers[r].output(inbox[r])
    out = np.vstack([parts[r] for r in range(layout.workers)])
    return out, [w.stats for w in workers]


def _check_shuffle(messages: list[ShuffleMessage], layout: ShardLayout) -> None:
    check_tiling(messages, layout.length, layout.heads)


def max_feasible_length(budget: int, heads: int, workers: int) -> int:
    """Longest L whose per-worker score matrices fit in ``budget`` elements."""
    per_worker = heads // workers
    return math.isqrt(budget // per_worker)


def scaling_bench(lengths: Sequence[int], dim: int, heads: int, workers: int, repeats: int = 3,
                  budget: int = 1 << 26, seed: int = 0) -> list[BenchRecord]:
    """Time single-device and distributed attention across a sweep of lengths.

    Configurations whose per-worker score matrices exceed ``budget``
    elements are skipped (logged), not run.
    """
    params = AttnParams.random(dim, heads, seed=seed)
    records = []
    for L in lengths:
        x = np.random.default_rng(seed + L).standard_normal((L, dim))
        single_peak = heads * L * L
        if single_peak <= budget:
            ms = time_call(lambda: attention_mix(x, params), repeats)
            records.append(BenchRecord("attn", 1, L, dim, heads, ms, single_peak, 0,
                                       max_feasible_length(budget, heads, 1)))
        else:
            log.info("single-device attention over budget at L=%d (%d > %d)", L, single_peak, budget)
        if (heads // workers) * L * L > budget:
            log.info("distributed attention over budget at L=%d with %d workers", L, workers)
            continue
        layout = plan_layout(L, heads, workers)
        stats: list[WorkerStats] = []

        def run():
            nonlocal stats
            _, stats = distributed_attention(x, params, layout)

        ms = time_call(run, repeats)
        records.append(BenchRecord("dist-attn", workers, L, dim, heads, ms,
                                   max(s.peak_score_elements for s in stats),
                                   sum(s.bytes_sent for s in stats),
                                   max_feasible_length(budget, heads, workers)))
    return records

"""Asynchronous FIFO semantics: configurations, steps, bounded run enumeration."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .model import OUTPUT, Action, System


@dataclass(frozen=True)
class Configuration:
    """Local state per machine plus FIFO buffer contents per ordered channel.

    Both tuples follow the system's declaration order, which makes
    configurations hashable and cheap to intern as cache keys.
    """

    locals: tuple[str, ...]
    buffers: tuple[tuple[str, ...], ...]

    def pretty(self, sys: System) -> str:
        parts = [f"{m.name}@{s}" for m, s in zip(sys.machines, self.locals)]
        bufs = [
            f"{a}>{b}:[{','.join(msgs)}]"
            for (a, b), msgs in zip(sys.channels, self.buffers)
            if msgs
        ]
        return " ".join(parts + bufs)


@dataclass(frozen=True)
class Run:
    start: Configuration
    steps: tuple[tuple[Action, Configuration], ...]

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def last(self) -> Configuration:
        return self.steps[-1][1] if self.steps else self.start

    def config_at(self, i: int) -> Configuration:
        """Configuration reached after i steps."""
        return self.steps[i - 1][1] if i else self.start

    def action_at(self, i: int) -> Action:
        return self.steps[i][0]

    def extend(self, action: Action, nxt: Configuration) -> "Run":
        return Run(self.start, self.steps + ((action, nxt),))

    def prefix(self, n: int) -> "Run":
        return Run(self.start, self.steps[:n])


Word = tuple[Action, ...]


def trace_of(run: Run) -> Word:
    return tuple(a for a, _ in run.steps)


def initial_configuration(sys: System) -> Configuration:
    locals_ = tuple(m.initial for m in sys.machines)
    buffers = tuple(() for _ in sys.channels)
    return Configuration(locals_, buffers)


def enabled_steps(sys: System, c: Configuration) -> list[tuple[Action, Configuration]]:
    """Successor steps in deterministic order: machine declaration order, then
    transition declaration order within each machine.

    An output is always enabled (its message is appended to the channel); an
    input is enabled only when its message is at the head of the channel.
    """
    chan_index = sys.channel_index
    out: list[tuple[Action, Configuration]] = []
    seen: set[tuple[int, Action, str]] = set()
    for p, m in enumerate(sys.machines):
        state = c.locals[p]
        for t in m.transitions:
            if t.src != state:
                continue
            if (p, t.action, t.tgt) in seen:  # duplicate transition lines
                continue
            seen.add((p, t.action, t.tgt))
            ci = chan_index[t.action.channel]
            buf = c.buffers[ci]
            if t.action.kind == OUTPUT:
                new_buf = buf + (t.action.message,)
            else:
                if not buf or buf[0] != t.action.message:
                    continue
                new_buf = buf[1:]
            locals_ = c.locals[:p] + (t.tgt,) + c.locals[p + 1 :]
            buffers = c.buffers[:ci] + (new_buf,) + c.buffers[ci + 1 :]
            out.append((t.action, Configuration(locals_, buffers)))
    return out


def is_accepting(sys: System, c: Configuration) -> bool:
    """All participants in accepting states; buffer contents are not inspected."""
    return all(s in m.accepting for m, s in zip(sys.machines, c.locals))


def enumerate_run_levels(sys: System, k: int) -> Iterator[list[Run]]:
    """Yield the list of runs of each length 0..k, in canonical order.

    Level i+1 extends level i runs in order, so the sequence is deterministic
    and prefix-closed. Stops early when a level is empty.
    """
    if k < 0:
        raise ValueError("bound must be >= 0")
    level = [Run(initial_configuration(sys), ())]
    yield level
    for _ in range(k):
        nxt = [
            run.extend(a, c)
            for run in level
            for a, c in enabled_steps(sys, run.last)
        ]
        if not nxt:
            return
        yield nxt
        level = nxt


def enumerate_runs(sys: System, k: int) -> Iterator[Run]:
    for level in enumerate_run_levels(sys, k):
        yield from level


def reachable_graph(sys: System, buffer_capacity: int) -> tuple[int, int]:
    """BFS over configurations with each channel capped at buffer_capacity.

    Returns (configuration count, step-edge count). Outputs into a full
    channel are not explored.
    """
    if buffer_capacity < 1:
        raise ValueError("buffer capacity must be >= 1")
    start = initial_configuration(sys)
    seen = {start}
    frontier = [start]
    edges = 0
    while frontier:
        nxt: list[Configuration] = []
        for c in frontier:
            for a, c2 in enabled_steps(sys, c):
                if a.kind == OUTPUT and len(c2.buffers[sys.channel_index[a.channel]]) > buffer_capacity:
                    continue
                edges += 1
                if c2 not in seen:
                    seen.add(c2)
                    nxt.append(c2)
        frontier = nxt
    return len(seen), edges

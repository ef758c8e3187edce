"""Discrete-event simulation of the whole home: devices, mediator, platform.

Three pipelines over one trace:

* mediated -- device events flow through the policy engine; only the
  minimized stream reaches the platform; commands pass back unmodified.
* raw      -- the platform consumes the unfiltered trace (the ground truth).
* pull     -- nothing is pushed; the platform only learns states it
  explicitly refreshes, so only time-triggered rules can run.

Fidelity is scored the way commands are verified in the field: every
command issued under mediation must have a raw counterpart within a short
window (soundness), and every non-redundant raw command must have a mediated
counterpart (completeness).
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .compiler import CompiledCorpus
from .engine import Emission, EngineConfig, PolicyEngine
from .model import (
    MS_PER_DAY,
    MS_PER_MINUTE,
    Command,
    Event,
    Registry,
    Rule,
    Value,
    format_value,
)
from .platform_sim import SimulatedPlatform

DEFAULT_MATCH_WINDOW_MS = 3000
DEFAULT_GRACE_MS = 2 * 3600 * 1000


@dataclass
class SimConfig:
    seed: int = 0
    diffkeep_ms: int = 300
    l1_ms: int = 0
    l2_ms: int = 250
    drop_prob: float = 0.0          # mediated command-loss probability
    refresh_ms: int = 0             # pull mode: state-refresh period (0: never)
    grace_ms: int = DEFAULT_GRACE_MS

    def engine_config(self) -> EngineConfig:
        return EngineConfig(
            seed=self.seed, diffkeep_ms=self.diffkeep_ms, l1_ms=self.l1_ms, l2_ms=self.l2_ms
        )


class DeviceFarm:
    """True device states; actuations produce state-change events."""

    def __init__(self, registry: Registry):
        self.registry = registry
        self.states: dict[tuple[str, str], Value] = dict(registry.initial_states())

    def observe(self, event: Event) -> None:
        self.states[event.key()] = event.value

    def actuate(self, command: Command) -> Optional[Event]:
        desc = self.registry.lookup(command.device, command.attribute)
        value = desc.validate_value(command.value)
        if self.states.get(command.key()) == value:
            return None
        self.states[command.key()] = value
        return Event(command.device, command.attribute, value, command.timestamp)


@dataclass
class RunArtifacts:
    """Everything one pipeline run produced."""

    reported_events: list[Emission] = field(default_factory=list)
    p_commands: list[Command] = field(default_factory=list)
    truth_events: list[Event] = field(default_factory=list)     # trace + actuations
    latency_samples: list[tuple[int, int, int, int]] = field(default_factory=list)
    raw_counts: dict[tuple[str, str], int] = field(default_factory=dict)
    reported_counts: dict[tuple[str, str], int] = field(default_factory=dict)


class _Scheduler:
    """One global deadline heap; ties break in push order."""

    def __init__(self) -> None:
        self._heap: list[tuple[int, int, str, object]] = []
        self._seq = 0

    def push(self, when: int, kind: str, payload: object = None) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (when, self._seq, kind, payload))

    def pop(self) -> Optional[tuple[int, str, object]]:
        if not self._heap:
            return None
        when, _, kind, payload = heapq.heappop(self._heap)
        return when, kind, payload


def _daily_instants(minutes: Iterable[int], horizon_ms: int) -> list[int]:
    out = []
    for day_start in range(0, horizon_ms + 1, MS_PER_DAY):
        for m in minutes:
            ts = day_start + m * MS_PER_MINUTE
            if ts <= horizon_ms:
                out.append(ts)
    return sorted(out)


def run_mediated(
    trace: list[Event],
    corpus: CompiledCorpus,
    config: Optional[SimConfig] = None,
    manual_commands: Optional[list[Command]] = None,
) -> RunArtifacts:
    """Replay the trace through device -> engine -> platform -> device."""
    config = config or SimConfig()
    registry = corpus.registry
    artifacts = RunArtifacts()
    farm = DeviceFarm(registry)
    engine = PolicyEngine(corpus, config.engine_config())
    issued: list[Command] = []
    platform = SimulatedPlatform(
        corpus.forwarded_rules, registry, mode="push",
        tag_gated=corpus.tag_gated, command_sink=issued.append,
    )
    drop_rng = random.Random((config.seed << 8) ^ 0x5F)
    sched = _Scheduler()
    latency = config.l1_ms + config.l2_ms
    horizon = (trace[-1].timestamp if trace else 0) + config.grace_ms

    for event in trace:
        sched.push(event.timestamp, "device_event", event)
    for ts in _daily_instants(engine.time_trigger_minutes(), horizon):
        sched.push(max(0, ts - latency - 1), "engine_time", ts)
    for ts in _daily_instants(platform.time_trigger_minutes(), horizon):
        sched.push(ts, "platform_time", ts)
    for cmd in manual_commands or []:
        sched.push(cmd.timestamp, "manual", cmd)

    def deliver(emissions: list[Emission]) -> None:
        for e in emissions:
            artifacts.reported_counts[e.key()] = artifacts.reported_counts.get(e.key(), 0) + 1
            sched.push(e.timestamp + latency, "deliver", e)

    def drain_platform(now: int) -> None:
        platform.tick(now)
        while issued:
            cmd = issued.pop(0)
            if config.drop_prob and drop_rng.random() < config.drop_prob:
                continue  # lost in transmission before the mediator saw it
            artifacts.p_commands.append(cmd)
            sched.push(cmd.timestamp + config.l2_ms, "actuate", cmd)
        due = platform.next_deadline()
        if due is not None:
            sched.push(due, "platform_due", None)

    event_index = 0
    while True:
        item = sched.pop()
        if item is None:
            break
        now, kind, payload = item
        deliver(engine.tick(now))
        if kind == "device_event":
            event = payload
            assert isinstance(event, Event)
            farm.observe(event)
            artifacts.truth_events.append(event)
            artifacts.raw_counts[event.key()] = artifacts.raw_counts.get(event.key(), 0) + 1
            deliver(engine.process_event(event))
            artifacts.latency_samples.append(
                (event_index, config.l1_ms, config.l2_ms, config.l1_ms + 2 * config.l2_ms)
            )
            event_index += 1
        elif kind == "engine_time":
            target = payload
            assert isinstance(target, int)
            for e in engine.time_tick(target):
                artifacts.reported_counts[e.key()] = artifacts.reported_counts.get(e.key(), 0) + 1
                sched.push(max(e.timestamp - 1, now), "deliver", e)
        elif kind == "deliver":
            e = payload
            assert isinstance(e, Emission)
            artifacts.reported_events.append(e)
            platform.receive(e.device, e.attribute, e.value, now, e.kind, e.tag)
            drain_platform(now)
        elif kind == "platform_time":
            platform.time_tick(now)
            drain_platform(now)
        elif kind == "platform_due":
            drain_platform(now)
        elif kind == "manual":
            cmd = payload
            assert isinstance(cmd, Command)
            artifacts.p_commands.append(cmd)
            sched.push(cmd.timestamp, "actuate", cmd)
        elif kind == "actuate":
            cmd = payload
            assert isinstance(cmd, Command)
            change = farm.actuate(Command(cmd.device, cmd.attribute, cmd.value, now, cmd.origin))
            if change is not None:
                artifacts.truth_events.append(change)
                deliver(engine.process_event(change))
        due = engine.next_deadline()
        if due is not None:
            sched.push(due, "engine_due", None)

    artifacts.p_commands.sort(key=lambda c: c.timestamp)
    artifacts.truth_events.sort(key=lambda e: e.timestamp)
    return artifacts


def run_raw(
    trace: list[Event],
    rules: list[Rule],
    registry: Registry,
    config: Optional[SimConfig] = None,
) -> RunArtifacts:
    """Replay the unfiltered trace straight into the platform."""
    config = config or SimConfig()
    artifacts = RunArtifacts()
    farm = DeviceFarm(registry)
    issued: list[Command] = []
    platform = SimulatedPlatform(rules, registry, mode="push", command_sink=issued.append)
    sched = _Scheduler()
    horizon = (trace[-1].timestamp if trace else 0) + config.grace_ms

    for event in trace:
        sched.push(event.timestamp, "device_event", event)
    for ts in _daily_instants(platform.time_trigger_minutes(), horizon):
        sched.push(ts, "platform_time", ts)

    def drain_platform(now: int) -> None:
        platform.tick(now)
        while issued:
            cmd = issued.pop(0)
            artifacts.p_commands.append(cmd)
            sched.push(cmd.timestamp, "actuate", cmd)
        due = platform.next_deadline()
        if due is not None:
            sched.push(due, "platform_due", None)

    while True:
        item = sched.pop()
        if item is None:
            break
        now, kind, payload = item
        if kind == "device_event":
            event = payload
            assert isinstance(event, Event)
            farm.observe(event)
            artifacts.truth_events.append(event)
            artifacts.raw_counts[event.key()] = artifacts.raw_counts.get(event.key(), 0) + 1
            platform.receive(event.device, event.attribute, event.value, now)
            drain_platform(now)
        elif kind == "platform_time":
            platform.time_tick(now)
            drain_platform(now)
        elif kind == "platform_due":
            drain_platform(now)
        elif kind == "actuate":
            cmd = payload
            assert isinstance(cmd, Command)
            change = farm.actuate(cmd)
            if change is not None:
                artifacts.truth_events.append(change)
                platform.receive(change.device, change.attribute, change.value, now)
                drain_platform(now)

    artifacts.p_commands.sort(key=lambda c: c.timestamp)
    artifacts.truth_events.sort(key=lambda e: e.timestamp)
    return artifacts


def run_pull_baseline(
    trace: list[Event],
    rules: list[Rule],
    registry: Registry,
    config: Optional[SimConfig] = None,
) -> RunArtifacts:
    """No pushes: the platform sees only refreshed states, never events."""
    config = config or SimConfig()
    artifacts = RunArtifacts()
    farm = DeviceFarm(registry)
    issued: list[Command] = []
    platform = SimulatedPlatform(rules, registry, mode="pull", command_sink=issued.append)
    sched = _Scheduler()
    horizon = (trace[-1].timestamp if trace else 0) + config.grace_ms

    for event in trace:
        sched.push(event.timestamp, "device_event", event)
    for ts in _daily_instants(platform.time_trigger_minutes(), horizon):
        sched.push(ts, "platform_time", ts)
    if config.refresh_ms:
        for ts in range(0, horizon + 1, config.refresh_ms):
            sched.push(ts, "refresh", ts)

    def drain_platform(now: int) -> None:
        platform.tick(now)
        while issued:
            cmd = issued.pop(0)
            artifacts.p_commands.append(cmd)
            sched.push(cmd.timestamp, "actuate", cmd)
        due = platform.next_deadline()
        if due is not None:
            sched.push(due, "platform_due", None)

    while True:
        item = sched.pop()
        if item is None:
            break
        now, kind, payload = item
        if kind == "device_event":
            event = payload
            assert isinstance(event, Event)
            farm.observe(event)
            artifacts.truth_events.append(event)
        elif kind == "refresh":
            platform.refresh(dict(farm.states), now)
        elif kind == "platform_time":
            platform.time_tick(now)
            drain_platform(now)
        elif kind == "platform_due":
            drain_platform(now)
        elif kind == "actuate":
            cmd = payload
            assert isinstance(cmd, Command)
            change = farm.actuate(cmd)
            if change is not None:
                artifacts.truth_events.append(change)

    artifacts.p_commands.sort(key=lambda c: c.timestamp)
    return artifacts


def remove_redundant(
    gt_commands: list[Command],
    raw_trace: list[Event],
    registry: Registry,
) -> list[Command]:
    """Drop ground-truth commands whose value equals the target's state.

    Replays the raw trace and the command stream together: a command that
    would not change its target's state is a redundant rule execution the
    mediated pipeline is entitled to suppress.
    """
    states: dict[tuple[str, str], Value] = dict(registry.initial_states())
    items: list[tuple[int, int, int, object]] = []
    for i, e in enumerate(raw_trace):
        items.append((e.timestamp, 0, i, e))
    for i, c in enumerate(gt_commands):
        items.append((c.timestamp, 1, i, c))  # events land before same-time commands
    items.sort(key=lambda t: (t[0], t[1], t[2]))
    kept: list[Command] = []
    for _, _, _, obj in items:
        if isinstance(obj, Event):
            states[obj.key()] = obj.value
        else:
            assert isinstance(obj, Command)
            desc = registry.lookup(obj.device, obj.attribute)
            value = desc.validate_value(obj.value)
            if states.get(obj.key()) == value:
                continue
            states[obj.key()] = value
            kept.append(obj)
    return kept


@dataclass
class VerifyReport:
    r_s: float
    r_c: float
    unsound: list[Command] = field(default_factory=list)   # p-commands with no counterpart
    missed: list[Command] = field(default_factory=list)    # gt-commands with no counterpart
    per_origin: dict[str, tuple[int, int]] = field(default_factory=dict)  # matched, total


def _greedy_match(
    needles: list[Command], haystack: list[Command], window_ms: int
) -> tuple[list[Command], list[Command]]:
    """Greedy earliest-first one-to-one matching on (device, attribute, value)."""
    pools: dict[tuple[str, str, str], list[int]] = {}
    for c in sorted(haystack, key=lambda c: c.timestamp):
        pools.setdefault(_match_key(c), []).append(c.timestamp)
    cursor: dict[tuple[str, str, str], int] = {k: 0 for k in pools}
    matched: list[Command] = []
    unmatched: list[Command] = []
    for c in sorted(needles, key=lambda c: c.timestamp):
        key = _match_key(c)
        pool = pools.get(key, [])
        i = cursor.get(key, 0)
        while i < len(pool) and pool[i] < c.timestamp - window_ms:
            i += 1
        cursor[key] = i
        if i < len(pool) and pool[i] <= c.timestamp + window_ms:
            matched.append(c)
            cursor[key] = i + 1
        else:
            unmatched.append(c)
    return matched, unmatched


def _match_key(c: Command) -> tuple[str, str, str]:
    return (c.device, c.attribute, format_value(c.value))


def verify(
    p_commands: list[Command],
    gt_commands: list[Command],
    window_ms: int = DEFAULT_MATCH_WINDOW_MS,
    pruned_gt: Optional[list[Command]] = None,
) -> VerifyReport:
    """Soundness and completeness of the mediated command stream.

    Soundness matches every p-command into ``gt_commands``; completeness
    matches every command of ``pruned_gt`` (redundant executions removed;
    defaults to ``gt_commands``) into the p-commands.
    """
    reference = pruned_gt if pruned_gt is not None else gt_commands
    _, unsound = _greedy_match(p_commands, gt_commands, window_ms)
    matched_gt, missed = _greedy_match(reference, p_commands, window_ms)
    r_s = 1.0 if not p_commands else (len(p_commands) - len(unsound)) / len(p_commands)
    r_c = 1.0 if not reference else len(matched_gt) / len(reference)
    per_origin: dict[str, list[int]] = {}
    missed_set = {id(c) for c in missed}
    for c in reference:
        entry = per_origin.setdefault(c.origin, [0, 0])
        entry[1] += 1
        if id(c) not in missed_set:
            entry[0] += 1
    return VerifyReport(
        r_s=r_s,
        r_c=r_c,
        unsound=unsound,
        missed=missed,
        per_origin={k: (v[0], v[1]) for k, v in sorted(per_origin.items())},
    )

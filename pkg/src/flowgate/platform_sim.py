"""The simulated automation platform: the ground-truth rule executor.

Executes trigger-condition-action rules over the event stream it receives.
An event fires a rule when the rule's trigger predicate becomes true with it
(an equal binary value or a numeric reading on the same side of the threshold
fires nothing, mirroring commercial platforms' state-change semantics).
Time triggers fire from the platform's own clock. In push mode the state
database updates only from delivered events; in pull mode only from explicit
state refreshes.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Callable, Optional

from .model import (
    Command,
    Event,
    Registry,
    Rule,
    Value,
    minute_of_day,
)


@dataclass
class _NativeTimer:
    rule_id: str
    deadline: int
    start_value: Value
    running: bool = True


class SimulatedPlatform:
    """Executes automation rules over received events and its own clock."""

    def __init__(
        self,
        rules: list[Rule],
        registry: Registry,
        mode: str = "push",
        tag_gated: Optional[set[str]] = None,
        command_sink: Optional[Callable[[Command], None]] = None,
    ):
        if mode not in ("push", "pull"):
            raise ValueError(f"unknown platform mode {mode!r}")
        self.mode = mode
        self.registry = registry
        self.rules = list(rules)
        self.tag_gated = set(tag_gated or ())
        self.command_sink = command_sink
        self.db: dict[tuple[str, str], Value] = dict(registry.initial_states().items())
        self.commands: list[Command] = []
        self.received: list[Event] = []
        self._seq = 0
        # Delayed actions and native rule timers share one deadline heap.
        self._pending: list[tuple[int, int, str, object]] = []
        self._timers: dict[str, _NativeTimer] = {}
        self._by_key: dict[tuple[str, str], list[Rule]] = {}
        for rule in self.rules:
            if not rule.trigger.is_time:
                self._by_key.setdefault(rule.trigger.key(), []).append(rule)
        self._time_rules = [r for r in self.rules if r.trigger.is_time]

    # -- scheduling ------------------------------------------------------------

    def next_deadline(self) -> Optional[int]:
        return self._pending[0][0] if self._pending else None

    def time_trigger_minutes(self) -> list[int]:
        return sorted({int(r.trigger.value) for r in self._time_rules})  # type: ignore[arg-type]

    def _push(self, deadline: int, kind: str, payload: object) -> None:
        self._seq += 1
        heapq.heappush(self._pending, (deadline, self._seq, kind, payload))

    # -- inputs ------------------------------------------------------------------

    def receive(self, device: str, attribute: str, value: Value, ts: int,
                kind: str = "report", tag: str = "") -> None:
        """Consume one delivered message (push mode only)."""
        if self.mode != "push":
            return
        key = (device, attribute)
        prev = self.db.get(key)
        self.db[key] = value
        if kind == "sync":
            return
        self.received.append(Event(device, attribute, value, ts))
        if kind == "expiry":
            for rule in self._by_key.get(key, ()):
                if rule.id == tag and rule.trigger.satisfied_by(value):
                    self._fire_rule(rule, ts)
            return
        if prev is None:
            return
        for rule in self._by_key.get(key, ()):
            if rule.id in self.tag_gated:
                continue  # fires only on its timer-bundle expiry report
            if rule.condition_timer is not None:
                self._drive_native_timer(rule, value, prev, ts)
            elif rule.trigger.fires(value, prev):
                self._fire_rule(rule, ts)

    def refresh(self, snapshot: dict[tuple[str, str], Value], ts: int) -> None:
        """A state-refresh (pull) response: states update, no events fire."""
        self.db.update(snapshot)

    def time_tick(self, ts: int) -> None:
        minute = minute_of_day(ts)
        for rule in self._time_rules:
            if int(rule.trigger.value) == minute:  # type: ignore[arg-type]
                self._fire_rule(rule, ts)

    def tick(self, now: int) -> None:
        """Issue due delayed actions and fire due native timers."""
        while self._pending and self._pending[0][0] <= now:
            deadline, _, kind, payload = heapq.heappop(self._pending)
            if kind == "action":
                assert isinstance(payload, Command)
                self._issue(payload)
            else:
                assert isinstance(payload, _NativeTimer)
                if payload.running and self._timers.get(payload.rule_id) is payload:
                    payload.running = False
                    rule = next(r for r in self.rules if r.id == payload.rule_id)
                    if self._conditions_pass(rule, deadline):
                        self._execute_actions(rule, deadline)

    # -- rule execution --------------------------------------------------------------

    def _drive_native_timer(self, rule: Rule, value: Value, prev: Value, ts: int) -> None:
        watched = rule.condition_timer.watched  # type: ignore[union-attr]
        if watched.fires(value, prev):
            timer = _NativeTimer(
                rule_id=rule.id,
                deadline=ts + rule.condition_timer.duration_ms,  # type: ignore[union-attr]
                start_value=value,
            )
            self._timers[rule.id] = timer  # create or reset
            self._push(timer.deadline, "timer", timer)
        elif watched.satisfied_by(prev) and not watched.satisfied_by(value):
            existing = self._timers.get(rule.id)
            if existing is not None:
                existing.running = False

    def _fire_rule(self, rule: Rule, ts: int) -> None:
        if rule.condition_timer is not None and rule.id not in self.tag_gated:
            return  # held-duration rules go through their native timer
        if self._conditions_pass(rule, ts):
            self._execute_actions(rule, ts)

    def _conditions_pass(self, rule: Rule, ts: int) -> bool:
        for c in rule.condition:
            value = minute_of_day(ts) if c.is_time else self.db.get(c.key())
            if value is None or not c.satisfied_by(value):
                return False
        return True

    def _execute_actions(self, rule: Rule, ts: int) -> None:
        for act in rule.actions:
            command = Command(act.device, act.attribute, act.value, ts + act.delay_ms, rule.id)
            if act.delay_ms:
                self._push(command.timestamp, "action", command)
            else:
                self._issue(command)

    def _issue(self, command: Command) -> None:
        self.commands.append(command)
        if self.command_sink is not None:
            self.command_sink(command)

"""Policy execution engine: state databases, report methods, timers.

The engine is a single logical actor over one virtual clock. For every
incoming device event it updates the current-state database, evaluates user
policies then automation policies, merges their report decisions and emits
the minimized stream upstream. A second database remembers the last value
reported for each attribute; report branches consult it so the platform's
view stays just consistent enough to run its rules.

Emissions come in three kinds:

* ``report``  -- a regular event; the platform fires matching rules on it.
* ``expiry``  -- a timer-bundle report, tagged with its rule id; the platform
  fires exactly that rule (the forwarded copy had its timer stripped).
* ``sync``    -- a silent state update (check reports, diffKeep prefixes,
  consistency repairs); the platform stores the value but fires nothing,
  like a state-refresh response.
"""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field, replace
from typing import Optional

from .compiler import CompiledCorpus
from .model import (
    AttributeKind,
    Constraint,
    Event,
    ModelError,
    Operator,
    Rule,
    Value,
    minute_of_day,
)
from .policy import Method, MethodCall, Policy, PolicyOrigin


class EngineError(ModelError):
    """Configuration problem detected while executing policies."""


@dataclass
class EngineConfig:
    seed: int = 0
    diffkeep_ms: int = 300
    l1_ms: int = 0    # fixed virtual computation latency
    l2_ms: int = 250  # one-way transmission latency to the platform


@dataclass
class StateStore:
    """DB (true current states) and DB* (last values reported upstream)."""

    db: dict[tuple[str, str], tuple[Value, int]] = field(default_factory=dict)
    db_star: dict[tuple[str, str], tuple[Value, int]] = field(default_factory=dict)

    @classmethod
    def seeded(cls, initial: dict[tuple[str, str], Value]) -> "StateStore":
        store = cls()
        for key, value in initial.items():
            store.db[key] = (value, 0)
            store.db_star[key] = (value, 0)
        return store

    def current(self, key: tuple[str, str]) -> Value:
        if key not in self.db:
            raise EngineError(f"no state seeded for {key[0]}.{key[1]}")
        return self.db[key][0]

    def last_reported(self, key: tuple[str, str]) -> Value:
        if key not in self.db_star:
            raise EngineError(f"no reported state seeded for {key[0]}.{key[1]}")
        return self.db_star[key][0]


@dataclass
class TimerState:
    id: str
    deadline: int
    seq: int
    running: bool = True
    start_value: Value = ""
    start_time: int = 0
    callbacks: list[str] = field(default_factory=list)  # policy ids, in add order


KIND_REPORT = "report"
KIND_SYNC = "sync"
KIND_EXPIRY = "expiry"


@dataclass(frozen=True)
class Emission:
    """One message sent upstream to the platform."""

    device: str
    attribute: str
    value: Value
    timestamp: int
    kind: str = KIND_REPORT
    tag: str = ""                      # rule id for expiry reports
    provenance: tuple[str, ...] = ()

    def key(self) -> tuple[str, str]:
        return (self.device, self.attribute)

    def as_event(self) -> Event:
        return Event(self.device, self.attribute, self.value, self.timestamp)


@dataclass(frozen=True)
class ReportDecision:
    """Disposition for one attribute produced by one policy evaluation."""

    device: str
    attribute: str
    disposition: str                   # "emit" | "suppress"
    method: Optional[MethodCall] = None
    provenance: tuple[str, ...] = ()
    is_trigger: bool = False           # reports the triggering event itself
    origin: PolicyOrigin = PolicyOrigin.AUTOMATION

    def key(self) -> tuple[str, str]:
        return (self.device, self.attribute)


def _matches(match: Constraint, event: Event) -> bool:
    if match.is_time:
        return False
    return match.subject == event.device and match.attribute in ("*", event.attribute)


def sample_interval(
    rng: random.Random, lo: float, hi: float, constraint: Optional[Constraint] = None
) -> float:
    """Uniform sample from [lo, hi] that satisfies ``constraint`` if given."""
    if lo == hi:
        return lo
    for _ in range(64):
        v = rng.uniform(lo, hi)
        if constraint is None or constraint.satisfied_by(v):
            return v
    # Only open-endpoint pathologies reach here; settle deterministically.
    return (lo + hi) / 2.0


def apply_method(
    call: MethodCall,
    current: Value,
    last_reported: Value,
    rng: random.Random,
    clock: int,
    *,
    constraint: Optional[Constraint] = None,
    values: tuple[str, ...] = (),
    diffkeep_ms: int = 300,
) -> list[tuple[Value, int, str]]:
    """Concrete emission plan for a report method: (value, delay_ms, kind) items.

    Timer methods never reach this function; the engine applies them to its
    timer table directly.
    """
    m = call.method
    if m is Method.KEEP:
        return [(current, call.delay_ms, KIND_REPORT)]
    if m is Method.BLOCK:
        return []
    if m is Method.DIFF_KEEP:
        target = call.params[0] if call.params and call.params[0] != "*" else current
        if not isinstance(target, str):
            raise EngineError("diffKeep has no complement for numeric values")
        if not values:
            raise EngineError("diffKeep needs the attribute value set")
        others = tuple(v for v in values if v != target)
        prefix = others[0] if len(others) == 1 else others[rng.randrange(len(others))]
        delay = call.delay_ms or diffkeep_ms
        return [(prefix, 0, KIND_SYNC), (target, delay, KIND_REPORT)]
    if m is Method.RANDOMIZE:
        if call.params and isinstance(call.params[0], str):
            members = tuple(call.params)
            return [(members[rng.randrange(len(members))], call.delay_ms, KIND_REPORT)]
        lo, hi = float(call.params[0]), float(call.params[1])
        return [(sample_interval(rng, lo, hi, constraint), call.delay_ms, KIND_REPORT)]
    raise EngineError(f"method {m.value} is not a report method")


def _fetch_state(store: StateStore, c: Constraint, clock: int) -> Value:
    if c.is_time:
        return minute_of_day(clock)
    return store.current(c.key())


def _block_decision(
    policy: Policy,
    subject: str,
    attribute: str,
    run: Optional[MethodCall],
    els: Optional[MethodCall],
    branch: Optional[Constraint],
    store: StateStore,
    clock: int,
    is_trigger: bool,
) -> Optional[ReportDecision]:
    """Branch resolution for one TRIGGER or CHECK block against DB*."""
    if branch is not None:
        star = minute_of_day(clock) if branch.is_time else store.last_reported((subject, attribute))
        chosen = run if branch.satisfied_by(star) else els
    else:
        chosen = run
    if chosen is None:
        return None
    disposition = "suppress" if chosen.method is Method.BLOCK else "emit"
    return ReportDecision(
        device=subject,
        attribute=attribute,
        disposition=disposition,
        method=chosen,
        provenance=(policy.id,),
        is_trigger=is_trigger,
        origin=policy.origin,
    )


def evaluate_policy(
    event: Event,
    policy: Policy,
    store: StateStore,
    clock: int,
    prev_value: Optional[Value] = None,
) -> list[ReportDecision]:
    """Run one policy against one event; empty when it does not apply.

    ``prev_value`` is the state the event replaced; trigger constraints use
    edge semantics (the predicate becomes true) so the engine reacts exactly
    when the platform would have fired on the raw stream. The caller must
    already have stored the event's value in ``store.db``.
    """
    tb = policy.trigger_block
    if not _matches(tb.match, event):
        return []
    if tb.match.operator is not Operator.ANY:
        if not tb.match.satisfied_by(event.value):
            return []
        if prev_value is not None and tb.match.satisfied_by(prev_value):
            return []  # not an edge: the raw stream would not have fired either
    decisions: list[ReportDecision] = []
    for cb in policy.check_blocks:
        val = _fetch_state(store, cb.fetch, clock)
        if not cb.fetch.satisfied_by(val):
            return []  # the policy execution aborts
        d = _block_decision(
            policy, cb.fetch.subject, cb.fetch.attribute,
            cb.run_action, cb.else_action, cb.branch, store, clock, is_trigger=False,
        )
        if d is not None:
            decisions.append(d)
    d = _block_decision(
        policy, event.device, event.attribute,
        tb.run_action, tb.else_action, tb.branch, store, clock, is_trigger=True,
    )
    if d is not None:
        decisions.append(d)
    return decisions


class PolicyEngine:
    """Executes a compiled corpus over an incoming event stream."""

    def __init__(self, corpus: CompiledCorpus, config: Optional[EngineConfig] = None):
        self.corpus = corpus
        self.config = config or EngineConfig()
        self.rng = random.Random(self.config.seed)
        self.store = StateStore.seeded(corpus.registry.initial_states())
        self.timers: dict[str, TimerState] = {}
        self._seq = 0
        # Pending delayed emissions and timer deadlines share one heap.
        self._pending: list[tuple[int, int, str, object]] = []
        self.emitted: list[Emission] = []
        self._forwarded_by_key: dict[tuple[str, str], list[Rule]] = {}
        for rule in corpus.forwarded_rules:
            if rule.trigger.is_time or rule.id in corpus.tag_gated:
                continue
            self._forwarded_by_key.setdefault(rule.trigger.key(), []).append(rule)
        self._time_rules = [r for r in corpus.forwarded_rules if r.trigger.is_time]

    # -- scheduling ----------------------------------------------------------

    def next_deadline(self) -> Optional[int]:
        return self._pending[0][0] if self._pending else None

    def time_trigger_minutes(self) -> list[int]:
        minutes = {int(r.trigger.value) for r in self._time_rules}  # type: ignore[arg-type]
        for p in self.corpus.policies:
            m = p.trigger_block.match
            if m.is_time and m.operator is Operator.EQ:
                minutes.add(int(m.value))  # type: ignore[arg-type]
        return sorted(minutes)

    def _push(self, deadline: int, kind: str, payload: object) -> None:
        self._seq += 1
        heapq.heappush(self._pending, (deadline, self._seq, kind, payload))

    # -- event processing ------------------------------------------------------

    def process_event(self, event: Event) -> list[Emission]:
        """Update DB, evaluate all policies, merge decisions, emit."""
        key = event.key()
        if key not in self.store.db:
            raise EngineError(f"no state seeded for {key[0]}.{key[1]}")
        out = self._flush_key_pendings(key, event.timestamp)
        prev = self.store.db[key][0]
        self.store.db[key] = (event.value, event.timestamp)

        decisions: list[ReportDecision] = []
        sanctioned: set[str] = set()
        for policy in self.corpus.policies:
            if policy.timer_start or policy.timer_stop:
                self._apply_timer_policy(policy, event, prev)
                continue
            ds = evaluate_policy(event, policy, self.store, event.timestamp, prev)
            if ds:
                decisions.extend(ds)
                if policy.origin is PolicyOrigin.AUTOMATION:
                    sanctioned.add(policy.source_id)

        out.extend(self._merge_and_emit(event, prev, decisions, sanctioned))
        return out

    def tick(self, now: int) -> list[Emission]:
        """Flush due delayed reports and fire due timers, in deadline order."""
        out: list[Emission] = []
        while self._pending and self._pending[0][0] <= now:
            deadline, _, kind, payload = heapq.heappop(self._pending)
            if kind == "emission":
                assert isinstance(payload, Emission)
                out.append(self._emit(payload))
            else:
                assert isinstance(payload, TimerState)
                if payload.running and self.timers.get(payload.id) is payload:
                    out.extend(self._fire_timer(payload, deadline))
        return out

    def time_tick(self, target_ts: int) -> list[Emission]:
        """Evaluate time-triggered policies for the clock instant ``target_ts``."""
        minute = minute_of_day(target_ts)
        decisions: list[ReportDecision] = []
        sanctioned: set[str] = set()
        for policy in self.corpus.policies:
            m = policy.trigger_block.match
            if not (m.is_time and m.operator is Operator.EQ):
                continue
            if int(m.value) != minute:  # type: ignore[arg-type]
                continue
            local: list[ReportDecision] = []
            ok = True
            for cb in policy.check_blocks:
                val = _fetch_state(self.store, cb.fetch, target_ts)
                if not cb.fetch.satisfied_by(val):
                    ok = False
                    break
                d = _block_decision(
                    policy, cb.fetch.subject, cb.fetch.attribute,
                    cb.run_action, cb.else_action, cb.branch, self.store, target_ts, False,
                )
                if d is not None:
                    local.append(d)
            if not ok:
                continue
            decisions.extend(local)
            if policy.origin is PolicyOrigin.AUTOMATION:
                sanctioned.add(policy.source_id)
        out = self._emit_sync_decisions(decisions, target_ts)
        out.extend(self._time_rule_repairs(target_ts, minute, sanctioned))
        return out

    # -- timers -----------------------------------------------------------------

    def _apply_timer_policy(self, policy: Policy, event: Event, prev: Value) -> None:
        tb = policy.trigger_block
        if not _matches(tb.match, event):
            return
        if not (tb.match.satisfied_by(event.value) and not tb.match.satisfied_by(prev)):
            return
        if policy.timer_start:
            self._seq += 1
            timer = TimerState(
                id=policy.timer_start,
                deadline=event.timestamp + policy.timer_duration_ms,
                seq=self._seq,
                start_value=event.value,
                start_time=event.timestamp,
                callbacks=[policy.id],
            )
            self.timers[timer.id] = timer  # create or reset
            self._push(timer.deadline, "timer", timer)
        elif policy.timer_stop:
            existing = self.timers.get(policy.timer_stop)
            if existing is not None and existing.running:
                existing.running = False
                existing.callbacks.clear()

    def _fire_timer(self, timer: TimerState, now: int) -> list[Emission]:
        timer.running = False
        out: list[Emission] = []
        for policy_id in list(timer.callbacks):
            policy = self.corpus.policy_by_id(policy_id)
            out.extend(self._run_timer_callback(policy, timer, now))
        timer.callbacks.clear()
        return out

    def _run_timer_callback(self, policy: Policy, timer: TimerState, now: int) -> list[Emission]:
        """Re-check conditions at expiry, then report the timer-starting event."""
        decisions: list[ReportDecision] = []
        for cb in policy.check_blocks:
            val = _fetch_state(self.store, cb.fetch, now)
            if not cb.fetch.satisfied_by(val):
                return []
            d = _block_decision(
                policy, cb.fetch.subject, cb.fetch.attribute,
                cb.run_action, cb.else_action, cb.branch, self.store, now, False,
            )
            if d is not None:
                decisions.append(d)
        key = policy.trigger_block.match.key()
        out = self._flush_key_pendings(key, now)
        out.extend(self._emit_sync_decisions(decisions, now))
        if self._up_disposition(key, now) != "suppress":
            out.append(
                self._emit(
                    Emission(
                        device=key[0],
                        attribute=key[1],
                        value=timer.start_value,
                        timestamp=now,
                        kind=KIND_EXPIRY,
                        tag=policy.source_id,
                        provenance=(policy.id,),
                    )
                )
            )
        return out

    # -- user-policy precedence ---------------------------------------------------

    def _up_disposition(self, key: tuple[str, str], clock: int) -> Optional[str]:
        """How user policies dispose of data on ``key`` right now, if at all."""
        for policy in self.corpus.user_policies:
            m = policy.trigger_block.match
            if m.subject != key[0] or m.attribute not in ("*", key[1]):
                continue
            ok = True
            for cb in policy.check_blocks:
                if not cb.fetch.satisfied_by(_fetch_state(self.store, cb.fetch, clock)):
                    ok = False
                    break
            if not ok:
                continue
            action = policy.trigger_block.run_action
            assert action is not None
            return "suppress" if action.method is Method.BLOCK else "keep"
        return None

    # -- merging and emission -------------------------------------------------------

    def _merge_and_emit(
        self,
        event: Event,
        prev: Value,
        decisions: list[ReportDecision],
        sanctioned: set[str],
    ) -> list[Emission]:
        now = event.timestamp
        ekey = event.key()
        by_key: dict[tuple[str, str], list[ReportDecision]] = {}
        for d in decisions:
            by_key.setdefault(d.key(), []).append(d)

        out: list[Emission] = []

        # 1. Check reports (silent syncs) for every non-trigger attribute.
        for key in sorted(k for k in by_key if k != ekey):
            if self._up_disposition(key, now) == "suppress":
                continue
            plan = self._merge_check_plan(key, by_key[key])
            provenance = tuple(dict.fromkeys(p for d in by_key[key] for p in d.provenance))
            for value, delay, _ in plan:
                out.append(
                    self._emit(Emission(key[0], key[1], value, now + delay, KIND_SYNC,
                                        provenance=provenance))
                )

        # 2. The trigger report plan (prefix sync + report), not yet emitted.
        trigger_plan, trig_prov = self._trigger_plan(event, prev, by_key.get(ekey, []))
        if self._up_disposition(ekey, now) == "suppress":
            trigger_plan = []
        elif not any(k == KIND_REPORT for _, _, k in trigger_plan):
            if self._up_disposition(ekey, now) == "keep":
                trigger_plan = [(event.value, 0, KIND_REPORT)]
                trig_prov = trig_prov or ("up",)

        # 3. Consistency repairs computed against the planned platform view.
        out.extend(self._consistency_repairs(event, trigger_plan, sanctioned, now))

        # 4. Emit the trigger plan; delayed parts go to the pending heap.
        for value, delay, kind in trigger_plan:
            emission = Emission(ekey[0], ekey[1], value, now + delay, kind, provenance=trig_prov)
            if delay > 0:
                self._push(now + delay, "emission", emission)
            else:
                out.append(self._emit(emission))
        return out

    def _merge_check_plan(
        self, key: tuple[str, str], decisions: list[ReportDecision]
    ) -> list[tuple[Value, int, str]]:
        methods = [d.method for d in decisions if d.disposition == "emit" and d.method is not None]
        if not methods:
            return []
        desc = self.corpus.registry.lookup(*key)
        current = self.store.current(key)
        if any(m.method in (Method.KEEP, Method.DIFF_KEEP) for m in methods):
            return [(current, 0, KIND_SYNC)]
        return [(v, d, KIND_SYNC) for v, d, _ in self._merge_randomize(key, methods, current)]

    def _trigger_plan(
        self,
        event: Event,
        prev: Value,
        decisions: list[ReportDecision],
    ) -> tuple[list[tuple[Value, int, str]], tuple[str, ...]]:
        if not decisions:
            return [], ()
        provenance = tuple(dict.fromkeys(p for d in decisions for p in d.provenance))
        desc = self.corpus.registry.lookup(*event.key())
        methods = [d.method for d in decisions if d.disposition == "emit" and d.method is not None]
        numeric = desc.kind is AttributeKind.NUMERIC

        ap_triggered = any(
            d.is_trigger and d.origin is PolicyOrigin.AUTOMATION for d in decisions
        )
        if not methods:
            if not (numeric and ap_triggered):
                return [], provenance
            # A numeric-trigger policy passed its checks on a true crossing but
            # the stale last-report already satisfied the trigger; suppressing
            # here would mask the crossing from the platform, so report an
            # obfuscated in-class value anyway.
            plan = [(self._cell_sample(event.key(), float(event.value)), 0, KIND_REPORT)]  # type: ignore[arg-type]
        elif any(m.method is Method.DIFF_KEEP for m in methods):
            call = next(m for m in methods if m.method is Method.DIFF_KEEP)
            plan = apply_method(
                call, event.value, self.store.last_reported(event.key()), self.rng,
                event.timestamp, values=desc.values, diffkeep_ms=self.config.diffkeep_ms,
            )
        elif any(m.method is Method.KEEP for m in methods):
            delay = min(m.delay_ms for m in methods if m.method is Method.KEEP)
            plan = [(event.value, delay, KIND_REPORT)]
        else:
            plan = self._merge_randomize(event.key(), methods, event.value)

        if numeric:
            plan = self._numeric_trigger_plan(event.key(), plan, event.value, prev)
        return plan, provenance

    def _merge_randomize(
        self,
        key: tuple[str, str],
        methods: list[MethodCall],
        current: Value,
    ) -> list[tuple[Value, int, str]]:
        enum_sets = [tuple(m.params) for m in methods if m.params and isinstance(m.params[0], str)]
        if enum_sets:
            members = set(enum_sets[0])
            for s in enum_sets[1:]:
                members &= set(s)
            if not members:
                return [(current, 0, KIND_REPORT)]  # no common obfuscation: keep wins
            ordered = sorted(members)
            return [(ordered[self.rng.randrange(len(ordered))], 0, KIND_REPORT)]
        lo = max(float(m.params[0]) for m in methods)
        hi = min(float(m.params[1]) for m in methods)
        if not lo < hi:
            return [(current, 0, KIND_REPORT)]
        v = sample_interval(self.rng, lo, hi)
        if v == lo or v == hi:
            v = (lo + hi) / 2.0  # strict thresholds must stay strict
        return [(v, 0, KIND_REPORT)]

    # -- numeric trigger alignment ---------------------------------------------------

    def _cell(self, key: tuple[str, str], value: float) -> tuple[float, float]:
        """The interval between adjacent trigger thresholds containing ``value``."""
        desc = self.corpus.registry.lookup(*key)
        lo, hi = float(desc.min), float(desc.max)  # type: ignore[arg-type]
        for cut in self.corpus.trigger_thresholds.get(key, ()):
            if cut <= value:
                lo = max(lo, cut)
            else:
                hi = min(hi, cut)
        return lo, hi

    def _same_cell(self, key: tuple[str, str], a: float, b: float) -> bool:
        for cut in self.corpus.trigger_thresholds.get(key, ()):
            if (a <= cut) != (b <= cut) or (a < cut) != (b < cut):
                return False
        return True

    def _cell_sample(self, key: tuple[str, str], anchor: float) -> float:
        lo, hi = self._cell(key, anchor)
        if lo == hi:
            return anchor
        v = sample_interval(self.rng, lo, hi)
        return v if self._same_cell(key, v, anchor) else anchor

    def _numeric_trigger_plan(
        self,
        key: tuple[str, str],
        plan: list[tuple[Value, int, str]],
        current: Value,
        prev: Value,
    ) -> list[tuple[Value, int, str]]:
        """Keep the platform's fire decisions aligned with the true stream.

        The reported value is resampled inside the threshold cell of the true
        reading so every forwarded rule classifies it like the truth, and a
        silent prefix re-aligns the platform's stored previous value when a
        stale report would mask (or fake) a crossing.
        """
        out: list[tuple[Value, int, str]] = []
        star = self.store.last_reported(key)
        cur = float(current)  # type: ignore[arg-type]
        for value, delay, kind in plan:
            if kind != KIND_REPORT:
                out.append((value, delay, kind))
                continue
            v = float(value)  # type: ignore[arg-type]
            if not self._same_cell(key, v, cur):
                v = self._cell_sample(key, cur)
            if isinstance(prev, (int, float)) and isinstance(star, (int, float)):
                if not self._same_cell(key, float(star), float(prev)):
                    out.append((self._cell_sample(key, float(prev)), 0, KIND_SYNC))
            out.append((v, delay, kind))
        return out

    # -- consistency repairs ------------------------------------------------------------

    def _consistency_repairs(
        self,
        event: Event,
        trigger_plan: list[tuple[Value, int, str]],
        sanctioned: set[str],
        now: int,
    ) -> list[Emission]:
        """Silent repairs so stale platform state cannot fire unsanctioned rules.

        For every forwarded rule the planned trigger report is about to fire
        on the platform: if the mediator did not sanction it and a device
        condition fails on true state, report an obfuscated value of that
        condition so the platform's check fails too. Redundancy-only
        suppressions are left alone; the raw pipeline issues the same
        (redundant) command.
        """
        reports = [(v, k) for v, _, k in trigger_plan if k == KIND_REPORT]
        if not reports:
            return []
        key = event.key()
        repairs: list[Emission] = []
        platform_prev = self.store.last_reported(key)
        for value, delay, kind in trigger_plan:
            if kind == KIND_SYNC:
                platform_prev = value
                continue
            for rule in self._forwarded_by_key.get(key, ()):
                if rule.id in sanctioned or rule.uses_history:
                    continue
                if not rule.trigger.fires(value, platform_prev):
                    continue
                failing = self._first_repairable_condition(rule)
                if failing is None:
                    continue
                if not self._platform_conditions_pass(rule, now):
                    continue
                repairs.append(self._repair_emission(failing, now))
            platform_prev = value
        return repairs

    def _first_repairable_condition(self, rule: Rule) -> Optional[Constraint]:
        for c in rule.condition:
            if c.is_time:
                continue  # the platform clock never goes stale
            if not c.satisfied_by(self.store.current(c.key())):
                return c
        return None

    def _platform_conditions_pass(self, rule: Rule, now: int) -> bool:
        for c in rule.condition:
            value = minute_of_day(now) if c.is_time else self.store.last_reported(c.key())
            if not c.satisfied_by(value):
                return False
        return True

    def _repair_emission(self, c: Constraint, now: int) -> Emission:
        desc = self.corpus.registry.lookup(c.subject, c.attribute)
        current = self.store.current(c.key())
        value: Value
        if desc.kind is AttributeKind.NUMERIC:
            value = self._sample_violating(c, desc, float(current))  # type: ignore[arg-type]
        else:
            violating = [v for v in desc.values if not c.satisfied_by(v)]
            if str(current) in violating and len(violating) > 1:
                value = violating[self.rng.randrange(len(violating))]
            elif violating:
                value = current if str(current) in violating else violating[0]
            else:
                value = current
        return self._emit(
            Emission(c.subject, c.attribute, value, now, KIND_SYNC, provenance=("repair",))
        )

    def _sample_violating(self, c: Constraint, desc, current: float) -> float:
        lo, hi = float(desc.min), float(desc.max)
        for _ in range(64):
            v = self.rng.uniform(lo, hi)
            if not c.satisfied_by(v) and self._same_cell(c.key(), v, current):
                return v
        return current

    def _time_rule_repairs(self, target_ts: int, minute: int, sanctioned: set[str]) -> list[Emission]:
        out: list[Emission] = []
        for rule in self._time_rules:
            if int(rule.trigger.value) != minute:  # type: ignore[arg-type]
                continue
            if rule.id in sanctioned:
                continue
            failing = self._first_repairable_condition(rule)
            if failing is None:
                continue
            if not self._platform_conditions_pass(rule, target_ts):
                continue
            out.append(self._repair_emission(failing, target_ts))
        return out

    # -- low level ------------------------------------------------------------------------

    def _emit_sync_decisions(self, decisions: list[ReportDecision], now: int) -> list[Emission]:
        """Emit merged check reports outside of an event context (timers, clock)."""
        by_key: dict[tuple[str, str], list[ReportDecision]] = {}
        for d in decisions:
            by_key.setdefault(d.key(), []).append(d)
        out: list[Emission] = []
        for key in sorted(by_key):
            if self._up_disposition(key, now) == "suppress":
                continue
            plan = self._merge_check_plan(key, by_key[key])
            provenance = tuple(dict.fromkeys(p for d in by_key[key] for p in d.provenance))
            for value, delay, _ in plan:
                out.append(
                    self._emit(Emission(key[0], key[1], value, now + delay, KIND_SYNC,
                                        provenance=provenance))
                )
        return out

    def _flush_key_pendings(self, key: tuple[str, str], now: int) -> list[Emission]:
        """Emit not-yet-due delayed reports on ``key`` before a newer value lands."""
        if not self._pending:
            return []
        kept: list[tuple[int, int, str, object]] = []
        flushed: list[Emission] = []
        for deadline, seq, kind, payload in sorted(self._pending):
            if kind == "emission" and isinstance(payload, Emission) and payload.key() == key:
                flushed.append(self._emit(replace(payload, timestamp=now)))
            else:
                kept.append((deadline, seq, kind, payload))
        if flushed:
            self._pending = kept
            heapq.heapify(self._pending)
        return flushed

    def _emit(self, emission: Emission) -> Emission:
        self.store.db_star[emission.key()] = (emission.value, emission.timestamp)
        self.emitted.append(emission)
        return emission

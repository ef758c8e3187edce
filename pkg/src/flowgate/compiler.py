"""Derivation of data-minimization policies from automation rules.

Each rule yields one policy whose TRIGGER mirrors the rule trigger and whose
CHECK blocks carry the rule conditions plus, for single-action rules, a
redundancy guard asserting the action target differs from the commanded
value. Rules with a held-duration trigger expand into a cooperating bundle
(start / stop policies around a timer); the copy of the rule forwarded to the
platform has the timer removed so it is not applied twice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import (
    AttributeDescriptor,
    AttributeKind,
    Constraint,
    ModelError,
    Operator,
    Registry,
    Rule,
    device_constraint,
    time_constraint,
)
from .policy import (
    CheckBlock,
    Method,
    MethodCall,
    Policy,
    PolicyOrigin,
    TriggerBlock,
    UserPolicySpec,
    block,
    diff_keep,
    keep,
)


class CompileError(ModelError):
    pass


DIFFKEEP_DELAY_DEFAULT_MS = 300


def satisfying_interval(c: Constraint, desc: AttributeDescriptor) -> tuple[float, float]:
    """The sub-interval of [min, max] whose values satisfy the numeric atom."""
    lo, hi = float(desc.min), float(desc.max)  # type: ignore[arg-type]
    op, v = c.operator, c.value
    if op is Operator.GT or op is Operator.GE:
        lo = max(lo, float(v))  # type: ignore[arg-type]
    elif op is Operator.LT or op is Operator.LE:
        hi = min(hi, float(v))  # type: ignore[arg-type]
    elif op is Operator.IN_RANGE:
        rlo, rhi = v  # type: ignore[misc]
        lo, hi = max(lo, float(rlo)), min(hi, float(rhi))
    elif op is Operator.EQ:
        lo = hi = float(v)  # type: ignore[arg-type]
    else:
        raise CompileError(f"no numeric interval for operator {op.value}")
    if lo > hi:
        raise CompileError(f"constraint {c} admits no value within bounds")
    return lo, hi


def _randomize_for(c: Constraint, desc: AttributeDescriptor) -> MethodCall:
    """Obfuscated report that still satisfies ``c`` on the platform side."""
    if desc.kind is AttributeKind.NUMERIC:
        lo, hi = satisfying_interval(c, desc)
        if lo == hi:
            return keep()  # single admissible value: nothing to hide
        return MethodCall(Method.RANDOMIZE, (lo, hi))
    if c.operator is Operator.NE:
        members = tuple(v for v in desc.values if v != c.value)
        if len(members) > 1:
            return MethodCall(Method.RANDOMIZE, members)
    return keep()


def _trigger_block(rule: Rule, registry: Registry, diffkeep_ms: int) -> TriggerBlock:
    trig = rule.trigger
    if trig.is_time:
        # The platform fires time triggers from its own clock; nothing to report.
        return TriggerBlock(match=trig, run_action=block())
    desc = registry.lookup(trig.subject, trig.attribute)
    if desc.kind is AttributeKind.NUMERIC:
        # Fig-3 scheme: suppress when the platform already holds a satisfying
        # value, obfuscate otherwise. The engine additionally repairs the
        # platform's view when its stored value masks a real crossing.
        return TriggerBlock(
            match=trig,
            fetch_star=True,
            branch=trig,
            run_action=block(),
            else_action=_randomize_for(trig, desc),
        )
    if trig.operator in (Operator.EQ, Operator.NE):
        value = str(trig.value) if trig.operator is Operator.EQ else "*"
        return TriggerBlock(
            match=trig,
            fetch_star=True,
            branch=trig,
            run_action=diff_keep(value, diffkeep_ms),
            else_action=keep(),
        )
    raise CompileError(f"rule {rule.id}: unsupported trigger operator {trig.operator.value}")


def _condition_check(c: Constraint, registry: Registry) -> CheckBlock:
    if c.is_time:
        return CheckBlock(fetch=c)
    desc = registry.lookup(c.subject, c.attribute)
    if desc.kind is AttributeKind.NUMERIC:
        return CheckBlock(
            fetch=c,
            fetch_star=True,
            branch=c,
            run_action=block(),
            else_action=_randomize_for(c, desc),
        )
    return CheckBlock(
        fetch=c,
        fetch_star=True,
        branch=c,
        run_action=block(),
        else_action=_randomize_for(c, desc),
    )


def _redundancy_checks(rule: Rule) -> list[CheckBlock]:
    # Suppression is per-policy, so a conjunctive guard over several actions
    # would block reports other actions still need; and a delayed action's
    # redundancy is decided at issue time, which trigger-time state cannot
    # predict. Derive the guard only for a single immediate action.
    if len(rule.actions) != 1 or rule.actions[0].delay_ms:
        return []
    act = rule.actions[0]
    guard = device_constraint(act.device, act.attribute, Operator.NE, act.value)
    return [CheckBlock(fetch=guard)]


def derive_policy(rule: Rule, registry: Registry, diffkeep_ms: int = DIFFKEEP_DELAY_DEFAULT_MS) -> Policy:
    """Derive the data-minimization policy for a rule without a held-duration trigger."""
    if rule.condition_timer is not None:
        raise CompileError(f"rule {rule.id} has a timer; derive a bundle instead")
    rule.validate(registry)
    if rule.uses_history:
        # Rules over historical values pass everything through unfiltered.
        trig = rule.trigger
        any_match = Constraint(trig.type, trig.subject, trig.attribute, Operator.ANY, None)
        return Policy(
            id=f"ap:{rule.id}",
            origin=PolicyOrigin.AUTOMATION,
            source_id=rule.id,
            trigger_block=TriggerBlock(match=any_match, run_action=keep()),
        )
    checks = [_condition_check(c, registry) for c in rule.condition]
    checks.extend(_redundancy_checks(rule))
    return Policy(
        id=f"ap:{rule.id}",
        origin=PolicyOrigin.AUTOMATION,
        source_id=rule.id,
        trigger_block=_trigger_block(rule, registry, diffkeep_ms),
        check_blocks=tuple(checks),
    )


def _negate(c: Constraint) -> Constraint:
    inverse = {
        Operator.EQ: Operator.NE,
        Operator.NE: Operator.EQ,
        Operator.GT: Operator.LE,
        Operator.GE: Operator.LT,
        Operator.LT: Operator.GE,
        Operator.LE: Operator.GT,
    }
    if c.operator not in inverse:
        raise CompileError(f"cannot watch {c} over a duration")
    return Constraint(c.type, c.subject, c.attribute, inverse[c.operator], c.value)


def derive_timer_bundle(
    rule: Rule, registry: Registry, diffkeep_ms: int = DIFFKEEP_DELAY_DEFAULT_MS
) -> list[Policy]:
    """Expand a held-duration rule into a start/stop policy pair.

    The start policy arms a timer and registers the report of the watched
    event as its callback; the stop policy cancels the timer when the watched
    constraint stops holding. Conditions and the redundancy guard are
    evaluated when the timer fires, which is when the platform-side copy of
    the rule (with the timer stripped) must execute.
    """
    timer = rule.condition_timer
    if timer is None:
        raise CompileError(f"rule {rule.id} has no timer")
    rule.validate(registry)
    watched = timer.watched
    if watched.is_time:
        raise CompileError(f"rule {rule.id}: cannot watch a time constraint")
    checks = [_condition_check(c, registry) for c in rule.condition]
    checks.extend(_redundancy_checks(rule))
    stripped = strip_timer(rule)
    start = Policy(
        id=f"ap:{rule.id}:start",
        origin=PolicyOrigin.AUTOMATION,
        source_id=rule.id,
        trigger_block=_trigger_block(stripped, registry, diffkeep_ms),
        check_blocks=tuple(checks),
        timer_start=rule.id,
        timer_duration_ms=timer.duration_ms,
    )
    stop = Policy(
        id=f"ap:{rule.id}:stop",
        origin=PolicyOrigin.AUTOMATION,
        source_id=rule.id,
        trigger_block=TriggerBlock(match=_negate(watched), run_action=block()),
        timer_stop=rule.id,
    )
    return [start, stop]


def strip_timer(rule: Rule) -> Rule:
    """The copy of a timer rule forwarded to the platform, timer removed."""
    if rule.condition_timer is None:
        return rule
    return Rule(
        id=rule.id,
        trigger=rule.condition_timer.watched,
        condition=rule.condition,
        condition_timer=None,
        actions=rule.actions,
        uses_history=rule.uses_history,
    )


def encode_user_policy(spec: UserPolicySpec, registry: Registry) -> Policy:
    """Encode a whitelist/blacklist/conditional user policy."""
    if spec.target_attribute is not None:
        registry.lookup(spec.target_device, spec.target_attribute)
    elif spec.target_device not in registry.devices:
        raise CompileError(f"unknown device {spec.target_device!r}")
    attr = spec.target_attribute if spec.target_attribute is not None else "*"
    match = Constraint("device", spec.target_device, attr, Operator.ANY, None)
    if spec.style == "whitelist":
        action = keep()
    elif spec.style == "blacklist":
        action = block()
    else:
        assert spec.action is not None
        action = spec.action
    checks: list[CheckBlock] = []
    if spec.window is not None:
        checks.append(CheckBlock(fetch=time_constraint(Operator.IN_WINDOW, spec.window)))
    for c in spec.context:
        registry.lookup(c.subject, c.attribute)
        checks.append(CheckBlock(fetch=c))
    return Policy(
        id=f"up:{spec.id}",
        origin=PolicyOrigin.USER,
        source_id=spec.id,
        trigger_block=TriggerBlock(match=match, run_action=action),
        check_blocks=tuple(checks),
    )


@dataclass
class CompiledCorpus:
    """Everything the engine and the simulated platform need for one home."""

    registry: Registry
    policies: list[Policy] = field(default_factory=list)        # UPs first, then APs
    user_policies: list[Policy] = field(default_factory=list)
    automation_policies: list[Policy] = field(default_factory=list)
    forwarded_rules: list[Rule] = field(default_factory=list)   # platform-side rule set
    tag_gated: set[str] = field(default_factory=set)            # rule ids firing on expiry only
    trigger_thresholds: dict[tuple[str, str], tuple[float, ...]] = field(default_factory=dict)

    def policy_by_id(self, policy_id: str) -> Policy:
        for p in self.policies:
            if p.id == policy_id:
                return p
        raise KeyError(policy_id)


def compile_corpus(
    rules: list[Rule],
    user_specs: list[UserPolicySpec],
    registry: Registry,
    diffkeep_ms: int = DIFFKEEP_DELAY_DEFAULT_MS,
) -> CompiledCorpus:
    corpus = CompiledCorpus(registry=registry)
    for spec in user_specs:
        corpus.user_policies.append(encode_user_policy(spec, registry))
    for rule in rules:
        if rule.condition_timer is not None:
            corpus.automation_policies.extend(derive_timer_bundle(rule, registry, diffkeep_ms))
            corpus.forwarded_rules.append(strip_timer(rule))
            corpus.tag_gated.add(rule.id)
        else:
            corpus.automation_policies.append(derive_policy(rule, registry, diffkeep_ms))
            corpus.forwarded_rules.append(rule)
    corpus.policies = [*corpus.user_policies, *corpus.automation_policies]
    corpus.trigger_thresholds = _collect_thresholds(corpus.forwarded_rules, registry)
    _validate_references(corpus)
    return corpus


def _collect_thresholds(rules: list[Rule], registry: Registry) -> dict[tuple[str, str], tuple[float, ...]]:
    """Numeric trigger thresholds per attribute, for value-class-preserving reports."""
    out: dict[tuple[str, str], set[float]] = {}
    for rule in rules:
        trig = rule.trigger
        if trig.is_time:
            continue
        desc = registry.lookup(trig.subject, trig.attribute)
        if desc.kind is not AttributeKind.NUMERIC:
            continue
        cuts = out.setdefault(trig.key(), set())
        if trig.operator is Operator.IN_RANGE:
            lo, hi = trig.value  # type: ignore[misc]
            cuts.update((float(lo), float(hi)))
        elif trig.operator is not Operator.ANY:
            cuts.add(float(trig.value))  # type: ignore[arg-type]
    return {k: tuple(sorted(v)) for k, v in out.items()}


def _validate_references(corpus: CompiledCorpus) -> None:
    for policy in corpus.policies:
        for device, attribute in policy.referenced_pairs():
            if attribute == "*":
                if device not in corpus.registry.devices:
                    raise CompileError(f"policy {policy.id}: unknown device {device!r}")
            else:
                corpus.registry.lookup(device, attribute)

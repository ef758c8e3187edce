import random

import pytest
from hypothesis import given, strategies as st

from flowgate.dsl import (
    ParseError,
    format_trace,
    load_home,
    parse_rule,
    parse_rules,
    parse_trace,
    print_rule,
)
from flowgate.model import Event, Operator


def test_parse_condition_rule(mini_registry):
    rule = parse_rule(
        "when ps1.presence == present if ts1.temperature > 86 then f1.switch := on",
        mini_registry,
    )
    assert rule.trigger.key() == ("ps1", "presence")
    assert rule.trigger.operator is Operator.EQ
    assert len(rule.condition) == 1
    assert rule.condition[0].operator is Operator.GT
    assert rule.actions[0].device == "f1"
    assert rule.condition_timer is None


def test_parse_trigger_action_rule(mini_registry):
    rule = parse_rule("when ts1.temperature > 86 then f1.switch := on", mini_registry)
    assert rule.condition == ()
    assert rule.trigger.key() == ("ts1", "temperature")


def test_parse_timer_rule(mini_registry):
    rule = parse_rule(
        "when mo1.motion == inactive for 300000 then sl1.switch := off", mini_registry
    )
    assert rule.condition_timer is not None
    assert rule.condition_timer.duration_ms == 300000
    assert rule.condition_timer.watched == rule.trigger


def test_parse_time_window_and_delay(mini_registry):
    rule = parse_rule(
        "when mo1.motion == inactive if time.clock in 17:00..08:00"
        " then sl1.switch := off after 600000",
        mini_registry,
    )
    assert rule.condition[0].is_time
    assert rule.actions[0].delay_ms == 600000


def test_parse_multi_action_and_history(mini_registry):
    rule = parse_rule(
        "when ps1.presence == present then f1.switch := on, sl1.switch := on pass-history",
        mini_registry,
    )
    assert len(rule.actions) == 2
    assert rule.uses_history


def test_parse_errors_have_positions(mini_registry):
    with pytest.raises(ParseError) as err:
        parse_rule("when ps1.presence == present then", mini_registry)
    assert "line" in str(err.value)
    with pytest.raises(ParseError):
        parse_rule("when nodev.presence == present then f1.switch := on", mini_registry)
    with pytest.raises(ParseError):
        # Ordering operator on a binary attribute.
        parse_rule("when ps1.presence > present then f1.switch := on", mini_registry)
    with pytest.raises(ParseError):
        # Value outside the attribute's vocabulary.
        parse_rule("when ps1.presence == maybe then f1.switch := on", mini_registry)
    with pytest.raises(ParseError):
        # Read-only attribute in an action.
        parse_rule("when ps1.presence == present then ts1.temperature := 70", mini_registry)


RULE_LINES = [
    "r1: when ps1.presence == present if ts1.temperature > 86 then f1.switch := on",
    "r2: when ts1.temperature > 86 then f1.switch := on",
    "r3: when mo1.motion == inactive for 300000 then sl1.switch := off",
    "r4: when mo1.motion == active if time.clock in 10:00..01:00 and mode1.mode != vacation"
    " then sl1.switch := on",
    "r5: when time.clock == 07:00 then f1.switch := on",
    "r6: when am1.humidity in 40..60 then sl1.switch := on, f1.switch := off after 1500",
]


@pytest.mark.parametrize("line", RULE_LINES)
def test_print_parse_round_trip(line, mini_registry):
    rule = parse_rule(line, mini_registry)
    printed = print_rule(rule)
    assert parse_rule(printed, mini_registry) == rule
    # And printing is a fixed point.
    assert print_rule(parse_rule(printed, mini_registry)) == printed


def test_parse_rules_skips_comments(mini_registry):
    text = "# header\n\n" + RULE_LINES[0] + "\n  # tail\n"
    assert len(parse_rules(text, mini_registry)) == 1


def test_parse_rules_rejects_duplicate_ids(mini_registry):
    text = RULE_LINES[0] + "\n" + RULE_LINES[0]
    with pytest.raises(ParseError):
        parse_rules(text, mini_registry)


def test_parse_trace_orders_and_dedupes(mini_registry):
    text = (
        "3000 ts1 temperature 90\n"
        "1000 ps1 presence present\n"
        "3000 ts1 temperature 90\n"   # exact duplicate
        "2000 mo1 motion active\n"
    )
    events = parse_trace(text, mini_registry, tolerance_ms=5000)
    assert [e.timestamp for e in events] == [1000, 2000, 3000]
    assert events[2].value == 90.0


def test_parse_trace_bounds_error(mini_registry):
    with pytest.raises(ParseError):
        parse_trace("1000 ts1 temperature 20000\n", mini_registry)


def test_parse_trace_regression_error(mini_registry):
    text = "5000 ts1 temperature 90\n1000 ts1 temperature 80\n"
    with pytest.raises(ParseError):
        parse_trace(text, mini_registry, tolerance_ms=0)


def test_trace_round_trip_idempotent(mini_registry):
    rng = random.Random(5)
    events = []
    t = 0
    for _ in range(200):
        t += rng.randrange(1, 5000)
        events.append(Event("ts1", "temperature", float(rng.randrange(-100, 200)), t))
    parsed = parse_trace(format_trace(events), mini_registry)
    again = parse_trace(format_trace(parsed), mini_registry)
    assert parsed == again


@given(st.lists(st.sampled_from(["active", "inactive"]), min_size=1, max_size=40))
def test_trace_values_conform_to_descriptor(values):
    import yaml
    from tests.conftest import MINI_HOME

    registry = load_home(yaml.safe_dump(MINI_HOME))
    text = "".join(f"{1000 * i} mo1 motion {v}\n" for i, v in enumerate(values))
    for event in parse_trace(text, registry):
        assert event.value in ("active", "inactive")


def test_home_loader_keeps_on_off_strings(mini_registry):
    # YAML 1.1 would read bare on/off as booleans; the loader must not.
    desc = mini_registry.lookup("f1", "switch")
    assert desc.values == ("on", "off")
    assert mini_registry.initial_state("f1", "switch") == "off"


def test_home_loader_requires_bounds_for_unknown_numeric():
    import yaml
    home = {
        "name": "h",
        "devices": [{"id": "x1", "attributes": [
            {"name": "frobnication", "kind": "numeric", "initial": 1}
        ]}],
    }
    with pytest.raises(Exception):
        load_home(yaml.safe_dump(home))

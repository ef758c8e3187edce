"""Synthetic homes, rule packs and sensor traces for simulation runs.

Four testbed analogues (an office and three apartments) cover the full range
of rule shapes: plain trigger-action, device and time-of-day conditions,
held-duration triggers, delayed actions, multi-action rules, clock triggers
and mode-style enumerated conditions. Trace generation is seeded and
deterministic; only read-only sensor attributes emit spontaneously, while
writable attributes change through commands alone.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

import yaml

from .dsl import load_home, parse_rules
from .model import MS_PER_DAY, MS_PER_MINUTE, Event, Registry
from .policy import UserPolicySpec
from .scenario import parse_user_policies


def _binary(name: str, values: tuple[str, str], active: str, initial: str,
            writable: bool = False) -> dict:
    return {
        "name": name, "kind": "binary", "values": list(values), "active": active,
        "initial": initial, "writable": writable,
    }


def _motion(initial: str = "inactive") -> dict:
    return _binary("motion", ("active", "inactive"), "active", initial)


def _contact(initial: str = "closed") -> dict:
    return _binary("contact", ("open", "closed"), "open", initial)


def _presence(initial: str = "not-present") -> dict:
    return _binary("presence", ("present", "not-present"), "present", initial)


def _water(initial: str = "dry") -> dict:
    return _binary("water", ("wet", "dry"), "wet", initial)


def _switch(initial: str = "off") -> dict:
    return _binary("switch", ("on", "off"), "on", initial, writable=True)


def _numeric(name: str, lo: float, hi: float, initial: float, unit: str = "") -> dict:
    return {"name": name, "kind": "numeric", "min": lo, "max": hi, "initial": initial,
            "unit": unit}


def _temperature(initial: float = 72.0) -> dict:
    return {"name": "temperature", "kind": "numeric", "initial": initial, "unit": "F"}


def _device(dev_id: str, label: str, room: str, *attrs: dict) -> dict:
    return {"id": dev_id, "label": label, "room": room, "attributes": list(attrs)}


def _message(*alerts: str) -> dict:
    return {
        "name": "message", "kind": "enumerated", "values": ["none", *alerts],
        "initial": "none", "writable": True,
    }


@dataclass
class Testbed:
    name: str
    home: dict
    rules_text: str
    ups_text: Optional[str] = None

    def registry(self) -> Registry:
        return load_home(yaml.safe_dump(self.home))

    def rules(self, registry: Optional[Registry] = None):
        return parse_rules(self.rules_text, registry or self.registry())

    def user_specs(self, registry: Optional[Registry] = None) -> list[UserPolicySpec]:
        if not self.ups_text:
            return []
        return parse_user_policies(self.ups_text, registry or self.registry())


def _t1() -> Testbed:
    home = {
        "name": "t1-office",
        "devices": [
            _device("mu1", "front door multipurpose", "entrance", _contact(), _temperature()),
            _device("mo1", "office motion", "office", _motion(), _temperature()),
            _device("ol1", "coffee machine outlet", "kitchen", _switch(),
                    _numeric("power", 0, 3000, 0, "W")),
            _device("ol2", "heater outlet", "office", _switch(),
                    _numeric("power", 0, 3000, 0, "W")),
            _device("sl1", "office light", "office", _switch()),
            *[
                _device(f"pr{i}", f"presence fob {i}", "office", _presence())
                for i in range(1, 6)
            ],
            _device("msg1", "notifier", "virtual", _message("alert-motion", "alert-door")),
        ],
    }
    quiet = " and ".join(f"pr{i}.presence == not-present" for i in range(1, 6))
    guests = " and ".join(f"pr{i}.presence == not-present" for i in range(2, 6))
    rules = "\n".join([
        "r1: when mu1.contact == open then sl1.switch := on",
        f"r2: when mo1.motion == inactive for 300000 if {quiet} then sl1.switch := off",
        "r3: when pr1.presence == present if time.clock in 00:00..12:00 then ol1.switch := on",
        "r4: when mo1.motion == active if mu1.temperature < 70 then ol2.switch := on",
        "r5: when mo1.motion == active for 3600000 then msg1.message := alert-motion",
        f"r6: when mu1.contact == open if {guests} then msg1.message := alert-door",
    ])
    ups = yaml.safe_dump([
        {"id": "up1", "style": "blacklist",
         "target": {"device": "mo1", "attribute": "motion"},
         "window": {"start": "17:00", "end": "08:00"}},
        {"id": "up2", "style": "blacklist",
         "target": {"device": "mu1", "attribute": "contact"},
         "window": {"start": "10:00", "end": "18:00"}},
    ])
    return Testbed("t1", home, rules, ups)


def _t2() -> Testbed:
    home = {
        "name": "t2-apartment",
        "devices": [
            _device("mu2", "front door multipurpose", "entrance", _contact(), _temperature()),
            _device("mu3", "bedroom door", "bedroom", _contact(), _temperature()),
            _device("mu4", "wardrobe door", "bedroom", _contact(), _temperature()),
            _device("mo2", "living room motion", "living", _motion(), _temperature()),
            _device("mo3", "bathroom motion", "bathroom", _motion(), _temperature()),
            _device("ol3", "oven outlet", "kitchen", _switch(),
                    _numeric("power", 0, 3000, 0, "W")),
            _device("ol4", "heater outlet", "living", _switch(),
                    _numeric("power", 0, 3000, 0, "W")),
            _device("sl2", "hall light", "entrance", _switch()),
            _device("sl3", "living light", "living", _switch()),
            _device("sl4", "bedroom light", "bedroom", _switch()),
            _device("sl5", "wardrobe light", "bedroom", _switch()),
            _device("am1", "living multisensor", "living", _motion(),
                    {"name": "humidity", "kind": "numeric", "initial": 50.0, "unit": "%"},
                    {"name": "luminance", "kind": "numeric", "initial": 120.0, "unit": "lux"}),
            _device("am2", "bathroom multisensor", "bathroom", _motion(),
                    {"name": "humidity", "kind": "numeric", "initial": 55.0, "unit": "%"},
                    {"name": "luminance", "kind": "numeric", "initial": 80.0, "unit": "lux"}),
            _device("pr6", "presence fob", "living", _presence()),
            _device("msg2", "notifier", "virtual", _message("alert-motion", "alert-humidity")),
        ],
    }
    rules = "\n".join([
        "r7: when mu2.contact == open then sl2.switch := on",
        "r8: when mo2.motion == active if am1.luminance < 15 then sl3.switch := on",
        "r9: when pr6.presence == present if time.clock in 17:00..20:00 then ol3.switch := on",
        "r10: when mo2.motion == active if pr6.presence == not-present then msg2.message := alert-motion",
        "r11a: when mu4.contact == open then sl5.switch := on",
        "r11b: when mu4.contact == closed then sl5.switch := off",
        "r12a: when mo2.motion == active if mu3.temperature < 68 then ol4.switch := on",
        "r12b: when mo2.motion == inactive for 1200000 then ol4.switch := off",
        "r13a: when mu3.contact == open then sl4.switch := on",
        "r13b: when mo3.motion == inactive for 300000 if mu3.contact == closed then sl4.switch := off",
        "r14: when mo3.motion == inactive for 1800000 if am2.motion == active and am2.humidity > 85"
        " then msg2.message := alert-humidity",
    ])
    return Testbed("t2", home, rules)


def _t3() -> Testbed:
    home = {
        "name": "t3-apartment",
        "devices": [
            _device("mu5", "front door multipurpose", "entrance", _contact(), _temperature()),
            _device("mu6", "bathroom door", "bathroom", _contact(), _temperature()),
            _device("mo4", "bathroom motion", "bathroom", _motion(), _temperature()),
            _device("mo5", "study room motion", "study", _motion(), _temperature()),
            _device("mo6", "bedroom motion", "bedroom", _motion(), _temperature()),
            _device("ol5", "coffee machine outlet", "kitchen", _switch(),
                    _numeric("power", 0, 3000, 0, "W")),
            _device("ol6", "microwave outlet", "kitchen", _switch(),
                    _numeric("power", 0, 3000, 0, "W")),
            _device("ol7", "hallway lamp outlet", "entrance", _switch(),
                    _numeric("power", 0, 3000, 0, "W")),
            _device("sw1", "bathroom fan switch", "bathroom", _switch()),
            _device("sw2", "bathroom light switch", "bathroom", _switch()),
            _device("sw3", "bedroom light switch", "bedroom", _switch()),
            _device("ws1", "bathroom water sensor", "bathroom", _water(), _temperature()),
            _device("wl1", "sink water leakage", "kitchen", _water(), _temperature()),
            _device("hm1", "kitchen motion", "kitchen", _motion(), _temperature(),
                    {"name": "luminance", "kind": "numeric", "initial": 150.0, "unit": "lux"}),
            _device("hm2", "study desk motion", "study", _motion(), _temperature(),
                    {"name": "luminance", "kind": "numeric", "initial": 150.0, "unit": "lux"}),
            _device("hb1", "study bulb one", "study", _switch()),
            _device("hb2", "study bulb two", "study", _switch()),
            _device("lb1", "desk lamp", "study", _switch()),
            _device("msg3", "notifier", "virtual", _message("alert-leak")),
        ],
    }
    all_quiet = " and ".join(
        f"{d}.motion == inactive" for d in ("mo4", "mo5", "mo6", "hm1", "hm2")
    )
    rules = "\n".join([
        "r15: when mo6.motion == active if time.clock in 10:00..00:00 then sw3.switch := on",
        "r16: when hm1.motion == active if time.clock in 07:00..00:00 then ol6.switch := on",
        f"r17: when wl1.water == wet if {all_quiet} then msg3.message := alert-leak",
        "r18: when mu5.contact == open if hm2.luminance < 30 then lb1.switch := on, ol7.switch := on",
        "r19: when mo4.motion == active if ws1.water == wet then sw1.switch := on",
        "r20a: when time.clock == 07:00 then ol5.switch := on",
        "r20b: when time.clock == 18:00 then ol5.switch := off",
        "r21: when mo4.motion == active if time.clock in 10:00..01:00 then sw2.switch := on",
        "r22: when mo4.motion == inactive if mu6.contact == closed then sw2.switch := off after 600000",
        "r23: when mo5.motion == active if time.clock in 09:00..00:00 and hm2.luminance < 30"
        " then lb1.switch := on, ol7.switch := on, hb1.switch := on, hb2.switch := on",
        "r24: when hm2.motion == active if time.clock in 09:00..00:00 and hm2.luminance < 30"
        " then lb1.switch := on, ol7.switch := on, hb1.switch := on, hb2.switch := on",
    ])
    return Testbed("t3", home, rules)


def _t4() -> Testbed:
    home = {
        "name": "t4-apartment",
        "devices": [
            _device("mu7", "kitchen window sensor", "kitchen", _contact(), _temperature()),
            _device("mu8", "bathroom door", "bathroom", _contact(), _temperature()),
            _device("mu9", "front door multipurpose", "entrance", _contact(), _temperature()),
            _device("mo7", "living room motion", "living", _motion(), _temperature()),
            _device("hm3", "bathroom motion", "bathroom", _motion(), _temperature(),
                    {"name": "luminance", "kind": "numeric", "initial": 100.0, "unit": "lux"}),
            _device("hm4", "stovetop motion", "kitchen", _motion(), _temperature(),
                    {"name": "luminance", "kind": "numeric", "initial": 100.0, "unit": "lux"}),
            _device("hm5", "study room motion", "study", _motion(), _temperature(),
                    {"name": "luminance", "kind": "numeric", "initial": 100.0, "unit": "lux"}),
            _device("hm6", "bedroom motion", "bedroom", _motion(), _temperature(),
                    {"name": "luminance", "kind": "numeric", "initial": 100.0, "unit": "lux"}),
            _device("ol8", "lamp outlet", "kitchen", _switch(),
                    _numeric("power", 0, 3000, 0, "W")),
            _device("sw4", "bathroom light switch", "bathroom", _switch()),
            _device("hb3", "bathroom bulb", "bathroom", _switch()),
            _device("hb4", "study bulb", "study", _switch()),
            _device("hb5", "bedroom bulb", "bedroom", _switch()),
            _device("lb2", "living room bulb", "living", _switch()),
            _device("hs1", "mode switch", "living", {
                "name": "button", "kind": "enumerated",
                "values": ["none", "button1", "button2", "button3"], "initial": "none",
            }),
            _device("dl1", "hallway dimmer", "entrance",
                    _numeric("level", 0, 100, 0, "%") | {"writable": True}),
        ],
    }
    rules = "\n".join([
        "r25a: when hm4.motion == active if hs1.button == button1 then ol8.switch := on",
        "r25b: when hm4.motion == active if hs1.button == button3 then ol8.switch := on",
        "r26: when hm4.motion == inactive for 300000 then ol8.switch := off",
        "r27a: when mo7.motion == active if hs1.button == button1 then lb2.switch := on",
        "r27b: when mo7.motion == active if hs1.button == button3 then lb2.switch := on",
        "r28: when mo7.motion == inactive for 1200000 then lb2.switch := off",
        "r29a: when hm3.motion == active if hs1.button == button1"
        " then sw4.switch := on, hb3.switch := on",
        "r29b: when hm3.motion == active if hs1.button == button3"
        " then sw4.switch := on, hb3.switch := on",
        "r29c: when hm3.motion == active if hs1.button == button2 then sw4.switch := on",
        "r30: when hm3.motion == inactive for 900000 if mu8.contact == open"
        " then sw4.switch := off, hb3.switch := off",
        "r31: when hm6.motion == active if hs1.button == button1 then hb5.switch := on",
        "r32: when hm6.motion == inactive for 600000 then hb5.switch := off",
        "r33a: when hm5.motion == active if hs1.button == button1 then hb4.switch := on",
        "r33b: when hm5.motion == active if hs1.button == button3 then hb4.switch := on",
        "r34: when hm5.motion == inactive for 1800000 then hb4.switch := off",
        "r35: when mu9.contact == open then dl1.level := 100, dl1.level := 0 after 300000",
    ])
    return Testbed("t4", home, rules)


def testbed(name: str) -> Testbed:
    builders = {"t1": _t1, "t2": _t2, "t3": _t3, "t4": _t4}
    if name not in builders:
        raise KeyError(f"unknown testbed {name!r}; have {sorted(builders)}")
    return builders[name]()


ALL_TESTBEDS = ("t1", "t2", "t3", "t4")


# ---------------------------------------------------------------------------
# Trace generation
# ---------------------------------------------------------------------------

EVENT_GRID_MS = 2000


@dataclass
class _Stream:
    """Collects generated events on a coarse time grid.

    The grid keeps every sensor event clear of the short window in which the
    mediated and raw pipelines' actuation times differ (one-way transmission
    plus the alternation-repair delay, well under two seconds), so state
    guards never observe transient divergence. Real sensors debounce far
    more coarsely than this anyway.
    """

    events: list[Event] = field(default_factory=list)

    def add(self, ts: int, device: str, attribute: str, value) -> None:
        self.events.append(Event(device, attribute, value, int(ts) // EVENT_GRID_MS * EVENT_GRID_MS))


def generate_trace(registry: Registry, seed: int = 0, days: int = 7,
                   events_target: int = 10_000) -> list[Event]:
    """Deterministic sensor trace: read-only attributes only.

    Motion comes in bursts with long quiet gaps so held-duration rules both
    fire and get cancelled; numeric sensors random-walk across the rule
    thresholds; presence follows daily leave/return cycles. Numeric chatter
    is scaled up until the event budget is met.
    """
    boost = 1.0
    while True:
        events = _generate_once(registry, seed, days, events_target, boost)
        if len(events) >= events_target or boost > 16:
            return events
        boost *= 1.4


def _generate_once(registry: Registry, seed: int, days: int, events_target: int,
                   boost: float) -> list[Event]:
    rng = random.Random(seed)
    horizon = days * MS_PER_DAY
    stream = _Stream()

    sensors = []
    for dev_id, dev in sorted(registry.devices.items()):
        for attr_name, desc in sorted(dev.attributes.items()):
            if desc.writable:
                continue
            sensors.append((dev_id, attr_name, desc, dev))

    numeric_rate = max(
        2 * MS_PER_MINUTE, int(_numeric_rate(registry, sensors, days, events_target) / boost)
    )

    for dev_id, attr_name, desc, dev in sensors:
        if attr_name == "motion":
            _gen_motion(stream, rng, dev_id, horizon)
        elif attr_name == "contact":
            busy = "front" in dev.label or "bathroom" in dev.label
            _gen_contact(stream, rng, dev_id, horizon, busy)
        elif attr_name == "presence":
            _gen_presence(stream, rng, dev_id, horizon)
        elif attr_name == "water":
            _gen_water(stream, rng, dev_id, horizon)
        elif attr_name == "button":
            _gen_button(stream, rng, dev_id, horizon, desc.values)
        elif attr_name == "temperature":
            _gen_walk(stream, rng, dev_id, attr_name, horizon, numeric_rate,
                      base=float(dev.initial.get(attr_name, 72.0)), span=6.0,
                      lo=desc.min, hi=desc.max)
        elif attr_name == "humidity":
            _gen_walk(stream, rng, dev_id, attr_name, horizon, numeric_rate,
                      base=float(dev.initial.get(attr_name, 55.0)), span=35.0,
                      lo=desc.min, hi=desc.max)
        elif attr_name == "luminance":
            _gen_luminance(stream, rng, dev_id, horizon, numeric_rate)
        elif attr_name == "power":
            _gen_power(stream, rng, dev_id, horizon, dev.label)

    stream.events.sort(key=lambda e: (e.timestamp, e.device, e.attribute))
    return _dedupe_same_instant(stream.events)


def _numeric_rate(registry: Registry, sensors, days: int, target: int) -> int:
    numeric_streams = sum(
        1 for _, a, d, _ in sensors if a in ("temperature", "humidity", "luminance")
    )
    if numeric_streams == 0:
        return 15 * MS_PER_MINUTE
    # Spend roughly 70% of the event budget on numeric chatter.
    per_stream = max(1, int(0.7 * target / numeric_streams / max(days, 1)))
    period = max(2 * MS_PER_MINUTE, MS_PER_DAY // per_stream)
    return period


def _jitter(rng: random.Random, period: int) -> int:
    return int(period * rng.uniform(0.6, 1.4))


def _gen_motion(stream: _Stream, rng: random.Random, dev: str, horizon: int) -> None:
    t = rng.randrange(5 * MS_PER_MINUTE, 90 * MS_PER_MINUTE)
    while t < horizon:
        burst = rng.randrange(1, 5)
        for _ in range(burst):
            stream.add(t, dev, "motion", "active")
            hold = rng.randrange(30_000, 8 * MS_PER_MINUTE)
            t += hold
            if t >= horizon:
                return
            stream.add(t, dev, "motion", "inactive")
            t += rng.randrange(20_000, 4 * MS_PER_MINUTE)
            if t >= horizon:
                return
        # Long quiet gap lets expiry timers run out.
        t += rng.randrange(25 * MS_PER_MINUTE, 4 * 60 * MS_PER_MINUTE)


def _gen_contact(stream: _Stream, rng: random.Random, dev: str, horizon: int,
                 busy: bool) -> None:
    per_day = rng.randrange(6, 14) if busy else rng.randrange(2, 6)
    t = rng.randrange(10 * MS_PER_MINUTE, 3 * 60 * MS_PER_MINUTE)
    step = MS_PER_DAY // per_day
    while t < horizon:
        stream.add(t, dev, "contact", "open")
        close = t + rng.randrange(10_000, 20 * MS_PER_MINUTE)
        if close >= horizon:
            return
        stream.add(close, dev, "contact", "closed")
        t = close + _jitter(rng, step)


def _gen_presence(stream: _Stream, rng: random.Random, dev: str, horizon: int) -> None:
    for day in range(0, horizon, MS_PER_DAY):
        arrive = day + rng.randrange(7 * 60, 11 * 60) * MS_PER_MINUTE
        leave = day + rng.randrange(16 * 60, 21 * 60) * MS_PER_MINUTE
        if arrive < horizon:
            stream.add(arrive, dev, "presence", "present")
        if leave < horizon:
            stream.add(leave, dev, "presence", "not-present")


def _gen_water(stream: _Stream, rng: random.Random, dev: str, horizon: int) -> None:
    t = rng.randrange(MS_PER_DAY // 2, 2 * MS_PER_DAY)
    while t < horizon:
        stream.add(t, dev, "water", "wet")
        dry = t + rng.randrange(2 * MS_PER_MINUTE, 30 * MS_PER_MINUTE)
        if dry >= horizon:
            return
        stream.add(dry, dev, "water", "dry")
        t = dry + rng.randrange(MS_PER_DAY, 3 * MS_PER_DAY)


def _gen_button(stream: _Stream, rng: random.Random, dev: str, horizon: int,
                values) -> None:
    presses = [v for v in values if v != "none"]
    t = rng.randrange(30 * MS_PER_MINUTE, 4 * 60 * MS_PER_MINUTE)
    last = None
    while t < horizon:
        choice = presses[rng.randrange(len(presses))]
        if choice != last:
            stream.add(t, dev, "button", choice)
            last = choice
        t += rng.randrange(2 * 3600_000, 9 * 3600_000)


def _gen_walk(stream: _Stream, rng: random.Random, dev: str, attr: str, horizon: int,
              period: int, base: float, span: float, lo: float, hi: float) -> None:
    value = base
    t = rng.randrange(period)
    while t < horizon:
        value += rng.uniform(-span / 8, span / 8)
        value = max(lo, min(hi, max(base - span, min(base + span, value))))
        stream.add(t, dev, attr, round(value, 1))
        t += _jitter(rng, period)


def _gen_luminance(stream: _Stream, rng: random.Random, dev: str, horizon: int,
                   period: int) -> None:
    t = rng.randrange(period)
    while t < horizon:
        minute = (t // MS_PER_MINUTE) % 1440
        daylight = max(0.0, 1.0 - abs(minute - 780) / 480)  # peaks at 13:00
        value = 5.0 + 180.0 * daylight + rng.uniform(-8.0, 8.0)
        stream.add(t, dev, "luminance", round(max(0.0, value), 1))
        t += _jitter(rng, period)


def _gen_power(stream: _Stream, rng: random.Random, dev: str, horizon: int,
               label: str) -> None:
    spiky = "coffee" in label or "microwave" in label or "oven" in label
    for day in range(0, horizon, MS_PER_DAY):
        for _ in range(rng.randrange(1, 4) if spiky else 1):
            at = day + rng.randrange(6 * 60, 22 * 60) * MS_PER_MINUTE
            if at >= horizon:
                continue
            peak = rng.uniform(1100, 1600) if spiky else rng.uniform(5, 60)
            stream.add(at, dev, "power", round(peak, 1))
            off = at + rng.randrange(MS_PER_MINUTE, 10 * MS_PER_MINUTE)
            if off < horizon:
                stream.add(off, dev, "power", round(rng.uniform(0, 2), 1))


def _dedupe_same_instant(events: list[Event]) -> list[Event]:
    """One value per (device, attribute, timestamp); later generators lose."""
    seen: set[tuple[str, str, int]] = set()
    out = []
    for e in events:
        key = (e.device, e.attribute, e.timestamp)
        if key in seen:
            continue
        seen.add(key)
        out.append(e)
    return out


# ---------------------------------------------------------------------------
# A scripted day for activity-inference experiments
# ---------------------------------------------------------------------------

def scripted_day(registry: Registry) -> tuple[list[Event], list]:
    """A hand-written day in the t3 home plus its ground-truth activities."""
    from .metrics import ActivityLabel

    minute = MS_PER_MINUTE
    ev: list[Event] = []

    def motion(dev: str, start: int, dur: int) -> None:
        ev.append(Event(dev, "motion", "active", start))
        ev.append(Event(dev, "motion", "inactive", start + dur))

    base = 7 * 60 * minute  # 07:00
    labels = []

    # Wake up: bedroom stirring, then quiet while everyone is in the kitchen.
    motion("mo6", base - 30 * minute, 4 * minute)
    # Toilet visit, 5 minutes.
    motion("mo4", base, 5 * minute)
    labels.append(ActivityLabel("toileting", base, base + 5 * minute, "ground-truth"))
    # Shower: bathroom motion and the water sensor turns wet.
    motion("mo4", base + 10 * minute, 18 * minute)
    ev.append(Event("ws1", "water", "wet", base + 12 * minute))
    ev.append(Event("ws1", "water", "dry", base + 26 * minute))
    labels.append(
        ActivityLabel("showering", base + 12 * minute, base + 22 * minute, "ground-truth")
    )
    # Cooking: kitchen motion 20 minutes plus a microwave power spike.
    motion("hm1", base + 35 * minute, 20 * minute)
    ev.append(Event("ol6", "power", 1350.0, base + 40 * minute))
    ev.append(Event("ol6", "power", 1.0, base + 47 * minute))
    labels.append(
        ActivityLabel("cooking", base + 35 * minute, base + 55 * minute, "ground-truth")
    )
    # Coffee.
    ev.append(Event("ol5", "power", 1250.0, base + 58 * minute))
    ev.append(Event("ol5", "power", 0.5, base + 62 * minute))
    labels.append(
        ActivityLabel("preparing-coffee", base + 58 * minute, base + 63 * minute, "ground-truth")
    )
    # Leave for work: front door, then all quiet.
    ev.append(Event("mu5", "contact", "open", base + 70 * minute))
    ev.append(Event("mu5", "contact", "closed", base + 71 * minute))
    labels.append(
        ActivityLabel("leaving", base + 70 * minute, base + 80 * minute, "ground-truth")
    )
    # Return in the evening: door, then hallway/study motion right away.
    evening = 18 * 60 * minute
    ev.append(Event("mu5", "contact", "open", evening))
    ev.append(Event("mu5", "contact", "closed", evening + minute))
    motion("hm1", evening + 2 * minute, 6 * minute)
    labels.append(ActivityLabel("arriving", evening, evening + 2 * minute, "ground-truth"))
    # Night: bedroom motion then sleep.
    night = 22 * 60 * minute
    motion("mo6", night, 3 * minute)
    labels.append(ActivityLabel("sleeping", night, night + 13 * minute, "ground-truth"))

    ev.sort(key=lambda e: e.timestamp)
    return ev, labels

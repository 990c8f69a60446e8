"""Deterministic scenario runner, signature size arithmetic and benchmarks.

A scenario is a YAML document (grammar in ``docs/scenario-format.md``).
Time is a logical integer interval index. At the start of every interval
scheduled revocations take effect, then (with ``auto_retrieve``) every
vehicle without a key for the interval requests tokens, then that
interval's events run in file order.

The runner checks protocol invariants as it goes and lists any breach in
the report's ``invariant_violations``; an empty list means the run is clean.
"""

from __future__ import annotations

import json
import math
import statistics
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from random import Random

import yaml

from . import __version__, bbs, star
from . import group as grp
from . import protocol as P
from .errors import ScenarioError

REPORT_FORMAT = "bbsrep-sim-report/1"
ROLES = ("honest", "liar", "replayer", "inflator", "revoked-at")
ADVERSARIAL_ROLES = ("liar", "replayer", "inflator", "revoked-at")
VEHICLE_ACTIONS = ("retrieve", "broadcast", "replay", "report")
SERVER_ACTIONS = ("aggregate", "detect", "revoke")
SERVER_ACTORS = ("AS", "RS")
ALL = "all"


def size_arithmetic(g1_bits: int, p_bits: int) -> int:
    """Bit length of a star signature: 3 G1 points, 6 scalars, interval, level."""
    if g1_bits < 0 or p_bits < 0:
        raise ValueError("widths must be non-negative")
    return 3 * g1_bits + 6 * p_bits + 32 + p_bits


# ---------------------------------------------------------------- scripts


@dataclass
class VehicleSpec:
    id: str
    role: str = "honest"
    revoked_at: int | None = None
    policy: P.AcceptancePolicy = field(default_factory=P.AcceptancePolicy)


@dataclass
class Event:
    time: int
    actor: str
    action: str
    args: dict = field(default_factory=dict)
    line: int | None = None


@dataclass
class ScenarioScript:
    name: str
    seed: int
    params: P.SchemeParams
    intervals: int
    vehicles: list
    events: list
    auto_retrieve: bool = True
    source: str = "<memory>"


class _LineLoader(yaml.SafeLoader):
    pass


def _construct_mapping(loader, node, deep=False):
    mapping = yaml.SafeLoader.construct_mapping(loader, node, deep=True)
    mapping["__line__"] = node.start_mark.line + 1
    return mapping


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _fail(source, line, where, message):
    loc = f"{source}:{line}" if line else source
    raise ScenarioError(f"{loc}: {where}: {message}")


def _strip(d):
    return {k: v for k, v in d.items() if k != "__line__"} if isinstance(d, dict) else d


def _require_map(value, source, line, where):
    if not isinstance(value, dict):
        _fail(source, line, where, "expected a mapping")
    return value


def _int(value, source, line, where, minimum=None):
    if not isinstance(value, int) or isinstance(value, bool):
        _fail(source, line, where, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(source, line, where, f"must be >= {minimum}")
    return value


def parse_scenario(text: str, source: str = "<memory>") -> ScenarioScript:
    try:
        doc = yaml.load(text, Loader=_LineLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark else None
        _fail(source, line, "document", f"YAML syntax error: {getattr(exc, 'problem', exc)}")
    doc = _require_map(doc, source, None, "document")
    line = doc.get("__line__")
    known = {"name", "seed", "params", "intervals", "auto_retrieve", "vehicles", "events", "__line__"}
    for key in doc:
        if key not in known:
            _fail(source, line, key, "unknown top-level field")

    name = str(doc.get("name", Path(source).stem))
    seed = _int(doc.get("seed", 0), source, line, "seed")
    raw_params = _strip(_require_map(doc.get("params", {}), source, line, "params"))
    try:
        params = P.SchemeParams(**raw_params)
    except (TypeError, ValueError) as exc:
        _fail(source, doc.get("params", {}).get("__line__", line), "params", str(exc))
    intervals = _int(doc.get("intervals"), source, line, "intervals", minimum=1)
    auto = doc.get("auto_retrieve", True)
    if not isinstance(auto, bool):
        _fail(source, line, "auto_retrieve", "expected true or false")

    vehicles, ids = [], set()
    raw_vehicles = doc.get("vehicles")
    if not isinstance(raw_vehicles, list) or not raw_vehicles:
        _fail(source, line, "vehicles", "expected a non-empty list")
    for n, raw in enumerate(raw_vehicles):
        where = f"vehicles[{n}]"
        raw = _require_map(raw, source, line, where)
        vline = raw.get("__line__")
        vid = raw.get("id")
        if not isinstance(vid, str) or not vid or vid in SERVER_ACTORS or vid == ALL:
            _fail(source, vline, f"{where}.id", "expected a vehicle name (not AS, RS or all)")
        if vid in ids:
            _fail(source, vline, f"{where}.id", f"duplicate vehicle {vid!r}")
        ids.add(vid)
        role = raw.get("role", "honest")
        if role not in ROLES:
            _fail(source, vline, f"{where}.role", f"unknown role {role!r}; expected one of {', '.join(ROLES)}")
        revoked_at = raw.get("revoked_at")
        if revoked_at is not None:
            revoked_at = _int(revoked_at, source, vline, f"{where}.revoked_at", minimum=0)
        if role == "revoked-at" and revoked_at is None:
            _fail(source, vline, f"{where}.revoked_at", "role revoked-at needs a revoked_at interval")
        raw_policy = _strip(_require_map(raw.get("policy", {}), source, vline, f"{where}.policy"))
        try:
            cats = _strip(raw_policy.get("categories", {})) or {}
            policy = P.AcceptancePolicy({k.encode(): v for k, v in cats.items()}, raw_policy.get("default", 1))
            policy.check_range(params.m)
        except (TypeError, ValueError, AttributeError) as exc:
            _fail(source, vline, f"{where}.policy", str(exc))
        vehicles.append(VehicleSpec(vid, role, revoked_at, policy))

    events = []
    raw_events = doc.get("events", [])
    if not isinstance(raw_events, list):
        _fail(source, line, "events", "expected a list")
    last_time = 0
    for n, raw in enumerate(raw_events):
        where = f"events[{n}]"
        raw = _require_map(raw, source, line, where)
        eline = raw.get("__line__")
        t = _int(raw.get("time"), source, eline, f"{where}.time", minimum=0)
        if t < last_time:
            _fail(source, eline, f"{where}.time", "events must be sorted by time")
        if t >= intervals:
            _fail(source, eline, f"{where}.time", f"beyond the last interval {intervals - 1}")
        last_time = t
        actor, action = raw.get("actor"), raw.get("action")
        args = _strip(_require_map(raw.get("args", {}), source, eline, f"{where}.args"))
        if action in VEHICLE_ACTIONS:
            if actor != ALL and actor not in ids:
                _fail(source, eline, f"{where}.actor", f"unknown vehicle {actor!r}")
            to = args.get("to")
            if to is not None and (not isinstance(to, list) or any(r not in ids for r in to)):
                _fail(source, eline, f"{where}.args.to", "expected a list of known vehicle ids")
        elif action in SERVER_ACTIONS:
            if actor not in SERVER_ACTORS:
                _fail(source, eline, f"{where}.actor", f"{action} is performed by AS or RS")
            if action == "revoke" and args.get("vehicle") not in ids:
                _fail(source, eline, f"{where}.args.vehicle", "unknown vehicle")
            if action == "detect":
                _int(args.get("window", 1), source, eline, f"{where}.args.window", minimum=1)
        else:
            _fail(source, eline, f"{where}.action", f"unknown action {action!r}")
        events.append(Event(t, actor, action, args, eline))

    return ScenarioScript(name, seed, params, intervals, vehicles, events, auto, source)


def load_scenario(path) -> ScenarioScript:
    """Load a scenario file, or a bundled scenario by name (e.g. ``honest-3x5``)."""
    p = Path(path)
    if p.is_file():
        return parse_scenario(p.read_text(), str(p))
    name = p.name.removesuffix(".scenario").removesuffix(".yaml")
    if name in bundled_scenarios():
        return parse_scenario(resources.files("bbsrep.scenarios").joinpath(f"{name}.yaml").read_text(), name)
    raise FileNotFoundError(f"no scenario file or bundled scenario named {str(path)!r}")


def bundled_scenarios() -> list[str]:
    return sorted(
        f.name.removesuffix(".yaml")
        for f in resources.files("bbsrep.scenarios").iterdir()
        if f.name.endswith(".yaml")
    )


# ---------------------------------------------------------------- runner


@dataclass
class _Sent:
    sender: str
    truthful: bool
    honest_sig: bool  # declared (interval, level) are the signing key's own
    interval: int


class _World:
    def __init__(self, script: ScenarioScript, seed: int):
        self.script = script
        self.seed = seed
        self.rng = Random(seed)
        self.params = script.params
        self.AS, self.store = P.initialize_scheme(self.params, self.rng)
        self.specs = {v.id: v for v in script.vehicles}
        self.vehicles = {}
        self.sent = {}  # star signature bytes -> _Sent
        self.own_history = {}  # vehicle -> [MessageTuple]
        self.heard = {}  # vehicle -> [MessageTuple]
        self.outcomes = []
        self.violations = []
        self.horizons = {}  # revoked vehicle -> last issued interval at revocation
        self.issued_at_revocation = {}
        self.after_horizon = {}  # vehicle -> [attempts, accepted]
        self.sizes = set()
        self.deliveries = dict.fromkeys([P.ACCEPTED, *P.REJECT_REASONS], 0)
        self.delivery_count = 0
        self.counters = {
            "broadcasts": {"sent": 0, "impossible": 0, "stale": 0, "inflated": 0, "replayed": 0},
            "retrievals": {},
            "tokens": {"issued": 0, "installed": 0, "discarded": 0, "tampered_batches": 0},
            "feedback": {},
            "revocations": 0,
        }
        for spec in script.vehicles:
            v = P.register_vehicle(self.AS, self.store, spec.id, self.rng, spec.policy, now=0)
            if not bbs.is_member_key(v.gsk, v.gpk):
                self.violate(f"registration of {spec.id} produced an invalid member key")
            self.vehicles[spec.id] = v
            self.own_history[spec.id] = []
            self.heard[spec.id] = []
        self.initial_scores = {vid: self.store.score(vid) for vid in sorted(self.vehicles)}
        self.expected_sig_bytes = math.ceil(size_arithmetic(grp.G1_BITS, grp.SCALAR_BITS) / 8)

    def violate(self, message: str) -> None:
        self.violations.append(message)

    def record(self, t, actor, action, outcome, auto=False):
        entry = {"time": t, "actor": actor, "action": action}
        if auto:
            entry["auto"] = True
        entry["outcome"] = outcome
        self.outcomes.append(entry)

    def actors(self, actor):
        return sorted(self.vehicles) if actor == ALL else [actor]

    # -- server side

    def do_revoke(self, t, vid, actor="AS", auto=False):
        fresh = vid not in self.AS.revoked
        P.revoke(self.AS, self.store, vid, now=t)
        if fresh:
            self.counters["revocations"] += 1
            self.horizons[vid] = self.AS.issued.horizon(vid)
            self.issued_at_revocation[vid] = sum(1 for (_, mid) in self.AS.issued.entries if mid == vid)
            self.after_horizon.setdefault(vid, [0, 0])
        self.record(t, actor, "revoke", {"vehicle": vid, "new": fresh, "horizon": self.horizons[vid]}, auto)

    def do_aggregate(self, t, actor):
        before = {vid: self.store.score(vid) for vid in self.vehicles}
        pending = {vid: [fb.value for fb in self.store.pending.get(vid, [])] for vid in self.vehicles}
        after = self.store.aggregate_all(t)
        for vid, new in after.items():
            if not 0 <= new <= self.params.m:
                self.violate(f"t={t}: score of {vid} left the level range: {new}")
            vals = pending[vid]
            if vals and all(f < 0 for f in vals) and new > before[vid]:
                self.violate(f"t={t}: {vid} gained reputation from negative feedback only")
            if vals and all(f > 0 for f in vals) and new < before[vid]:
                self.violate(f"t={t}: {vid} lost reputation from positive feedback only")
        self.record(t, actor, "aggregate", {"scores": after})

    def do_detect(self, t, actor, args):
        window = args.get("window", 1)
        flagged = sorted(self.store.detect(window, now=t))
        self.record(t, actor, "detect", {"window": window, "flagged": flagged})
        if args.get("revoke", False):
            for vid in flagged:
                self.do_revoke(t, vid, actor="AS", auto=True)

    # -- vehicle side

    def do_retrieve(self, t, vid, args, auto=False):
        v = self.vehicles[vid]
        had = dict(v.keys)
        channel = None
        if args.get("tamper", False):
            noise = grp.random_g1_nonidentity(self.rng)
            channel = lambda batch: _tamper_batch(batch, noise)  # noqa: E731
            self.counters["tokens"]["tampered_batches"] += 1
        issued_before = len(self.AS.issued)
        res = P.request_reputation(v, self.AS, self.store, t, channel=channel)
        c = self.counters["retrievals"]
        c[res.status] = c.get(res.status, 0) + 1
        tok = self.counters["tokens"]
        tok["issued"] += res.issued
        tok["installed"] += res.installed
        tok["discarded"] += res.discarded
        if vid in self.AS.revoked:
            if len(self.AS.issued) != issued_before or res.issued:
                self.violate(f"t={t}: tokens issued to revoked vehicle {vid}")
            if res.status != "denied-revoked":
                self.violate(f"t={t}: revoked vehicle {vid} was not denied ({res.status})")
        if channel is not None and res.installed:
            self.violate(f"t={t}: {vid} installed a tampered token")
        if channel is not None and any(v.keys.get(i) != k for i, k in had.items()):
            self.violate(f"t={t}: tampered tokens changed {vid}'s existing keys")
        for i, level in res.levels:
            key = v.keys[i]
            if not _key_matches(key, self.AS, vid):
                self.violate(f"t={t}: {vid}'s key for interval {i} does not match the issuance log")
        self.record(
            t,
            vid,
            "retrieve",
            {
                "status": res.status,
                "issued": res.issued,
                "installed": [list(p) for p in res.levels],
                "discarded": res.discarded,
                "tampered": channel is not None,
            },
            auto,
        )

    def do_broadcast(self, t, vid, args):
        v, spec = self.vehicles[vid], self.specs[vid]
        if spec.role == "replayer" and args.get("replay", True) and self._replayable(vid, t):
            return self.do_replay(t, vid, args)
        category = str(args.get("category", "general")).encode()
        body = str(args.get("body", f"{vid} report at interval {t}")).encode()
        truthful = args.get("truthful", spec.role != "liar")
        M = P.make_announcement(category, body + b" #" + str(len(self.sent)).encode())
        outcome = {"category": category.decode()}
        if t in v.keys:
            key = v.keys[t]
            declare = None
            if spec.role == "inflator" or args.get("inflate", False):
                declare = key.level + 1
                self.counters["broadcasts"]["inflated"] += 1
            msg = P.broadcast(v, M, t, declare_level=declare)
            honest = declare is None
        elif spec.role in ADVERSARIAL_ROLES and v.keys:
            # no current key: relabel the newest stale key with the current interval
            latest = max(v.keys)
            msg = P.broadcast(v, M, t, key_interval=latest, declare_interval=t)
            honest = False
            self.counters["broadcasts"]["stale"] += 1
            outcome["stale_key_interval"] = latest
        else:
            self.counters["broadcasts"]["impossible"] += 1
            self._note_after_horizon(vid, t, accepted=0)
            outcome["status"] = "no-key"
            self.record(t, vid, "broadcast", outcome)
            return
        self.sent[msg.sig.to_bytes()] = _Sent(vid, bool(truthful), honest, t)
        self.own_history[vid].append(msg)
        outcome.update(self._deliver(t, vid, msg, args.get("to")))
        self.record(t, vid, "broadcast", outcome)

    def _replayable(self, vid, t):
        return any(m.sig.interval < t for m in self.heard[vid] + self.own_history[vid])

    def do_replay(self, t, vid, args):
        old = [m for m in self.own_history[vid] + self.heard[vid] if m.sig.interval < t]
        if not old:
            self.record(t, vid, "replay", {"status": "nothing-to-replay"})
            return
        msg = old[0]
        self.counters["broadcasts"]["replayed"] += 1
        outcome = {"replayed_interval": msg.sig.interval}
        outcome.update(self._deliver(t, vid, msg, args.get("to")))
        self.record(t, vid, "replay", outcome)

    def _deliver(self, t, vid, msg, to=None):
        self.counters["broadcasts"]["sent"] += 1
        wire = msg.to_bytes()
        self.sizes.add(len(msg.sig.to_bytes()))
        if len(msg.sig.to_bytes()) != self.expected_sig_bytes:
            self.violate(f"t={t}: star signature is {len(msg.sig.to_bytes())} bytes")
        meta = self.sent[msg.sig.to_bytes()]
        decisions = {}
        accepted = 0
        receivers = to if to else [r for r in sorted(self.vehicles) if r != vid]
        for rid in receivers:
            receiver = self.vehicles[rid]
            received = P.MessageTuple.from_bytes(wire)
            self.heard[rid].append(received)
            d = P.receive(receiver, received, t)
            self.deliveries[d.reason] += 1
            self.delivery_count += 1
            accepted += d.accepted
            decisions[rid] = d.reason
            expected = _expected_reason(meta, msg, t, receiver.policy)
            if d.reason != expected:
                self.violate(f"t={t}: {rid} decided {d.reason} on {vid}'s message, expected {expected}")
        self._note_after_horizon(vid, t, accepted)
        return {"declared": [msg.sig.interval, msg.sig.level], "decisions": decisions}

    def _note_after_horizon(self, vid, t, accepted):
        if vid not in self.horizons:
            return
        horizon = self.horizons[vid]
        if horizon is None or t > horizon:
            counts = self.after_horizon[vid]
            counts[0] += 1
            counts[1] += accepted
            if accepted:
                self.violate(f"t={t}: revoked {vid} had a broadcast accepted past its horizon {horizon}")

    def do_report(self, t, vid):
        v = self.vehicles[vid]
        liar = self.specs[vid].role == "liar"
        results = []
        fb = self.counters["feedback"]
        if t not in v.keys:
            if v.inbox:
                fb["impossible"] = fb.get("impossible", 0) + len(v.inbox)
            self.record(t, vid, "report", {"status": "no-key", "pending": len(v.inbox)})
            return
        for msg in list(v.inbox):
            meta = self.sent.get(msg.sig.to_bytes())
            good = meta.truthful if meta else False
            f = 1 if good != liar else -1
            ack = P.report_feedback(v, msg, f, self.AS, self.store, t)
            fb[ack.status] = fb.get(ack.status, 0) + 1
            if meta and ack.status == "recorded" and ack.target != meta.sender:
                self.violate(f"t={t}: feedback on {meta.sender}'s message was attributed to {ack.target}")
            results.append({"f": f, "status": ack.status, "target": ack.target})
        self.record(t, vid, "report", {"reports": results})

    # -- main loop

    def run(self):
        events = self.script.events
        pos = 0
        for t in range(self.script.intervals):
            for spec in self.script.vehicles:
                if spec.revoked_at == t:
                    self.do_revoke(t, spec.id, auto=True)
            if self.script.auto_retrieve:
                for vid in sorted(self.vehicles):
                    if t not in self.vehicles[vid].keys:
                        self.do_retrieve(t, vid, {}, auto=True)
            while pos < len(events) and events[pos].time == t:
                self.dispatch(events[pos])
                pos += 1
        self.final_checks()

    def dispatch(self, ev: Event):
        t = ev.time
        if ev.action == "aggregate":
            self.do_aggregate(t, ev.actor)
        elif ev.action == "detect":
            self.do_detect(t, ev.actor, ev.args)
        elif ev.action == "revoke":
            self.do_revoke(t, ev.args["vehicle"], ev.actor)
        else:
            for vid in self.actors(ev.actor):
                if ev.action == "retrieve":
                    self.do_retrieve(t, vid, ev.args)
                elif ev.action == "broadcast":
                    self.do_broadcast(t, vid, ev.args)
                elif ev.action == "replay":
                    self.do_replay(t, vid, ev.args)
                elif ev.action == "report":
                    self.do_report(t, vid)

    def final_checks(self):
        if sum(self.deliveries.values()) != self.delivery_count:
            self.violate("delivery counters do not sum to the number of deliveries")
        for vid, count in self.issued_at_revocation.items():
            now = sum(1 for (_, mid) in self.AS.issued.entries if mid == vid)
            if now != count:
                self.violate(f"issuance log grew for revoked vehicle {vid}")
        # every logged token must still pass the member-side check
        for (i, vid), entry in sorted(self.AS.issued.entries.items(), key=lambda kv: (kv[0][0], kv[0][1])):
            if not star.check_update_token(entry.token, self.AS.registry.key_of(vid).x, self.AS.gpk):
                self.violate(f"logged token for ({i}, {vid}) fails its pairing check")

    def report(self) -> dict:
        p = self.params
        revocations = {}
        for vid in sorted(self.horizons):
            attempts, accepted = self.after_horizon.get(vid, [0, 0])
            revocations[vid] = {
                "revoked_at": self.AS.revoked[vid],
                "horizon": self.horizons[vid],
                "attempts_after_horizon": attempts,
                "accepted_after_horizon": accepted,
            }
        return {
            "format": REPORT_FORMAT,
            "version": __version__,
            "scenario": self.script.name,
            "seed": self.seed,
            "params": {
                "curve": p.curve,
                "m": p.m,
                "psi": str(p.psi),
                "psi_td": str(p.psi_td),
                "interval_length": str(p.interval_length),
                "intervals": self.script.intervals,
            },
            "roles": {v.id: v.role for v in self.script.vehicles},
            "events": self.outcomes,
            "counters": {
                "deliveries": dict(self.deliveries),
                **{k: dict(sorted(v.items())) if isinstance(v, dict) else v for k, v in self.counters.items()},
            },
            "revocations": revocations,
            "scores": {"initial": self.initial_scores, "final": self.store.table()},
            "sizes": {
                "g1_bits": grp.G1_BITS,
                "scalar_bits": grp.SCALAR_BITS,
                "star_signature_bits": size_arithmetic(grp.G1_BITS, grp.SCALAR_BITS),
                "observed_star_signature_bytes": sorted(self.sizes),
            },
            "benchmark": None,
            "invariant_violations": self.violations,
        }


def _tamper_batch(batch: bytes, noise) -> bytes:
    raws = P.decode_token_batch(batch)
    tampered = []
    for raw in raws:
        tok = star.RepUpdateToken.from_bytes(raw)
        tampered.append(star.RepUpdateToken(tok.interval, tok.level, tok.rcert * noise))
    return P.encode_token_batch(tampered)


def _key_matches(key, AS, vid) -> bool:
    entry = AS.issued.get(key.interval, vid)
    return entry is not None and entry.level == key.level and entry.A_interval == key.A


def _expected_reason(meta: _Sent, msg, t, policy) -> str:
    if msg.sig.interval != t:
        return P.INTERVAL_MISMATCH
    if not meta.honest_sig:
        return P.INVALID_SIGNATURE
    if msg.sig.level < policy.minimum_for(P.message_category(msg.M)):
        return P.BELOW_POLICY
    return P.ACCEPTED


def run_scenario(script: ScenarioScript, seed: int | None = None) -> dict:
    seed = script.seed if seed is None else seed
    world = _World(script, seed)
    world.run()
    return world.report()


def render_report(report: dict) -> str:
    return json.dumps(report, indent=2, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------- benchmarks


def _fixture_ops(rng: Random) -> dict:
    """One member with a level-7 key and a callable per measured operation."""
    gpk, gmsk = bbs.keygen(rng)
    registry, log = bbs.MemberRegistry(), star.IssuanceLog()
    gsk = bbs.join(gmsk, registry, "bench", rng)
    token = star.issue_update_token(gmsk, registry, "bench", 1, 7, log)
    key = star.apply_update(gsk, token, gpk)
    M = b"benchmark message"
    sig = bbs.sign(M, gsk, gpk, rng)
    ssig = star.sign_star(M, key, gpk, rng)
    return {
        "sign": lambda: bbs.sign(M, gsk, gpk, rng),
        "verify": lambda: bbs.verify(M, sig, gpk),
        "sign_star": lambda: star.sign_star(M, key, gpk, rng),
        "verify_star": lambda: star.verify_star(M, ssig, gpk),
        "check_update_token": lambda: star.check_update_token(token, gsk.x, gpk),
        "apply_update": lambda: star.apply_update(gsk, token, gpk),
    }


def operation_counts(rng: Random | None = None) -> dict:
    """Pairings, products and exponentiations performed by each operation."""
    counts = {}
    for name, fn in _fixture_ops(rng or Random(0)).items():
        with grp.count_ops() as tally:
            fn()
        counts[name] = {k: tally.get(k, 0) for k in ("pairing", "mul", "exp", "hash_to_g1")}
    return counts


def star_overhead(counts: dict) -> dict:
    """Extra work of BBS* over BBS: token check, key update, shifted-key verify."""
    check = counts["check_update_token"]
    update_calc = {k: counts["apply_update"][k] - check[k] for k in check}
    verify_extra = {k: counts["verify_star"][k] - counts["verify"][k] for k in check}
    total = {k: check[k] + update_calc[k] + verify_extra[k] for k in check}
    return {"update_check": check, "update_calculation": update_calc, "verify_extra": verify_extra, "total": total}


def bench(iterations: int = 100, rng: Random | None = None) -> dict:
    rng = rng or Random(0)
    ops = _fixture_ops(rng)
    timings = {}
    for name, fn in ops.items():
        if name == "apply_update":
            continue
        samples = []
        for _ in range(iterations):
            start = time.perf_counter()
            fn()
            samples.append(time.perf_counter() - start)
        timings[name] = {"median_ms": statistics.median(samples) * 1e3, "iterations": iterations}
    counts = operation_counts(rng)
    return {"curve": grp.CURVE_ID, "timings": timings, "op_counts": counts, "star_overhead": star_overhead(counts)}

"""Concrete bounded execution of closed processes.

Serves as the independent oracle for the static analysis: it runs a process
on a global ether (outputs post tuples, inputs consume matching tuples) and
records a trace of sent tuples, variable bindings, decryptions and stuck
points.  ``covered`` then checks that every concrete event is
over-approximated by an analysis result.

In replay mode an attacker eavesdrops the whole exchange: every tuple ever
sent (plus any seeded captures) lands in his store, and he may re-deliver any
stored tuple at any time without consuming it.  This executes the replay
attack scenarios, where an old round's messages are played into a new round
of the same execution.

Internal actions (splitting parallels, minting fresh names, unfolding
replication up to a copy bound, running decryptions) are confluent and are
executed eagerly; scheduling choice, and therefore the exploration depth, is
over message deliveries only.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .domain import (
    ATTACKER_ANY,
    AEnc,
    AnalysisResult,
    CName,
    Value,
    WildTuple,
    derivable,
)
from .syntax import (
    DEFAULT_POLICY,
    Decrypt,
    In,
    IndexPolicy,
    Name,
    New,
    Nil,
    Out,
    Par,
    Process,
    Repl,
    SymEnc,
    Term,
    Variable,
    canonical,
)


# ---------------------------------------------------------------------------
# Runtime values


@dataclass(frozen=True)
class RName:
    """A concrete name; the freshness serial distinguishes names minted by
    distinct executions of the same restriction (serial 0 marks ambient free
    names), ``gen`` records the replication generation of the minting
    component."""

    name: Name
    serial: int = 0
    gen: int = 0

    def __str__(self) -> str:
        if self.serial == 0:
            return self.name.render()
        return f"{self.name.render()}#{self.serial}"


@dataclass(frozen=True)
class REnc:
    payload: tuple
    key: "RuntimeValue"
    at: object
    dest: object

    def __str__(self) -> str:
        inner = ", ".join(map(str, self.payload))
        return f"{{{inner}}}:{self.key}"


RuntimeValue = Union[RName, REnc]


def rt_matches(v: RuntimeValue, w: RuntimeValue) -> bool:
    """Value equality as principals see it: structural on names (including
    freshness serials) and ciphertext contents, blind to annotations."""
    if isinstance(v, RName) or isinstance(w, RName):
        return v == w
    return (
        len(v.payload) == len(w.payload)
        and rt_matches(v.key, w.key)
        and all(rt_matches(a, b) for a, b in zip(v.payload, w.payload))
    )


def abstract_value(value: RuntimeValue, policy: IndexPolicy = DEFAULT_POLICY) -> Value:
    if isinstance(value, RName):
        return CName(canonical(value.name, policy))
    return AEnc(
        tuple(abstract_value(p, policy) for p in value.payload),
        abstract_value(value.key, policy),
        value.at,
        value.dest,
    )


# ---------------------------------------------------------------------------
# Trace events


@dataclass(frozen=True)
class Sent:
    values: tuple


@dataclass(frozen=True)
class Bound:
    var: str
    value: RuntimeValue
    gen: int


@dataclass(frozen=True)
class Decrypted:
    enc_at: object
    dec_at: object


@dataclass(frozen=True)
class Stuck:
    reason: str


Event = Union[Sent, Bound, Decrypted, Stuck]


@dataclass
class Trace:
    events: list = field(default_factory=list)

    def sent(self) -> list:
        return [e for e in self.events if isinstance(e, Sent)]

    def bound(self) -> list:
        return [e for e in self.events if isinstance(e, Bound)]


@dataclass(frozen=True)
class Scheduler:
    """Seeded random choice among enabled deliveries."""

    seed: int = 0

    def rng(self) -> random.Random:
        return random.Random(self.seed)


# ---------------------------------------------------------------------------
# Machine state


@dataclass(frozen=True)
class _Component:
    process: Process
    env: frozenset  # of (identifier, RuntimeValue) pairs
    gen: int


@dataclass(frozen=True)
class _State:
    components: tuple
    ether: tuple  # multiset of unconsumed tuples, in arrival order
    store: tuple  # replay attacker's capture store (monotone)
    next_serial: int


def _env_get(env: frozenset, key: str):
    for k, v in env:
        if k == key:
            return v
    return None


def _env_set(env: frozenset, key: str, value: RuntimeValue) -> frozenset:
    return frozenset((k, v) for k, v in env if k != key) | {(key, value)}


class _Runner:
    def __init__(self, max_copies: int, policy: IndexPolicy, replay: bool) -> None:
        self.max_copies = max_copies
        self.policy = policy
        self.replay = replay

    def eval_term(self, term: Term, env: frozenset) -> Optional[RuntimeValue]:
        if isinstance(term, Name):
            bound = _env_get(env, term.render())
            if bound is not None:
                return bound
            return RName(term)  # ambient free name
        if isinstance(term, Variable):
            return _env_get(env, term.render())
        payload = []
        for t in term.payload:
            v = self.eval_term(t, env)
            if v is None:
                return None
            payload.append(v)
        key = self.eval_term(term.key, env)
        if key is None:
            return None
        return REnc(tuple(payload), key, term.at, term.dest)

    def normalize(self, state: _State, trace: list) -> _State:
        """Run all internal actions to quiescence, in component order."""
        components = list(state.components)
        serial = state.next_serial
        changed = True
        while changed:
            changed = False
            out: list[_Component] = []
            for comp in components:
                p = comp.process
                if isinstance(p, Nil):
                    changed = True
                    continue
                if isinstance(p, Par):
                    out.append(_Component(p.left, comp.env, comp.gen))
                    out.append(_Component(p.right, comp.env, comp.gen))
                    changed = True
                    continue
                if isinstance(p, Repl):
                    for copy in range(1, self.max_copies + 1):
                        out.append(_Component(p.body, comp.env, copy))
                    changed = True
                    continue
                if isinstance(p, New):
                    serial += 1
                    minted = RName(p.name, serial, comp.gen)
                    out.append(
                        _Component(
                            p.body,
                            _env_set(comp.env, p.name.render(), minted),
                            comp.gen,
                        )
                    )
                    changed = True
                    continue
                if isinstance(p, Decrypt):
                    nxt = self.run_decrypt(p, comp, trace)
                    if nxt is not None:
                        out.append(nxt)
                    changed = True
                    continue
                out.append(comp)
            components = out
        return _State(tuple(components), state.ether, state.store, serial)

    def run_decrypt(
        self, p: Decrypt, comp: _Component, trace: list
    ) -> Optional[_Component]:
        subject = self.eval_term(p.subject, comp.env)
        key = self.eval_term(p.key, comp.env)
        if subject is None or key is None:
            trace.append(Stuck(f"unbound variable in decryption at {p.at}"))
            return None
        if not isinstance(subject, REnc):
            trace.append(Stuck(f"decryption of a non-ciphertext at {p.at}"))
            return None
        if not rt_matches(subject.key, key):
            trace.append(Stuck(f"wrong key at {p.at}"))
            return None
        if len(subject.payload) != p.arity:
            trace.append(Stuck(f"arity mismatch at {p.at}"))
            return None
        env = comp.env
        for i, pattern in enumerate(p.match):
            want = self.eval_term(pattern, env)
            if want is None or not rt_matches(subject.payload[i], want):
                trace.append(Stuck(f"pattern mismatch at {p.at}"))
                return None
        for var, value in zip(p.binds, subject.payload[len(p.match) :]):
            env = _env_set(env, var.render(), value)
            trace.append(Bound(var.render(), value, comp.gen))
        trace.append(Decrypted(subject.at, p.at))
        return _Component(p.cont, env, comp.gen)

    def deliveries(self, state: _State) -> list:
        """Enabled (component-index, tuple, injected) delivery choices.

        In replay mode the attacker's store feeds deliveries without being
        consumed; otherwise tuples come from the ether and are consumed.
        """
        choices = []
        if self.replay:
            pool = [(t, True) for t in state.store]
        else:
            pool = [(t, False) for t in state.ether]
        for idx, comp in enumerate(state.components):
            p = comp.process
            if not isinstance(p, In):
                continue
            seen = set()
            for values, injected in pool:
                if values in seen:
                    continue
                seen.add(values)
                if len(values) != p.arity:
                    continue
                ok = True
                for i, pattern in enumerate(p.match):
                    want = self.eval_term(pattern, comp.env)
                    if want is None or not rt_matches(values[i], want):
                        ok = False
                        break
                if ok:
                    choices.append((idx, values, injected))
        return choices

    def deliver(self, state: _State, choice: tuple, trace: list) -> _State:
        idx, values, injected = choice
        comp = state.components[idx]
        p = comp.process
        assert isinstance(p, In)
        env = comp.env
        for var, value in zip(p.binds, values[len(p.match) :]):
            env = _env_set(env, var.render(), value)
            trace.append(Bound(var.render(), value, comp.gen))
        components = list(state.components)
        components[idx] = _Component(p.cont, env, comp.gen)
        ether = list(state.ether)
        if not injected:
            ether.remove(values)
        return self.normalize(
            _State(tuple(components), tuple(ether), state.store, state.next_serial),
            trace,
        )

    def emit_outputs(self, state: _State, trace: list) -> _State:
        """Outputs post to the ether eagerly (asynchronous send)."""
        components = list(state.components)
        ether = list(state.ether)
        store = list(state.store)
        changed = True
        while changed:
            changed = False
            for idx, comp in enumerate(components):
                p = comp.process
                if isinstance(p, Out):
                    values = []
                    ok = True
                    for t in p.terms:
                        v = self.eval_term(t, comp.env)
                        if v is None:
                            trace.append(Stuck("unbound variable in output"))
                            ok = False
                            break
                        values.append(v)
                    if ok:
                        sent = tuple(values)
                        ether.append(sent)
                        if self.replay and sent not in store:
                            store.append(sent)
                        trace.append(Sent(sent))
                        components[idx] = _Component(p.cont, comp.env, comp.gen)
                    else:
                        components[idx] = _Component(Nil(), comp.env, comp.gen)
                    changed = True
            if changed:
                st = self.normalize(
                    _State(
                        tuple(components),
                        tuple(ether),
                        tuple(store),
                        state.next_serial,
                    ),
                    trace,
                )
                components = list(st.components)
                ether = list(st.ether)
                store = list(st.store)
                state = st
        return _State(tuple(components), tuple(ether), tuple(store), state.next_serial)

    def step_ready(self, state: _State, trace: list) -> _State:
        return self.emit_outputs(self.normalize(state, trace), trace)

    def initial(self, process: Process, captured: tuple, trace: list) -> _State:
        state = _State((_Component(process, frozenset(), 0),), (), captured, 0)
        return self.step_ready(state, trace)


def run(
    process: Process,
    depth: int,
    schedule: Optional[Scheduler] = None,
    *,
    replay: bool = False,
    captured: Iterable = (),
    max_copies: int = 2,
    policy: IndexPolicy = DEFAULT_POLICY,
) -> Trace:
    """Execute one schedule, delivering at most ``depth`` messages."""
    runner = _Runner(max_copies, policy, replay)
    rng = (schedule or Scheduler()).rng()
    trace: list = []
    state = runner.initial(process, tuple(captured), trace)
    for _ in range(depth):
        choices = runner.deliveries(state)
        if not choices:
            break
        choice = rng.choice(choices)
        state = runner.deliver(state, choice, trace)
        state = runner.step_ready(state, trace)
    for comp in state.components:
        if isinstance(comp.process, In):
            trace.append(Stuck("no matching input"))
    return Trace(trace)


def replay_run(
    process: Process,
    captured: Iterable,
    depth: int,
    schedule: Optional[Scheduler] = None,
    *,
    max_copies: int = 2,
    policy: IndexPolicy = DEFAULT_POLICY,
) -> Trace:
    """Execute under the eavesdrop-and-reinject attacker, with ``captured``
    tuples seeding his store."""
    return run(
        process,
        depth,
        schedule,
        replay=True,
        captured=captured,
        max_copies=max_copies,
        policy=policy,
    )


def explore(
    process: Process,
    depth: int,
    *,
    replay: bool = False,
    captured: Iterable = (),
    max_copies: int = 2,
    policy: IndexPolicy = DEFAULT_POLICY,
) -> set:
    """Exhaustively explore all delivery schedules up to ``depth`` and return
    the set of events occurring on any trace."""
    runner = _Runner(max_copies, policy, replay)
    events: set = set()
    visited: dict = {}

    def walk(state: _State, budget: int) -> None:
        key = (state.components, tuple(sorted(state.ether, key=repr)), state.store)
        if visited.get(key, -1) >= budget:
            return
        visited[key] = budget
        choices = runner.deliveries(state)
        if not choices or budget == 0:
            events.update(
                Stuck("no matching input")
                for comp in state.components
                if isinstance(comp.process, In)
            )
            return
        for choice in choices:
            trace: list = []
            nxt = runner.deliver(state, choice, trace)
            nxt = runner.step_ready(nxt, trace)
            events.update(trace)
            walk(nxt, budget - 1)

    start: list = []
    state = runner.initial(process, tuple(captured), start)
    events.update(start)
    walk(state, depth)
    return events


def captured_messages(trace: Trace) -> list:
    """The tuples an eavesdropper records from a run."""
    return [e.values for e in trace.sent()]


def replay_witness(trace: Union[Trace, Iterable], key_bases: Iterable = ()) -> bool:
    """Whether one trace binds the same fresh name into two distinct
    replication generations of the same variable family — a concrete reuse of
    an old round's value in a new round.

    With ``key_bases`` the check is restricted to variables of those base
    spellings (session-key variables, typically).
    """
    events = trace.events if isinstance(trace, Trace) else trace
    bases = set(key_bases)
    seen: dict = {}
    for ev in events:
        if not isinstance(ev, Bound) or not isinstance(ev.value, RName):
            continue
        if ev.value.serial == 0:
            continue
        family = ev.var.split("_")[0]
        if bases and family not in bases:
            continue
        gens = seen.setdefault((family, ev.value), set())
        gens.add(ev.gen)
        if len(gens) > 1:
            return True
    return False


def search_replay(
    process: Process,
    depth: int,
    *,
    captured: Iterable = (),
    key_bases: Iterable = (),
    max_copies: int = 2,
    policy: IndexPolicy = DEFAULT_POLICY,
) -> bool:
    """Exhaustively search all replay-attacker schedules for a witness of
    cross-generation key reuse; short-circuits on the first one."""
    runner = _Runner(max_copies, policy, replay=True)
    bases = set(key_bases)
    visited: dict = {}

    def bindings(trace: list) -> list:
        out = []
        for ev in trace:
            if isinstance(ev, Bound) and isinstance(ev.value, RName):
                if ev.value.serial == 0:
                    continue
                family = ev.var.split("_")[0]
                if bases and family not in bases:
                    continue
                out.append(((family, ev.value), ev.gen))
        return out

    def absorb(path: dict, trace: list) -> tuple[dict, bool]:
        accum = dict(path)
        hit = False
        for fam_val, gen in bindings(trace):
            gens = accum.get(fam_val, frozenset())
            if gen not in gens:
                gens = gens | {gen}
                accum[fam_val] = gens
            if len(gens) > 1:
                hit = True
        return accum, hit

    def walk(state: _State, budget: int, path: dict) -> bool:
        key = (
            state.components,
            state.store,
            frozenset(path.items()),
        )
        if visited.get(key, -1) >= budget:
            return False
        visited[key] = budget
        if budget == 0:
            return False
        for choice in runner.deliveries(state):
            trace: list = []
            nxt = runner.deliver(state, choice, trace)
            nxt = runner.step_ready(nxt, trace)
            accum, hit = absorb(path, trace)
            if hit:
                return True
            if walk(nxt, budget - 1, accum):
                return True
        return False

    start: list = []
    state = runner.initial(process, tuple(captured), start)
    path, hit = absorb({}, start)
    if hit:
        return True
    return walk(state, depth, path)


def covered(
    trace: Union[Trace, Iterable],
    result: AnalysisResult,
    policy: IndexPolicy = DEFAULT_POLICY,
) -> bool:
    """Whether every concrete event is over-approximated by the analysis:
    sent tuples abstract into kappa, bindings into rho."""
    events = trace.events if isinstance(trace, Trace) else trace
    know = result.attacker_knowledge
    wild_arities = {e.arity for e in result.kappa if isinstance(e, WildTuple)}
    for ev in events:
        if isinstance(ev, Sent):
            abstract = tuple(abstract_value(v, policy) for v in ev.values)
            if abstract in result.kappa:
                continue
            if len(abstract) in wild_arities and all(
                derivable(v, know) for v in abstract
            ):
                continue
            return False
        if isinstance(ev, Bound):
            abstract = abstract_value(ev.value, policy)
            estimate = result.rho_of(ev.var)
            if abstract in estimate:
                continue
            if ATTACKER_ANY in estimate and derivable(abstract, know):
                continue
            return False
    return True

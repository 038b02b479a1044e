"""Control-flow analysis: constraint generation and least-fixpoint solving.

The analysis of a process is expressed as a finite set of monotone
constraints over set variables:

* one term estimate (theta) per syntactic term occurrence,
* one variable estimate rho(x) per canonical variable,
* the global network component kappa,
* the error component psi.

``generate``/``gen_process`` compile a process into constraints,
``solve`` computes the least triple satisfying them with a dirty-marking
worklist (constraints cache the instantiations they have already fired, so
re-processing only does new work), and ``check`` is an independent validator
that walks the process and verifies a result directly against the analysis
rules, without touching the constraint machinery.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

from .domain import (
    ATTACKER_ANY,
    AEnc,
    AnalysisResult,
    AttackerAny,
    AttackerEnc,
    CName,
    KappaEntry,
    Value,
    WildTuple,
    derivable,
    values_match,
)
from .syntax import (
    ATTACKER_POINT,
    ATTACKER_VAR,
    CryptoPoint,
    Decrypt,
    DEFAULT_POLICY,
    In,
    IndexPolicy,
    Name,
    New,
    Nil,
    Out,
    Par,
    PointSet,
    Process,
    Repl,
    SymEnc,
    Term,
    Variable,
    canonical,
    point_in,
)


class AnalysisResourceError(RuntimeError):
    """The solver exceeded its universe or firing budget.

    This signals a model whose abstract value universe does not stay small
    (usually a feedback loop re-encrypting its own ciphertexts), not an
    analysis verdict.
    """


@dataclass(frozen=True)
class ThetaVar:
    """Handle of the value estimate of one term occurrence."""

    sid: int


# Set variables a constraint can read or extend.
KAPPA = ("kappa",)
PSI = ("psi",)


def theta_key(var: ThetaVar) -> tuple:
    return ("theta", var.sid)


def rho_key(name: str) -> tuple:
    return ("rho", name)


Z_KEY = rho_key(ATTACKER_VAR)


# ---------------------------------------------------------------------------
# Constraints
#
# Membership constraints assert a single fact; the remaining forms are
# conditional: premises range over the current contents of the sets they
# read, conclusions extend other sets or psi.  All are monotone.


@dataclass(frozen=True)
class Membership:
    """value ∈ target, unconditionally."""

    value: Value
    target: tuple


@dataclass(frozen=True)
class KappaMembership:
    """entry ∈ kappa, unconditionally (attacker wild tuples)."""

    entry: KappaEntry


@dataclass(frozen=True)
class Subset:
    """Everything in ``source`` flows into ``target`` (variable lookup)."""

    source: tuple
    target: tuple


@dataclass(frozen=True)
class EncProduct:
    """Ciphertext construction at an encryption site: every combination of
    key and payload estimates yields a ciphertext value in ``target``."""

    payload: tuple
    key: tuple
    at: CryptoPoint
    dest: PointSet
    target: tuple


@dataclass(frozen=True)
class OutProduct:
    """Output: every tuple over the component estimates may hit the network."""

    parts: tuple


@dataclass(frozen=True)
class InMatch:
    """Input: a kappa entry of the right arity whose matched prefix meets the
    pattern estimates binds its remaining components."""

    match: tuple  # theta keys of matched positions
    binds: tuple  # canonical variable names of bound positions


@dataclass(frozen=True)
class DecMatch:
    """Decryption: a ciphertext in the subject estimate with a matching key
    and matched prefix binds the remaining payload and contributes to psi
    when the dest/orig assertions are violated."""

    subject: tuple
    key: tuple
    match: tuple
    binds: tuple
    at: CryptoPoint
    orig: PointSet


@dataclass(frozen=True)
class EavesdropRule:
    """Attacker condition 1 (dynamic part): components of every network tuple
    flow into the attacker knowledge."""


@dataclass(frozen=True)
class AttackerDecryptRule:
    """Attacker condition 2: known ciphertexts whose key the attacker can
    derive reveal their payload; decryptions not destined for the attacker
    are annotation violations."""


Constraint = Union[
    Membership,
    KappaMembership,
    Subset,
    EncProduct,
    OutProduct,
    InMatch,
    DecMatch,
    EavesdropRule,
    AttackerDecryptRule,
]


def _reads(c: Constraint) -> tuple:
    if isinstance(c, (Membership, KappaMembership)):
        return ()
    if isinstance(c, Subset):
        return (c.source,)
    if isinstance(c, EncProduct):
        return (*c.payload, c.key)
    if isinstance(c, OutProduct):
        return c.parts
    if isinstance(c, InMatch):
        # wild-tuple matching consults the attacker knowledge
        return (KAPPA, *c.match, Z_KEY)
    if isinstance(c, DecMatch):
        return (c.subject, c.key, *c.match, Z_KEY)
    if isinstance(c, EavesdropRule):
        return (KAPPA,)
    if isinstance(c, AttackerDecryptRule):
        return (Z_KEY,)
    raise TypeError(f"not a constraint: {c!r}")


# ---------------------------------------------------------------------------
# Constraint generation


class GenContext:
    """Allocates term-occurrence ids and accumulates constraints."""

    def __init__(self, policy: IndexPolicy = DEFAULT_POLICY) -> None:
        self.policy = policy
        self.constraints: list[Constraint] = []
        self._next_sid = 0

    def fresh_theta(self) -> ThetaVar:
        var = ThetaVar(self._next_sid)
        self._next_sid += 1
        return var

    def add(self, constraint: Constraint) -> None:
        self.constraints.append(constraint)


def gen_term(term: Term, ctx: Optional[GenContext] = None) -> tuple[ThetaVar, list]:
    """Constraints whose least solution makes the returned theta the set of
    values the term may evaluate to."""
    if ctx is None:
        ctx = GenContext()
    start = len(ctx.constraints)
    theta = _gen_term(term, ctx)
    return theta, ctx.constraints[start:]


def _gen_term(term: Term, ctx: GenContext) -> ThetaVar:
    theta = ctx.fresh_theta()
    if isinstance(term, Name):
        ctx.add(Membership(CName(canonical(term, ctx.policy)), theta_key(theta)))
    elif isinstance(term, Variable):
        ctx.add(Subset(rho_key(term.render()), theta_key(theta)))
    elif isinstance(term, SymEnc):
        payload = tuple(theta_key(_gen_term(t, ctx)) for t in term.payload)
        key = theta_key(_gen_term(term.key, ctx))
        ctx.add(EncProduct(payload, key, term.at, term.dest, theta_key(theta)))
    else:
        raise TypeError(f"not a term: {term!r}")
    return theta


def gen_process(process: Process, ctx: Optional[GenContext] = None) -> list:
    """Compile a process into its analysis constraints."""
    if ctx is None:
        ctx = GenContext()
    _gen_process(process, ctx)
    return ctx.constraints


def _gen_process(process: Process, ctx: GenContext) -> None:
    if isinstance(process, Nil):
        return
    if isinstance(process, Par):
        _gen_process(process.left, ctx)
        _gen_process(process.right, ctx)
        return
    if isinstance(process, (Repl, New)):
        _gen_process(process.body, ctx)
        return
    if isinstance(process, Out):
        parts = tuple(theta_key(_gen_term(t, ctx)) for t in process.terms)
        ctx.add(OutProduct(parts))
        _gen_process(process.cont, ctx)
        return
    if isinstance(process, In):
        match = tuple(theta_key(_gen_term(t, ctx)) for t in process.match)
        binds = tuple(v.render() for v in process.binds)
        ctx.add(InMatch(match, binds))
        _gen_process(process.cont, ctx)
        return
    if isinstance(process, Decrypt):
        subject = theta_key(_gen_term(process.subject, ctx))
        key = theta_key(_gen_term(process.key, ctx))
        match = tuple(theta_key(_gen_term(t, ctx)) for t in process.match)
        binds = tuple(v.render() for v in process.binds)
        ctx.add(DecMatch(subject, key, match, binds, process.at, process.orig))
        _gen_process(process.cont, ctx)
        return
    raise TypeError(f"not a process: {process!r}")


# ---------------------------------------------------------------------------
# Solver


class Solver:
    """Least-fixpoint computation over a constraint set.

    Dirty constraints sit in a worklist; firing a constraint re-evaluates it
    against the current sets, skipping instantiations already processed.
    Growing a set marks its readers dirty.  The least solution is unique, so
    the processing order (controllable via ``order_seed`` for the
    determinism tests) cannot change the outcome.
    """

    def __init__(
        self,
        constraints: Iterable,
        *,
        max_universe: int = 10**6,
        max_firings: int = 10**7,
        order_seed: Optional[int] = None,
    ) -> None:
        self.constraints = list(constraints)
        self.max_universe = max_universe
        self.max_firings = max_firings
        self.sets: dict[tuple, set] = {}
        self.kappa: set = set()
        self.psi: set = set()
        self.psi_log: list = []
        self._values_seen: set = set()
        self._firings = 0
        self._caches: dict[int, set] = {}
        self._deriv_cache: set = set()
        self._readers: dict[tuple, list[int]] = {}
        for idx, c in enumerate(self.constraints):
            for key in _reads(c):
                self._readers.setdefault(key, []).append(idx)
        self._dirty: deque = deque()
        self._in_dirty: set[int] = set()
        order = list(range(len(self.constraints)))
        if order_seed is not None:
            random.Random(order_seed).shuffle(order)
        for idx in order:
            self._mark(idx)

    # set plumbing

    def get(self, key: tuple) -> set:
        if key == KAPPA:
            return self.kappa
        return self.sets.setdefault(key, set())

    @property
    def zknow(self) -> set:
        return self.sets.setdefault(Z_KEY, set())

    def _register_value(self, value: Value) -> None:
        if value not in self._values_seen:
            self._values_seen.add(value)
            if len(self._values_seen) > self.max_universe:
                raise AnalysisResourceError(
                    f"abstract value universe exceeded {self.max_universe} values"
                )

    def add_value(self, key: tuple, value: Value) -> bool:
        target = self.get(key)
        if value in target:
            return False
        self._register_value(value)
        target.add(value)
        if key == Z_KEY:
            self._deriv_cache.clear()
        self._touch(key)
        return True

    def add_kappa(self, entry: KappaEntry) -> bool:
        if entry in self.kappa:
            return False
        if isinstance(entry, tuple):
            for v in entry:
                self._register_value(v)
        self.kappa.add(entry)
        self._touch(KAPPA)
        return True

    def add_psi(self, enc_at: CryptoPoint, dec_at: CryptoPoint, witness=None) -> bool:
        pair = (enc_at, dec_at)
        if pair in self.psi:
            return False
        self.psi.add(pair)
        self.psi_log.append((pair, witness))
        return True

    def _touch(self, key: tuple) -> None:
        for idx in self._readers.get(key, ()):
            self._mark(idx)

    def _mark(self, idx: int) -> None:
        if idx not in self._in_dirty:
            self._in_dirty.add(idx)
            self._dirty.append(idx)

    # matching helpers

    def derivable(self, value: Value) -> bool:
        if value in self._deriv_cache:
            return True
        ok = derivable(value, self.zknow)
        if ok:
            self._deriv_cache.add(value)
        return ok

    def _match_in(self, value: Value, candidates: set) -> bool:
        know = self.zknow
        return any(values_match(value, w, know) for w in candidates)

    def _any_derivable(self, candidates: set) -> bool:
        return any(self.derivable(w) for w in candidates)

    # firing

    def run(self) -> AnalysisResult:
        while self._dirty:
            idx = self._dirty.popleft()
            self._in_dirty.discard(idx)
            self._fire(self.constraints[idx], idx)
            self._firings += 1
            if self._firings > self.max_firings:
                raise AnalysisResourceError(
                    f"constraint firings exceeded {self.max_firings}"
                )
        rho = {
            key[1]: frozenset(values)
            for key, values in self.sets.items()
            if key[0] == "rho" and values
        }
        theta = {
            key[1]: frozenset(values)
            for key, values in self.sets.items()
            if key[0] == "theta" and values
        }
        return AnalysisResult(
            rho=rho,
            kappa=frozenset(self.kappa),
            psi=frozenset(self.psi),
            theta=theta,
        )

    def _fire(self, c: Constraint, idx: int) -> None:
        if isinstance(c, Membership):
            self.add_value(c.target, c.value)
        elif isinstance(c, KappaMembership):
            self.add_kappa(c.entry)
        elif isinstance(c, Subset):
            target = c.target
            for v in list(self.get(c.source)):
                self.add_value(target, v)
        elif isinstance(c, EncProduct):
            self._fire_enc(c, idx)
        elif isinstance(c, OutProduct):
            self._fire_out(c, idx)
        elif isinstance(c, InMatch):
            self._fire_in(c, idx)
        elif isinstance(c, DecMatch):
            self._fire_dec(c, idx)
        elif isinstance(c, EavesdropRule):
            self._fire_eavesdrop(c, idx)
        elif isinstance(c, AttackerDecryptRule):
            self._fire_attacker_decrypt(c, idx)
        else:
            raise TypeError(f"not a constraint: {c!r}")

    def _fire_enc(self, c: EncProduct, idx: int) -> None:
        cache = self._caches.setdefault(idx, set())
        pools = [sorted_pool(self.get(k)) for k in (*c.payload, c.key)]
        for combo in itertools.product(*pools):
            if combo in cache:
                continue
            cache.add(combo)
            value = AEnc(combo[:-1], combo[-1], c.at, c.dest)
            self.add_value(c.target, value)

    def _fire_out(self, c: OutProduct, idx: int) -> None:
        cache = self._caches.setdefault(idx, set())
        pools = [sorted_pool(self.get(k)) for k in c.parts]
        for combo in itertools.product(*pools):
            if combo in cache:
                continue
            cache.add(combo)
            self.add_kappa(combo)

    def _fire_in(self, c: InMatch, idx: int) -> None:
        arity = len(c.match) + len(c.binds)
        match_sets = [self.get(k) for k in c.match]
        cache = self._caches.setdefault(idx, set())
        for entry in list(self.kappa):
            if entry in cache:
                continue
            if isinstance(entry, WildTuple):
                if entry.arity != arity:
                    cache.add(entry)
                    continue
                if all(self._any_derivable(s) for s in match_sets):
                    cache.add(entry)
                    for var in c.binds:
                        self.add_value(rho_key(var), ATTACKER_ANY)
                continue
            if len(entry) != arity:
                cache.add(entry)
                continue
            if all(
                self._match_in(entry[i], match_sets[i]) for i in range(len(c.match))
            ):
                cache.add(entry)
                for var, value in zip(c.binds, entry[len(c.match) :]):
                    self.add_value(rho_key(var), value)

    def _dec_candidates(self, subject: set) -> Iterable:
        for v in subject:
            if isinstance(v, (AEnc, AttackerEnc)):
                yield v
            elif isinstance(v, AttackerAny):
                # the subject ranges over the attacker knowledge
                for w in list(self.zknow):
                    if isinstance(w, (AEnc, AttackerEnc)):
                        yield w

    def _fire_dec(self, c: DecMatch, idx: int) -> None:
        arity = len(c.match) + len(c.binds)
        key_set = self.get(c.key)
        match_sets = [self.get(k) for k in c.match]
        cache = self._caches.setdefault(idx, set())
        for value in list(self._dec_candidates(self.get(c.subject))):
            if value in cache:
                continue
            if isinstance(value, AttackerEnc):
                if value.arity != arity:
                    cache.add(value)
                    continue
                if not self._any_derivable(key_set):
                    continue
                if not all(self._any_derivable(s) for s in match_sets):
                    continue
                cache.add(value)
                for var in c.binds:
                    self.add_value(rho_key(var), ATTACKER_ANY)
                if not point_in(ATTACKER_POINT, c.orig):
                    self.add_psi(ATTACKER_POINT, c.at, witness=value)
                continue
            if len(value.payload) != arity:
                cache.add(value)
                continue
            if not self._match_in(value.key, key_set):
                continue
            if not all(
                self._match_in(value.payload[i], match_sets[i])
                for i in range(len(c.match))
            ):
                continue
            cache.add(value)
            for var, payload in zip(c.binds, value.payload[len(c.match) :]):
                self.add_value(rho_key(var), payload)
            if not point_in(value.at, c.orig) or not point_in(c.at, value.dest):
                self.add_psi(value.at, c.at, witness=value)

    def _fire_eavesdrop(self, c: EavesdropRule, idx: int) -> None:
        cache = self._caches.setdefault(idx, set())
        for entry in list(self.kappa):
            if entry in cache or isinstance(entry, WildTuple):
                continue
            cache.add(entry)
            for v in entry:
                if not isinstance(v, AttackerAny):
                    self.add_value(Z_KEY, v)

    def _fire_attacker_decrypt(self, c: AttackerDecryptRule, idx: int) -> None:
        cache = self._caches.setdefault(idx, set())
        for value in list(self.zknow):
            if value in cache or not isinstance(value, AEnc):
                continue
            if not self.derivable(value.key):
                continue
            cache.add(value)
            for part in value.payload:
                if not isinstance(part, AttackerAny):
                    self.add_value(Z_KEY, part)
            if not point_in(ATTACKER_POINT, value.dest):
                self.add_psi(value.at, ATTACKER_POINT, witness=value)


def sorted_pool(values: set) -> tuple:
    # Stable iteration keeps product caching deterministic within a run.
    return tuple(values)


def solve(
    constraints: Iterable,
    *,
    max_universe: int = 10**6,
    max_firings: int = 10**7,
    order_seed: Optional[int] = None,
) -> AnalysisResult:
    """Compute the least analysis triple satisfying ``constraints``."""
    return Solver(
        constraints,
        max_universe=max_universe,
        max_firings=max_firings,
        order_seed=order_seed,
    ).run()


def analyze(
    process: Process,
    *,
    attacker: Optional[Iterable] = None,
    policy: IndexPolicy = DEFAULT_POLICY,
    max_universe: int = 10**6,
    max_firings: int = 10**7,
    order_seed: Optional[int] = None,
) -> AnalysisResult:
    """Generate and solve in one step; ``attacker`` takes extra constraints."""
    ctx = GenContext(policy)
    gen_process(process, ctx)
    constraints = list(ctx.constraints)
    if attacker is not None:
        constraints.extend(attacker)
    return solve(
        constraints,
        max_universe=max_universe,
        max_firings=max_firings,
        order_seed=order_seed,
    )


# ---------------------------------------------------------------------------
# Independent validator


def check(
    process: Process,
    result: AnalysisResult,
    attacker_config=None,
    policy: IndexPolicy = DEFAULT_POLICY,
) -> bool:
    """Whether ``result`` satisfies every analysis rule for ``process``.

    Walks the process and evaluates each rule directly against the result;
    shares nothing with the solver beyond the value-matching semantics.  With
    an attacker configuration, also checks the closure conditions of the
    attacker (see ``lysa.attacker.check_conditions``).
    """
    know = result.attacker_knowledge

    def theta_of(term: Term) -> frozenset:
        if isinstance(term, Name):
            return frozenset({CName(canonical(term, policy))})
        if isinstance(term, Variable):
            return result.rho_of(term.render())
        payload_sets = [theta_of(t) for t in term.payload]
        key_set = theta_of(term.key)
        values = set()
        for combo in itertools.product(*payload_sets, key_set):
            values.add(AEnc(combo[:-1], combo[-1], term.at, term.dest))
        return frozenset(values)

    def set_ok(value: Value, candidates: frozenset) -> bool:
        return any(values_match(value, w, know) for w in candidates)

    def any_derivable(candidates: frozenset) -> bool:
        return any(derivable(w, know) for w in candidates)

    def bound_ok(var: str, value: Value) -> bool:
        return value in result.rho_of(var)

    def walk(p: Process) -> bool:
        if isinstance(p, Nil):
            return True
        if isinstance(p, Par):
            return walk(p.left) and walk(p.right)
        if isinstance(p, (Repl, New)):
            return walk(p.body)
        if isinstance(p, Out):
            pools = [theta_of(t) for t in p.terms]
            for combo in itertools.product(*pools):
                if combo not in result.kappa:
                    return False
            return walk(p.cont)
        if isinstance(p, In):
            match_sets = [theta_of(t) for t in p.match]
            arity = p.arity
            for entry in result.kappa:
                if isinstance(entry, WildTuple):
                    if entry.arity != arity:
                        continue
                    if all(any_derivable(s) for s in match_sets):
                        for v in p.binds:
                            if ATTACKER_ANY not in result.rho_of(v.render()):
                                return False
                    continue
                if len(entry) != arity:
                    continue
                if all(set_ok(entry[i], match_sets[i]) for i in range(len(p.match))):
                    for v, value in zip(p.binds, entry[len(p.match) :]):
                        if not bound_ok(v.render(), value):
                            return False
            return walk(p.cont)
        if isinstance(p, Decrypt):
            subject = theta_of(p.subject)
            key_set = theta_of(p.key)
            match_sets = [theta_of(t) for t in p.match]
            arity = p.arity

            candidates: set = set()
            for v in subject:
                if isinstance(v, (AEnc, AttackerEnc)):
                    candidates.add(v)
                elif isinstance(v, AttackerAny):
                    candidates.update(
                        w for w in know if isinstance(w, (AEnc, AttackerEnc))
                    )
            for value in candidates:
                if isinstance(value, AttackerEnc):
                    if value.arity != arity:
                        continue
                    if not any_derivable(key_set):
                        continue
                    if not all(any_derivable(s) for s in match_sets):
                        continue
                    for v in p.binds:
                        if ATTACKER_ANY not in result.rho_of(v.render()):
                            return False
                    if not point_in(ATTACKER_POINT, p.orig):
                        if (ATTACKER_POINT, p.at) not in result.psi:
                            return False
                    continue
                if len(value.payload) != arity:
                    continue
                if not set_ok(value.key, key_set):
                    continue
                if not all(
                    set_ok(value.payload[i], match_sets[i])
                    for i in range(len(p.match))
                ):
                    continue
                for v, payload in zip(p.binds, value.payload[len(p.match) :]):
                    if not bound_ok(v.render(), payload):
                        return False
                if not point_in(value.at, p.orig) or not point_in(p.at, value.dest):
                    if (value.at, p.at) not in result.psi:
                        return False
            return walk(p.cont)
        raise TypeError(f"not a process: {p!r}")

    if not walk(process):
        return False
    if attacker_config is not None:
        from .attacker import check_conditions

        if not check_conditions(attacker_config, process, result, policy):
            return False
    return True

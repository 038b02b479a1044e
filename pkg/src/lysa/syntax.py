"""Abstract syntax for the symmetric fragment of the LySa process calculus.

Terms are names, variables and annotated symmetric encryptions; processes are
nil, parallel composition, replication, restriction, output, pattern-matching
input and pattern-matching symmetric decryption.  Every encryption and
decryption site carries a crypto-point label and a destination/origin
assertion naming the crypto-points where the ciphertext may legitimately be
decrypted / may have originated.

All types here are immutable; values can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Union

# Indices are concrete integers after expansion; index identifiers (strings)
# only occur in parser templates before `expand` substitutes them.
Index = Union[int, str]


def _render_indexed(base: str, indices: tuple[Index, ...]) -> str:
    return "_".join([base, *map(str, indices)]) if indices else base


@dataclass(frozen=True)
class Name:
    """A name: key, nonce, principal identity, message or other atom."""

    base: str
    indices: tuple[Index, ...] = ()

    def __post_init__(self) -> None:
        if not self.base:
            raise ValueError("name base must be non-empty")
        if any(isinstance(i, int) and i < 0 for i in self.indices):
            raise ValueError(f"negative index in name {self.base}")

    def render(self) -> str:
        return _render_indexed(self.base, self.indices)

    def __str__(self) -> str:
        return self.render()


#: The attacker's canonical name, written n-bullet in reports.  The bullet is
#: outside the identifier alphabet, so source models can never collide with it.
ATTACKER_NAME = Name("n•")


@dataclass(frozen=True)
class Variable:
    """A variable bound by an input or decryption pattern."""

    base: str
    indices: tuple[Index, ...] = ()

    def render(self) -> str:
        return _render_indexed(self.base, self.indices)

    def __str__(self) -> str:
        return self.render()


#: Canonical variable of the attacker (z-bullet); key of the attacker
#: knowledge entry in analysis results.
ATTACKER_VAR = "z•"


@dataclass(frozen=True)
class CryptoPoint:
    """Label of an encryption or decryption site.

    ``attacker`` marks the unique point owned by the attacker; all process
    points are declared in the source model and are distinct per site.
    """

    base: str
    indices: tuple[Index, ...] = ()
    attacker: bool = False

    def render(self) -> str:
        if self.attacker:
            return "l•"
        return _render_indexed(self.base, self.indices)

    def __str__(self) -> str:
        return self.render()


ATTACKER_POINT = CryptoPoint("•", (), attacker=True)


class AllPoints:
    """Distinguished marker for the full crypto-point set C.

    Used as a dest/orig assertion meaning "decryption anywhere is legitimate";
    attacker-constructed ciphertexts carry it implicitly.
    """

    _instance: "AllPoints | None" = None

    def __new__(cls) -> "AllPoints":
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __contains__(self, point: object) -> bool:
        return isinstance(point, CryptoPoint)

    def __repr__(self) -> str:
        return "C"


ALL_POINTS = AllPoints()

PointSet = Union[frozenset, AllPoints]


def point_in(point: CryptoPoint, points: PointSet) -> bool:
    return point in points


# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class SymEnc:
    """Symmetric encryption of a non-empty payload tuple under a key term."""

    payload: tuple["Term", ...]
    key: "Term"
    at: CryptoPoint
    dest: PointSet

    def __post_init__(self) -> None:
        if not self.payload:
            raise ValueError("encryption payload must be non-empty")


Term = Union[Name, Variable, SymEnc]


# ---------------------------------------------------------------------------
# Processes


@dataclass(frozen=True)
class Nil:
    pass


NIL = Nil()


@dataclass(frozen=True)
class Par:
    left: "Process"
    right: "Process"


@dataclass(frozen=True)
class Repl:
    body: "Process"


@dataclass(frozen=True)
class New:
    name: Name
    body: "Process"


@dataclass(frozen=True)
class Out:
    terms: tuple[Term, ...]
    cont: "Process"


@dataclass(frozen=True)
class In:
    """Pattern-matching input: the first j positions are matched against the
    evaluated ``match`` terms, the remaining positions bind ``binds``."""

    match: tuple[Term, ...]
    binds: tuple[Variable, ...]
    cont: "Process"

    def __post_init__(self) -> None:
        if len({v.render() for v in self.binds}) != len(self.binds):
            raise ValueError("duplicate bound variable in input pattern")

    @property
    def arity(self) -> int:
        return len(self.match) + len(self.binds)


@dataclass(frozen=True)
class Decrypt:
    """Pattern-matching symmetric decryption with an origin assertion."""

    subject: Term
    match: tuple[Term, ...]
    binds: tuple[Variable, ...]
    key: Term
    at: CryptoPoint
    orig: PointSet
    cont: "Process"

    def __post_init__(self) -> None:
        if len({v.render() for v in self.binds}) != len(self.binds):
            raise ValueError("duplicate bound variable in decryption pattern")

    @property
    def arity(self) -> int:
        return len(self.match) + len(self.binds)


Process = Union[Nil, Par, Repl, New, Out, In, Decrypt]


# ---------------------------------------------------------------------------
# Canonical names


@dataclass(frozen=True)
class CanonicalName:
    """Representative of an equivalence class of names.

    The analysis ranges over canonical names so that the value universe of a
    closed process stays finite even under replication.
    """

    tag: str

    def __str__(self) -> str:
        return self.tag


@dataclass(frozen=True)
class IndexPolicy:
    """Controls how name indices map to equivalence classes.

    Indices listed in ``instantiated`` keep distinct classes; any other index
    collapses to a wildcard class.  ``instantiated = None`` (the default)
    keeps every index distinct, which is the right policy once a model has
    been expanded over explicit finite index sets.
    """

    instantiated: frozenset | None = None

    @classmethod
    def for_sets(cls, sets: dict) -> "IndexPolicy":
        values: set[int] = set()
        for s in sets.values():
            values.update(s)
        return cls(frozenset(values))


DEFAULT_POLICY = IndexPolicy()


def canonical(name: Name, policy: IndexPolicy = DEFAULT_POLICY) -> CanonicalName:
    """Map a name to its equivalence-class representative.

    Deterministic and idempotent: a name whose indices are all instantiated is
    its own class; indices outside the instantiated sets collapse to ``*``.
    """
    if policy.instantiated is None:
        return CanonicalName(name.render())
    indices = tuple(
        i if (isinstance(i, int) and i in policy.instantiated) else "*"
        for i in name.indices
    )
    return CanonicalName(_render_indexed(name.base, indices))


# ---------------------------------------------------------------------------
# Structural helpers


def subterms(term: Term) -> Iterator[Term]:
    yield term
    if isinstance(term, SymEnc):
        for part in term.payload:
            yield from subterms(part)
        yield from subterms(term.key)


def _term_names(term: Term) -> Iterator[Name]:
    for sub in subterms(term):
        if isinstance(sub, Name):
            yield sub


def free_names(process: Process) -> frozenset:
    """Names occurring free in ``process``.

    Restriction binds its name; input and decryption binders bind variables,
    not names, so they never remove anything here.
    """

    def walk(p: Process, bound: frozenset) -> frozenset:
        if isinstance(p, Nil):
            return frozenset()
        if isinstance(p, Par):
            return walk(p.left, bound) | walk(p.right, bound)
        if isinstance(p, Repl):
            return walk(p.body, bound)
        if isinstance(p, New):
            return walk(p.body, bound | {p.name})
        if isinstance(p, Out):
            names = {n for t in p.terms for n in _term_names(t)}
            return (frozenset(names) - bound) | walk(p.cont, bound)
        if isinstance(p, In):
            names = {n for t in p.match for n in _term_names(t)}
            return (frozenset(names) - bound) | walk(p.cont, bound)
        if isinstance(p, Decrypt):
            names = set(_term_names(p.subject)) | set(_term_names(p.key))
            for t in p.match:
                names.update(_term_names(t))
            return (frozenset(names) - bound) | walk(p.cont, bound)
        raise TypeError(f"not a process: {p!r}")

    return walk(process, frozenset())


@dataclass(frozen=True)
class ArityProfile:
    """Tuple and encryption arities occurring syntactically in a process.

    Bounds the attacker's value construction: the attacker only ever forges
    tuples and ciphertexts of arities the analyzed system itself uses.
    """

    max_tuple: int
    enc_arities: frozenset

    @property
    def tuple_arities(self) -> frozenset:
        return frozenset(range(1, self.max_tuple + 1))


def arity_profile(process: Process) -> ArityProfile:
    max_tuple = 0
    enc: set[int] = set()

    def scan_term(t: Term) -> None:
        for sub in subterms(t):
            if isinstance(sub, SymEnc):
                enc.add(len(sub.payload))

    def walk(p: Process) -> None:
        nonlocal max_tuple
        if isinstance(p, Par):
            walk(p.left)
            walk(p.right)
        elif isinstance(p, (Repl, New)):
            walk(p.body)
        elif isinstance(p, Out):
            max_tuple = max(max_tuple, len(p.terms))
            for t in p.terms:
                scan_term(t)
            walk(p.cont)
        elif isinstance(p, In):
            max_tuple = max(max_tuple, p.arity)
            for t in p.match:
                scan_term(t)
            walk(p.cont)
        elif isinstance(p, Decrypt):
            enc.add(p.arity)
            scan_term(p.subject)
            scan_term(p.key)
            for t in p.match:
                scan_term(t)
            walk(p.cont)

    walk(process)
    return ArityProfile(max_tuple, frozenset(enc))


def declared_points(process: Process) -> frozenset:
    """Crypto-points attached to encryption/decryption sites of a process."""
    points: set[CryptoPoint] = set()

    def scan_term(t: Term) -> None:
        for sub in subterms(t):
            if isinstance(sub, SymEnc):
                points.add(sub.at)

    def walk(p: Process) -> None:
        if isinstance(p, Par):
            walk(p.left)
            walk(p.right)
        elif isinstance(p, (Repl, New)):
            walk(p.body)
        elif isinstance(p, Out):
            for t in p.terms:
                scan_term(t)
            walk(p.cont)
        elif isinstance(p, In):
            for t in p.match:
                scan_term(t)
            walk(p.cont)
        elif isinstance(p, Decrypt):
            points.add(p.at)
            scan_term(p.subject)
            scan_term(p.key)
            for t in p.match:
                scan_term(t)
            walk(p.cont)

    walk(process)
    return frozenset(points)


def bound_variables(process: Process) -> list[Variable]:
    """All binder-introduced variables, in syntactic order."""
    out: list[Variable] = []

    def walk(p: Process) -> None:
        if isinstance(p, Par):
            walk(p.left)
            walk(p.right)
        elif isinstance(p, (Repl, New)):
            walk(p.body)
        elif isinstance(p, Out):
            walk(p.cont)
        elif isinstance(p, In):
            out.extend(p.binds)
            walk(p.cont)
        elif isinstance(p, Decrypt):
            out.extend(p.binds)
            walk(p.cont)

    walk(process)
    return out

"""Abstract value domain and analysis results.

The analysis ranges over a finite universe of abstract values: canonical
names, ciphertext values built at the syntactic encryption sites of the
process, one opaque token per encryption arity for attacker-forged
ciphertexts, and a single symbolic token standing for "anything the attacker
knows".  The symbolic token is what keeps the universe finite when attacker
knowledge flows back into honest processes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import total_ordering
from typing import Mapping, Union

from .syntax import (
    ALL_POINTS,
    ATTACKER_VAR,
    AllPoints,
    CanonicalName,
    CryptoPoint,
    PointSet,
    point_in,
)


@dataclass(frozen=True)
class CName:
    """A canonical name used as a value."""

    name: CanonicalName

    def __str__(self) -> str:
        return self.name.tag


@dataclass(frozen=True)
class AEnc:
    """A ciphertext value built at a process encryption site.

    Crypto-point and destination set are part of the value's identity (they
    carry the provenance the error component reports on), but matching
    between values ignores them: principals compare ciphertexts by payload
    and key only.
    """

    payload: tuple["Value", ...]
    key: "Value"
    at: CryptoPoint
    dest: PointSet

    def __str__(self) -> str:
        inner = ", ".join(map(str, self.payload))
        return f"{{{inner}}}:{self.key} [at {self.at} dest {format_points(self.dest)}]"


@dataclass(frozen=True)
class AttackerEnc:
    """Opaque token for the family of attacker-forged ciphertexts of one
    payload arity.  Decrypting it binds pattern variables to the whole
    attacker knowledge."""

    arity: int

    def __str__(self) -> str:
        return f"enc•/{self.arity}"


@dataclass(frozen=True)
class AttackerAny:
    """Symbolic value denoting every value the attacker can derive.

    Appears in variable estimates when a binder can receive arbitrary
    attacker-chosen data (wild-tuple suffixes, attacker-ciphertext payloads).
    """

    def __str__(self) -> str:
        return "any•"


ATTACKER_ANY = AttackerAny()

Value = Union[CName, AEnc, AttackerEnc, AttackerAny]


@dataclass(frozen=True)
class WildTuple:
    """Symbolic network tuple whose every component ranges over the attacker
    knowledge; one per tuple arity instead of an enumerated product."""

    arity: int

    def __str__(self) -> str:
        return f"<• x {self.arity}>"


KappaEntry = Union[tuple, WildTuple]


def format_points(points: PointSet) -> str:
    if isinstance(points, AllPoints):
        return "C"
    return "{" + ", ".join(sorted(p.render() for p in points)) + "}"


def format_value(value: Value) -> str:
    return str(value)


def format_tuple(entry: KappaEntry) -> str:
    if isinstance(entry, WildTuple):
        return str(entry)
    return "<" + ", ".join(format_value(v) for v in entry) + ">"


# ---------------------------------------------------------------------------
# Matching and attacker derivability
#
# These two predicates are the shared semantic core used by the constraint
# solver, the independent rule checker and the trace-coverage test.


def values_match(v: Value, w: Value, knowledge: frozenset) -> bool:
    """Whether two abstract values agree for pattern-matching purposes.

    Structural on payload and key, blind to crypto-point annotations; the
    symbolic attacker token on either side matches anything the attacker can
    derive from ``knowledge``.
    """
    if isinstance(v, AttackerAny):
        return derivable(w, knowledge)
    if isinstance(w, AttackerAny):
        return derivable(v, knowledge)
    if isinstance(v, CName) or isinstance(w, CName):
        return v == w
    if isinstance(v, AttackerEnc) or isinstance(w, AttackerEnc):
        # An attacker-forged ciphertext can imitate any ciphertext whose
        # components the attacker can derive.
        if isinstance(v, AttackerEnc) and isinstance(w, AttackerEnc):
            return v.arity == w.arity
        enc = w if isinstance(v, AttackerEnc) else v
        tok = v if isinstance(v, AttackerEnc) else w
        assert isinstance(enc, AEnc)
        return tok.arity == len(enc.payload) and derivable(enc, knowledge)
    assert isinstance(v, AEnc) and isinstance(w, AEnc)
    if len(v.payload) != len(w.payload):
        return False
    if not values_match(v.key, w.key, knowledge):
        return False
    return all(
        values_match(a, b, knowledge) for a, b in zip(v.payload, w.payload)
    )


def derivable(value: Value, knowledge: frozenset) -> bool:
    """Whether the attacker can produce ``value`` from ``knowledge``.

    Everything known is derivable, and so is any ciphertext whose key and
    payload are all derivable (the attacker encrypts with keys he knows).
    """
    if isinstance(value, AttackerAny):
        return True
    if value in knowledge:
        return True
    if isinstance(value, AEnc):
        return derivable(value.key, knowledge) and all(
            derivable(p, knowledge) for p in value.payload
        )
    return False


def set_matches(value: Value, candidates: frozenset, knowledge: frozenset) -> bool:
    """∃ w ∈ candidates matching ``value``."""
    return any(values_match(value, w, knowledge) for w in candidates)


# ---------------------------------------------------------------------------
# Results


@dataclass(frozen=True)
class AnalysisResult:
    """The least analysis triple.

    ``rho`` maps canonical variables to value estimates, ``kappa`` is the set
    of tuples that may flow on the network, ``psi`` the set of (encrypted-at,
    decrypted-at) annotation violations.  ``theta`` keeps the per-occurrence
    term estimates for validation and debugging.
    """

    rho: Mapping[str, frozenset]
    kappa: frozenset
    psi: frozenset
    theta: Mapping[int, frozenset] = field(default_factory=dict)

    @property
    def attacker_knowledge(self) -> frozenset:
        return self.rho.get(ATTACKER_VAR, frozenset())

    def rho_of(self, var: str) -> frozenset:
        return self.rho.get(var, frozenset())

    def knows(self, value: Value) -> bool:
        return derivable(value, self.attacker_knowledge)


def sorted_psi(psi: frozenset) -> list[tuple[str, str]]:
    return sorted((a.render(), b.render()) for a, b in psi)


def sorted_values(values: frozenset) -> list[str]:
    return sorted(format_value(v) for v in values)

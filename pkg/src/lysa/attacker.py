"""Dolev-Yao attacker synthesis.

The attacker runs in parallel with the analyzed process and is characterized
by four closure conditions over his knowledge rho(z-bullet):

1. he starts with his own name, every free name of the process and any
   scenario-supplied seeds, and learns every component of every network
   message;
2. he decrypts known ciphertexts whose key he can derive, learning the
   payload; unless the ciphertext was destined for him this is an annotation
   violation (enc-point, attacker-point);
3. he forges ciphertexts of every payload arity the process uses, from
   values he can derive; a principal decrypting such a forgery binds its
   pattern variables to the whole attacker knowledge, and violates its origin
   assertion unless it names the attacker point;
4. he sends arbitrary tuples built from his knowledge, of every tuple arity
   the process uses.

Conditions 3 and 4 are represented symbolically (one opaque ciphertext token
per arity, one wild tuple per arity) instead of enumerated products; the
matching semantics in ``lysa.domain`` gives them their meaning.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .cfa import (
    AttackerDecryptRule,
    EavesdropRule,
    KappaMembership,
    Membership,
    Z_KEY,
)
from .domain import (
    AEnc,
    AnalysisResult,
    AttackerAny,
    AttackerEnc,
    CName,
    WildTuple,
    derivable,
)
from .syntax import (
    ATTACKER_NAME,
    ATTACKER_POINT,
    DEFAULT_POLICY,
    IndexPolicy,
    Name,
    Process,
    arity_profile,
    canonical,
    free_names,
    point_in,
)


@dataclass(frozen=True)
class AttackerConfig:
    """Shape of the attacker composed with a process.

    Arities come from the arity profile of the analyzed process; extra seeds
    are scenario-controlled (leaked keys and the like).
    """

    tuple_arities: frozenset = frozenset()
    enc_arities: frozenset = frozenset()
    extra_seeds: frozenset = frozenset()
    enabled: bool = True

    @classmethod
    def for_process(
        cls, process: Process, extra_seeds: Iterable = ()
    ) -> "AttackerConfig":
        profile = arity_profile(process)
        return cls(
            tuple_arities=profile.tuple_arities,
            enc_arities=profile.enc_arities,
            extra_seeds=frozenset(extra_seeds),
        )

    @classmethod
    def disabled(cls) -> "AttackerConfig":
        """A null attacker contributing no constraints at all; composing with
        it leaves the analysis of the process unchanged."""
        return cls(enabled=False)


def attacker_constraints(
    cfg: AttackerConfig, process: Process, policy: IndexPolicy = DEFAULT_POLICY
) -> list:
    """Constraints encoding the four attacker conditions for ``process``."""
    if not cfg.enabled:
        return []
    constraints: list = [
        Membership(CName(canonical(ATTACKER_NAME, policy)), Z_KEY)
    ]
    for name in sorted(free_names(process), key=Name.render):
        constraints.append(Membership(CName(canonical(name, policy)), Z_KEY))
    for seed in sorted(cfg.extra_seeds, key=Name.render):
        constraints.append(Membership(CName(canonical(seed, policy)), Z_KEY))
    for arity in sorted(cfg.enc_arities):
        constraints.append(Membership(AttackerEnc(arity), Z_KEY))
    for arity in sorted(cfg.tuple_arities):
        constraints.append(KappaMembership(WildTuple(arity)))
    constraints.append(EavesdropRule())
    constraints.append(AttackerDecryptRule())
    return constraints


def confidential(result: AnalysisResult, secret: Name, policy: IndexPolicy = DEFAULT_POLICY) -> bool:
    """Whether the attacker never learns ``secret``."""
    return CName(canonical(secret, policy)) not in result.attacker_knowledge


def authentic(result: AnalysisResult) -> frozenset:
    """The annotation violations; empty means destination/origin
    authentication holds."""
    return result.psi


def check_conditions(
    cfg: AttackerConfig,
    process: Process,
    result: AnalysisResult,
    policy: IndexPolicy = DEFAULT_POLICY,
) -> bool:
    """Directly verify that a result is closed under the attacker conditions;
    the validator counterpart of ``attacker_constraints``."""
    if not cfg.enabled:
        return True
    know = result.attacker_knowledge

    # condition 1: seeds and eavesdropping
    if CName(canonical(ATTACKER_NAME, policy)) not in know:
        return False
    for name in free_names(process):
        if CName(canonical(name, policy)) not in know:
            return False
    for seed in cfg.extra_seeds:
        if CName(canonical(seed, policy)) not in know:
            return False
    for entry in result.kappa:
        if isinstance(entry, WildTuple):
            continue
        for v in entry:
            if not isinstance(v, AttackerAny) and v not in know:
                return False

    # condition 2: decryption with derivable keys
    for value in know:
        if isinstance(value, AEnc) and derivable(value.key, know):
            for part in value.payload:
                if not isinstance(part, AttackerAny) and part not in know:
                    return False
            if not point_in(ATTACKER_POINT, value.dest):
                if (value.at, ATTACKER_POINT) not in result.psi:
                    return False

    # condition 3: forged ciphertext tokens
    for arity in cfg.enc_arities:
        if AttackerEnc(arity) not in know:
            return False

    # condition 4: wild tuples on the network
    for arity in cfg.tuple_arities:
        if WildTuple(arity) not in result.kappa:
            return False
    return True

"""The shipped protocol scenarios and the analysis pipeline.

A scenario names a model file plus its configuration: index sets, whether the
attacker participates as a legitimate principal (index 0), the number of
protocol rounds modelled, which round-1 names are assumed leaked, and which
names must stay confidential.  ``run_scenario`` drives parse, expansion,
attacker composition and solving, and renders the verdicts into a report.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .attacker import AttackerConfig, attacker_constraints, confidential
from .cfa import GenContext, gen_process, solve
from .parser import SourceModel, expand, parse
from .report import Report
from .syntax import Name, New, Par, Process, Repl, Decrypt, In, Out, Nil


def corpus_dir() -> Path:
    return Path(resources.files("lysa") / "corpus")


def model_path(filename: str) -> Path:
    return corpus_dir() / filename


@dataclass(frozen=True)
class Scenario:
    """One corpus entry with its expected verdicts."""

    name: str
    model_file: str
    index_sets: dict = field(default_factory=dict)
    attacker_legitimate: bool = False
    rounds: int = 1
    leaked_names: tuple = ()
    secrets: tuple = ()
    expect_psi_empty: bool = True
    expect_secrets_safe: bool = True

    def __post_init__(self) -> None:
        if self.rounds == 2:
            for leaked in self.leaked_names:
                if not (leaked.indices and leaked.indices[-1] == 1):
                    raise ValueError(
                        f"leaked name {leaked.render()} is not a round-1 name"
                    )


def _new_bound_names(process: Process) -> set:
    names: set = set()

    def walk(p: Process) -> None:
        if isinstance(p, Par):
            walk(p.left)
            walk(p.right)
        elif isinstance(p, Repl):
            walk(p.body)
        elif isinstance(p, New):
            names.add(p.name)
            walk(p.body)
        elif isinstance(p, (Out, In, Decrypt)):
            walk(p.cont)

    walk(process)
    return names


def load_model(path: Path) -> SourceModel:
    return parse(path.read_text(encoding="utf-8"))


def run_scenario(
    scenario: Scenario,
    *,
    max_universe: int = 10**6,
    max_firings: int = 10**7,
    order_seed: Optional[int] = None,
) -> Report:
    """Execute the full pipeline for one scenario and report the verdicts."""
    timings: dict = {}
    t0 = time.perf_counter()
    model = load_model(model_path(scenario.model_file))
    timings["parse_ms"] = (time.perf_counter() - t0) * 1000

    t0 = time.perf_counter()
    process = expand(
        model,
        legitimate_attacker=scenario.attacker_legitimate,
        set_overrides=scenario.index_sets or None,
    )
    timings["expand_ms"] = (time.perf_counter() - t0) * 1000

    if scenario.rounds == 2:
        minted = _new_bound_names(process)
        for leaked in scenario.leaked_names:
            if leaked not in minted:
                raise ValueError(
                    f"leaked name {leaked.render()} is not minted by the model"
                )

    t0 = time.perf_counter()
    cfg = AttackerConfig.for_process(process, extra_seeds=scenario.leaked_names)
    ctx = GenContext()
    gen_process(process, ctx)
    constraints = ctx.constraints + attacker_constraints(cfg, process)
    result = solve(
        constraints,
        max_universe=max_universe,
        max_firings=max_firings,
        order_seed=order_seed,
    )
    timings["analyze_ms"] = (time.perf_counter() - t0) * 1000

    secret_verdicts = {
        secret.render(): confidential(result, secret) for secret in scenario.secrets
    }
    expectations = {
        "psi_empty": scenario.expect_psi_empty,
        "secrets_safe": scenario.expect_secrets_safe,
    }
    return Report.from_result(
        result,
        scenario=scenario.name,
        secret_verdicts=secret_verdicts,
        expectations=expectations,
        timings_ms=timings,
        warnings=list(model.warnings),
    )


_HONEST = {"X0": frozenset({1, 2, 3})}


def corpus() -> list:
    """The shipped scenarios: the worked single-message example, both ZigBee
    cases in base and fixed form, the two-round replay configurations, and
    legitimate-attacker variants."""
    lk1 = Name("LK", (1, 1, 1))
    mk1 = Name("MK", (1, 1, 1))
    msg2 = Name("MSG", (1, 1, 2))
    return [
        Scenario(
            name="example2",
            model_file="example2.lysa",
            secrets=(Name("K"),),
            expect_psi_empty=False,
            expect_secrets_safe=False,
        ),
        Scenario(
            name="case1-base",
            model_file="case1_base.lysa",
            secrets=(Name("MSG", (1, 1)),),
            expect_psi_empty=True,
            expect_secrets_safe=True,
        ),
        Scenario(
            name="case1-base-replay",
            model_file="case1_base_2r.lysa",
            attacker_legitimate=True,
            rounds=2,
            leaked_names=(lk1,),
            secrets=(msg2,),
            expect_psi_empty=False,
            expect_secrets_safe=False,
        ),
        Scenario(
            name="case1-fixed",
            model_file="case1_fixed.lysa",
            secrets=(Name("MSG", (1, 1)),),
            expect_psi_empty=True,
            expect_secrets_safe=True,
        ),
        Scenario(
            name="case1-fixed-replay",
            model_file="case1_fixed_2r.lysa",
            attacker_legitimate=True,
            rounds=2,
            leaked_names=(lk1,),
            secrets=(msg2,),
            expect_psi_empty=True,
            expect_secrets_safe=True,
        ),
        Scenario(
            name="case2-base-replay",
            model_file="case2_base_2r.lysa",
            attacker_legitimate=True,
            rounds=2,
            leaked_names=(mk1,),
            secrets=(msg2,),
            expect_psi_empty=False,
            expect_secrets_safe=False,
        ),
        Scenario(
            name="case2-fixed-replay",
            model_file="case2_fixed_2r.lysa",
            attacker_legitimate=True,
            rounds=2,
            leaked_names=(mk1,),
            secrets=(msg2,),
            expect_psi_empty=True,
            expect_secrets_safe=True,
        ),
        Scenario(
            name="case1-base-legit",
            model_file="case1_base.lysa",
            attacker_legitimate=True,
            secrets=(Name("MSG", (1, 1)),),
            expect_psi_empty=True,
            expect_secrets_safe=True,
        ),
        Scenario(
            name="case1-fixed-legit",
            model_file="case1_fixed.lysa",
            attacker_legitimate=True,
            secrets=(Name("MSG", (1, 1)),),
            expect_psi_empty=True,
            expect_secrets_safe=True,
        ),
    ]


def find_scenario(name: str) -> Scenario:
    for s in corpus():
        if s.name == name:
            return s
    raise KeyError(f"no scenario named {name!r}")

"""Analysis reports: text and JSON rendering, delimited summaries, figures.

The text format mirrors the notation of the analysis facts (tuples in kappa,
values in rho, point pairs in psi); JSON carries the same data under a
versioned schema.  ``write_corpus_outputs`` renders a scenario batch into a
CSV summary plus charts of timings and result sizes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .domain import (
    AnalysisResult,
    WildTuple,
    format_tuple,
    format_value,
    sorted_psi,
    sorted_values,
)

SCHEMA_VERSION = 1


@dataclass
class Report:
    """Serializable view of one analysis run and its verdicts."""

    scenario: Optional[str]
    psi: list
    attacker_knowledge: list
    kappa_size: int
    rho_summary: dict
    secret_verdicts: dict
    authentication: bool
    expectations: Optional[dict]
    timings_ms: dict
    warnings: list = field(default_factory=list)

    @classmethod
    def from_result(
        cls,
        result: AnalysisResult,
        *,
        scenario: Optional[str] = None,
        secret_verdicts: Optional[dict] = None,
        expectations: Optional[dict] = None,
        timings_ms: Optional[dict] = None,
        warnings: Optional[list] = None,
    ) -> "Report":
        rho_summary = {
            var: len(values) for var, values in sorted(result.rho.items())
        }
        return cls(
            scenario=scenario,
            psi=sorted_psi(result.psi),
            attacker_knowledge=sorted_values(result.attacker_knowledge),
            kappa_size=len(result.kappa),
            rho_summary=rho_summary,
            secret_verdicts=dict(sorted((secret_verdicts or {}).items())),
            authentication=not result.psi,
            expectations=expectations,
            timings_ms={k: round(v, 3) for k, v in (timings_ms or {}).items()},
            warnings=list(warnings or []),
        )

    @property
    def secrets_safe(self) -> bool:
        return all(self.secret_verdicts.values())

    @property
    def expectations_met(self) -> Optional[bool]:
        if self.expectations is None:
            return None
        ok = True
        if "psi_empty" in self.expectations:
            ok &= (not self.psi) == self.expectations["psi_empty"]
        if "secrets_safe" in self.expectations:
            ok &= self.secrets_safe == self.expectations["secrets_safe"]
        return ok

    def to_json(self) -> str:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario,
            "psi": [list(pair) for pair in self.psi],
            "attacker_knowledge": self.attacker_knowledge,
            "kappa_size": self.kappa_size,
            "rho_summary": self.rho_summary,
            "verdicts": {
                "authentication": self.authentication,
                "secrets": self.secret_verdicts,
            },
            "expectations": self.expectations,
            "expectations_met": self.expectations_met,
            "timings_ms": self.timings_ms,
            "warnings": self.warnings,
        }
        return json.dumps(payload, indent=2, ensure_ascii=False)

    def to_text(self, *, max_values: int = 40) -> str:
        lines = []
        title = self.scenario or "analysis"
        lines.append(f"== {title} ==")
        lines.append(f"kappa: {self.kappa_size} message(s)")
        lines.append(f"variables: {len(self.rho_summary)}")
        if self.psi:
            lines.append(f"psi ({len(self.psi)} violation(s)):")
            for enc_at, dec_at in self.psi:
                lines.append(f"  ({enc_at}, {dec_at}) ∈ ψ")
        else:
            lines.append("psi: empty — destination/origin authentication holds")
        lines.append(f"attacker knowledge ({len(self.attacker_knowledge)} value(s)):")
        shown = self.attacker_knowledge[:max_values]
        for value in shown:
            lines.append(f"  {value} ∈ ρ(z•)")
        if len(self.attacker_knowledge) > len(shown):
            lines.append(f"  ... ({len(self.attacker_knowledge) - len(shown)} more)")
        for secret, safe in self.secret_verdicts.items():
            verdict = "confidential" if safe else "LEAKED"
            lines.append(f"secret {secret}: {verdict}")
        if self.expectations is not None:
            lines.append(
                "expectations: " + ("met" if self.expectations_met else "NOT MET")
            )
        if self.timings_ms:
            total = sum(self.timings_ms.values())
            lines.append(f"time: {total:.0f} ms")
        for warning in self.warnings:
            lines.append(f"warning: {warning}")
        return "\n".join(lines)


def result_facts_text(result: AnalysisResult, *, max_lines: int = 200) -> str:
    """The raw facts of a result, one per line, in the analysis notation."""
    lines = []
    for entry in sorted(result.kappa, key=format_tuple):
        lines.append(f"{format_tuple(entry)} ∈ κ")
    for var in sorted(result.rho):
        for value in sorted_values(result.rho[var]):
            lines.append(f"{value} ∈ ρ({var})")
    for enc_at, dec_at in sorted_psi(result.psi):
        lines.append(f"({enc_at}, {dec_at}) ∈ ψ")
    if len(lines) > max_lines:
        extra = len(lines) - max_lines
        lines = lines[:max_lines] + [f"... ({extra} more facts)"]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Corpus batch outputs: delimited summary plus figures


def write_summary_csv(reports: list, path: Path) -> None:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            [
                "scenario",
                "psi_size",
                "authentication",
                "attacker_knowledge_size",
                "kappa_size",
                "secrets_safe",
                "expectations_met",
                "analyze_ms",
            ]
        )
        for report in reports:
            writer.writerow(
                [
                    report.scenario,
                    len(report.psi),
                    report.authentication,
                    len(report.attacker_knowledge),
                    report.kappa_size,
                    report.secrets_safe,
                    report.expectations_met,
                    report.timings_ms.get("analyze_ms", ""),
                ]
            )


def write_figures(reports: list, outdir: Path) -> list:
    """Render the batch summary charts; returns the written paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = [r.scenario or "?" for r in reports]
    written = []

    def bar_chart(values, ylabel, filename, color):
        fig, ax = plt.subplots(figsize=(max(6, 0.9 * len(names)), 3.5))
        ax.bar(range(len(names)), values, color=color)
        ax.set_xticks(range(len(names)))
        ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
        ax.set_ylabel(ylabel)
        ax.spines["top"].set_visible(False)
        ax.spines["right"].set_visible(False)
        fig.tight_layout()
        path = outdir / filename
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    bar_chart(
        [r.timings_ms.get("analyze_ms", 0.0) for r in reports],
        "analysis time (ms)",
        "timings.png",
        "#4878cf",
    )
    bar_chart(
        [len(r.psi) for r in reports],
        "annotation violations",
        "violations.png",
        "#d1495b",
    )
    bar_chart(
        [len(r.attacker_knowledge) for r in reports],
        "attacker knowledge size",
        "knowledge.png",
        "#6a994e",
    )
    return written


def write_corpus_outputs(reports: list, outdir: Path) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    write_summary_csv(reports, outdir / "summary.csv")
    for report in reports:
        name = (report.scenario or "analysis").replace("/", "_")
        (outdir / f"{name}.json").write_text(
            report.to_json() + "\n", encoding="utf-8"
        )
    write_figures(reports, outdir)

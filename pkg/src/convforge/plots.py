"""Figure rendering for diversity reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .metrics import DiversityReport

RATIO_FIELDS = (
    ("unique tokens / tokens", "unique_token_ratio"),
    ("unique bigrams / tokens", "unique_bigram_ratio"),
    ("unique transitions / turns", "unique_transition_ratio"),
    ("unique subdialogues k=3", "unique_subdialogue_ratio_k3"),
    ("unique subdialogues k=5", "unique_subdialogue_ratio_k5"),
    ("unique outlines / dialogues", "unique_outline_ratio"),
)


def save_report_figure(report: DiversityReport, path) -> None:
    """Render the ratio metrics as a horizontal bar chart PNG."""
    labels = []
    values = []
    for label, fieldname in RATIO_FIELDS:
        value = getattr(report, fieldname)
        if value is None:
            continue
        labels.append(label)
        values.append(value)

    fig, ax = plt.subplots(figsize=(7, 3.2))
    positions = range(len(labels))
    ax.barh(positions, values, color="#4878a8")
    ax.set_yticks(list(positions))
    ax.set_yticklabels(labels, fontsize=9)
    ax.invert_yaxis()
    ax.set_xlim(0, 1)
    ax.set_xlabel("ratio")
    ax.set_title(
        f"Corpus diversity — {report.dialogues} dialogues, "
        f"{report.total_turns} turns, {report.total_tokens} tokens",
        fontsize=10,
    )
    for pos, value in zip(positions, values):
        ax.text(min(value + 0.01, 0.98), pos, f"{value:.3f}", va="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

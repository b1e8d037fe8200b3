"""Stable CSV output and config echoes.

Column names and order are fixed per subcommand; floats are serialized with
17 significant digits so every number round-trips exactly through the file.
Each run also writes a normalized copy of its effective config next to the
output, making published tables reproducible from their own directory.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

SIMULATE_COLUMNS = (
    "t", "mc_mean", "mc_stderr", "replicas", "closed_form", "zscore",
    "m_variance",
)
SWEEP_COLUMNS = (
    "N", "t_of_N", "alpha_N", "regime", "predicted", "observed", "ratio",
    "pass", "closed_form", "stderr", "tolerance", "label",
)
KAPPA_COLUMNS = (
    "signature", "N", "kappa_analytic", "kappa_enumerated", "abs_diff", "pass",
)
ORACLE_COLUMNS = ("t", "closed_form")
RENEWAL_CHECK_COLUMNS = (
    "law", "N", "t", "target", "mc_mean", "mc_stderr", "ratio", "basis", "pass",
)

COLUMNS = {
    "simulate": SIMULATE_COLUMNS,
    "sweep": SWEEP_COLUMNS,
    "kappa": KAPPA_COLUMNS,
    "oracle": ORACLE_COLUMNS,
    "renewal-check": RENEWAL_CHECK_COLUMNS,
}


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_rows(path: str | Path, columns, rows) -> None:
    """Write dict rows under a fixed column order (missing keys are blank)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row.get(col)) for col in columns])


def echo_path(out: str | Path) -> Path:
    return Path(str(out) + ".config.json")


def write_config_echo(out: str | Path, subcommand: str, config: dict,
                      version: str) -> Path:
    """Normalized effective-config copy next to the output file."""
    path = echo_path(out)
    payload = {"subcommand": subcommand, "version": version, "config": config}
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path

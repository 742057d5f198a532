"""CSV and JSON writers with embedded run configuration.

Every output file starts with the resolved configuration and a schema
version so runs are reproducible from the artifact alone.  CSV follows
RFC 4180 (UTF-8, '.' decimal, CRLF-free); JSON carries numerics as
decimal strings so high-precision values survive round trips.  Nothing
time- or host-dependent is ever written: identical configurations give
byte-identical files.
"""

from __future__ import annotations

import csv
import json
from typing import Iterable, Mapping

import numpy as np

__all__ = ["write_csv", "write_json", "format_number"]

SCHEMA_VERSION = 1


def format_number(x) -> str:
    """Full-precision, locale-independent decimal rendering."""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _config_lines(schema: str, config: Mapping) -> list[str]:
    lines = [f"# schema={schema}/v{SCHEMA_VERSION}"]
    for key, value in config.items():
        lines.append(f"# {key}={value}")
    return lines


def write_csv(path, schema: str, config: Mapping, columns: list[str], rows: Iterable) -> None:
    """Write rows of numbers/strings with a commented config header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for line in _config_lines(schema, config):
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_number(v) for v in row])


def write_json(path, schema: str, config: Mapping, payload) -> None:
    """Write a JSON document with the config echoed and numbers stringified."""
    doc = {
        "schema": f"{schema}/v{SCHEMA_VERSION}",
        "config": {k: str(v) for k, v in config.items()},
        "data": _stringify(payload),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _stringify(obj):
    if isinstance(obj, dict):
        return {str(k): _stringify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_stringify(v) for v in obj]
    if isinstance(obj, (int, float)):
        return format_number(obj)
    return str(obj)

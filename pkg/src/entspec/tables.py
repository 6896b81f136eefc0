"""CSV and JSON table writers with a provenance header.

A run produces one or more named tables.  CSV output starts with ``#`` lines
holding the resolved configuration, then each table as ``# table=<name>``,
a header row and the data rows.  Floats use 9 significant digits so that
repeated runs are byte-identical.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

LOG2 = math.log(2)


class Table(NamedTuple):
    name: str
    columns: tuple
    rows: list


RATE_COLUMNS = {"gamma", "gamma_lo", "gamma_hi", "lower_rate", "upper_rate", "rate", "rate_lower_bound",
                "alpha_or_gamma", "log_M", "S_lower", "S_upper", "S_sigma", "S_omega", "C_DC",
                "lower_cell_lo", "lower_cell_hi", "upper_cell_lo", "upper_cell_hi", "R"}

ROW_SORT_KEYS = ("n", "gamma", "alpha_or_gamma")


def make_table(name: str, columns: Sequence[str], rows: Iterable[Mapping], sort: bool = True) -> Table:
    """Keep ``columns`` from each row and sort canonically by n, then gamma."""
    rows = [{c: r.get(c) for c in columns} for r in rows]
    if sort:
        keys = [k for k in ROW_SORT_KEYS if k in columns]
        rows.sort(key=lambda r: tuple(_sort_value(r[k]) for k in keys))
    return Table(name, tuple(columns), rows)


def _sort_value(x):
    return math.inf if x is None else x


def to_units(table: Table, units: str) -> Table:
    """Convert nat-valued columns to bits for display; data stays in nats internally."""
    if units == "nats":
        return table
    scale = 1 / LOG2
    rows = [{c: (v * scale if c in RATE_COLUMNS and _is_real(v) else v) for c, v in r.items()}
            for r in table.rows]
    return Table(table.name, table.columns, rows)


def _is_real(v):
    return isinstance(v, (float, int, np.floating, np.integer)) and not isinstance(v, (bool, np.bool_))


def format_value(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no inf/nan; keep them as the CSV spelling
        return float(f"{v:.9g}") if math.isfinite(v) else format_value(v)
    if isinstance(v, Mapping):
        return {str(k): _json_value(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_value(x) for x in v]
    return v


def render_csv(tables: Sequence[Table], provenance: Mapping) -> str:
    buf = io.StringIO()
    for key in sorted(provenance):
        buf.write(f"# {key}={_provenance_value(provenance[key])}\n")
    w = csv.writer(buf, lineterminator="\n")
    for i, t in enumerate(tables):
        if i:
            buf.write("\n")
        buf.write(f"# table={t.name}\n")
        w.writerow(t.columns)
        for r in t.rows:
            w.writerow([format_value(r[c]) for c in t.columns])
    return buf.getvalue()


def _provenance_value(v):
    if isinstance(v, (list, tuple, Mapping)):
        return json.dumps(_json_value(v), sort_keys=True, separators=(",", ":"))
    return format_value(v)


def render_json(tables: Sequence[Table], provenance: Mapping) -> str:
    doc = {"config": _json_value(dict(sorted(provenance.items()))),
           "tables": {t.name: [{c: _json_value(r[c]) for c in t.columns} for r in t.rows] for t in tables}}
    return json.dumps(doc, indent=2) + "\n"


def render(tables: Sequence[Table], provenance: Mapping, fmt: str = "csv") -> str:
    if fmt == "csv":
        return render_csv(tables, provenance)
    if fmt == "json":
        return render_json(tables, provenance)
    raise ValueError(f"unknown output format {fmt!r}")


def read_csv_tables(text: str) -> dict:
    """Parse text from :func:`render_csv` back into ``{name: [row dicts]}`` of strings."""
    out, name, header = {}, None, None
    for line in text.splitlines():
        if line.startswith("# table="):
            name, header = line[len("# table="):], None
            out[name] = []
        elif line.startswith("#") or not line.strip():
            continue
        elif header is None:
            header = next(csv.reader([line]))
        else:
            out[name].append(dict(zip(header, next(csv.reader([line])))))
    return out

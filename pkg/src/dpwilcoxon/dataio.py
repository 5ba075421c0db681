"""Paired-CSV ingestion and result serialization."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import EmptyInputError, ValidationError
from .ranks import PairedDataset


def read_paired_csv(
    path, u_col: str = "u", v_col: str = "v", delimiter: str = ","
) -> PairedDataset:
    """Read a UTF-8 CSV with a header naming the two paired columns.

    Errors name the offending line (the header is line 1).
    """
    path = Path(path)
    try:
        handle = path.open(newline="", encoding="utf-8-sig")
    except FileNotFoundError:
        raise ValidationError(f"input file not found: {path}") from None
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from None
    with handle:
        reader = csv.reader(handle, delimiter=delimiter)
        header = next(reader, None)
        if header is None:
            raise EmptyInputError(f"{path} is empty (expected a header row)")
        header = [h.strip() for h in header]
        missing = [c for c in (u_col, v_col) if c not in header]
        if missing:
            raise ValidationError(f"{path}: header lacks column(s) {missing}; found {header}")
        iu, iv = header.index(u_col), header.index(v_col)
        u, v = [], []
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) <= max(iu, iv):
                raise ValidationError(f"expected {len(header)} fields, got {len(row)}", row=line)
            pair = []
            for col, idx in ((u_col, iu), (v_col, iv)):
                cell = row[idx].strip()
                if not cell:
                    raise ValidationError(f"missing value in column {col!r}", row=line)
                try:
                    x = float(cell)
                except ValueError:
                    raise ValidationError(f"non-numeric value in column {col!r}", row=line) from None
                if not math.isfinite(x):
                    raise ValidationError(f"non-finite value in column {col!r}", row=line)
                pair.append(x)
            u.append(pair[0])
            v.append(pair[1])
    if not u:
        raise EmptyInputError(f"{path} has a header but no data rows")
    return PairedDataset(np.array(u), np.array(v))


def _jsonable(x: Any) -> Any:
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else "-inf" if x < 0 else "nan"
    return x


@dataclass
class ResultEnvelope:
    """Everything needed to reproduce one CLI run, plus its released result.

    ``payload`` holds either a mapping or a table (``columns`` + ``rows``).
    """

    command: str
    parameters: dict
    payload: dict
    version: str = ""
    columns: Sequence[str] | None = None
    rows: list = field(default_factory=list)

    def as_dict(self) -> dict:
        out = {"command": self.command, "version": self.version, "parameters": self.parameters}
        if self.columns is not None:
            out["payload"] = {"columns": list(self.columns), "rows": self.rows, **self.payload}
        else:
            out["payload"] = self.payload
        return _jsonable(out)

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        """Comment lines with the provenance, then the table (or payload as key,value)."""
        buf = io.StringIO()
        buf.write(f"# command={self.command} version={self.version}\n")
        for k, v in sorted(_jsonable(self.parameters).items()):
            buf.write(f"# {k}={json.dumps(v, sort_keys=True)}\n")
        writer = csv.writer(buf, lineterminator="\n")
        if self.columns is not None:
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_csv_cell(x) for x in row])
        else:
            writer.writerow(["key", "value"])
            for k, v in sorted(_jsonable(self.payload).items()):
                writer.writerow([k, _csv_cell(v)])
        return buf.getvalue()


def _csv_cell(x):
    x = _jsonable(x)
    return repr(x) if isinstance(x, float) else x

"""
Result tables.

Every command emits rows of one pydantic model; the model's field order is
the CSV column order. CSV floats carry 17 significant digits and JSON floats
are shortest-repr, so both reproduce the doubles exactly.
"""

import io
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence, Type, Union

import pandas as pd
from pydantic import BaseModel, TypeAdapter

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.17g"


def columns(model: Type[BaseModel]) -> list[str]:
    return list(model.model_fields)


def _cell(value):
    # coefficient lists and other containers go into one JSON-encoded cell
    if isinstance(value, (list, tuple, dict)):
        return json.dumps(value)
    return value


def to_csv(rows: Sequence[BaseModel], model: Type[BaseModel]) -> str:
    records = [
        {name: _cell(value) for name, value in row.model_dump(mode="python").items()}
        for row in rows
    ]
    frame = pd.DataFrame.from_records(records, columns=columns(model))
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
    return buffer.getvalue()


def to_json(rows: Sequence[BaseModel], model: Type[BaseModel]) -> str:
    adapter = TypeAdapter(list[model])  # type: ignore[valid-type]
    return adapter.dump_json(list(rows), indent=2).decode() + "\n"


def parse_json_rows(text: Union[str, bytes], model: Type[BaseModel]) -> list[BaseModel]:
    return TypeAdapter(list[model]).validate_json(text)  # type: ignore[valid-type]


def write_rows(
    rows: Sequence[BaseModel],
    model: Type[BaseModel],
    fmt: str = "csv",
    path: Optional[Union[str, Path]] = None,
) -> None:
    """Write rows to ``path``, or stdout when no path is given."""
    text = to_csv(rows, model) if fmt == "csv" else to_json(rows, model)
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(text)
    logger.info(f"Wrote {len(rows)} {model.__name__} rows to {path}")

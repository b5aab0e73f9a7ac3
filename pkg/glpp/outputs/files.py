"""Writers for result documents and tables."""

from __future__ import annotations

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Type

import numpy as np
import pandas as pd
import pandera.pandas as pa
from loguru import logger

from glpp.bridges import Bridge, local_extrema

from .schemas import BridgeLawFrame


def _plain(value: Any) -> Any:
    """Make numpy scalars, arrays, enums and non-finite floats JSON friendly."""
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return _plain(value.item())
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, Path):
        return str(value)
    if hasattr(value, "value") and hasattr(value, "name"):
        return value.value
    return value


def to_json_text(data: Mapping[str, Any]) -> str:
    return json.dumps(_plain(data), indent=4, sort_keys=False)


def write_json(path: Path, data: Mapping[str, Any]) -> Path:
    """Atomically write JSON to ``path`` using a temporary file + os.replace."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=str(path.parent), suffix=".tmp")
    tmp = Path(tmp_name)
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(to_json_text(data))
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink(missing_ok=True)
    logger.debug(f"wrote {path}")
    return path


def write_frame(df: pd.DataFrame, schema: Type[pa.DataFrameModel], path: Path) -> Path:
    """Validate ``df`` against ``schema`` and write it as CSV."""
    validated = schema.validate(df)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    validated.to_csv(path, index=False)
    logger.debug(f"wrote {len(validated)} rows to {path}")
    return path


def bridge_law_frame(
    law: Mapping[str, float], source: str, bounds: Optional[Dict[str, float]] = None
) -> pd.DataFrame:
    """Long table of a bridge law, validated."""
    rows = []
    for code, p in sorted(law.items()):
        rows.append(
            {
                "bridge": code,
                "k": local_extrema(Bridge.from_code(code)).k,
                "probability": float(p),
                "source": source,
                "bound": None if bounds is None else float(bounds[code]),
            }
        )
    return BridgeLawFrame.validate(pd.DataFrame(rows))

from typing import Optional

import pandas as pd
import pandera.pandas as pa
from pandera.typing.pandas import Series

BRIDGE_CODE = r"^[+-]+$"


class TrajectoryFrame(pa.DataFrameModel):
    """Per-step log of a discrete run."""

    step: Series[int] = pa.Field(coerce=True, ge=1)
    bridge: Series[str] = pa.Field(coerce=True, str_matches=BRIDGE_CODE)
    t1: Series[int] = pa.Field(coerce=True, ge=0)
    flips: Series[int] = pa.Field(coerce=True, ge=0)

    @pa.check("step")
    def steps_increase(cls, s: Series[int]) -> bool:
        return bool(s.is_monotonic_increasing)


class EventFrame(pa.DataFrameModel):
    """Flip events of a continuous run."""

    time: Series[float] = pa.Field(coerce=True, ge=0)
    edge: Series[int] = pa.Field(coerce=True, ge=0)


class BridgeLawFrame(pa.DataFrameModel):
    """A law on bridges, empirical or exact."""

    bridge: Series[str] = pa.Field(coerce=True, str_matches=BRIDGE_CODE)
    k: Series[int] = pa.Field(coerce=True, ge=1)
    probability: Series[float] = pa.Field(coerce=True, ge=0, le=1)
    source: Series[str] = pa.Field(coerce=True)
    bound: Optional[Series[float]] = pa.Field(coerce=True, nullable=True, ge=0)

    class Config:
        unique = ["bridge", "source"]

    @pa.dataframe_check
    def sums_to_one(cls, df: pd.DataFrame) -> bool:
        totals = df.groupby("source")["probability"].sum()
        return bool(((totals - 1.0).abs() <= 1e-6).all())


class ShapeProfileFrame(pa.DataFrameModel):
    """Front of the arrived region, raw and divided by the time."""

    x: Series[int] = pa.Field(coerce=True, ge=0)
    y: Series[int] = pa.Field(coerce=True, ge=0)
    x_scaled: Series[float] = pa.Field(coerce=True, ge=0)
    y_scaled: Series[float] = pa.Field(coerce=True, ge=0)

    @pa.check("y")
    def staircase(cls, s: Series[int]) -> bool:
        return bool(s.is_monotonic_decreasing)


class FieldFrame(pa.DataFrameModel):
    x: Series[int] = pa.Field(coerce=True, ge=0)
    y: Series[int] = pa.Field(coerce=True, ge=0)
    tau: Series[int] = pa.Field(coerce=True, ge=0)


class TransitionFrame(pa.DataFrameModel):
    """Coordinate list of a truncated transition matrix."""

    source: Series[str] = pa.Field(coerce=True)
    target: Series[str] = pa.Field(coerce=True)
    probability: Series[float] = pa.Field(coerce=True, ge=0, le=1)

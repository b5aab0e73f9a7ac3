import json
import math
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd
import pandera.errors
import pytest

from glpp.growth import grow_quarter_plane, shape_profile
from glpp.measures import DiscreteMeasure, make_constant_family
from glpp.outputs import (
    BridgeLawFrame,
    FieldFrame,
    ShapeProfileFrame,
    TrajectoryFrame,
    bridge_law_frame,
    plot_bridge_law,
    plot_shape_profile,
    reference_curve,
    to_json_text,
    write_frame,
    write_json,
)


class _Colour(Enum):
    RED = "red"


class TestJson:
    def test_plain_values(self):
        doc = json.loads(
            to_json_text(
                {
                    "int": np.int64(3),
                    "array": np.arange(3),
                    "inf": math.inf,
                    "path": Path("a/b"),
                    "enum": _Colour.RED,
                    "nested": {1: (np.float64(0.5),)},
                }
            )
        )
        assert doc == {"int": 3, "array": [0, 1, 2], "inf": "inf", "path": "a/b", "enum": "red", "nested": {"1": [0.5]}}

    def test_write_json_is_atomic(self, tmp_path: Path):
        target = tmp_path / "deep" / "result.json"
        write_json(target, {"a": 1})
        write_json(target, {"a": 2})
        assert json.loads(target.read_text()) == {"a": 2}
        assert not list(target.parent.glob("*.tmp"))


class TestFrames:
    def test_bridge_law_frame(self):
        frame = bridge_law_frame({"+-+-": 0.25, "-+-+": 0.25, "++--": 0.5}, "exact")
        assert list(frame["bridge"]) == ["++--", "+-+-", "-+-+"]
        assert list(frame["k"]) == [1, 2, 2]
        assert frame["bound"].isna().all()

    def test_bridge_law_must_sum_to_one_edge(self):
        with pytest.raises(pandera.errors.SchemaError):
            bridge_law_frame({"+-": 0.5, "-+": 0.4}, "simulated")

    def test_write_frame_validates(self, tmp_path: Path):
        good = pd.DataFrame({"step": [1, 2], "bridge": ["+-", "-+"], "t1": [0, 1], "flips": [1, 0]})
        path = write_frame(good, TrajectoryFrame, tmp_path / "traj.csv")
        assert pd.read_csv(path)["bridge"].tolist() == ["+-", "-+"]
        bad = good.assign(bridge=["+x", "-+"])
        with pytest.raises(pandera.errors.SchemaError):
            write_frame(bad, TrajectoryFrame, tmp_path / "bad.csv")

    def test_field_frame(self, tmp_path: Path):
        field_ = grow_quarter_plane(6, make_constant_family(DiscreteMeasure.geometric(0.5)), seed=2)
        path = write_frame(field_.to_frame(), FieldFrame, tmp_path / "field.csv")
        assert len(pd.read_csv(path)) == 7 * 7

    def test_shape_profile_frame(self, tmp_path: Path):
        fam = make_constant_family(DiscreteMeasure.geometric(0.5))
        profile = shape_profile(grow_quarter_plane(40, fam, until_time=40, seed=4), 40, fam)
        write_frame(profile.points, ShapeProfileFrame, tmp_path / "shape.csv")
        assert profile.reference == "geometric:0.5"


class TestPlots:
    def test_reference_curve_on_level_set(self):
        curve = reference_curve(0.5, n_points=5)
        assert curve.iloc[0]["x_scaled"] == pytest.approx(0.5)
        assert curve.iloc[-1]["y_scaled"] == pytest.approx(0.5)

    def test_shape_profile_svg(self, tmp_path: Path):
        fam = make_constant_family(DiscreteMeasure.geometric(0.5))
        profile = shape_profile(grow_quarter_plane(30, fam, until_time=30, seed=1), 30, fam)
        out = plot_shape_profile(profile, tmp_path / "figs" / "shape.svg", p=0.5)
        assert out.exists()
        assert out.read_text().lstrip().startswith("<?xml")

    def test_bridge_law_svg(self, tmp_path: Path):
        frame = pd.concat(
            [
                bridge_law_frame({"+-": 0.5, "-+": 0.5}, "exact"),
                bridge_law_frame({"+-": 0.49, "-+": 0.51}, "simulated"),
            ]
        )
        BridgeLawFrame.validate(frame)
        out = plot_bridge_law(frame, tmp_path / "law.svg")
        assert out.stat().st_size > 0

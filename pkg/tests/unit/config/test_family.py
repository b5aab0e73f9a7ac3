import json
from pathlib import Path

import pytest

from glpp.config import FamilySpec, parse_family, preset_families, preset_rows
from glpp.core import ConfigError, FamilyKind
from glpp.measures import ConstantFamily, EdgeLppFamily, IntegrableFamily, TableFamily


class TestShorthand:
    @pytest.mark.parametrize(
        "text,kind,param",
        [
            ("geometric:0.5", "geometric", 0.5),
            ("geom:0.25", "geometric", 0.25),
            ("poisson:1", "poisson", 1.0),
            ("poisson_shifted:2", "poisson_shifted", 2.0),
            ("zeta:6", "zeta", 6.0),
            ("exp:1.5", "exponential", 1.5),
            ("halfnormal:1", "halfnormal", 1.0),
        ],
    )
    def test_simple_laws(self, text, kind, param):
        spec = parse_family(text)
        assert spec.kind == kind
        assert spec.param == pytest.approx(param)
        assert spec.shorthand == text

    def test_wrappers(self):
        spec = parse_family("edge_lpp(poisson:1)")
        assert spec.kind == "edge_lpp"
        assert spec.base.kind == "poisson"
        assert isinstance(spec.family(), EdgeLppFamily)
        assert isinstance(parse_family("constant(geometric:0.5)").family(), ConstantFamily)
        assert isinstance(parse_family("integrable(zeta:6)").family(), IntegrableFamily)

    def test_bare_measure_is_integrable(self):
        """A bare law stands for the integrable family built from it."""
        fam = parse_family("poisson:1").family()
        assert isinstance(fam, IntegrableFamily)
        assert fam.kind is FamilyKind.INTEGRABLE

    def test_whitespace_is_ignored(self):
        assert parse_family("  geometric:0.5 \n").param == 0.5

    @pytest.mark.parametrize(
        "text",
        ["geometric", "lognormal:1", "wrap(geometric:0.5)", "constant(edge_lpp(geometric:0.5))", "zeta:nan", ""],
    )
    def test_rejected_edge(self, text):
        with pytest.raises(ConfigError):
            parse_family(text)

    def test_edge_lpp_needs_discrete_law_edge(self):
        with pytest.raises(ConfigError):
            parse_family("edge_lpp(exp:1)")


class TestJsonDocuments:
    def test_json_spec(self):
        spec = parse_family('{"kind": "geometric", "p": 0.5}')
        assert spec.kind == "geometric"
        assert spec.param == 0.5

    def test_nested_base_shorthand(self):
        spec = parse_family('{"kind": "edge_lpp", "base": "poisson:1"}')
        assert spec.base.kind == "poisson"

    def test_table_masses(self):
        spec = parse_family('{"kind": "table", "masses": [0.25, 0.75]}')
        assert spec.masses == {1: 0.25, 2: 0.75}
        mu = spec.measure()
        assert mu.mass(2) == pytest.approx(0.75)

    def test_per_gap_tables(self):
        doc = {"kind": "table", "gaps": {"0": [0.5, 0.5], "1": {"1": 0.25, "2": 0.75}}}
        fam = parse_family(json.dumps(doc)).family()
        assert isinstance(fam, TableFamily)
        assert fam.at(1).mass(2) == pytest.approx(0.75)
        assert fam.at(7).mass(2) == pytest.approx(0.75)

    def test_table_file(self, tmp_path: Path):
        path = tmp_path / "mu.json"
        path.write_text(json.dumps([[1, 0.5], [3, 0.5]]))
        spec = parse_family(f"table@{path}")
        assert spec.masses == {1: 0.5, 3: 0.5}
        assert spec.shorthand == f"table@{path}"

    def test_missing_table_file_edge(self, tmp_path: Path):
        with pytest.raises(ConfigError, match="not found"):
            parse_family(f"table@{tmp_path / 'absent.json'}")

    def test_bad_table_file_edge(self, tmp_path: Path):
        path = tmp_path / "broken.json"
        path.write_text("[0.5, ")
        with pytest.raises(ConfigError, match="not valid JSON"):
            parse_family(f"table@{path}")

    def test_table_needs_masses_edge(self):
        with pytest.raises(ConfigError):
            parse_family('{"kind": "table"}')

    def test_to_dict(self):
        doc = parse_family("constant(geometric:0.5)").to_dict()
        assert doc["kind"] == "constant"
        assert doc["base"]["param"] == 0.5


class TestBuilders:
    def test_geometric_measure(self):
        mu = parse_family("geometric:0.5").measure()
        assert mu.mass(1) == pytest.approx(0.5)
        assert mu.mass(3) == pytest.approx(0.125)

    def test_poisson_variants(self):
        import math

        conditioned = parse_family("poisson:1").measure()
        shifted = parse_family("poisson_shifted:1").measure()
        assert conditioned.mass(1) == pytest.approx(1 / (math.e - 1))
        assert shifted.mass(1) == pytest.approx(math.exp(-1))

    def test_density_builders(self):
        spec = parse_family("exp:2")
        assert spec.is_continuous
        assert spec.density_family().normalizer(0.0) == pytest.approx(1.0)
        with pytest.raises(ConfigError):
            spec.family()
        with pytest.raises(ConfigError):
            parse_family("geometric:0.5").density_family()

    def test_spec_model_directly(self):
        spec = FamilySpec(kind="geometric", param=0.3)
        assert spec.shorthand == "geometric:0.3"


class TestPresets:
    def test_every_preset_parses(self):
        for name, entry in preset_families().items():
            spec = parse_family(name)
            assert spec.shorthand == entry["spec"]

    def test_rows(self):
        rows = preset_rows()
        names = [r[0] for r in rows]
        assert "geometric-half" in names
        assert all(len(r) == 3 for r in rows)

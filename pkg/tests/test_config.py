"""Tests for the JSON run configuration."""

import json

import pytest

from iga_plate.config import RunConfig, load_config, parse_config, suggest_key
from iga_plate.core import ConfigError
from iga_plate.spaces import BoundaryKind


def _parse(**data) -> RunConfig:
    return parse_config(json.dumps(data))


class TestDefaults:
    """Defaults filled in after validation."""

    def test_minimal_verify(self) -> None:
        """A bare verify command gets p = 3, alpha = p - 1 and q = p + 1."""
        config = _parse(command="verify")
        assert (config.p, config.alpha, config.q) == (3, 2, 4)
        assert config.material.nu == pytest.approx(0.3)
        assert config.output.csv_name == "convergence.csv"

    def test_case_defaults(self) -> None:
        """Thickness and levels come from the chosen case."""
        config = _parse(command="convergence", case="case2")
        assert config.t == pytest.approx(1e-2)
        assert config.levels == [4, 8, 16, 32]

    def test_explicit_values(self) -> None:
        """Explicit settings are kept."""
        config = _parse(command="solve", case="case1", p=4, alpha=2, t=0.05, level=8, q=7)
        assert (config.p, config.alpha, config.t, config.level, config.q) == (4, 2, 0.05, 8, 7)

    def test_custom_problem(self) -> None:
        """Custom problems carry a boundary partition and a load expression."""
        config = _parse(
            command="solve",
            custom={"load": "x*y", "boundary": {"u0": "free", "v1": "simply_supported_soft"}},
        )
        bc = config.custom.boundary.to_spec()
        assert bc.u0 is BoundaryKind.FREE and bc.v1 is BoundaryKind.SOFT and bc.u1 is BoundaryKind.CLAMPED
        assert config.levels == [4, 8, 16]


class TestValidation:
    """Rejected configurations."""

    def test_unknown_key_suggestion(self) -> None:
        """A misspelt key suggests the intended one."""
        with pytest.raises(ConfigError, match="unknown key 'degre' \\(did you mean 'p'\\?\\)"):
            _parse(command="verify", degre=3)

    def test_nested_unknown_key(self) -> None:
        """Unknown keys inside sections are reported with their path."""
        with pytest.raises(ConfigError, match="unknown key 'material.young'"):
            _parse(command="verify", material={"young": 1.0})

    def test_close_match(self) -> None:
        """difflib catches near misses that are not synonyms."""
        assert suggest_key("levls", ["levels", "level", "p"]) == "levels"
        assert suggest_key("thickness", ["t", "p"]) == "t"
        assert suggest_key("zzz", ["t", "p"]) is None

    @pytest.mark.parametrize("t", [0.0, -1e-3])
    def test_non_positive_thickness(self, t: float) -> None:
        """t must be positive."""
        with pytest.raises(ConfigError, match="key 't'"):
            _parse(command="verify", t=t)

    def test_unknown_case(self) -> None:
        """Case names are checked against the router."""
        with pytest.raises(ConfigError, match="unknown case 'case7'"):
            _parse(command="convergence", case="case7")

    def test_case_or_custom_required(self) -> None:
        """solve and convergence need exactly one problem source."""
        with pytest.raises(ConfigError, match="exactly one of 'case' or 'custom'"):
            _parse(command="solve")
        with pytest.raises(ConfigError, match="exactly one"):
            _parse(command="solve", case="case1", custom={})

    def test_levels_increasing(self) -> None:
        """Study levels must increase strictly."""
        with pytest.raises(ConfigError, match="strictly increasing"):
            _parse(command="convergence", case="case1", levels=[4, 4, 8])

    def test_regularity_range(self) -> None:
        """alpha must lie in [1, p - 1]."""
        with pytest.raises(ConfigError, match="alpha"):
            _parse(command="verify", p=3, alpha=3)

    def test_poisson_ratio(self) -> None:
        """nu must lie in (0, 0.5)."""
        with pytest.raises(ConfigError, match="key 'material.nu'"):
            _parse(command="verify", material={"nu": 0.5})

    def test_all_free_boundary(self) -> None:
        """A custom plate needs at least one supported side."""
        free = {side: "free" for side in ("u0", "u1", "v0", "v1")}
        with pytest.raises(ConfigError, match="at least one side"):
            _parse(command="solve", custom={"boundary": free})

    def test_bad_load_expression(self) -> None:
        """Load expressions are parsed during validation."""
        with pytest.raises(ConfigError, match="unknown names"):
            _parse(command="solve", custom={"load": "exp(x)"})

    def test_not_json(self) -> None:
        """Malformed JSON is a configuration error."""
        with pytest.raises(ConfigError, match="not valid JSON"):
            parse_config("{command: verify")

    def test_not_an_object(self) -> None:
        """The top level must be an object."""
        with pytest.raises(ConfigError, match="JSON object"):
            parse_config("[1, 2]")

    def test_missing_file(self, tmp_path) -> None:
        """Unreadable files raise ConfigError."""
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "missing.json")

import pytest

from app.services.config_parser import config_echo, parse_config, parse_value
from app.services.metric_zoo import FunkMetric
from app.utils.errors import ConfigError


class TestParseValue:

    @pytest.mark.parametrize("raw, expected", [
        ("2", 2),
        ("0.5", 0.5),
        ("[0.5, 0]", [0.5, 0]),
        ("0.5,0", [0.5, 0]),
        ("randers", "randers"),
        ('"quoted"', "quoted"),
        ("cos1, cos2", ["cos1", "cos2"]),
    ])
    def test_values(self, raw, expected):
        assert parse_value(raw) == expected


class TestParseConfig:

    def test_defaults_are_filled(self):
        config = parse_config("experiment = norm\n")
        assert config.metric.kind == "euclidean"
        assert config.sobolev.k == 1
        assert config.sobolev.p == 2.0
        assert config.distance.tier is None

    def test_comments_and_blank_lines(self):
        text = "# a norm run\n\nexperiment = norm\nmetric.kind = randers  \nmetric.b = 0.5, 0\n"
        config = parse_config(text)
        assert config.metric.b == [0.5, 0.0]

    def test_unsupported_order_reports_line(self):
        with pytest.raises(ConfigError) as info:
            parse_config("experiment = norm\nsobolev.k = 2\n")
        assert len(info.value.errors) == 1
        message = info.value.errors[0]
        assert message.startswith("line 2:")
        assert "unsupported order k=2" in message

    def test_randers_without_b(self):
        with pytest.raises(ConfigError) as info:
            parse_config("experiment = norm\nmetric.kind = randers\n")
        assert "line 2: missing required key metric.b for metric.kind = randers" in info.value.errors

    def test_every_error_is_collected(self):
        text = "experiment = norm\nnot a pair\nfoo = 1\nsobolev.k = 3\n"
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        errors = info.value.errors
        assert any(e.startswith("line 2:") and "key = value" in e for e in errors)
        assert any(e == "line 3: unknown key foo" for e in errors)
        assert any(e.startswith("line 4:") and "unsupported order k=3" in e for e in errors)

    def test_duplicate_key(self):
        with pytest.raises(ConfigError) as info:
            parse_config("experiment = norm\nsobolev.p = 2\nsobolev.p = 3\n")
        assert info.value.errors[0].startswith("line 3: duplicate key sobolev.p")

    def test_missing_experiment(self):
        with pytest.raises(ConfigError) as info:
            parse_config("sobolev.p = 2\n")
        assert any("missing required key experiment" in e for e in info.value.errors)

    def test_overrides_win(self):
        config = parse_config("experiment = norm\nsobolev.p = 2\n", {"sobolev.p": (3, "option --p")})
        assert config.sobolev.p == 3.0

    def test_override_error_names_option(self):
        with pytest.raises(ConfigError) as info:
            parse_config("experiment = norm\n", {"sobolev.k": (2, "option --k")})
        assert info.value.errors[0].startswith("option --k:")

    def test_ramp_needs_width(self):
        with pytest.raises(ConfigError) as info:
            parse_config("experiment = norm\nfield.name = ramp\n")
        assert any("field.width" in e for e in info.value.errors)

    def test_closed_form_tier_needs_closed_form(self):
        text = "experiment = density\nmetric.kind = conformal\ndistance.tier = closed_form\n"
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert info.value.errors == [
            "line 2: distance.tier = closed_form is unavailable for metric.kind = conformal; "
            "use grid_dijkstra or curve_descent"
        ]

    def test_conformal_numeric_tier_is_accepted(self):
        config = parse_config("experiment = density\nmetric.kind = conformal\ndistance.tier = grid_dijkstra\n")
        assert config.distance.tier == "grid_dijkstra"

    def test_funk_defaults_to_unit_ball(self):
        config = parse_config("experiment = norm\nmetric.kind = funk\n")
        assert config.domain.kind == "ball"
        assert config.domain.radius == pytest.approx(1.0 - FunkMetric.GUARD, abs=1e-15)
        assert config.domain.build(2, 16).nodes().shape[1] == 2

    def test_funk_keeps_an_explicit_domain(self):
        config = parse_config("experiment = norm\nmetric.kind = funk\ndomain.kind = box\n")
        assert config.domain.kind == "box"

    def test_dirichlet_grid_power_of_two(self):
        with pytest.raises(ConfigError):
            parse_config("experiment = dirichlet\ndirichlet.N = 48\n")


def test_config_echo_round_trips():
    config = parse_config("experiment = norm\nmetric.kind = randers\nmetric.b = 0.5,0\nsobolev.p = 3\n")
    echo = config_echo(config)
    assert echo["metric.kind"] == '"randers"'
    assert echo["sobolev.p"] == "3.0"
    text = "\n".join(f"{key} = {value}" for key, value in echo.items())
    assert parse_config(text) == config

import json

import pytest

from pomsim.config import config_from_dict, load_config
from pomsim.errors import ConfigError


def minimal(**extra):
    d = {
        "schedule": {"landmarks": {"peak_d": 1.75, "half_d": 2.20, "tenth_d": 2.37, "r_max": 9.0}},
        "horizon": 100,
        "seed": 1,
    }
    d.update(extra)
    return d


class TestTopLevel:
    def test_minimal_config(self):
        cfg = config_from_dict(minimal())
        assert cfg.horizon == 100
        assert cfg.seed == 1
        assert cfg.price.constant == 30.0

    def test_unknown_top_level_key_named(self):
        with pytest.raises(ConfigError, match=r"\$: unknown key\(s\) \['horizzon'\]"):
            config_from_dict(minimal(horizzon=10))

    def test_missing_required_key_named(self):
        d = minimal()
        del d["seed"]
        with pytest.raises(ConfigError, match="missing required key"):
            config_from_dict(d)

    def test_non_object_rejected(self):
        with pytest.raises(ConfigError, match="expected an object"):
            config_from_dict([1, 2, 3])

    def test_horizon_must_be_integer(self):
        with pytest.raises(ConfigError, match=r"\$\.horizon"):
            config_from_dict(minimal(horizon=3.5))


class TestSchedule:
    def test_explicit_params(self):
        cfg = config_from_dict(
            minimal(schedule={"a": 0.58, "b": 2.32, "scale": 9.0, "d_co": 2.2, "spread": 0.077})
        )
        assert cfg.schedule.base.a == 0.58
        assert cfg.schedule.cutoff.d_co == 2.2

    def test_unknown_landmark_key(self):
        d = minimal()
        d["schedule"]["landmarks"]["peak"] = 1.0
        with pytest.raises(ConfigError, match=r"\$\.schedule\.landmarks"):
            config_from_dict(d)


class TestSections:
    def test_explicit_population(self):
        cfg = config_from_dict(
            minimal(
                population={
                    "explicit": [
                        {"hashrate": 10.0, "unit_cost": 0.0},
                        {"id": "big", "hashrate": 20.0, "unit_cost": 1.0, "class": "large"},
                    ]
                }
            )
        )
        assert [m.id for m in cfg.explicit_population] == ["m000", "big"]
        assert cfg.explicit_population[1].miner_class == "large"

    def test_duty_pair_parsed(self):
        cfg = config_from_dict(
            minimal(
                population={"explicit": [{"hashrate": 1.0, "unit_cost": 0.0, "duty": [25, 25]}]}
            )
        )
        assert cfg.explicit_population[0].duty == (25, 25)

    def test_bad_duty_shape(self):
        with pytest.raises(ConfigError, match=r"duty"):
            config_from_dict(
                minimal(population={"explicit": [{"hashrate": 1.0, "unit_cost": 0.0, "duty": [5]}]})
            )

    def test_population_spec_fields(self):
        cfg = config_from_dict(minimal(population={"n_small": 3, "n_large": 1}))
        assert cfg.population.n_small == 3
        assert cfg.explicit_population is None

    def test_price_step(self):
        cfg = config_from_dict(minimal(price={"initial": 1.0, "factor": 2.0, "at_block": 10}))
        assert cfg.price.at(9) == 1.0
        assert cfg.price.at(10) == 2.0

    def test_price_series(self):
        cfg = config_from_dict(minimal(price={"series": [1.0, 2.0, 3.0]}))
        assert cfg.price.at(1) == 2.0
        assert cfg.price.at(99) == 3.0

    def test_unknown_nested_key_names_path(self):
        with pytest.raises(ConfigError, match=r"\$\.retarget: unknown key"):
            config_from_dict(minimal(retarget={"smooth": 0.2}))

    def test_difficulty_map_from_anchors(self):
        cfg = config_from_dict(
            minimal(difficulty_map={"anchors": [[40, 1.75], [51, 2.20], [55, 2.37]]})
        )
        assert cfg.difficulty_map.slope == pytest.approx(0.041243093922652, rel=1e-9)

    def test_invalid_value_wrapped_with_path(self):
        with pytest.raises(ConfigError, match=r"\$\.economics"):
            config_from_dict(minimal(economics={"margin_on": 0.5}))


class TestLoadConfig:
    def test_round_trip_from_file(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text(json.dumps(minimal()))
        cfg = load_config(p)
        assert cfg.horizon == 100

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            load_config(p)

    def test_shipped_examples_parse(self):
        for name in ("configs/example.json", "configs/dynamics.json", "configs/price_step.json"):
            assert load_config(name).horizon > 0

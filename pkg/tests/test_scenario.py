import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lte_appsched.channel import RbGrid
from lte_appsched.scenario import (
    PRESETS,
    ConfigError,
    ScenarioConfig,
    config_hash,
    dump_config,
    load_config,
    paper_preset,
    place_ues,
)
from lte_appsched.utility import Logarithmic, Sigmoidal


def test_preset_matches_published_scenario():
    cfg = paper_preset()
    assert cfg.ue_utilities == (
        Sigmoidal(5, 10), Sigmoidal(3, 20), Sigmoidal(1, 30),
        Logarithmic(15, 100), Logarithmic(3, 100), Logarithmic(0.5, 100),
    )
    assert cfg.num_rbs == 200
    assert cfg.noise_w == 3.5e-15
    assert cfg.area_m == 500
    assert cfg.enb_positions == ((250.0, 250.0),)
    assert cfg.monte_carlo_iters == 200
    assert cfg.num_ues == 6 and cfg.num_enbs == 1
    assert PRESETS["paper-sec6"]() == cfg


def test_preset_round_trip():
    cfg = paper_preset()
    assert load_config(dump_config(cfg)) == cfg


def test_round_trip_of_modified_config():
    cfg = paper_preset().replace(
        weights=(1, 2, 3, 1, 1, 1), enb_positions=((0, 0), (500, 500)), grid=RbGrid(10, 3),
        unity_gain=True, alpha=1e-3, policy="weighted-pf", rate_update="running",
    )
    back = load_config(dump_config(cfg))
    assert back == cfg
    assert config_hash(back) == config_hash(cfg)


@settings(max_examples=40, deadline=None)
@given(
    seed=st.integers(0, 2**63),
    frames=st.integers(1, 10_000),
    noise=st.floats(1e-20, 1e-10),
    ues=st.lists(st.one_of(
        st.builds(Sigmoidal, st.floats(0.1, 10), st.floats(0.5, 50)),
        st.builds(Logarithmic, st.floats(0.1, 20), st.floats(10, 200)),
    ), min_size=1, max_size=8),
)
def test_round_trip_property(seed, frames, noise, ues):
    cfg = ScenarioConfig(seed=seed, frames=frames, noise_w=noise, ue_utilities=tuple(ues))
    assert load_config(dump_config(cfg)) == cfg


def test_empty_document_lists_required_fields():
    with pytest.raises(ConfigError) as err:
        load_config("")
    for name in ("seed", "frames", "monte_carlo_iters", "ues"):
        assert name in str(err.value)


def test_negative_noise_names_field():
    text = dump_config(paper_preset()).replace("noise_w: 3.5e-15", "noise_w: -3.5e-15")
    with pytest.raises(ConfigError, match="noise_w"):
        load_config(text)


def test_unknown_keys_rejected():
    text = dump_config(paper_preset()) + "colour: blue\n"
    with pytest.raises(ConfigError, match="colour"):
        load_config(text)
    text = dump_config(paper_preset()).replace("radio:\n", "radio:\n  noise_dbm: -100\n")
    with pytest.raises(ConfigError, match="noise_dbm"):
        load_config(text)


def test_parse_error_reports_position():
    with pytest.raises(ConfigError, match="line 2, column 9"):
        load_config("seed: 1\nframes: : 2\n")


@pytest.mark.parametrize("changes, field", [
    ({"frames": 0}, "frames"),
    ({"monte_carlo_iters": -1}, "monte_carlo_iters"),
    ({"seed": -1}, "seed"),
    ({"policy": "max-rate"}, "policy"),
    ({"weights": (1.0,)}, "weights"),
    ({"ue_utilities": ()}, "ues"),
    ({"rb_bandwidth": 0.0}, "rb_bandwidth"),
    ({"gain_aggregation": "max"}, "gain_aggregation"),
])
def test_validation_names_field(changes, field):
    with pytest.raises(ConfigError, match=field):
        paper_preset().replace(**changes)


def test_bad_utility_entries():
    base = dump_config(paper_preset())
    with pytest.raises(ConfigError, match=r"ues\[0\]"):
        load_config(base.replace("kind: sigmoidal", "kind: linear", 1))
    with pytest.raises(ConfigError, match=r"ues\[0\]"):
        load_config(base.replace("a: 5.0", "a: -5.0", 1))


def test_num_ues_must_match_list():
    with pytest.raises(ConfigError, match="num_ues"):
        load_config(dump_config(paper_preset()) + "num_ues: 4\n")


def test_place_ues_bounds_and_mean():
    pts = place_ues(np.random.default_rng(0), 500.0, 10_000)
    assert pts.shape == (10_000, 2)
    assert pts.min() >= 0 and pts.max() <= 500
    np.testing.assert_allclose(pts.mean(axis=0), [250, 250], atol=5)
    one = place_ues(np.random.default_rng(1), 500.0, 1)
    assert np.array_equal(one, place_ues(np.random.default_rng(1), 500.0, 1))
    with pytest.raises(ValueError):
        place_ues(np.random.default_rng(0), 500.0, 0)


def test_unity_snr_gives_half_rate_unit_per_rb():
    cfg = paper_preset()
    assert cfg.rb_bandwidth * np.log2(1 + cfg.unity_snr) == pytest.approx(0.5, rel=1e-12)
    assert cfg.rb_power_w * cfg.grid.num_freq == cfg.power_budget_w

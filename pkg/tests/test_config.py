import json

import pytest

from adsq.config import (HyperParams, Variant, load_config, make_hyperparams,
                         parse_variant)
from adsq.errors import ConfigError


def test_shipped_defaults():
    hp = HyperParams()
    assert (hp.alpha, hp.beta) == (1.0, 1.0)
    assert hp.gamma == pytest.approx(1e-2)
    assert (hp.nu, hp.eta) == (10.0, 10.0)
    assert hp.momentum == 0.9
    assert hp.weight_decay == pytest.approx(5e-4)
    assert hp.batch_size == 32
    assert (hp.lr_min, hp.lr_max) == (1e-5, 1e-2)


def test_unknown_key_named_in_error():
    with pytest.raises(ConfigError, match="not_a_key"):
        make_hyperparams({"not_a_key": 1})


@pytest.mark.parametrize("bad", [
    {"alpha": -1.0},
    {"k_half": 0},
    {"batch_size": 1},
    {"lr_min": 0.0},
    {"lr_min": 1e-2, "lr_max": 1e-5},
    {"t_label": -1},
])
def test_invariant_violations_rejected(bad):
    with pytest.raises(ConfigError):
        make_hyperparams(bad)


def test_variant_parsing():
    assert parse_variant("no-asym") is Variant.NO_ASYM
    assert parse_variant(Variant.FULL) is Variant.FULL
    with pytest.raises(ConfigError):
        parse_variant("nonsense")


def test_string_coercion_for_cli_overrides():
    hp = make_hyperparams({"k_half": "4", "gamma": "0.5", "encoder_hidden": "16,8",
                           "refresh_labelnet": "false"})
    assert hp.k_half == 4
    assert hp.gamma == 0.5
    assert hp.encoder_hidden == (16, 8)
    assert hp.refresh_labelnet is False


def test_load_config_file_and_overrides(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"k_half": 6, "nu": 2.0}))
    hp = load_config(path, overrides={"nu": "5"})
    assert hp.k_half == 6
    assert hp.nu == 5.0


def test_load_config_rejects_non_object(tmp_path):
    path = tmp_path / "arr.json"
    path.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(path)


def test_to_dict_round_trips():
    hp = HyperParams(k_half=4, variant="sym", encoder_hidden=(8, 4))
    again = make_hyperparams(hp.to_dict())
    assert again == hp

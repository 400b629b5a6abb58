import pytest

from sgpvm.config import ConfigError, ExperimentConfig, config_to_text, parse_config
from sgpvm.mutation import MutationConfig

CHANGING = """
[experiment]
problem = changing_env
population = 100
generations = 1000
seed = 42
replicates = 10
out_dir = runs/k2

[problem]
k = 2
cycles_per_signal = 128

[mutation]
tag_bit_flip = 0.002
opcode_sub = 0.005
"""

CONTEXTUAL = """
[experiment]
problem = contextual_signal
selection = lexicase
population = 50
generations = 200
seed = 7
replicates = 2
out_dir = runs/ctx

[problem]
regulation = false
response_table = 0123;1230;2301;3012
"""


def test_parse_changing_env():
    cfg = parse_config(CHANGING)
    assert cfg.problem == "changing_env"
    assert cfg.selection == "elite_roulette"  # defaulted per problem
    assert cfg.k == 2
    assert cfg.population == 100
    assert cfg.mutation.tag_bit_flip_rate == 0.002
    assert cfg.mutation.max_length == 256  # default preserved


def test_parse_contextual():
    cfg = parse_config(CONTEXTUAL)
    assert cfg.problem == "contextual_signal"
    assert cfg.selection == "lexicase"
    assert not cfg.regulation
    assert cfg.response_table == ((0, 1, 2, 3), (1, 2, 3, 0), (2, 3, 0, 1), (3, 0, 1, 2))


def test_round_trip_lossless():
    for text in (CHANGING, CONTEXTUAL):
        cfg = parse_config(text)
        rendered = config_to_text(cfg)
        again = parse_config(rendered)
        assert again == cfg
        assert config_to_text(again) == rendered


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config(CHANGING + "\nmystery = 1\n")


def test_unknown_section_rejected():
    with pytest.raises(ConfigError, match=r"unknown section"):
        parse_config(CHANGING + "\n[extra]\nfoo = 1\n")


def test_bad_problem_rejected():
    bad = CHANGING.replace("changing_env", "solve_everything")
    with pytest.raises(ConfigError, match="problem"):
        parse_config(bad)


def test_bad_k_rejected():
    bad = CHANGING.replace("k = 2", "k = 3")
    with pytest.raises(ConfigError, match="k must"):
        parse_config(bad)


def test_bad_rate_rejected():
    bad = CHANGING.replace("tag_bit_flip = 0.002", "tag_bit_flip = 1.5")
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_bad_int_rejected():
    bad = CHANGING.replace("population = 100", "population = lots")
    with pytest.raises(ConfigError, match="integer"):
        parse_config(bad)


def test_bad_bool_rejected():
    bad = CONTEXTUAL.replace("regulation = false", "regulation = perhaps")
    with pytest.raises(ConfigError, match="boolean"):
        parse_config(bad)


def test_bad_table_rejected():
    bad = CONTEXTUAL.replace("0123;1230;2301;3012", "01;23")
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_missing_problem_rejected():
    with pytest.raises(ConfigError, match="problem"):
        parse_config("[experiment]\nseed = 1\n")


def test_negative_population_rejected():
    bad = CHANGING.replace("population = 100", "population = 0")
    with pytest.raises(ConfigError, match="population"):
        parse_config(bad)


def test_build_problem_uses_master_seed():
    cfg = parse_config(CHANGING)
    a = cfg.build_problem()
    b = cfg.build_problem()
    assert a.signal_tags == b.signal_tags
    cfg.seed = 43
    c = cfg.build_problem()
    assert c.signal_tags != a.signal_tags


def test_build_setup_carries_fields():
    cfg = parse_config(CONTEXTUAL)
    setup = cfg.build_setup()
    assert setup.population_size == 50
    assert setup.selection == "lexicase"
    assert setup.problem.regulation is False
    assert setup.mutation == MutationConfig()


def test_default_config_object_round_trips():
    cfg = ExperimentConfig(problem="changing_env", k=4, seed=9)
    assert parse_config(config_to_text(cfg)) == cfg

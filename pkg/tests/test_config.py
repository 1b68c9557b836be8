import pytest

from com.mhire.app.common.errors import ConfigurationError
from com.mhire.app.config.config import Config


def test_defaults():
    config = Config()
    assert config.valence_file is None
    assert config.log_level == "INFO"
    assert config.search_max_term_length == 8
    assert config.search_max_multiplicity == 1
    assert config.search_max_candidates == 50
    assert config.search_timeout_seconds == 30
    assert config.nf_max_dummy_permutations == 720
    assert config.nf_search_max_states == 5000


def test_config_is_a_singleton():
    assert Config() is Config()


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("LOG_LEVEL", "debug")
    monkeypatch.setenv("SEARCH_MAX_MULTIPLICITY", "3")
    Config.reset()
    config = Config()
    assert config.log_level == "DEBUG"
    assert config.search_max_multiplicity == 3


def test_blank_values_fall_back_to_defaults(monkeypatch):
    monkeypatch.setenv("SEARCH_MAX_CANDIDATES", " ")
    assert Config().search_max_candidates == 50


@pytest.mark.parametrize("value", ["many", "-2"])
def test_bad_integers(monkeypatch, value):
    monkeypatch.setenv("SEARCH_TIMEOUT_SECONDS", value)
    with pytest.raises(ConfigurationError):
        Config()

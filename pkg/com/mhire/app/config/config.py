import os
from dotenv import load_dotenv

from com.mhire.app.common.errors import ConfigurationError

load_dotenv()


def _int_setting(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ConfigurationError(f"{name} must be an integer, got {raw!r}")
    if value < 0:
        raise ConfigurationError(f"{name} must be non-negative, got {value}")
    return value


class Config:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            instance = super(Config, cls).__new__(cls)
            # Chemistry settings
            instance.valence_file = os.getenv("VALENCE_FILE")

            # Logging
            instance.log_level = os.getenv("LOG_LEVEL", "INFO").upper()

            # Retrosynthetic search bounds
            instance.search_max_term_length = _int_setting("SEARCH_MAX_TERM_LENGTH", 8)
            instance.search_max_multiplicity = _int_setting("SEARCH_MAX_MULTIPLICITY", 1)
            instance.search_max_candidates = _int_setting("SEARCH_MAX_CANDIDATES", 50)
            instance.search_timeout_seconds = _int_setting("SEARCH_TIMEOUT_SECONDS", 30)

            # Normal form equivalence
            instance.nf_max_dummy_permutations = _int_setting("NF_MAX_DUMMY_PERMUTATIONS", 720)
            instance.nf_search_max_states = _int_setting("NF_SEARCH_MAX_STATES", 5000)

            cls._instance = instance

        return cls._instance

    @classmethod
    def reset(cls):
        """Forget the cached instance so the environment is read again."""
        cls._instance = None

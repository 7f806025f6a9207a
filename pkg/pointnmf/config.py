import os
from pathlib import Path
from typing import Any, Optional, Union

from box import BoxError, ConfigBox
from loguru import logger

from . import __product__
from .errors import ConfigError
from .utils import ProxyBase

DEFAULT_CONF = {
    "learning_rate": 1e-3,
    "table_learning_rate": 1e-2,
    "epochs": 2000,
    "batch_size": 1024,
    "optimizer": "adam",
    "momentum": 0.9,
    "kl_floor": 1e-8,
    "hidden_sizes": [64, 64],
    "encoding_frequencies": 8,
    "activation": "functions",
    "log_every": 100,
    "nyquist_hz": 0,
    "window_size": 512,
    "hop": 128,
    "iterations": 500,
    "rank": 8,
}

DEFAULT_CONF_FILE = Path(f"./{__product__}.toml")
CONF_ENVVAR = f"{__product__.upper()}_CONFIG"


class Config(ProxyBase):
    __noproxy__ = ("_conf_file", "_cache", "_file_keys")

    def __init__(self, conf_file=None):
        self._conf_file = conf_file
        self._cache = None
        self._file_keys = frozenset()

    @property
    def __subject__(self):
        if self._cache is None:
            self.reload_conf(conf_file=self._conf_file)
        return self._cache

    def reset(self):
        self._conf_file = None
        self._cache = None
        self._file_keys = frozenset()

    def reload_conf(self, conf_file: Union[str, Path, None] = None):
        """Load config from provided file, the env var, or pointnmf.toml at cwd."""
        box = ConfigBox(DEFAULT_CONF, box_dots=True)
        file_keys = frozenset()
        if conf_file:
            conf_file = Path(conf_file)
        elif self._conf_file:
            conf_file = Path(self._conf_file)
        elif os.environ.get(CONF_ENVVAR):
            conf_file = Path(os.environ[CONF_ENVVAR])
        elif DEFAULT_CONF_FILE.is_file():
            conf_file = DEFAULT_CONF_FILE
        else:
            logger.trace(f"No config found from provided file or {DEFAULT_CONF_FILE}, using defaults.")
        if conf_file:
            if not conf_file.is_file():
                raise ConfigError(f'config file "{conf_file}" does not exist')
            try:
                if conf_file.suffix.lower() == ".toml":
                    loaded = ConfigBox.from_toml(filename=conf_file)
                elif conf_file.suffix.lower() in (".yaml", ".yml"):
                    loaded = ConfigBox.from_yaml(filename=conf_file)
                else:
                    raise ConfigError(f'can not load config file "{conf_file}", a toml/yaml file is required')
                box.merge_update(loaded)
                file_keys = frozenset(loaded.keys())
            except (BoxError, ValueError) as e:
                if isinstance(e, ConfigError):
                    raise
                raise ConfigError(f'malformed config file "{conf_file}": {e}') from None
            unknown = sorted(set(box.keys()) - set(DEFAULT_CONF))
            if unknown:
                logger.warning(f'Unknown config keys ignored: {", ".join(unknown)}.')
            logger.debug(f'Now using config file at "{conf_file.absolute()}".')
        self._conf_file = conf_file
        self._cache = box
        self._file_keys = file_keys

    def __getitem__(self, key):
        try:
            return self.__subject__[key]
        except (BoxError, KeyError):
            msg = f'can not find config key "{key}", please check your config file.'
            raise ConfigError(msg) from None

    def file_values(self) -> ConfigBox:
        """Only the settings the config file gave, without the defaults."""
        subject = self.__subject__
        return ConfigBox({k: subject[k] for k in self._file_keys if k in DEFAULT_CONF})

    def resolve(self, key: str, flag: Optional[Any] = None):
        """A command-line flag overrides the config file, which overrides the defaults."""
        if flag is not None:
            return flag
        return self[key]


config: Union[ConfigBox, Config] = Config()

from pathlib import Path

from loguru import logger
from pydantic import ValidationError

from ctsemcom.core.exceptions import ConfigError, IoFailure
from ctsemcom.domains.run_config import RunConfig


def parse_key_values(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse `key=value` lines; blank lines and `#` comments are skipped."""
    values: dict[str, str] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(details=f"{source}:{number}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(details=f"{source}:{number}: empty key")
        if key in values:
            raise ConfigError(details=f"{source}:{number}: duplicate key {key!r}")
        values[key] = value
    return values


def parse_run_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as ex:
        raise IoFailure(message=f"cannot read config file {path}", details=str(ex)) from ex

    values = parse_key_values(text, source=str(path))
    try:
        config = RunConfig.model_validate(values)
    except ValidationError as ex:
        raise ConfigError(message=f"invalid config file {path}", details=str(ex)) from ex

    logger.debug(f"loaded run config from {path}: {config.model_dump_json()}")
    return config

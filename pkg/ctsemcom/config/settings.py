from os import getenv
from typing import Literal, TypeGuard, get_args

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv("")

_ENVS = Literal["development", "testing", "production"]


def _is_valid_env(env: str | None) -> TypeGuard[_ENVS]:
    return env in get_args(_ENVS)


_ENV = getenv("DEPLOYMENT_ENV")
_DEPLOYMENT_ENV = _ENV if _is_valid_env(_ENV) else "development"


class Settings(BaseSettings):
    model_config = SettingsConfigDict(
        # `.env.local` takes priority over `.env`
        env_file=(".env", f".env.{_DEPLOYMENT_ENV}", ".env.local"),
        extra="ignore",
    )

    APP_NAME: str = "ctsemcom"
    DEPLOYMENT_ENV: _ENVS = _DEPLOYMENT_ENV

    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = False

    # > 1 runs trials in a spawn-context process pool
    WORKERS: int = 1

    # run configs without a `trials` key
    DEFAULT_TRIALS: int = 100
    VERIFY_INSTANCES: int = 5

    QCQP_MAX_INNER_ITERS: int = 20_000
    QCQP_CHECK_EVERY: int = 10

    FILE_LOCK_TIMEOUT_SECONDS: float = 120.0


settings = Settings()

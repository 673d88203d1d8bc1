from pydantic import Field

from config.base import BaseSettings
from config.logging import LogSettings
from config.runtime import RuntimeSettings


class Settings(BaseSettings):
    log: LogSettings = Field(default_factory=LogSettings)
    runtime: RuntimeSettings = Field(default_factory=RuntimeSettings)

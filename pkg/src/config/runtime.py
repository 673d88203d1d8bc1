from pydantic import Field

from config.base import BaseSettingsModel


class RuntimeSettings(BaseSettingsModel):
    # default worker count for Monte Carlo, enumeration and SLE pools
    workers: int = Field(default=1, ge=1)
    # trials per scheduling chunk; results never depend on it
    chunk_size: int = Field(default=4096, ge=1)

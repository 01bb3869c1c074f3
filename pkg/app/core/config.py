import os

from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    FIRM_LOG: str = "INFO"
    FIRM_WORKERS: int = 0
    FIRM_SEED: int = 0
    FIRM_MAX_LEGS: int = 0
    FIRM_DEFICIT_TOLERANCE: float = 1e-9
    FIRM_SERVICE_PORT: int = 8010
    FIRM_SCENARIO_CACHE: int = 8
    FIRM_VERSION: str = "1.0.0"

    @property
    def default_workers(self) -> int:
        return self.FIRM_WORKERS if self.FIRM_WORKERS > 0 else (os.cpu_count() or 1)

    def max_legs_for(self, n_nodes: int) -> int:
        if self.FIRM_MAX_LEGS > 0:
            return self.FIRM_MAX_LEGS
        return max(n_nodes - 1, 1)

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"
        extra = "ignore"


settings = Settings()

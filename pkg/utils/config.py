# utils/config.py
from typing import Optional

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env
load_dotenv()


class Settings(BaseSettings):
    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: Optional[str] = None
    LOG_SERIALIZE: bool = False

    # Runs
    DEFAULT_JOBS: int = 1

    # Output
    CSV_DIGITS: int = 9

    model_config = SettingsConfigDict(
        env_prefix="SUNPUMP_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )


settings = Settings()

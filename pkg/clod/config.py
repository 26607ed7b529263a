import os
from dataclasses import dataclass
from dotenv import load_dotenv

load_dotenv()


def _flag(raw: str) -> bool:
    return raw.strip().lower() not in ("0", "false", "no", "off", "")


@dataclass
class Config:
    output_dir: str = "runs"
    log_level: str = "INFO"
    threads: int = 0
    dense_limit: int = 6000
    progress: bool = True
    log_every: int = 1000

    def __post_init__(self):
        self.output_dir = os.getenv("CLOD_OUTPUT_DIR", "runs")
        self.log_level = os.getenv("CLOD_LOG_LEVEL", "INFO").upper()
        self.threads = int(os.getenv("CLOD_THREADS", "0"))
        self.dense_limit = int(os.getenv("CLOD_DENSE_LIMIT", "6000"))
        self.progress = _flag(os.getenv("CLOD_PROGRESS", "1"))
        self.log_every = max(1, int(os.getenv("CLOD_LOG_EVERY", "1000")))


config = Config()

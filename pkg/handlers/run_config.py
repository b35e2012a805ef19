import json
import secrets
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

from utils.constants import DEFAULT_QUORUM, MC_TRIALS
from utils.exceptions import UsageError
from utils.logger_config import configure_logger

logger = configure_logger(__name__)

SEED_BITS = 63


class Command(str, Enum):
    RUN = "run"
    TABLE1 = "table1"
    COVER = "cover"
    ESTIMATE = "estimate"


@dataclass
class RunConfig:
    command: Command
    contract: str | None = None
    inputs: list[str] = field(default_factory=list)
    engine: str = "yao_semi_honest"
    nodes: int = 2
    quorum: int | None = DEFAULT_QUORUM
    seed: int | None = None
    policy: str | None = None
    out: str | None = None
    outsourced: bool = False
    sweep: bool = False
    level: int = 4
    n_e: int = 4
    n_o: int = 2
    t_e: int = 3
    t_o: int = 1
    l: int = 2
    trials: int = MC_TRIALS
    bytecode_size: int = 1500

    def __post_init__(self):
        self.command = Command(self.command)
        if self.seed is None:
            self.seed = secrets.randbits(SEED_BITS)
            logger.warning(f"no --seed given, drew {self.seed} from the OS")

    @classmethod
    def from_sources(cls, flags: Mapping[str, Any], config_file: str | None = None) -> "RunConfig":
        """File values are defaults; any flag that was given on the command line overrides them."""
        known = {f.name for f in fields(cls)}
        merged: dict[str, Any] = {}
        if config_file:
            try:
                merged.update(json.loads(Path(config_file).read_text()))
            except (OSError, ValueError) as error:
                raise UsageError(f"cannot read config file {config_file}: {error}") from error
            unknown = set(merged) - known
            if unknown:
                raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        merged.update({key: value for key, value in flags.items() if key in known and value is not None})
        return cls(**merged)

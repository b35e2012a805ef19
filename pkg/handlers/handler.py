from commands.cover_command import cmd_cover
from commands.estimate_command import cmd_estimate
from commands.run_command import cmd_run
from commands.table1_command import cmd_table1
from handlers.error_handlers import error_handler
from handlers.run_config import Command, RunConfig
from utils.logger_config import configure_logger
from utils.report import write_report

logger = configure_logger(__name__)


def handle(config: RunConfig) -> int:
    """Runs one command, prints its human report, writes the machine report; returns the exit status."""
    logger.info(f"handle: {config.command.value} (seed {config.seed})")
    try:
        if config.command is Command.RUN:
            text, report = cmd_run(config)
        elif config.command is Command.TABLE1:
            text, report = cmd_table1(config)
        elif config.command is Command.COVER:
            text, report = cmd_cover(config)
        elif config.command is Command.ESTIMATE:
            text, report = cmd_estimate(config)
        else:
            logger.error(f"no handler for command {config.command}")
            return 1
        print(text)
        write_report(report, config.out)
    except Exception as error:
        return error_handler(error)
    return 0

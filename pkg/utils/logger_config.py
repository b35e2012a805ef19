import logging
from os import getenv


def configure_logger(name: str | None = None):
    # Enable logging
    logging.basicConfig(
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        level=getenv("LOG_LEVEL", "INFO").upper(),
    )

    # dotenv warns about every unparsable .env line on each load
    logging.getLogger("dotenv").setLevel(logging.ERROR)
    return logging.getLogger(name or __name__)

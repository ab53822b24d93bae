# Path: /src/loader.py
# This file is responsible for initializing the application
import logging
from typing import Optional

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def initialize_application(debug: bool = False, log_file: Optional[str] = None) -> logging.Logger:
    # Configure the root logger once; later calls only adjust the level and add the file handler
    root = logging.getLogger()
    level = logging.DEBUG if debug else logging.INFO
    if not root.handlers:
        logging.basicConfig(level=level, format=LOG_FORMAT)
    root.setLevel(level)
    if log_file and not any(getattr(handler, "baseFilename", None) == log_file for handler in root.handlers):
        handler = logging.FileHandler(log_file)
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        root.addHandler(handler)
    return root

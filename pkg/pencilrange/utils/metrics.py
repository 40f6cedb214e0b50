from __future__ import annotations

import json
import logging
from datetime import datetime
from os import PathLike
from pathlib import Path
from typing import IO, Any, Iterator, Optional

from pencilrange.utils.handlers import JsonRotatingFileHandler

logger = logging.getLogger("metrics")
# Events stay out of the root logger
logger.propagate = False


DEFAULT_FILENAME = "pencilrange"

_experiment = ""


def get_default_filename() -> str | PathLike[str]:
    """Return the default events filename"""
    return DEFAULT_FILENAME


class MetricsExporter:
    """Owns the handlers of the "metrics" logger for one experiment

    Any handler already attached to the logger is removed on init, so the
    files reported by `output` belong to this exporter only.
    """

    handlers: list[logging.Handler]
    logger: logging.Logger

    def __init__(
        self,
        filename: PathLike[str] | str | None = None,
        stream: IO[str] | None = None,
        level: int = logging.INFO,
        max_bytes: int = 0,
    ):
        self.handlers = []

        for hndlr in list(logger.handlers):
            logger.removeHandler(hndlr)

        file = Path(filename if filename else get_default_filename())
        if file.is_dir():
            file = file / DEFAULT_FILENAME
        timestamp = datetime.now().strftime("%Y%m%d%H%M%S%f")
        file = file.with_name(f"{file.stem}_{timestamp}")
        file.parent.mkdir(parents=True, exist_ok=True)
        handler = JsonRotatingFileHandler(file, encoding="utf-8", max_bytes=max_bytes)

        # Records must carry the extras experiment, step, event and value
        formatter = logging.Formatter(
            "{"
            '"timestamp": "%(asctime)s", '
            '"level": "%(levelname)s", '
            '"experiment": "%(experiment)s", '
            '"step": "%(step)s", '
            '"event": "%(event)s", '
            '"value": "%(value)s", '
            '"message": %(message)s'
            "}"
        )
        handler.setFormatter(formatter)
        logger.addHandler(handler)
        self.handlers.append(handler)

        if stream is not None:
            streamhandler = logging.StreamHandler(stream)
            streamhandler.setFormatter(formatter)
            logger.addHandler(streamhandler)
            self.handlers.append(streamhandler)

        logger.setLevel(level)
        self.logger = logger

    def stop_metrics(self) -> None:
        """Flush and close every handler of this exporter"""
        for handler in self.handlers:
            handler.flush()
            handler.close()
            logger.removeHandler(handler)

    @property
    def output(self) -> Iterator[PathLike[str]]:
        """Path of every events file"""
        for hndlr in self.filehandlers:
            yield from hndlr.files

    @property
    def filehandlers(self) -> Iterator[JsonRotatingFileHandler]:
        """The JSON file handlers of this exporter"""
        for hndlr in self.handlers:
            if isinstance(hndlr, JsonRotatingFileHandler):
                yield hndlr


def setup_metrics(
    filename: PathLike[str] | str | None = None,
    level: int = logging.INFO,
    stream: Optional[IO[str]] = None,
    max_bytes: int = 0,
    experiment: str = "",
) -> MetricsExporter:
    """Setup the events log

    Arguments:
        filename: events file, the current timestamp is appended to its name.
            An existing directory receives a file with the default name.
            Defaults to the working directory.
        level: level of the "metrics" logger, DEBUG also records per-item events
        stream: optional extra stream receiving every event
        max_bytes: roll over to a new file when this size would be exceeded,
            0 never rolls over
        experiment: name attached to every event until the next setup
    """
    global _experiment  # pylint: disable=global-statement
    _experiment = experiment
    return MetricsExporter(
        filename=filename, stream=stream, level=level, max_bytes=max_bytes
    )


def log_event(
    event: str,
    value: Any = "",
    message: Any = "",
    step: str = "",
    level: int = logging.INFO,
) -> None:
    """Add an event to the events log

    Arguments:
        event: dotted event name, e.g. "level.eigenvalues"
        value: scalar value of the event
        message: JSON-serializable payload
        step: the item the event refers to, e.g. a truncation or a tail depth
        level: log level of the event
    """
    extra = {
        "experiment": _experiment,
        "step": step,
        "event": event,
        "value": value,
    }
    logger.log(level, json.dumps(message), extra=extra)

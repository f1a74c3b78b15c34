"""
Run journal
^^^^^^^^^^^

Human readable record of the runs written into an output directory, in the layout of ``.changes``
files::

    -------------------------------------------------------------------
    Sat Oct 17 12:00:00 UTC 2026 - bee-seed0

    method: bee
    ...

Timestamps never enter datasets or metrics, so the journal does not affect reproducibility.
"""
import typing
from datetime import datetime
from pathlib import Path
import re
import warnings

from dateutil.parser import parse
from pytz import _UTC

JOURNAL_NAME = "runs.changes"
SEPARATOR = "-" * 67


def is_aware(timestamp: datetime) -> bool:
    return timestamp.tzinfo is not None and timestamp.tzinfo.utcoffset(timestamp) is not None


class Entry:
    """
    One journal entry

    :param run_id: Identifier of the run, e.g. ``<name>-seed<seed>``
    :param content: Free-form lines
    :param timestamp: Timezone-aware timestamp; defaults to now
    """
    default_tz = _UTC()

    def __init__(self, run_id: str = "", content: str = "",
                 timestamp: typing.Optional[datetime] = None):
        if timestamp is not None and not isinstance(timestamp, datetime):
            raise TypeError("`timestamp` needs to be a datetime object!")
        if timestamp is not None and not is_aware(timestamp):
            raise ValueError("`timestamp` is not timezone-aware!")
        self.timestamp = timestamp or datetime.now(tz=self.default_tz)
        self.run_id = run_id
        self.content = content

    def __bool__(self) -> bool:
        return bool(self.run_id and self.content)

    @property
    def formatted_timestamp(self) -> str:
        if not isinstance(self.timestamp, datetime):
            return str(self.timestamp)
        return self.timestamp.astimezone(self.default_tz).strftime("%a %b %d %H:%M:%S %Z %Y")

    @property
    def fields(self) -> typing.Dict[str, str]:
        """
        ``key: value`` lines of the content
        """
        result = {}
        for line in self.content.splitlines():
            key, sep, value = line.partition(":")
            if sep:
                result[key.strip()] = value.strip()
        return result

    def __str__(self) -> str:
        return f"{SEPARATOR}\n{self.formatted_timestamp} - {self.run_id}\n\n{self.content}\n\n"


class RunJournal:
    """
    Parser and writer of journal files
    """
    patterns = {
        "init": re.compile(r"^-+$"),
        "header": re.compile(
            r"^(?P<timestamp>[A-Za-z]{3,} [A-Za-z]{3,} [0-9: ]+ [A-Z]+ \d{4,}) "
            r"- (?P<run_id>.*)\s*$")
    }

    def __init__(self, entries: typing.Optional[typing.List[Entry]] = None):
        self.entries = list(entries or [])

    @classmethod
    def parse(cls, path: typing.Union[str, Path]) -> "RunJournal":
        journal = cls()
        entry = Entry()
        with Path(path).open("r", encoding="utf-8") as handle:
            for line in handle:
                if cls.patterns["init"].match(line):
                    if entry:
                        journal.entries.append(entry)
                    entry = Entry()
                    continue

                match = cls.patterns["header"].match(line)
                if match:
                    try:
                        timestamp = parse(match.group("timestamp"), ignoretz=False)
                    except ValueError as error:
                        warnings.warn(f"Cannot parse journal entry's timestamp: '{error}'")
                        timestamp = match.group("timestamp")
                    else:
                        if not is_aware(timestamp):
                            timestamp = entry.default_tz.localize(timestamp)
                    entry.timestamp = timestamp
                    entry.run_id = match.group("run_id").strip()
                    continue

                if not line.strip():
                    continue
                if entry.content:
                    entry.content += "\n"
                entry.content += line.rstrip()

        if entry:
            journal.entries.append(entry)
        return journal

    def find(self, run_id: str) -> typing.Optional[Entry]:
        for entry in reversed(self.entries):
            if entry.run_id == run_id:
                return entry
        return None

    def write(self, path: typing.Union[str, Path]) -> None:
        with Path(path).open("w", encoding="utf-8") as handle:
            for entry in self.entries:
                handle.write(str(entry))

    @staticmethod
    def append(path: typing.Union[str, Path], entry: Entry) -> None:
        with Path(path).open("a", encoding="utf-8") as handle:
            handle.write(str(entry))

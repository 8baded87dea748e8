"""Time conventions shared by every module.

All data lives on a strict 10-minute grid of naive UTC instants.  On disk
timestamps are ISO-8601 strings of the form ``YYYY-MM-DDThh:mm:ssZ``; in
memory they are ``numpy.datetime64[s]`` values.
"""

from __future__ import annotations

import datetime as _dt

import numpy as np

from .errors import BadTimestamp

GRID_SECONDS = 600
GRID_STEP = np.timedelta64(GRID_SECONDS, "s")
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


def parse_timestamp(text: str) -> np.datetime64:
    """Parse one on-grid ISO-8601 UTC timestamp string."""
    try:
        parsed = _dt.datetime.strptime(text, TIMESTAMP_FORMAT)
    except (ValueError, TypeError) as exc:
        raise BadTimestamp(f"unparseable timestamp {text!r}") from exc
    ts = np.datetime64(parsed, "s")
    if not on_grid(ts):
        raise BadTimestamp(f"timestamp {text!r} is off the 10-minute grid")
    return ts


def format_timestamp(ts: np.datetime64) -> str:
    return str(ts.astype("datetime64[s]")) + "Z"


def on_grid(ts) -> np.ndarray | bool:
    """True where instants sit on 10-minute boundaries."""
    seconds = np.asarray(ts, dtype="datetime64[s]").astype(np.int64)
    return seconds % GRID_SECONDS == 0


def add_months(ts: np.datetime64, months: int) -> np.datetime64:
    """Shift a calendar timestamp by whole months, clamping the day."""
    moment = ts.astype("datetime64[s]").item()
    month_index = moment.year * 12 + (moment.month - 1) + months
    year, month = divmod(month_index, 12)
    month += 1
    day = min(moment.day, _days_in_month(year, month))
    shifted = moment.replace(year=year, month=month, day=day)
    return np.datetime64(shifted, "s")


def _days_in_month(year: int, month: int) -> int:
    if month == 12:
        nxt = _dt.date(year + 1, 1, 1)
    else:
        nxt = _dt.date(year, month + 1, 1)
    return (nxt - _dt.date(year, month, 1)).days

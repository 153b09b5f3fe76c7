"""Session log parsing, coordinate repair, sample cleaning and the AOI map.

Input is comma-delimited UTF-8 text with a header row. Canonical columns:

``timestamp_ms``
    integer milliseconds since session start
``gaze``
    ``"(x, y)"`` text, or use ``gaze_x`` and ``gaze_y``
``event``
    free text, may be empty
``level``
    integer level id (defaults to 1 when the column is absent)
``aoi_name``, ``aoi_x``, ``aoi_y``, ``aoi_w``, ``aoi_h``, ``aoi_role``
    optional inline AOI definitions

Column names can be remapped with ``column.<canonical>=<actual>`` config keys.
"""
from __future__ import annotations

import csv
import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

from .config import IngestOptions, ScreenConfig

log = logging.getLogger(__name__)

CLICK = "click"
TARGET = "target"
OTHER = "other"

# fraction of values that must lie in [0, 1] for a column to count as normalized
NORMALIZED_QUORUM = 0.99


class IngestError(Exception):
    pass


class ParseError(IngestError):
    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        super().__init__(f"row {row}: {message}" if row is not None else message)


class MissingCoordinateError(ParseError):
    pass


class EmptySessionError(IngestError):
    pass


class Point(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class GazeSample:
    timestamp: int
    x: Optional[float]
    y: Optional[float]
    level: int = 1
    event: Optional[str] = None

    @property
    def has_position(self) -> bool:
        return self.x is not None and self.y is not None


@dataclass(frozen=True)
class TimelineEvent:
    timestamp: int
    kind: str
    payload: str
    level: int = 1


@dataclass(frozen=True)
class AoiRect:
    name: str
    x: float
    y: float
    w: float
    h: float
    role: str = "bin"

    def contains(self, px: float, py: float, tolerance: float = 0.0) -> bool:
        return (self.x - tolerance <= px <= self.x + self.w + tolerance
                and self.y - tolerance <= py <= self.y + self.h + tolerance)


@dataclass(frozen=True)
class AoiMap:
    aois: tuple = ()
    tolerance: float = 50.0

    def lookup(self, px: float, py: float) -> Optional[str]:
        for a in self.aois:
            if a.contains(px, py, self.tolerance):
                return a.name
        return None

    def role_of(self, name: Optional[str]) -> Optional[str]:
        for a in self.aois:
            if a.name == name:
                return a.role
        return None

    @property
    def bin_names(self) -> frozenset:
        return frozenset(a.name for a in self.aois if a.role == "bin")


@dataclass(frozen=True)
class RawSession:
    """Every parsed row in file order, already in screen pixels."""

    samples: tuple
    aoi_map: AoiMap
    screen: ScreenConfig
    source: str = ""


@dataclass(frozen=True)
class CleanSession:
    samples: tuple
    events: tuple
    aoi_map: AoiMap
    screen: ScreenConfig
    dropped_count: int = 0
    # "Picked Trash" rows moved from the gaze stream to the timeline
    event_rows_removed: int = 0
    source: str = ""

    def arrays(self):
        import numpy as np

        x = np.fromiter((s.x for s in self.samples), dtype=np.float64, count=len(self.samples))
        y = np.fromiter((s.y for s in self.samples), dtype=np.float64, count=len(self.samples))
        t = np.fromiter((s.timestamp for s in self.samples), dtype=np.int64, count=len(self.samples))
        return x, y, t


_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_POINT_RE = re.compile(
    rf"^\s*(?P<open>[(\[]?)\s*(?P<x>{_NUM})\s*,\s*(?P<y>{_NUM})\s*(?:,\s*(?P<z>{_NUM})\s*)?(?P<close>[)\]]?)\s*$"
)
_MISSING_TOKENS = {"", "nan", "none", "null", "na", "n/a", "()", "(,)"}


def _is_missing(raw) -> bool:
    return raw is None or raw.strip().lower() in _MISSING_TOKENS


def parse_point(raw: Optional[str], row: Optional[int] = None) -> Point:
    """Parse ``"(x, y)"``, ``"x,y"`` or ``"[x, y]"`` into a :class:`Point`.

    A third component (``"(x, y, z)"``, viewport depth from 3D engines) is
    accepted and discarded. Brackets must be balanced.
    """
    if _is_missing(raw):
        raise MissingCoordinateError("missing gaze coordinate", row)
    m = _POINT_RE.match(raw)
    if m is None or (m["open"], m["close"]) not in (("", ""), ("(", ")"), ("[", "]")):
        raise ParseError(f"malformed coordinate {raw!r}", row)
    return Point(float(m["x"]), float(m["y"]))


def parse_scalar(raw: Optional[str], what: str, row: Optional[int] = None) -> float:
    if _is_missing(raw):
        raise MissingCoordinateError(f"missing {what}", row)
    try:
        v = float(raw)
    except ValueError:
        raise ParseError(f"malformed {what} {raw!r}", row) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite {what} {raw!r}", row)
    return v


def is_normalized_column(values: Sequence[float]) -> bool:
    """True when at least 99% of the values lie in [0, 1]."""
    if not values:
        return False
    inside = sum(1 for v in values if 0.0 <= v <= 1.0)
    return inside >= NORMALIZED_QUORUM * len(values)


def to_screen(p, screen: ScreenConfig, normalized: Optional[bool] = None) -> Point:
    """Map a source point to top-left-origin screen pixels.

    ``normalized=None`` decides per point (both components in [0, 1]).
    The result is not bounds-checked.
    """
    x, y = p
    if normalized is None:
        normalized = 0.0 <= x <= 1.0 and 0.0 <= y <= 1.0
    if normalized:
        if screen.y_origin == "bottom":
            y = 1.0 - y
        return Point(x * screen.width, y * screen.height)
    if screen.y_origin == "bottom":
        y = screen.height - y
    return Point(x, y)


def normalize_aoi(a: AoiRect, screen: ScreenConfig) -> AoiRect:
    """Grow to ``min_aoi_size`` about the center, then shift inside the screen."""
    w, h = a.w, a.h
    if w <= 0 or h <= 0:
        raise IngestError(f"AOI {a.name!r} has non-positive size {w}x{h}")
    x, y = a.x, a.y
    if w < screen.min_aoi_size:
        x = x + w / 2 - screen.min_aoi_size / 2
        w = float(screen.min_aoi_size)
    if h < screen.min_aoi_size:
        y = y + h / 2 - screen.min_aoi_size / 2
        h = float(screen.min_aoi_size)
    if w > screen.width or h > screen.height:
        log.warning("AOI %r (%gx%g) is larger than the screen; clamping", a.name, w, h)
        w, h = min(w, screen.width), min(h, screen.height)
    x = min(max(x, 0.0), screen.width - w)
    y = min(max(y, 0.0), screen.height - h)
    if (x, y, w, h) == (a.x, a.y, a.w, a.h):
        return a
    return AoiRect(a.name, x, y, w, h, a.role)


def map_to_aoi(p, m: AoiMap) -> Optional[str]:
    return m.lookup(p[0], p[1])


def build_aoi_map(aois: Sequence[AoiRect], screen: ScreenConfig) -> AoiMap:
    return AoiMap(tuple(normalize_aoi(a, screen) for a in aois), float(screen.aoi_tolerance))


def classify_event(text: str) -> str:
    t = text.strip().lower()
    if "picked trash" in t or t == "click":
        return CLICK
    if "spawn" in t or t == "target":
        return TARGET
    return OTHER


def in_bounds(x: float, y: float, screen: ScreenConfig) -> bool:
    return 0.0 <= x < screen.width and 0.0 <= y < screen.height


def filter_samples(session: RawSession) -> CleanSession:
    """Drop invalid gaze rows and move game events onto the timeline.

    Rows without a position that carry an event are timeline-only rows and
    are not counted as dropped. "Picked Trash" rows always leave the gaze
    stream. Raises :class:`EmptySessionError` when no sample survives.
    """
    screen = session.screen
    kept, events = [], []
    dropped = removed = 0
    last_t = None
    for s in session.samples:
        kind = None
        if s.event:
            kind = classify_event(s.event)
            events.append(TimelineEvent(s.timestamp, kind, s.event, s.level))
        if kind == CLICK:
            if s.has_position:
                removed += 1
            continue
        if not s.has_position:
            if kind is None:
                dropped += 1
            continue
        if (s.x == 0 and s.y == 0) or not in_bounds(s.x, s.y, screen):
            dropped += 1
            continue
        if last_t is not None and s.timestamp < last_t:
            raise IngestError(f"timestamps decrease at t={s.timestamp} (previous {last_t})")
        last_t = s.timestamp
        kept.append(s)
    if not kept:
        raise EmptySessionError(
            f"{session.source or 'session'}: no valid gaze samples "
            f"({dropped} dropped of {len(session.samples)} rows)"
        )
    events.sort(key=lambda e: e.timestamp)
    return CleanSession(tuple(kept), tuple(events), session.aoi_map, screen, dropped, removed, session.source)


def split_levels(session: RawSession) -> dict:
    """Per-level :class:`RawSession` objects, keyed by level id in ascending order."""
    by_level: dict = {}
    for s in session.samples:
        by_level.setdefault(s.level, []).append(s)
    return {
        lvl: RawSession(tuple(by_level[lvl]), session.aoi_map, session.screen, session.source)
        for lvl in sorted(by_level)
    }


def read_aoi_file(path) -> list:
    """Sidecar AOI definitions: one ``name x y w h [role]`` per line."""
    aois = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) not in (5, 6):
            raise ParseError(f"{path}: expected 'name x y w h [role]', got {line!r}", lineno)
        try:
            x, y, w, h = (float(v) for v in parts[1:5])
        except ValueError:
            raise ParseError(f"{path}: non-numeric AOI geometry in {line!r}", lineno) from None
        aois.append(AoiRect(parts[0], x, y, w, h, parts[5] if len(parts) == 6 else "bin"))
    return aois


def _aois_to_screen(aois: Sequence[AoiRect], screen: ScreenConfig, coords: str) -> list:
    """Bring AOI rectangles into top-left-origin pixels.

    In bottom-origin sources the AOI anchor is its lower-left corner.
    """
    if coords == "auto":
        vals = [v for a in aois for v in (a.x, a.y, a.w, a.h)]
        normalized = is_normalized_column(vals)
    else:
        normalized = coords == "normalized"
    out = []
    for a in aois:
        x, y, w, h = a.x, a.y, a.w, a.h
        if normalized:
            x, w = x * screen.width, w * screen.width
            y, h = y * screen.height, h * screen.height
        if screen.y_origin == "bottom":
            y = screen.height - y - h
        out.append(AoiRect(a.name, x, y, w, h, a.role))
    return out


def read_session(
    path,
    screen: Optional[ScreenConfig] = None,
    options: Optional[IngestOptions] = None,
    aoi_path=None,
) -> RawSession:
    """Parse one session log into a :class:`RawSession` in screen pixels."""
    screen = screen or ScreenConfig()
    options = options or IngestOptions()
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        return parse_session_rows(csv.DictReader(fh), screen, options, aoi_path, str(path))


def parse_session_rows(reader, screen: ScreenConfig, options: IngestOptions, aoi_path=None, source="") -> RawSession:
    cols = {k: options.columns.get(k, k) for k in (
        "timestamp_ms", "gaze", "gaze_x", "gaze_y", "event", "level",
        "aoi_name", "aoi_x", "aoi_y", "aoi_w", "aoi_h", "aoi_role")}
    header = reader.fieldnames or []
    if cols["timestamp_ms"] not in header:
        raise ParseError(f"{source}: missing required column {cols['timestamp_ms']!r}")
    split_xy = cols["gaze"] not in header
    if split_xy and not (cols["gaze_x"] in header and cols["gaze_y"] in header):
        raise ParseError(f"{source}: need a {cols['gaze']!r} column or both {cols['gaze_x']!r} and {cols['gaze_y']!r}")

    rows = []  # (row, t, x|None, y|None, level, event|None)
    inline_aois: dict = {}
    for row_no, rec in enumerate(reader, 1):
        def get(key):
            v = rec.get(cols[key])
            return v.strip() if isinstance(v, str) else None

        aoi_name = get("aoi_name")
        if aoi_name and aoi_name not in inline_aois:
            geom = [parse_scalar(get(k), k, row_no) for k in ("aoi_x", "aoi_y", "aoi_w", "aoi_h")]
            inline_aois[aoi_name] = AoiRect(aoi_name, *geom, get("aoi_role") or "bin")

        event = get("event") or None
        if split_xy:
            raw_x, raw_y = get("gaze_x"), get("gaze_y")
            coord_missing = _is_missing(raw_x) or _is_missing(raw_y)
        else:
            raw_g = get("gaze")
            coord_missing = _is_missing(raw_g)
        if coord_missing and aoi_name and not event:
            continue  # AOI definition row
        raw_t = get("timestamp_ms")
        if _is_missing(raw_t):
            raise ParseError("missing timestamp_ms", row_no)
        try:
            t = int(float(raw_t))
        except ValueError:
            raise ParseError(f"malformed timestamp {raw_t!r}", row_no) from None
        if t < 0:
            raise ParseError(f"negative timestamp {t}", row_no)
        raw_level = get("level")
        try:
            level = int(raw_level) if raw_level else 1
        except ValueError:
            raise ParseError(f"malformed level {raw_level!r}", row_no) from None
        x = y = None
        if not coord_missing:
            if split_xy:
                x, y = parse_scalar(raw_x, "gaze_x", row_no), parse_scalar(raw_y, "gaze_y", row_no)
            else:
                x, y = parse_point(raw_g, row_no)
        rows.append((row_no, t, x, y, level, event))

    if options.coords == "auto":
        xs = [r[2] for r in rows if r[2] is not None]
        ys = [r[3] for r in rows if r[3] is not None]
        norm_x, norm_y = is_normalized_column(xs), is_normalized_column(ys)
    else:
        norm_x = norm_y = options.coords == "normalized"

    samples = []
    for _, t, x, y, level, event in rows:
        if x is not None:
            x = x * screen.width if norm_x else x
            if norm_y:
                y = (1.0 - y if screen.y_origin == "bottom" else y) * screen.height
            elif screen.y_origin == "bottom":
                y = screen.height - y
        samples.append(GazeSample(t, x, y, level, event))

    aois = list(inline_aois.values())
    if aoi_path is not None:
        names = {a.name for a in aois}
        aois += [a for a in read_aoi_file(aoi_path) if a.name not in names]
    aoi_map = build_aoi_map(_aois_to_screen(aois, screen, options.coords), screen)
    return RawSession(tuple(samples), aoi_map, screen, source)


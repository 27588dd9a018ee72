"""Reading alliance, firm and patent tables and canonicalizing firm names."""

from __future__ import annotations

import csv
import re
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

DEFAULT_SUFFIXES = (
    "INC", "INCORPORATED", "LTD", "LIMITED", "CORP", "CORPORATION", "CO",
    "COMPANY", "LLC", "LLP", "LP", "PLC", "AG", "SA", "SPA", "NV", "BV",
    "GMBH", "KK", "AB", "AS", "OY", "PTY", "SARL", "SRL",
)

# (label, inclusive SIC ranges); first match wins
SECTOR_TABLE = (
    ("pharmaceuticals", ((2830, 2836),)),
    ("chemicals", ((2800, 2829), (2837, 2899))),
    ("petroleum refining and products", ((2900, 2999),)),
    ("computer and office equipment", ((3570, 3579),)),
    ("household audiovisual equipment", ((3650, 3652),)),
    ("telecommunications equipment", ((3660, 3669),)),
    ("automotive bodies and parts", ((3710, 3716),)),
    ("aerospace equipment", ((3720, 3729), (3760, 3769))),
    ("measuring and controlling devices", ((3820, 3829),)),
    ("medical equipment", ((3840, 3851),)),
)
OTHER_SECTOR = "other"
SECTORS = tuple(label for label, _ in SECTOR_TABLE) + (OTHER_SECTOR,)

_DROP = re.compile(r"[.'’]")
_PUNCT = re.compile(r"[^\w\s]|_")


class IngestError(ValueError):
    """Raised when input files cannot be used (missing, wrong header, too many bad rows)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class RejectedName(ValueError):
    pass


@dataclass(frozen=True)
class NormalizationConfig:
    suffixes: tuple[str, ...] = DEFAULT_SUFFIXES
    aliases: dict[str, str] = field(default_factory=dict)

    @classmethod
    def from_files(cls, suffix_path=None, alias_path=None) -> "NormalizationConfig":
        suffixes = DEFAULT_SUFFIXES
        if suffix_path is not None:
            lines = Path(suffix_path).read_text(encoding="utf-8").splitlines()
            suffixes = tuple(
                _clean(line) for line in lines if line.strip() and not line.startswith("#")
            )
        aliases = {}
        if alias_path is not None:
            bare = cls(suffixes=suffixes)
            with open(alias_path, newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                next(reader, None)
                for row in reader:
                    if len(row) < 2 or not row[0].strip():
                        continue
                    aliases[normalize_firm_name(row[0], bare)] = normalize_firm_name(row[1], bare)
        return cls(suffixes=suffixes, aliases=aliases)


def _clean(raw: str) -> str:
    text = unicodedata.normalize("NFKC", raw).casefold().upper()
    text = _DROP.sub("", text)
    text = _PUNCT.sub(" ", text)
    return " ".join(text.split())


def normalize_firm_name(raw: str, rules: NormalizationConfig | None = None) -> str:
    """Canonical form of a firm name.

    Upper-cases, strips punctuation, collapses whitespace and removes trailing
    legal-suffix tokens (repeatedly, so "X CORP INC" becomes "X").  Aliases are
    applied last.  Raises :class:`RejectedName` if nothing is left.
    """
    rules = rules or NormalizationConfig()
    if not raw or not raw.strip():
        raise RejectedName("empty firm name")
    tokens = _clean(raw).split()
    suffixes = set(rules.suffixes)
    while tokens and tokens[-1] in suffixes:
        tokens.pop()
    if not tokens:
        raise RejectedName(f"name {raw!r} is empty after normalization")
    name = " ".join(tokens)
    return rules.aliases.get(name, name)


def parse_sic(raw: str) -> int | None:
    raw = (raw or "").strip()
    if len(raw) == 4 and raw.isdigit():
        return int(raw)
    return None


def sector_for_sic(sic: int | None) -> str:
    if sic is None:
        return OTHER_SECTOR
    for label, ranges in SECTOR_TABLE:
        for lo, hi in ranges:
            if lo <= sic <= hi:
                return label
    return OTHER_SECTOR


def parse_year(raw: str) -> int:
    """Year from ``YYYY`` or an ISO-like date (``YYYY-MM-DD``, ``YYYY/MM``)."""
    m = re.match(r"\s*(\d{4})(?:$|[-/.T ])", raw or "")
    if not m:
        raise ValueError(f"unparseable year {raw!r}")
    return int(m.group(1))


@dataclass(frozen=True)
class FirmRecord:
    raw_name: str
    canonical_name: str
    canonical_id: int
    sic_code: int | None
    sector: str


@dataclass(frozen=True)
class AllianceEvent:
    alliance_id: int
    year: int
    participants: frozenset[int]

    def __post_init__(self):
        if len(self.participants) < 2:
            raise ValueError(f"alliance {self.alliance_id}: participants < 2")


@dataclass(frozen=True)
class PatentRecord:
    firm: int
    year: int
    count: int


@dataclass
class IngestReport:
    rows: dict[str, int] = field(default_factory=dict)
    rejects: list[tuple[str, int, str]] = field(default_factory=list)
    merged_names: int = 0
    unlisted_firms: int = 0
    out_of_range_events: int = 0

    @property
    def n_rows(self) -> int:
        return sum(self.rows.values())

    @property
    def error_fraction(self) -> float:
        return len(self.rejects) / self.n_rows if self.n_rows else 0.0

    def to_dict(self) -> dict:
        return {
            "rows": dict(self.rows),
            "rejected": len(self.rejects),
            "rejects": [{"file": f, "line": n, "reason": r} for f, n, r in self.rejects],
            "merged_names": self.merged_names,
            "unlisted_firms": self.unlisted_firms,
            "out_of_range_events": self.out_of_range_events,
        }


@dataclass(frozen=True)
class IngestResult:
    firms: tuple[FirmRecord, ...]
    events: tuple[AllianceEvent, ...]
    patents: tuple[PatentRecord, ...]
    report: IngestReport

    def firm_index(self) -> dict[int, FirmRecord]:
        return {f.canonical_id: f for f in self.firms}

    def __iter__(self):
        return iter((self.firms, self.events, self.patents))


def _read_rows(path, expected: int, label: str, report: IngestReport):
    path = Path(path)
    if not path.exists():
        raise IngestError(f"{label}: file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < expected:
            raise IngestError(f"{label}: missing or short header in {path}")
        n = 0
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            n += 1
            if len(row) < expected:
                report.rejects.append((label, lineno, f"expected {expected} fields, got {len(row)}"))
                continue
            yield lineno, row
        report.rows[label] = n


def load_events(
    alliances_path,
    firms_path,
    patents_path=None,
    rules: NormalizationConfig | None = None,
    year_range: tuple[int, int] | None = None,
    max_error_fraction: float = 0.01,
) -> IngestResult:
    """Parse the three input tables into immutable records.

    Canonical ids are dense and assigned in sorted canonical-name order, so they
    depend only on the set of names, not on row order.  Bad rows are collected in
    the report; an :class:`IngestError` is raised only when the rejected share of
    all rows exceeds ``max_error_fraction``.
    """
    rules = rules or NormalizationConfig()
    report = IngestReport()
    sic_by_name: dict[str, int | None] = {}
    raw_by_name: dict[str, str] = {}
    variants: dict[str, set[str]] = defaultdict(set)

    for lineno, row in _read_rows(firms_path, 2, "firms", report):
        try:
            name = normalize_firm_name(row[0], rules)
        except RejectedName as exc:
            report.rejects.append(("firms", lineno, str(exc)))
            continue
        variants[name].add(row[0].strip())
        sic = parse_sic(row[1])
        if name not in raw_by_name:
            raw_by_name[name] = row[0].strip()
        if sic_by_name.get(name) is None:
            sic_by_name[name] = sic

    raw_events = []
    for lineno, row in _read_rows(alliances_path, 3, "alliances", report):
        try:
            alliance_id = int(row[0])
            year = parse_year(row[1])
        except ValueError as exc:
            report.rejects.append(("alliances", lineno, str(exc)))
            continue
        seen = {}
        bad = None
        for part in row[2].split(";"):
            if not part.strip():
                continue
            try:
                seen[part.strip()] = normalize_firm_name(part, rules)
            except RejectedName as exc:
                bad = str(exc)
        names = set(seen.values())
        if bad is not None:
            report.rejects.append(("alliances", lineno, bad))
            continue
        if len(names) < 2:
            report.rejects.append(("alliances", lineno, "participants < 2"))
            continue
        if year_range is not None and not (year_range[0] <= year <= year_range[1]):
            report.out_of_range_events += 1
            continue
        raw_events.append((year, alliance_id, names))
        for raw, name in seen.items():
            variants[name].add(raw)

    raw_patents = []
    if patents_path is not None:
        for lineno, row in _read_rows(patents_path, 3, "patents", report):
            try:
                name = normalize_firm_name(row[0], rules)
                year = parse_year(row[1])
                count = int(row[2])
                if count < 0:
                    raise ValueError("negative patent count")
            except ValueError as exc:
                report.rejects.append(("patents", lineno, str(exc)))
                continue
            variants[name].add(row[0].strip())
            raw_patents.append((name, year, count))

    if report.error_fraction > max_error_fraction:
        raise IngestError(
            f"{len(report.rejects)} of {report.n_rows} rows rejected "
            f"({report.error_fraction:.1%} > {max_error_fraction:.1%})",
            report,
        )

    all_names = set(sic_by_name)
    for _, _, names in raw_events:
        all_names |= names
    all_names |= {name for name, _, _ in raw_patents}
    report.unlisted_firms = len(all_names - set(sic_by_name))
    report.merged_names = sum(len(v) - 1 for v in variants.values() if len(v) > 1)

    ids = {name: i for i, name in enumerate(sorted(all_names))}
    firms = tuple(
        FirmRecord(
            raw_name=raw_by_name.get(name, min(variants[name]) if variants[name] else name),
            canonical_name=name,
            canonical_id=ids[name],
            sic_code=sic_by_name.get(name),
            sector=sector_for_sic(sic_by_name.get(name)),
        )
        for name in sorted(all_names)
    )
    events = tuple(
        AllianceEvent(alliance_id, year, frozenset(ids[n] for n in names))
        for year, alliance_id, names in sorted(raw_events, key=lambda e: (e[0], e[1]))
    )
    totals: dict[tuple[int, int], int] = defaultdict(int)
    for name, year, count in raw_patents:
        totals[(ids[name], year)] += count
    patents = tuple(PatentRecord(f, y, c) for (f, y), c in sorted(totals.items()))
    return IngestResult(firms, events, patents, report)

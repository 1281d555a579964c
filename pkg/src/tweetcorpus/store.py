"""Append-only tweet persistence partitioned by corpus.

Layout: one newline-delimited JSON file per corpus under the store root.
Each line is the canonical tweet object plus an envelope (``corpus``,
``storedAt``, ``isProbe``).  Appends are idempotent on (corpus, tweet id)
and safe under concurrent writers; scans yield a stable total order by
(created_at, id).

Dehydration writes the shareable ID-list form: a ``# corpus:<name>
generated:<UTC>`` header followed by one ``tweet_id<TAB>candidate_id?``
row per record, in ascending id order.  Rehydration resolves such a file
against any object with ``fetch_tweets(ids)`` and reports unresolvable
ids instead of fabricating records.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .corpus import TimeWindow, _as_utc
from .errors import ParseError, StoreError, UnknownCorpusError
from .tweets import TweetRecord, format_timestamp, parse_timestamp, tweet_from_dict, tweet_to_dict

_CORPUS_NAME_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9._-]*$")
_HEADER_RE = re.compile(r"# corpus:(?P<name>\S+) generated:(?P<ts>\S+)$")

EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class StoredTweet:
    tweet: TweetRecord
    corpus: str
    stored_at: datetime
    is_probe: bool


@dataclass(frozen=True)
class RehydrationResult:
    corpus: str
    rows: tuple[tuple[int, str | None], ...]
    tweets: tuple[TweetRecord, ...]
    missing_ids: tuple[int, ...]


class CorpusStore:
    """Directory-backed store; one writer handle per corpus, shared lock."""

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._index: dict[str, set[int]] = {}
        self._handles: dict[str, object] = {}
        for path in sorted(self.root.glob("*.ndjson")):
            corpus = path.stem
            ids = set()
            for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
                if not line:
                    continue
                try:
                    ids.add(int(json.loads(line)["_id"]))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise StoreError(f"{path}:{lineno}: unreadable store line: {exc}") from exc
            self._index[corpus] = ids

    # -- lifecycle ---------------------------------------------------------

    def close(self):
        with self._lock:
            for fh in self._handles.values():
                fh.close()
            self._handles.clear()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- writes ------------------------------------------------------------

    def _path(self, corpus: str) -> Path:
        return self.root / f"{corpus}.ndjson"

    def _handle(self, corpus: str):
        fh = self._handles.get(corpus)
        if fh is None:
            fh = open(self._path(corpus), "a", encoding="utf-8")
            self._handles[corpus] = fh
        return fh

    def ensure_corpus(self, corpus: str):
        """Register an (initially empty) corpus so scans of it are legal."""
        if not _CORPUS_NAME_RE.match(corpus):
            raise StoreError(f"corpus name not usable as a file name: {corpus!r}")
        with self._lock:
            self._index.setdefault(corpus, set())
            self._handle(corpus)

    def append(self, tweet: TweetRecord, corpus: str, *, is_probe: bool = False, stored_at: datetime | None = None) -> str:
        """Persist ``tweet`` into ``corpus``; returns "appended" or "duplicate"."""
        if not _CORPUS_NAME_RE.match(corpus):
            raise StoreError(f"corpus name not usable as a file name: {corpus!r}")
        if stored_at is None:
            stored_at = datetime.now(timezone.utc)
        with self._lock:
            ids = self._index.setdefault(corpus, set())
            if tweet.id in ids:
                return "duplicate"
            obj = {"corpus": corpus, "storedAt": format_timestamp(stored_at), "isProbe": is_probe}
            obj.update(tweet_to_dict(tweet))
            fh = self._handle(corpus)
            fh.write(json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n")
            fh.flush()
            ids.add(tweet.id)
            return "appended"

    # -- reads -------------------------------------------------------------

    def corpora(self) -> list[str]:
        with self._lock:
            return sorted(self._index)

    def _require(self, corpus: str):
        if corpus not in self._index:
            raise UnknownCorpusError(corpus)

    def _read_all(self, corpus: str) -> list[StoredTweet]:
        with self._lock:
            self._require(corpus)
            fh = self._handles.get(corpus)
            if fh is not None:
                fh.flush()
            path = self._path(corpus)
            text = path.read_text(encoding="utf-8") if path.exists() else ""
        out = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line:
                continue
            try:
                obj = json.loads(line)
                out.append(
                    StoredTweet(
                        tweet=tweet_from_dict(obj),
                        corpus=obj["corpus"],
                        stored_at=parse_timestamp(obj["storedAt"]),
                        is_probe=bool(obj.get("isProbe", False)),
                    )
                )
            except Exception as exc:
                raise StoreError(f"{self._path(corpus)}:{lineno}: unreadable store line: {exc}") from exc
        return out

    def scan(self, corpus: str, window: TimeWindow | None = None, include_probes: bool = False) -> list[StoredTweet]:
        """Point-in-time snapshot, ordered by (created_at, id)."""
        rows = self._read_all(corpus)
        if not include_probes:
            rows = [r for r in rows if not r.is_probe]
        if window is not None:
            rows = [r for r in rows if window.contains(r.tweet.created_at)]
        rows.sort(key=lambda r: (_as_utc(r.tweet.created_at), r.tweet.id))
        return rows

    def count(self, corpus: str, include_probes: bool = True) -> int:
        rows = self._read_all(corpus)
        if not include_probes:
            rows = [r for r in rows if not r.is_probe]
        return len(rows)

    def fetch_tweets(self, ids, corpus: str | None = None) -> list[TweetRecord]:
        """Look records up by id, across all corpora unless one is named."""
        wanted = set(ids)
        names = [corpus] if corpus is not None else self.corpora()
        found: dict[int, TweetRecord] = {}
        for name in names:
            for row in self._read_all(name):
                if row.tweet.id in wanted and row.tweet.id not in found:
                    found[row.tweet.id] = row.tweet
        return [found[i] for i in ids if i in found]


# -- derived corpora ---------------------------------------------------------

def privacy_filter(store: CorpusStore, corpus: str, roster_index: dict[int, str], derived_name: str | None = None) -> str:
    """Copy only roster-authored records into a derived corpus.

    ``roster_index`` maps verified account user ids to candidate ids.  An
    empty index is refused: filtering everything away is almost certainly
    a misconfiguration, not an intent.
    """
    if not roster_index:
        raise StoreError("privacy filter refused: roster resolves no accounts")
    derived = derived_name or f"{corpus}-candidates"
    store.ensure_corpus(derived)
    for row in store.scan(corpus, include_probes=False):
        if row.tweet.user_id in roster_index:
            store.append(row.tweet, derived, stored_at=row.stored_at)
    return derived


# -- dehydration / rehydration -----------------------------------------------

def dehydrate(store: CorpusStore, corpus: str, path, roster_index: dict[int, str] | None = None,
              generated_at: datetime | None = None) -> int:
    """Write the shareable ID list for ``corpus``; returns the row count.

    Probe records never leave the store.  The header timestamp defaults to
    the latest storedAt in the corpus so the file is reproducible from
    store content alone (byte-identical for identical stores).
    """
    rows = store.scan(corpus, include_probes=False)
    if generated_at is None:
        generated_at = max((r.stored_at for r in rows), default=EPOCH)
    lines = [f"# corpus:{corpus} generated:{format_timestamp(_as_utc(generated_at))}"]
    for row in sorted(rows, key=lambda r: r.tweet.id):
        cid = roster_index.get(row.tweet.user_id) if roster_index else None
        lines.append(f"{row.tweet.id}\t{cid}" if cid is not None else str(row.tweet.id))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(rows)


def read_dehydrated(path) -> tuple[str, datetime, list[tuple[int, str | None]]]:
    """Parse an ID-list file; malformed content is reported with its line."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines:
        raise ParseError(f"{path}:1: empty file, expected header")
    m = _HEADER_RE.match(lines[0])
    if not m:
        raise ParseError(f"{path}:1: bad header: {lines[0]!r}")
    generated = parse_timestamp(m.group("ts"))
    rows: list[tuple[int, str | None]] = []
    seen: set[int] = set()
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) > 2:
            raise ParseError(f"{path}:{lineno}: expected 'id' or 'id<TAB>candidate', got {line!r}")
        try:
            tweet_id = int(parts[0])
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: tweet id is not an integer: {parts[0]!r}") from exc
        if tweet_id in seen:
            raise ParseError(f"{path}:{lineno}: duplicate tweet id {tweet_id}")
        seen.add(tweet_id)
        rows.append((tweet_id, parts[1] if len(parts) == 2 else None))
    return m.group("name"), generated, rows


def rehydrate(path, lookup) -> RehydrationResult:
    """Resolve an ID-list file against ``lookup.fetch_tweets(ids)``.

    Returns the records that resolved and the exact ids that did not.
    """
    corpus, _, rows = read_dehydrated(path)
    ids = [tweet_id for tweet_id, _ in rows]
    fetched = {t.id: t for t in lookup.fetch_tweets(ids)}
    tweets = tuple(fetched[i] for i in ids if i in fetched)
    missing = tuple(i for i in ids if i not in fetched)
    return RehydrationResult(corpus=corpus, rows=tuple(rows), tweets=tweets, missing_ids=missing)



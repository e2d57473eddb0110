"""Durable one-time enforcement for signer keys.

A key may produce exactly one signature. The store records keys and their
fresh/used status in an append-only journal and flips status with a
check-and-set under a lock, persisting (fsync) before the signature is
released to the caller. Reloading the journal reconstructs the exact
state, so a crash between persist and return can lose the returned
signature but can never allow a second one.

Journal layout: an 8-byte header, then framed records of
``u32 length | payload | u32 crc32(payload)``. Payloads are compact JSON:

    {"op": "add", "entry": 7, "key": "<hex signer-key envelope>"}
    {"op": "use", "entry": 7, "at": 1730000000.0, "digest": "<sha256 hex>"}

A corrupt or truncated final record is dropped with a warning (it can only
be a torn write); a corrupt record with valid data after it means real
damage and raises CorruptJournal. An OS-level file lock keeps two
processes from appending to the same journal.
"""

import fcntl
import hashlib
import json
import os
import struct
import threading
import time
import warnings
import zlib
from dataclasses import dataclass
from typing import Dict, Optional

from . import envelopes, scheme
from .errors import (
    CorruptJournal,
    DuplicateKey,
    KeyAlreadyUsed,
    KeyNotFound,
    StoreLocked,
)

JOURNAL_MAGIC = b"MTAOJRN\x01"
STORE_ENV = "MTAOTIBAS_STORE"
STATUS_FRESH = "fresh"
STATUS_USED = "used"
_MAX_RECORD = 1 << 24


@dataclass
class KeyEntry:
    key: scheme.SignerKey
    status: str = STATUS_FRESH
    used_at: Optional[float] = None
    message_digest: Optional[bytes] = None


class KeyStore:
    """Journal-backed store enforcing the one-signature-per-key rule."""

    def __init__(self, path, engine):
        self.path = str(path)
        self.engine = engine
        self._lock = threading.RLock()
        self._entries: Dict[int, KeyEntry] = {}
        self._next_id = 1
        # called after a use record is durably on disk, before the signature
        # is returned; tests inject crashes here
        self.after_persist_hook = None
        existing = os.path.exists(self.path) and os.path.getsize(self.path) > 0
        self._fh = open(self.path, "a+b")
        try:
            fcntl.flock(self._fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except OSError as exc:
            self._fh.close()
            raise StoreLocked(f"journal {self.path} is locked by another process") from exc
        if existing:
            self._replay()
        else:
            self._fh.write(JOURNAL_MAGIC)
            self._fh.flush()
            os.fsync(self._fh.fileno())

    # -- journal ----------------------------------------------------------

    def _replay(self) -> None:
        self._fh.seek(0)
        data = self._fh.read()
        if len(data) < len(JOURNAL_MAGIC) or data[: len(JOURNAL_MAGIC)] != JOURNAL_MAGIC:
            raise CorruptJournal(f"{self.path}: bad journal header")
        off = len(JOURNAL_MAGIC)
        good = off
        size = len(data)
        while off < size:
            if off + 4 > size:
                self._truncate_tail(off, "torn record header")
                return
            (n,) = struct.unpack_from(">I", data, off)
            end = off + 4 + n + 4
            if n > _MAX_RECORD or end > size:
                self._truncate_tail(off, "torn record body")
                return
            payload = data[off + 4 : off + 4 + n]
            (crc,) = struct.unpack_from(">I", data, off + 4 + n)
            if crc != zlib.crc32(payload):
                if end == size:
                    self._truncate_tail(off, "checksum failure in final record")
                    return
                raise CorruptJournal(f"{self.path}: checksum failure at offset {off}")
            self._apply(payload, off)
            good = end
            off = end

    def _truncate_tail(self, offset: int, why: str) -> None:
        warnings.warn(f"{self.path}: dropping {why} at offset {offset}")
        self._fh.truncate(offset)
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def _apply(self, payload: bytes, off: int) -> None:
        try:
            rec = json.loads(payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CorruptJournal(f"{self.path}: unreadable record at offset {off}: {exc}") from exc
        op = rec.get("op")
        if op == "add":
            entry_id = int(rec["entry"])
            key = envelopes.from_binary(self.engine, bytes.fromhex(rec["key"]), "signer-key")
            self._entries[entry_id] = KeyEntry(key=key)
            self._next_id = max(self._next_id, entry_id + 1)
        elif op == "use":
            entry_id = int(rec["entry"])
            entry = self._entries.get(entry_id)
            if entry is None:
                raise CorruptJournal(f"{self.path}: use record for unknown entry {entry_id}")
            entry.status = STATUS_USED
            entry.used_at = float(rec["at"])
            entry.message_digest = bytes.fromhex(rec["digest"])
        else:
            raise CorruptJournal(f"{self.path}: unknown record op {op!r} at offset {off}")

    def _append(self, rec: dict) -> None:
        payload = json.dumps(rec, sort_keys=True, separators=(",", ":")).encode("utf-8")
        frame = struct.pack(">I", len(payload)) + payload + struct.pack(">I", zlib.crc32(payload))
        self._fh.seek(0, os.SEEK_END)
        self._fh.write(frame)
        self._fh.flush()
        os.fsync(self._fh.fileno())

    # -- operations --------------------------------------------------------

    def store_key(self, key: scheme.SignerKey) -> int:
        """Persist a fresh key. Rejects a second fresh key for the same
        (identity, authority); storing again after use models key rotation."""
        with self._lock:
            for entry in self._entries.values():
                if (
                    entry.status == STATUS_FRESH
                    and entry.key.signer_id == key.signer_id
                    and entry.key.ta_fingerprint == key.ta_fingerprint
                ):
                    raise DuplicateKey(
                        f"fresh key for {key.signer_id!r} under this authority already stored"
                    )
            entry_id = self._next_id
            self._append(
                {
                    "op": "add",
                    "entry": entry_id,
                    "key": envelopes.to_binary(self.engine, key).hex(),
                }
            )
            self._entries[entry_id] = KeyEntry(key=key)
            self._next_id = entry_id + 1
            return entry_id

    def sign_once(self, entry_id: int, ta: scheme.TARecord, message: bytes) -> scheme.Signature:
        """Sign with a stored key, consuming it. The used status is durable
        before the signature is released."""
        with self._lock:
            entry = self._entries.get(entry_id)
            if entry is None:
                raise KeyNotFound(f"no entry {entry_id}")
            if entry.status != STATUS_FRESH:
                raise KeyAlreadyUsed(f"entry {entry_id} already produced its signature")
            signature = scheme.sign(self.engine, entry.key, ta, message)
            digest = hashlib.sha256(message).digest()
            used_at = time.time()
            self._append(
                {"op": "use", "entry": entry_id, "at": used_at, "digest": digest.hex()}
            )
            entry.status = STATUS_USED
            entry.used_at = used_at
            entry.message_digest = digest
            if self.after_persist_hook is not None:
                self.after_persist_hook()
            return signature

    def get(self, entry_id: int) -> KeyEntry:
        with self._lock:
            entry = self._entries.get(entry_id)
            if entry is None:
                raise KeyNotFound(f"no entry {entry_id}")
            return KeyEntry(entry.key, entry.status, entry.used_at, entry.message_digest)

    def entries(self) -> Dict[int, KeyEntry]:
        with self._lock:
            return {
                i: KeyEntry(e.key, e.status, e.used_at, e.message_digest)
                for i, e in self._entries.items()
            }

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def store_path_from_env(explicit: Optional[str]) -> str:
    """Resolve the journal path: explicit flag wins, then the environment
    override, then the default file in the working directory."""
    if explicit:
        return explicit
    return os.environ.get(STORE_ENV, "mtaotibas-store.journal")

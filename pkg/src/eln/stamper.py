"""Tamper-evidence: file hashing, daily Merkle batches, inclusion proofs.

Files are hashed with SHA-256; a day's new digests are sorted, deduplicated
and folded into one Merkle root which is handed to an anchoring backend.
Publishing only the root proves possession of the data at anchor time
without revealing anything about it. Verification is pure arithmetic and
needs no backend at all.
"""

from __future__ import annotations

import hashlib
import logging
import threading
import time as _time
from dataclasses import dataclass, replace
from datetime import date, datetime
from pathlib import Path
from typing import BinaryIO, Callable, Protocol

from .catalog import Catalog
from .errors import BackendUnavailable, Busy, EmptyBatch, InvalidArgument, InvalidProof, NotFound, ReadFailure

log = logging.getLogger(__name__)

DIGEST_LEN = 32
_CHUNK = 1 << 20


@dataclass(frozen=True)
class StampBatch:
    batch_date: date
    leaves: tuple[bytes, ...]  # sorted ascending, unique
    root: bytes
    submitted_at: datetime | None = None
    backend_receipt: str | None = None


@dataclass(frozen=True)
class ProofStep:
    sibling: bytes
    side: str  # "left" | "right": where the sibling sits in the concatenation


@dataclass(frozen=True)
class StampProof:
    leaf: bytes
    path: tuple[ProofStep, ...]
    root: bytes
    batch_date: date


def hash_file(source: Path | str | BinaryIO) -> bytes:
    """SHA-256 of a file's raw bytes, streamed in constant memory."""
    hasher = hashlib.sha256()
    try:
        if isinstance(source, (str, Path)):
            with open(source, "rb") as fh:
                while chunk := fh.read(_CHUNK):
                    hasher.update(chunk)
        else:
            while chunk := source.read(_CHUNK):
                hasher.update(chunk)
    except OSError as exc:
        raise ReadFailure(f"cannot read {source}: {exc}") from exc
    return hasher.digest()


def _pair_hash(left: bytes, right: bytes) -> bytes:
    return hashlib.sha256(left + right).digest()


def _check_digest(value: bytes) -> bytes:
    if not isinstance(value, bytes) or len(value) != DIGEST_LEN:
        raise InvalidArgument(f"digest must be {DIGEST_LEN} bytes")
    return value


def merkle_root(leaves: list[bytes]) -> bytes:
    """Fold a level at a time: hash adjacent pairs, promote an odd tail node."""
    if not leaves:
        raise EmptyBatch("no digests to combine")
    level = list(leaves)
    while len(level) > 1:
        nxt = [_pair_hash(level[i], level[i + 1]) for i in range(0, len(level) - 1, 2)]
        if len(level) % 2:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def build_batch(digests: list[bytes], batch_date: date) -> StampBatch:
    """Canonical batch: leaves sorted bytewise and deduplicated."""
    if not digests:
        raise EmptyBatch("a batch needs at least one digest")
    leaves = tuple(sorted({_check_digest(d) for d in digests}))
    return StampBatch(batch_date=batch_date, leaves=leaves, root=merkle_root(list(leaves)))


def prove(digest: bytes, batch: StampBatch) -> StampProof:
    """Inclusion proof: the sibling sequence from leaf to root."""
    _check_digest(digest)
    if digest not in batch.leaves:
        raise NotFound("digest is not a leaf of this batch")
    steps: list[ProofStep] = []
    level = list(batch.leaves)
    index = level.index(digest)
    while len(level) > 1:
        nxt: list[bytes] = []
        for i in range(0, len(level) - 1, 2):
            nxt.append(_pair_hash(level[i], level[i + 1]))
        odd = len(level) % 2 == 1
        if odd:
            nxt.append(level[-1])
        if odd and index == len(level) - 1:
            index = len(nxt) - 1  # promoted unchanged, no sibling this level
        else:
            if index % 2 == 0:
                steps.append(ProofStep(sibling=level[index + 1], side="right"))
            else:
                steps.append(ProofStep(sibling=level[index - 1], side="left"))
            index //= 2
        level = nxt
    return StampProof(leaf=digest, path=tuple(steps), root=batch.root, batch_date=batch.batch_date)


def verify(proof: StampProof) -> bool:
    """Pure check that folding the leaf along the path reproduces the root.

    A malformed proof raises InvalidProof; a well-formed one that does not
    reproduce the root returns False.
    """
    if not isinstance(proof, StampProof):
        raise InvalidProof("not a proof object")
    for value in (proof.leaf, proof.root):
        if not isinstance(value, bytes) or len(value) != DIGEST_LEN:
            raise InvalidProof("leaf and root must be 32-byte digests")
    if not isinstance(proof.path, (tuple, list)):
        raise InvalidProof("path must be a sequence of steps")
    current = proof.leaf
    for step in proof.path:
        if not isinstance(step, ProofStep):
            raise InvalidProof("path steps must be ProofStep objects")
        if not isinstance(step.sibling, bytes) or len(step.sibling) != DIGEST_LEN:
            raise InvalidProof("sibling must be a 32-byte digest")
        if step.side == "left":
            current = _pair_hash(step.sibling, current)
        elif step.side == "right":
            current = _pair_hash(current, step.sibling)
        else:
            raise InvalidProof(f"side must be 'left' or 'right', not {step.side!r}")
    return current == proof.root


def proof_to_dict(proof: StampProof) -> dict:
    return {
        "leaf": proof.leaf.hex(),
        "path": [{"sibling": s.sibling.hex(), "side": s.side} for s in proof.path],
        "root": proof.root.hex(),
        "batch_date": proof.batch_date.isoformat(),
    }


def proof_from_dict(data: dict) -> StampProof:
    """Parse the JSON shape back; anything structurally off is InvalidProof."""
    try:
        return StampProof(
            leaf=bytes.fromhex(data["leaf"]),
            path=tuple(
                ProofStep(sibling=bytes.fromhex(step["sibling"]), side=str(step["side"]))
                for step in data["path"]
            ),
            root=bytes.fromhex(data["root"]),
            batch_date=date.fromisoformat(data["batch_date"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidProof(f"malformed proof document: {exc}") from None


# -- anchoring backends -----------------------------------------------------


class Backend(Protocol):
    def submit(self, root_hex: str, batch_date: date) -> str:
        """Anchor one root; returns an opaque receipt. May raise BackendUnavailable."""
        ...


class MockBackend:
    """In-process anchor used by default and in tests; records submissions."""

    def __init__(self) -> None:
        self.submissions: list[tuple[str, date, datetime]] = []

    def submit(self, root_hex: str, batch_date: date) -> str:
        self.submissions.append((root_hex, batch_date, datetime.now()))
        return f"mock-{len(self.submissions)}-{root_hex[:12]}"


class HttpBackend:
    """POSTs roots to an external anchoring service."""

    def __init__(self, url: str, key: str = ""):
        if not url:
            raise InvalidArgument("http anchoring backend needs a base URL")
        self.url = url.rstrip("/")
        self.key = key

    def submit(self, root_hex: str, batch_date: date) -> str:
        import requests

        headers = {"Authorization": f"Bearer {self.key}"} if self.key else {}
        try:
            response = requests.post(
                f"{self.url}/stamps",
                json={"root": root_hex, "date": batch_date.isoformat()},
                headers=headers,
                timeout=30,
            )
        except requests.RequestException as exc:
            raise BackendUnavailable(f"anchoring service unreachable: {exc}") from exc
        if response.status_code // 100 != 2:
            raise BackendUnavailable(
                f"anchoring service answered {response.status_code}: {response.text[:200]}"
            )
        try:
            return str(response.json()["receipt"])
        except Exception:
            return response.text.strip()


def submit_batch(
    batch: StampBatch,
    backend: Backend,
    attempts: int = 3,
    base_delay_s: float = 0.5,
    sleep: Callable[[float], None] = _time.sleep,
) -> StampBatch:
    """Submit with exponential backoff; raises after the last attempt."""
    last: BackendUnavailable | None = None
    for attempt in range(attempts):
        try:
            receipt = backend.submit(batch.root.hex(), batch.batch_date)
            return replace(batch, submitted_at=datetime.now(), backend_receipt=receipt)
        except BackendUnavailable as exc:
            last = exc
            if attempt < attempts - 1:
                sleep(base_delay_s * (2**attempt))
    assert last is not None
    raise last


class Stamper:
    """Catalog-bound driver: daily batches, persistence, digest lookup."""

    def __init__(
        self,
        catalog: Catalog,
        data_root: Path | str,
        backend: Backend | None = None,
        attempts: int = 3,
        base_delay_s: float = 0.5,
        sleep: Callable[[float], None] = _time.sleep,
    ):
        self.catalog = catalog
        self.data_root = Path(data_root)
        self.backend = backend if backend is not None else MockBackend()
        self.attempts = attempts
        self.base_delay_s = base_delay_s
        self.sleep = sleep
        self._run_lock = threading.Lock()

    def _submit_pending(self) -> None:
        for batch_id, fields in self.catalog.pending_stamp_batches():
            batch = StampBatch(
                batch_date=fields["batch_date"],
                leaves=tuple(fields["leaves"]),
                root=fields["root"],
            )
            try:
                submitted = submit_batch(
                    batch, self.backend, self.attempts, self.base_delay_s, self.sleep
                )
            except BackendUnavailable:
                log.warning("batch %d still pending: backend unavailable", batch_id)
                continue
            assert submitted.submitted_at is not None and submitted.backend_receipt is not None
            self.catalog.mark_batch_submitted(
                batch_id, submitted.submitted_at, submitted.backend_receipt
            )

    def run_daily(self, now: datetime | None = None) -> StampBatch | None:
        """Batch every not-yet-stamped entry; None when there is nothing new.

        Previously pending batches are retried first. If the backend is down
        the new batch is persisted as pending and returned unsubmitted.
        """
        if not self._run_lock.acquire(blocking=False):
            raise Busy("a stamp run is already in progress")
        try:
            now = now or datetime.now()
            self._submit_pending()
            members: list[tuple[int, bytes]] = []
            for entry in self.catalog.unstamped_entries():
                path = self.data_root / entry.file_path
                try:
                    members.append((entry.id, hash_file(path)))
                except ReadFailure as exc:
                    log.warning("entry %d not stamped: %s", entry.id, exc)
            if not members:
                return None
            batch = build_batch([digest for _, digest in members], now.date())
            batch_id = self.catalog.save_stamp_batch(
                batch.batch_date, list(batch.leaves), batch.root, members
            )
            try:
                batch = submit_batch(
                    batch, self.backend, self.attempts, self.base_delay_s, self.sleep
                )
            except BackendUnavailable:
                log.warning("anchoring backend unavailable; batch %d kept pending", batch_id)
                return batch
            assert batch.submitted_at is not None and batch.backend_receipt is not None
            self.catalog.mark_batch_submitted(batch_id, batch.submitted_at, batch.backend_receipt)
            return batch
        finally:
            self._run_lock.release()

    def lookup(self, digest: bytes) -> dict | None:
        """Proof payload for a digest, or None when it was never stamped."""
        fields = self.catalog.find_stamp_batch_with_leaf(digest)
        if fields is None:
            return None
        batch = StampBatch(
            batch_date=fields["batch_date"],
            leaves=tuple(fields["leaves"]),
            root=fields["root"],
            submitted_at=fields["submitted_at"],
            backend_receipt=fields["backend_receipt"],
        )
        proof = prove(digest, batch)
        return {
            "digest": digest.hex(),
            "proof": proof_to_dict(proof),
            "submitted_at": batch.submitted_at.isoformat() if batch.submitted_at else None,
            "backend_receipt": batch.backend_receipt,
        }

"""Tree scanner and entry generator.

One run walks the measurement trees, classifies every file exactly once
(matched, or skipped with a reason), writes new catalog entries, runs the
automatic linker, and persists an accounting report. Reruns are idempotent:
a file already cataloged counts as a duplicate and nothing changes.
"""

from __future__ import annotations

import logging
import os
from collections import deque
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

from . import convention, linker
from .catalog import Catalog, PathRule
from .config import GrammarConfig, LinkConfig
from .convention import ParsedFileMeta, PathGrammar
from .errors import ElnError, ParseFailure, RootUnreadable, UnknownSample, UnreadableMetadata

log = logging.getLogger(__name__)

SKIP_REASONS = ("too_old", "bad_extension", "parse_failure", "unknown_sample", "unmatched_rule")


@dataclass(frozen=True)
class RecencyPolicy:
    """Ignore files whose data timestamp is older than ``max_age``."""

    max_age: timedelta = timedelta(days=5)
    enabled: bool = True

    def __post_init__(self) -> None:
        if self.max_age <= timedelta(0):
            raise ValueError("max_age must be positive")

    def is_too_old(self, observed_at: datetime, now: datetime) -> bool:
        # Exactly max_age old is still accepted.
        return self.enabled and observed_at < now - self.max_age


@dataclass(frozen=True)
class Candidate:
    """A file that passed every scan filter and is ready to upsert."""

    relative_path: str
    rule: PathRule
    meta: ParsedFileMeta


@dataclass(frozen=True)
class Skip:
    path: str
    reason: str


def _walk_files(root: Path) -> list[Path]:
    """All regular files below root, breadth-first."""
    files: list[Path] = []
    queue: deque[Path] = deque([root])
    while queue:
        folder = queue.popleft()
        try:
            with os.scandir(folder) as it:
                children = sorted(it, key=lambda d: d.name)
        except OSError:
            log.warning("unreadable folder skipped: %s", folder)
            continue
        for child in children:
            if child.is_dir(follow_symlinks=False):
                queue.append(Path(child.path))
            elif child.is_file(follow_symlinks=False):
                files.append(Path(child.path))
    return files


def _match_rule(relative_path: str, rules: list[PathRule]) -> PathRule | None:
    """Most specific rule whose root_subpath is a folder prefix of the path."""
    best: PathRule | None = None
    for rule in rules:
        prefix = rule.root_subpath
        if relative_path == prefix or relative_path.startswith(prefix + "/"):
            if best is None or len(prefix) > len(best.root_subpath):
                best = rule
    return best


def _mtime(path: Path) -> datetime | None:
    try:
        return datetime.fromtimestamp(path.stat().st_mtime)
    except OSError:
        return None


def scan(
    root: Path,
    rules: list[PathRule],
    policy: RecencyPolicy,
    now: datetime,
    grammar_cfg: GrammarConfig | None = None,
) -> tuple[list[Candidate], list[Skip]]:
    """Classify every file under the measurement tree roots.

    Only the two tree roots (and below) are considered; anything else in
    the data folder — configs, the store file, processing results — is not
    the scanner's business.
    """
    grammar_cfg = grammar_cfg or GrammarConfig()
    root = Path(root)
    if not root.is_dir():
        raise RootUnreadable(f"data root is not a readable directory: {root}")

    grammars = {
        "main": PathGrammar(grammar_cfg.main_root, "main"),
        "sub": PathGrammar(grammar_cfg.sub_root, "sub"),
    }

    paths: list[str] = []
    for marker in (grammar_cfg.main_root, grammar_cfg.sub_root):
        tree = root / marker
        if tree.is_dir():
            paths.extend(p.relative_to(root).as_posix() for p in _walk_files(tree))
    paths.sort()

    candidates: list[Candidate] = []
    skipped: list[Skip] = []
    for rel in paths:
        rule = _match_rule(rel, rules)
        if rule is None:
            skipped.append(Skip(rel, "unmatched_rule"))
            continue
        extension = rel.rpartition(".")[2].lower() if "." in rel.rsplit("/", 1)[-1] else ""
        if extension not in rule.allowed_extensions:
            skipped.append(Skip(rel, "bad_extension"))
            continue
        try:
            meta = convention.parse_path(rel, grammars[rule.tree_kind])
            if meta.device_code != rule.device_code:
                raise ParseFailure(
                    rel,
                    f"device code {meta.device_code} does not match"
                    f" the rule's {rule.device_code}",
                )
            if meta.observed_at is None:
                meta = ParsedFileMeta(
                    device_code=meta.device_code,
                    sample_name=meta.sample_name,
                    observed_at=convention.fallback_time(_mtime(root / rel), meta.folder_date),
                    description=meta.description,
                    extension=meta.extension,
                    relative_path=meta.relative_path,
                    folder_date=meta.folder_date,
                )
        except (ParseFailure, UnreadableMetadata) as exc:
            log.info("skipping %s: %s", rel, exc)
            skipped.append(Skip(rel, "parse_failure"))
            continue
        assert meta.observed_at is not None
        if policy.is_too_old(meta.observed_at, now):
            skipped.append(Skip(rel, "too_old"))
            continue
        candidates.append(Candidate(rel, rule, meta))
    return candidates, skipped


def generate_entries(
    catalog: Catalog,
    root: Path,
    policy: RecencyPolicy,
    now: datetime | None = None,
    grammar_cfg: GrammarConfig | None = None,
    link_cfg: LinkConfig | None = None,
    profiles: dict[str, list[str]] | None = None,
) -> dict:
    """Run one full ingest and return the persisted report."""
    now = now or datetime.now()
    link_cfg = link_cfg or LinkConfig()
    profiles = profiles or {}
    started_at = datetime.now()

    rules = catalog.list_path_rules()
    candidates, skipped = scan(root, rules, policy, now, grammar_cfg)
    scanned = len(candidates) + len(skipped)

    created_ids: list[int] = []
    duplicates = 0
    links_created = 0
    with catalog.transaction():
        for cand in candidates:
            try:
                entry, was_created = catalog.upsert_entry(
                    cand.meta,
                    kind=cand.rule.tree_kind,
                    extra={},
                    extra_profile=profiles.get(cand.meta.device_code),
                )
            except UnknownSample:
                skipped.append(Skip(cand.relative_path, "unknown_sample"))
                continue
            except ElnError as exc:
                log.warning("skipping %s: %s", cand.relative_path, exc)
                skipped.append(Skip(cand.relative_path, "parse_failure"))
                continue
            if not was_created:
                duplicates += 1
                continue
            created_ids.append(entry.id)
            links_created += len(linker.auto_link(catalog, entry, link_cfg))

        skipped.sort(key=lambda s: s.path)
        report = {
            "started_at": started_at.isoformat(),
            "now_reference": now.isoformat(),
            "scanned": scanned,
            "created": len(created_ids),
            "duplicates": duplicates,
            "skipped": [{"path": s.path, "reason": s.reason} for s in skipped],
            "links_created": links_created,
            "entries": created_ids,
        }
        catalog.save_report(report, created_at=started_at)
    return report

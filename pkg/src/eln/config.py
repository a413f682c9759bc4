"""Declarative configuration: one TOML file plus a few environment overrides.

Env vars: ``ELN_CONFIG`` picks the file, ``ELN_STAMP_URL`` / ``ELN_STAMP_KEY``
override the anchoring backend settings.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError

DEFAULT_CONFIG_NAME = "eln.toml"


@dataclass(frozen=True)
class GrammarConfig:
    main_root: str = "01_Main_Exp"
    sub_root: str = "02_Sub_Exp"


@dataclass(frozen=True)
class LinkConfig:
    sub_pre_s: float = 0.0
    sub_post_s: float = 7200.0
    note_window_s: float = 43200.0


@dataclass(frozen=True)
class IngestConfig:
    max_age_days: float = 5.0
    recency_enabled: bool = True


@dataclass(frozen=True)
class TabularConfig:
    extensions: tuple[str, ...] = ("csv", "txt", "dat")
    delimiter: str = ","
    decimal_separator: str = "."
    time_column: str | None = None
    # per-device overrides of delimiter / decimal_separator / time_column
    devices: dict[str, dict[str, str]] = field(default_factory=dict)


@dataclass(frozen=True)
class StampConfig:
    backend: str = "mock"  # "mock" or "http"
    url: str = ""
    key: str = ""
    retry_attempts: int = 3
    retry_base_delay_s: float = 0.5


@dataclass(frozen=True)
class ApiConfig:
    bind: str = "127.0.0.1"
    port: int = 8000
    cors_origin: str | None = None
    ui_dir: str | None = None


@dataclass(frozen=True)
class Config:
    data_root: Path
    store_path: Path
    grammar: GrammarConfig = GrammarConfig()
    link: LinkConfig = LinkConfig()
    ingest: IngestConfig = IngestConfig()
    tabular: TabularConfig = TabularConfig()
    stamp: StampConfig = StampConfig()
    api: ApiConfig = ApiConfig()
    # per-device allowed extra metadata keys, e.g. {"OCA": ["wavelength_nm"]}
    profiles: dict[str, list[str]] = field(default_factory=dict)


def default_config(base_dir: Path | str = ".") -> Config:
    base = Path(base_dir)
    return Config(data_root=base / "data", store_path=base / "eln.sqlite3")


def _section(data: Mapping[str, Any], name: str) -> dict[str, Any]:
    value = data.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"config section [{name}] must be a table")
    return dict(value)


def _build(data: Mapping[str, Any], base_dir: Path) -> Config:
    known = {
        "data_root", "store_path", "grammar", "link", "ingest",
        "tabular", "stamp", "api", "profiles",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")

    tab = _section(data, "tabular")
    if "extensions" in tab:
        tab["extensions"] = tuple(str(e).lower().lstrip(".") for e in tab["extensions"])
    if "devices" in tab:
        tab["devices"] = {str(k): dict(v) for k, v in tab["devices"].items()}

    def resolve(p: Any) -> Path:
        path = Path(str(p))
        return path if path.is_absolute() else base_dir / path

    try:
        return Config(
            data_root=resolve(data.get("data_root", "data")),
            store_path=resolve(data.get("store_path", "eln.sqlite3")),
            grammar=GrammarConfig(**_section(data, "grammar")),
            link=LinkConfig(**_section(data, "link")),
            ingest=IngestConfig(**_section(data, "ingest")),
            tabular=TabularConfig(**tab),
            stamp=StampConfig(**_section(data, "stamp")),
            api=ApiConfig(**_section(data, "api")),
            profiles={str(k): [str(x) for x in v] for k, v in _section(data, "profiles").items()},
        )
    except TypeError as exc:
        raise ConfigError(f"bad config value: {exc}") from exc


def _apply_env(cfg: Config, env: Mapping[str, str]) -> Config:
    url = env.get("ELN_STAMP_URL")
    key = env.get("ELN_STAMP_KEY")
    if url is None and key is None:
        return cfg
    stamp = StampConfig(
        backend="http" if url else cfg.stamp.backend,
        url=url if url is not None else cfg.stamp.url,
        key=key if key is not None else cfg.stamp.key,
        retry_attempts=cfg.stamp.retry_attempts,
        retry_base_delay_s=cfg.stamp.retry_base_delay_s,
    )
    return Config(
        data_root=cfg.data_root,
        store_path=cfg.store_path,
        grammar=cfg.grammar,
        link=cfg.link,
        ingest=cfg.ingest,
        tabular=cfg.tabular,
        stamp=stamp,
        api=cfg.api,
        profiles=cfg.profiles,
    )


def load_config(path: Path | str | None = None, env: Mapping[str, str] | None = None) -> Config:
    """Load configuration from ``path``, ``$ELN_CONFIG`` or ``./eln.toml``.

    An explicitly named file must exist; the implicit default may be absent,
    in which case built-in defaults anchored at the working directory apply.
    """
    env = os.environ if env is None else env
    explicit = path is not None or "ELN_CONFIG" in env
    chosen = Path(path) if path is not None else Path(env.get("ELN_CONFIG", DEFAULT_CONFIG_NAME))
    if not chosen.exists():
        if explicit:
            raise ConfigError(f"config file not found: {chosen}")
        return _apply_env(default_config(Path(".")), env)
    try:
        with open(chosen, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {chosen}: {exc}") from exc
    return _apply_env(_build(data, chosen.parent), env)


STARTER_CONFIG = """\
# Lab notebook engine configuration.

data_root = "data"
store_path = "eln.sqlite3"

[grammar]
main_root = "01_Main_Exp"
sub_root = "02_Sub_Exp"

[link]
sub_pre_s = 0
sub_post_s = 7200
note_window_s = 43200

[ingest]
max_age_days = 5
recency_enabled = true

[tabular]
extensions = ["csv", "txt", "dat"]
delimiter = ","
decimal_separator = "."
# time_column = "t"

[stamp]
backend = "mock"   # "http" to anchor via an external service
url = ""           # or set ELN_STAMP_URL
key = ""           # or set ELN_STAMP_KEY

[api]
bind = "127.0.0.1"
port = 8000
# cors_origin = "http://127.0.0.1:5173"
# ui_dir = "frontend"

[profiles]
# Allowed extra metadata keys per device code:
# OCA = ["wavelength_nm", "exposure_ms"]
"""


def write_starter_config(path: Path | str) -> Path:
    """Write the commented starter config; refuses to overwrite."""
    target = Path(path)
    if target.exists():
        raise ConfigError(f"refusing to overwrite existing config: {target}")
    target.write_text(STARTER_CONFIG, encoding="utf-8")
    return target

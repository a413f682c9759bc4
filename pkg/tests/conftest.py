from __future__ import annotations

import pytest

from eln.catalog import Catalog
from eln.config import default_config
from eln.engine import Engine


@pytest.fixture
def catalog():
    cat = Catalog(":memory:")
    yield cat
    cat.close()


@pytest.fixture
def engine(tmp_path):
    config = default_config(tmp_path)
    config.data_root.mkdir(parents=True, exist_ok=True)
    eng = Engine(config)
    yield eng
    eng.close()

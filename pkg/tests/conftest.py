import functools

import pytest

from qstring.moments import build_table
from qstring.opoly import recurrence_from_moments
from qstring.qcore import PrecisionCfg, QParams
from qstring.weight import normalize

PARAM_GRID = [(q, k) for q in ("0.3", "0.5", "0.8") for k in ("0", "1", "2.5")]


@functools.lru_cache(maxsize=None)
def moment_route(q, kappa, N=21, bits=512):
    """Normalized weight, moment table and Gram output, shared across tests."""
    p = QParams(q, kappa)
    cfg = PrecisionCfg(bits)
    w = normalize(p, cfg)
    table = build_table(2 * N + 2, w, cfg)
    polys, seq = recurrence_from_moments(N, table, cfg)
    return p, cfg, w, table, polys, seq


@pytest.fixture
def cfg512():
    return PrecisionCfg(512)


@pytest.fixture
def cfg256():
    return PrecisionCfg(256)


@pytest.fixture
def half():
    return QParams("0.5", "0")

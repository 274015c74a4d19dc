import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from marginlab.rounding import build_net, load_net, save_net

settings.register_profile(
    "marginlab",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("marginlab")

#: Net construction is deterministic in (dim, alpha, seed), so cached copies
#: are byte-identical to fresh builds; set MARGINLAB_NET_CACHE to a directory
#: to skip rebuilding the large nets between test runs.
NET_SEED = 7


def _net(dim: int, alpha: float, tmp_path_factory):
    cache_dir = os.environ.get("MARGINLAB_NET_CACHE")
    if cache_dir:
        path = Path(cache_dir) / f"net-d{dim}-a{alpha}-s{NET_SEED}.bin"
        if path.exists():
            return load_net(path)
    net = build_net(dim, alpha, NET_SEED)
    if cache_dir:
        Path(cache_dir).mkdir(parents=True, exist_ok=True)
        save_net(net, path)
    return net


@pytest.fixture(scope="session")
def net2(tmp_path_factory):
    """d=2 net for margin 0.25 experiments (alpha = 0.125)."""
    return _net(2, 0.125, tmp_path_factory)


@pytest.fixture(scope="session")
def net3(tmp_path_factory):
    return _net(3, 0.125, tmp_path_factory)


@pytest.fixture(scope="session")
def net4(tmp_path_factory):
    return _net(4, 0.125, tmp_path_factory)


@pytest.fixture(scope="session")
def net2_coarse(tmp_path_factory):
    """Small d=2 net (alpha = 0.5) for cheap unit tests."""
    return _net(2, 0.5, tmp_path_factory)


@pytest.fixture(scope="session")
def net3_coarse(tmp_path_factory):
    return _net(3, 0.4, tmp_path_factory)

import pytest

from ttq_harness.fixtures import golden_replay_entries, les_demo_suite


@pytest.fixture(scope="session")
def suite():
    return les_demo_suite()


@pytest.fixture(scope="session")
def golden_entries(suite):
    return golden_replay_entries(suite)


@pytest.fixture(scope="session")
def assets_root(tmp_path_factory):
    """A disposable copy of the bundled assets, for tests that mutate files
    or need paths without touching the repository checkout."""
    from ttq_harness.fixtures import build_assets

    root = tmp_path_factory.mktemp("assets")
    build_assets(root)
    return root

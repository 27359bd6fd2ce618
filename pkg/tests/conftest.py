import pathlib

import pytest

from mutualaid.taxonomy import load_taxonomy_file

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def repo_root() -> pathlib.Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def aal_taxonomy():
    return load_taxonomy_file(str(REPO_ROOT / "ontology" / "aal.json"))

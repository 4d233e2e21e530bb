import pathlib

import pytest

from trimlpf import load_case

CASES_DIR = pathlib.Path(__file__).resolve().parents[1] / "src" / "trimlpf" / "cases"


@pytest.fixture(scope="session")
def cases_dir() -> pathlib.Path:
    return CASES_DIR


@pytest.fixture(scope="session")
def ieee9_case():
    return load_case(CASES_DIR / "ieee9.net")


@pytest.fixture(scope="session")
def toy3_case():
    return load_case(CASES_DIR / "toy3.net")

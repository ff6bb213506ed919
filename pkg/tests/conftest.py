import pytest

from weilcalc import build_fixture


@pytest.fixture(scope="session")
def f0():
    return build_fixture("F0_so3")


@pytest.fixture(scope="session")
def f1():
    return build_fixture("F1_abelian_2d")


@pytest.fixture(scope="session")
def f2():
    return build_fixture("F2_semisimple_2d")


@pytest.fixture(scope="session")
def f3():
    return build_fixture("F3_foliation_4d")


@pytest.fixture(scope="session")
def all_fixtures(f0, f1, f2, f3):
    return [f0, f1, f2, f3]

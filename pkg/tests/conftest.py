import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def s2():
    from intspace.models_io import sphere_2
    return sphere_2()


@pytest.fixture(scope="session")
def torus():
    from intspace.models_io import torus_7
    return torus_7()


@pytest.fixture(scope="session")
def cone_t2():
    from intspace.models_io import cone_over_torus
    return cone_over_torus()


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])

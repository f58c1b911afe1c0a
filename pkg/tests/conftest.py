import pytest

import bourgen as bg


@pytest.fixture(scope="session")
def helicoidal_spec():
    return bg.SpaceSpec("euclidean_helicoidal", a=1.0)


@pytest.fixture(scope="session")
def helicoidal_chart(helicoidal_spec):
    return bg.make_chart(helicoidal_spec)


@pytest.fixture(scope="session")
def helicoidal_frame(helicoidal_spec):
    return bg.builtin_frame(helicoidal_spec)


@pytest.fixture(scope="session")
def rotational_spec():
    return bg.SpaceSpec("euclidean_rotational")


@pytest.fixture(scope="session")
def rotational_frame(rotational_spec):
    return bg.builtin_frame(rotational_spec)


@pytest.fixture(scope="session")
def bcv_spec():
    return bg.SpaceSpec("bcv_helicoidal", a=1.0, kappa=1.0, tau=1.0)


@pytest.fixture(scope="session")
def bcv_frame(bcv_spec):
    return bg.builtin_frame(bcv_spec)


@pytest.fixture(scope="session")
def catenoid_member(rotational_spec, rotational_frame):
    U = bg.GeneratrixMetric.from_expression("sqrt(s^2+1)", (-2.0, 2.0))
    params = bg.BourParams(m=1.0, s_range=(-2.0, 2.0), step=0.01, epsilon=1,
                           anchor=0.0)
    return bg.generate_member(U, params, rotational_frame, 0.0,
                              space=rotational_spec)


@pytest.fixture(scope="session")
def helicoid_member(helicoidal_spec, helicoidal_frame):
    U = bg.GeneratrixMetric.from_expression("sqrt(s^2+1)", (0.5, 2.0))
    params = bg.BourParams(m=1.0, s_range=(0.5, 2.0), step=0.005, epsilon=1)
    return bg.generate_member(U, params, helicoidal_frame, 0.0,
                              space=helicoidal_spec)


@pytest.fixture(scope="session")
def bcv_member(bcv_spec, bcv_frame):
    U = bg.GeneratrixMetric.from_expression("sqrt(s^2+4)", (0.0, 1.0))
    params = bg.BourParams(m=1.0, s_range=(0.0, 1.0), step=0.005, epsilon=1)
    return bg.generate_member(U, params, bcv_frame, 0.0, space=bcv_spec)


@pytest.fixture(scope="session")
def flat_chart():
    return bg.AdaptedChart3(
        g11=lambda x1, x2: 1.0, g12=lambda x1, x2: 0.0,
        g13=lambda x1, x2: 0.0, g22=lambda x1, x2: 1.0,
        g23=lambda x1, x2: 0.0, g33=lambda x1, x2: 1.0,
        label="flat")

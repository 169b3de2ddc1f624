import sys

import pytest

from pssmp.conditioned import bessel3_lamperti_model
from pssmp.levy import make_model

MODELS = {
    "bessel3": {"kind": "brownian_drift", "mu": 0.5, "sigma": 1.0},
    "drift": {"kind": "brownian_drift", "mu": 1.0, "sigma": 0.0},
    "bm": {"kind": "brownian_drift", "mu": -0.2, "sigma": 0.7},
    "cpp_normal": {"kind": "compound_poisson_brownian", "mu": 0.1, "sigma": 0.5, "jump_rate": 3.0},
    "cpp_two_point": {
        "kind": "compound_poisson_brownian", "mu": 0.4, "sigma": 0.0, "jump_rate": 2.0,
        "jump_dist": "two_point", "jump_params": (-0.5, 0.3, 0.4),
    },
    "cpp_exp": {
        "kind": "compound_poisson_brownian", "mu": 0.2, "sigma": 0.3, "jump_rate": 1.5,
        "jump_dist": "exponential_signed", "jump_params": (0.6, 2.0, 3.0),
    },
    "stable15": {"kind": "stable", "stability": 1.5, "positivity": 0.6},
    "zero": {"kind": "zero"},
}


@pytest.fixture
def bessel3():
    return bessel3_lamperti_model()


@pytest.fixture(params=sorted(MODELS))
def any_model(request):
    return make_model(MODELS[request.param])


def model(name):
    return make_model(MODELS[name])


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

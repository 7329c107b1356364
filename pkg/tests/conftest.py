import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from indep_extension import FactorMeasure
from indep_space import AtomMeasure, generate_sigma_algebra, make_space, mixture

settings.register_profile(
    "indep",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("indep")

F = Fraction


@pytest.fixture
def coin_space():
    """Two tosses of a coin."""
    return make_space(["HH", "HT", "TH", "TT"])


@pytest.fixture
def coin_events(coin_space):
    """A: first toss heads, B: second toss heads."""
    return {
        "A": coin_space.event(["HH", "HT"]),
        "B": coin_space.event(["HH", "TH"]),
    }


@pytest.fixture
def coin_algebras(coin_space, coin_events):
    return [
        generate_sigma_algebra(coin_space, [coin_events["A"]]),
        generate_sigma_algebra(coin_space, [coin_events["B"]]),
    ]


@pytest.fixture
def coin_measures(coin_space):
    """P1 and P2 make A and B independent; their average P3 does not."""
    p1 = AtomMeasure.from_labels(coin_space, {"HH": F(3, 16), "HT": F(1, 16), "TH": F(9, 16), "TT": F(3, 16)})
    p2 = AtomMeasure.from_labels(coin_space, {"HH": F(3, 16), "HT": F(9, 16), "TH": F(1, 16), "TT": F(3, 16)})
    p3 = AtomMeasure(*mixture([(F(1, 2), p1), (F(1, 2), p2)]))
    return {"P1": p1, "P2": p2, "P3": p3}


@pytest.fixture
def coin_factors(coin_algebras):
    """P_A(A) = 1/4 on sigma(A) and P_B(B) = 3/4 on sigma(B)."""
    s_a, s_b = coin_algebras
    return [
        FactorMeasure(s_a, (F(1, 4), F(3, 4))),
        FactorMeasure(s_b, (F(3, 4), F(1, 4))),
    ]


@pytest.fixture
def templates_dir():
    return Path(__file__).parent.parent / "templates" / "problems"


@pytest.fixture
def coin_problem_text(templates_dir):
    return (templates_dir / "coin.json").read_bytes()


@pytest.fixture
def write_problem(tmp_path):
    """Factory fixture that writes a problem dict to a JSON file and returns its path."""

    def _write(problem: dict, name: str = "problem.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(problem, indent=2), encoding="utf-8")
        return path

    return _write

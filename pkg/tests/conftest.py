from __future__ import annotations

import pytest

from feedback_loom.core import SessionConfig

# The eight-seat control loop from the original apparatus, seats A..H as 0..7:
# A controls F, F controls D, D controls B, B controls H, H controls C,
# C controls E, E controls G, G controls A.
PAPER_CYCLE = (5, 7, 4, 1, 6, 3, 0, 2)


def make_config(mode: str, **overrides) -> SessionConfig:
    doc = {"mode": mode}
    doc.update(overrides)
    return SessionConfig.from_dict(doc)


@pytest.fixture
def tic_config() -> SessionConfig:
    return make_config("tic", rng_seed=7, phase_plan=[["pre_intervention", 20], ["intervention", 40]])


@pytest.fixture
def reflect_config() -> SessionConfig:
    return make_config(
        "reflect", n_seats=4, rng_seed=7, phase_plan=[["pre_intervention", 20], ["intervention", 40]]
    )

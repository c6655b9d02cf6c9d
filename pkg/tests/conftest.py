import math

import numpy as np
from hypothesis import settings, strategies as st

from logid.levy import LevySpectrum

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

jump = st.floats(-1.5, 1.5).filter(lambda u: abs(u) > 1e-3)
weight = st.floats(0.05, 2.0)


@st.composite
def spectra(draw, max_atoms=4):
    atoms = draw(st.lists(st.tuples(jump, weight), max_size=max_atoms))
    sigma2 = draw(st.floats(0.0, 2.0))
    if sigma2 == 0 and not atoms:
        sigma2 = 1.0
    return LevySpectrum(sigma2=sigma2, atoms=tuple(atoms))


def rel(a, b):
    return abs(a - b) / abs(b)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

import pytest

from qhist import build_from_amplitudes, make_appendix_b, make_hopper, make_three_slit
from qhist.numerics import parse_amplitude

# h1..h8 of the two-site hopper, read right to left (first step rightmost)
HOPPER_AMPLITUDES = {
    "000": "1/(2*sqrt2)",
    "001": "-1/(2*sqrt2)",
    "010": "-1/(2*sqrt2)",
    "011": "-1/(2*sqrt2)",
    "100": "i/(2*sqrt2)",
    "101": "-i/(2*sqrt2)",
    "110": "i/(2*sqrt2)",
    "111": "i/(2*sqrt2)",
}

HOPPER_NULLS = [
    "h1+h2", "h1+h3", "h1+h4", "h5+h6", "h6+h7", "h6+h8",
    "h1+h2+h5+h6", "h1+h2+h6+h7", "h1+h2+h6+h8",
    "h1+h3+h5+h6", "h1+h3+h6+h7", "h1+h3+h6+h8",
    "h1+h4+h5+h6", "h1+h4+h6+h7", "h1+h4+h6+h8",
]

HOPPER_SIX_PAIR_COVER = ["h1+h2", "h1+h3", "h1+h4", "h5+h6", "h6+h7", "h6+h8"]

HOPPER_COEVENTS = ["h2+h3", "h2+h4", "h3+h4", "h5+h7", "h5+h8", "h7+h8"]


def exact(text):
    return parse_amplitude(text)


@pytest.fixture(scope="session")
def three_slit():
    return build_from_amplitudes(make_three_slit())


@pytest.fixture(scope="session")
def hopper():
    return build_from_amplitudes(make_hopper())


@pytest.fixture(scope="session")
def appendix_b():
    return make_appendix_b()


@pytest.fixture(scope="session")
def hopper_table(hopper):
    from qhist import classify_all

    return classify_all(hopper)

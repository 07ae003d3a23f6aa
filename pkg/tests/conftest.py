import numpy as np
import pytest

from ghzcast import BitVector


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def example_secrets():
    """The two three-bit secrets used throughout: agent_0 gets 010."""
    return (BitVector.from_text("010"), BitVector.from_text("101"))

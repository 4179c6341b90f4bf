import numpy as np
import pytest

from renalmorph.voxel import BinaryVolume


def random_volume(rng, max_dim=24, density=None, pad=0):
    """Random volume with dims 1..max_dim per axis and the given (or random) density.

    ``pad`` clears a border of that many voxels (the volume grows to keep the core).
    """
    dims = rng.integers(1, max_dim + 1, size=3)
    p = rng.uniform(0.05, 0.95) if density is None else density
    core = rng.random(tuple(dims[::-1])) < p
    if pad:
        core = np.pad(core, pad)
    return BinaryVolume(core)


def random_volumes(seed, count, **kw):
    rng = np.random.default_rng(seed)
    return [random_volume(rng, **kw) for _ in range(count)]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed again in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)

from    types import SimpleNamespace

import  numpy as np
import  pytest

from    multipathga import spectral
from    multipathga.error_fn import ParamVector
from    multipathga.signal_synth import ChirpSpec, MultipathChannel, apply_channel, generate_chirp

TRUE_AMPLITUDES = [1.0, -0.8, 0.4]
TRUE_DELAYS = [200, 204, 220]
RECORD_LEN = 1000


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False, help='run long acceptance batches')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope='session')
def three_path():
    """Noiseless three-path record r[n] = s[n-200] - 0.8 s[n-204] + 0.4 s[n-220], n = 0 .. 999."""
    pulse = generate_chirp(ChirpSpec())
    channel = MultipathChannel(TRUE_AMPLITUDES, TRUE_DELAYS)
    received = apply_channel(pulse, channel, RECORD_LEN)
    support, R, S = spectral.prepare_support(received, pulse, 0.1)

    return SimpleNamespace(pulse=pulse,
                           channel=channel,
                           received=received,
                           support=support,
                           R=R,
                           S=S,
                           truth=ParamVector(np.array(TRUE_AMPLITUDES, dtype=complex), np.array(TRUE_DELAYS, dtype=float)))

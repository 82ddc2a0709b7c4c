import dataclasses

import numpy as np
import pytest

from wiener_imdd.channel import LinkParams, build_conv_operator, sample_cir
from wiener_imdd.sim import launch_power


@dataclasses.dataclass(frozen=True)
class Link:
    params: LinkParams
    cir: object
    op: object
    p_tx: float


def make_link(length_km=20.0):
    params = LinkParams(length=length_km)
    cir = sample_cir(params)
    op = build_conv_operator(cir, cir.M)
    op.geometry
    # launch budget of the 20 km link; back-to-back has no effective length
    p_tx = launch_power(LinkParams(), 0.1).p_tx_opt
    return Link(params, cir, op, p_tx)


@pytest.fixture(scope="session")
def link20():
    return make_link(20.0)


@pytest.fixture(scope="session")
def link_btb():
    return make_link(0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_taps(rng, M):
    return rng.standard_normal(M) + 1j * rng.standard_normal(M)

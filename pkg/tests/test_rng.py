import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from vasicek_lse.rng import MASK64, mix, splitmix64, standard_normals, uniforms


def test_splitmix_reference_values():
    # first outputs of the reference SplitMix64 generator seeded with 0
    state = 0
    out = []
    for _ in range(3):
        out.append(splitmix64(state))
        state = (state + 0x9E3779B97F4A7C15) & MASK64
    assert out == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


@given(st.integers(0, 2**64 - 1), st.integers(0, 1000), st.integers(0, 1000))
def test_mix_is_64bit_and_index_sensitive(base, h, r):
    s = mix(base, h, r)
    assert 0 <= s <= MASK64
    assert s == mix(base, h, r)
    assert s != mix(base, h, r + 1)


@given(st.integers(0, 2**64 - 1), st.integers(1, 200), st.integers(0, 200))
def test_streams_are_prefix_consistent(seed, k, extra):
    assert np.array_equal(standard_normals(seed, k), standard_normals(seed, k + extra)[:k])


def test_uniforms_open_interval():
    u = uniforms(123, 100_000)
    assert u.min() > 0.0 and u.max() < 1.0


def test_normals_are_normal():
    z = standard_normals(2024, 200_000)
    assert stats.kstest(z, "norm").statistic < 0.005
    assert np.all(np.isfinite(z))

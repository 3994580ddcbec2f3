import numpy as np
import pytest

from pcep.channel_math import DomainError
from pcep.construction import (
    OracleSizeError,
    ReliabilityVector,
    bsc_channel,
    cache_filename,
    exact_subchannel_error,
    load_reliabilities,
    polarize_channel,
    polarize_reliabilities,
    save_reliabilities,
    SymmetricDiscreteChannel,
)


def test_bsc_channel_examples():
    assert np.array_equal(bsc_channel(0.0).pairs, [[1.0, 0.0], [0.0, 1.0]])
    assert np.array_equal(bsc_channel(0.1).pairs, [[0.9, 0.1], [0.1, 0.9]])
    assert bsc_channel(0.0).error_probability() == 0.0
    assert bsc_channel(0.5).error_probability() == 0.5
    assert bsc_channel(0.1).error_probability() == pytest.approx(0.1)


def test_channel_validation():
    with pytest.raises(DomainError):
        SymmetricDiscreteChannel([(0.7, 0.1), (0.1, 0.7)])
    with pytest.raises(DomainError):
        bsc_channel(0.7)


def test_n1_spot_values():
    rv = polarize_reliabilities(0.1, 1)
    assert np.allclose(rv.bounds, [0.18, 0.10], atol=1e-9)


@pytest.mark.parametrize("n_exp", [1, 2, 3])
@pytest.mark.parametrize("p", [0.05, 0.10, 0.20])
def test_bounds_against_oracle(p, n_exp):
    rv = polarize_reliabilities(p, n_exp)
    for i in range(1 << n_exp):
        exact = exact_subchannel_error(p, n_exp, i)
        assert exact - 1e-12 <= rv.bounds[i] <= exact + 1e-6


def test_oracle_examples():
    assert exact_subchannel_error(0.1, 1, 0) == pytest.approx(0.18)
    assert exact_subchannel_error(0.1, 1, 1) == pytest.approx(0.10)
    assert all(exact_subchannel_error(0.0, 2, i) == 0.0 for i in range(4))
    with pytest.raises(OracleSizeError):
        exact_subchannel_error(0.1, 5, 0)


@pytest.mark.parametrize("n_exp", [2, 6, 10])
def test_extreme_channels(n_exp):
    assert np.all(polarize_reliabilities(0.0, n_exp).bounds == 0.0)
    assert np.allclose(polarize_reliabilities(0.5, n_exp).bounds, 0.5)


def test_polarization_fraction_grows():
    frac = []
    for n in (6, 8, 10):
        b = polarize_reliabilities(0.05, n).bounds
        frac.append(np.mean((b < 1e-3) | (b > 0.5 - 1e-3)))
    assert frac[0] < frac[1] < frac[2]


def test_bound_sum_monotone_in_p():
    sums = [polarize_reliabilities(p, 8).bounds.sum() for p in (0.01, 0.02, 0.05, 0.1, 0.2)]
    assert all(a < b for a, b in zip(sums, sums[1:]))


def test_larger_mu_tightens_total_bound():
    coarse = polarize_reliabilities(0.05, 8, mu=16).bounds
    fine = polarize_reliabilities(0.05, 8, mu=256).bounds
    assert fine.sum() <= coarse.sum()


def test_bounds_read_only():
    rv = polarize_reliabilities(0.05, 4)
    with pytest.raises(ValueError):
        rv.bounds[0] = 0.3


def test_cache_round_trip(tmp_path):
    rv = polarize_reliabilities(0.03, 7)
    path = tmp_path / cache_filename(0.03, 7, 256)
    save_reliabilities(path, rv)
    back = load_reliabilities(path)
    assert back.n_exp == 7 and back.mu == 256 and back.p == 0.03
    assert back.bounds.tobytes() == rv.bounds.tobytes()


def test_disk_cache_used(tmp_path):
    a = polarize_reliabilities(0.07, 6, cache_dir=tmp_path)
    assert len(list(tmp_path.iterdir())) == 1
    b = polarize_reliabilities(0.07, 6, cache_dir=tmp_path)
    assert np.array_equal(a.bounds, b.bounds)


def test_corrupt_cache_rejected(tmp_path):
    bad = tmp_path / "x.bin"
    bad.write_bytes(b"nope")
    with pytest.raises(ValueError):
        load_reliabilities(bad)


def test_argument_validation():
    with pytest.raises(DomainError):
        polarize_reliabilities(0.1, 0)
    with pytest.raises(DomainError):
        polarize_reliabilities(0.1, 4, mu=3)


def test_polarize_generic_channel_matches_bsc():
    ch = bsc_channel(0.08)
    assert isinstance(polarize_reliabilities(0.08, 5), ReliabilityVector)
    assert np.allclose(polarize_channel(ch, 5), polarize_reliabilities(0.08, 5).bounds)

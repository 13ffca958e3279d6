import csv
import math

import numpy as np
import pytest
from scipy import stats as sps

from qmfs_readout import (
    QubitState,
    ReadoutConfig,
    StepTooCoarse,
    empirical_error_rate,
    empirical_stats,
    measurement_stats,
    sample_records,
    write_records_csv,
)

CFG = ReadoutConfig.qmfs(0.6, nbar0=0.5, tau=2.0)


def test_same_seed_same_records():
    a = sample_records(CFG, 200, seed=7)
    b = sample_records(CFG, 200, seed=7)
    c = sample_records(CFG, 200, seed=8)
    for q in QubitState:
        assert np.array_equal(a.records[q], b.records[q])
        assert not np.array_equal(a.records[q], c.records[q])


def test_records_do_not_depend_on_partitioning():
    a = sample_records(CFG, 300, seed=3, chunk_size=300)
    b = sample_records(CFG, 300, seed=3, chunk_size=37, threads=4)
    for q in QubitState:
        assert np.array_equal(a.records[q], b.records[q])


def test_prefix_stability():
    """Trajectory i is identical whatever the ensemble size."""
    a = sample_records(CFG, 50, seed=1)
    b = sample_records(CFG, 120, seed=1)
    assert np.array_equal(a.records[QubitState.GROUND], b.records[QubitState.GROUND][:50])


@pytest.mark.parametrize("scheme", ["euler", "exact"])
def test_moments_agree_with_engine(scheme):
    ens = sample_records(CFG, 4000, seed=11, scheme=scheme)
    emp, se = empirical_stats(ens)
    ref = measurement_stats(CFG)
    for name in ("signal_ground", "signal_excited", "noise_ground", "noise_excited"):
        assert abs(getattr(emp, name) - getattr(ref, name)) < 4 * se[name]


def test_standard_errors_shrink_like_root_n():
    small = empirical_stats(sample_records(CFG, 1000, seed=5, scheme="exact"))[1]
    large = empirical_stats(sample_records(CFG, 16000, seed=5, scheme="exact"))[1]
    ratio = small["signal_ground"] / large["signal_ground"]
    assert ratio == pytest.approx(4.0, rel=0.25)


def test_records_are_gaussian():
    ens = sample_records(CFG, 3000, seed=2, scheme="exact")
    x = ens.records[QubitState.GROUND]
    z = (x - x.mean()) / x.std(ddof=1)
    assert sps.kstest(z, "norm").pvalue > 1e-3


def test_coarse_step_rejected():
    with pytest.raises(StepTooCoarse):
        sample_records(CFG, 10, dt=0.5)
    with pytest.raises(ValueError):
        sample_records(CFG, 1)
    with pytest.raises(ValueError):
        sample_records(CFG, 10, scheme="milstein")


def test_error_rate_and_binomial_se():
    cfg = ReadoutConfig.coherent(nbar0=0.7, tau=2.0)
    ens = sample_records(cfg, 3000, seed=4, scheme="exact")
    rate, se = empirical_error_rate(ens)
    expected = 0.5 * math.erfc(measurement_stats(cfg).snr / 2)
    assert abs(rate - expected) < 4 * se
    assert se == pytest.approx(math.sqrt(rate * (1 - rate) / 6000))


def test_csv_dump(tmp_path):
    ens = sample_records(CFG, 5, seed=0)
    path = tmp_path / "m.csv"
    write_records_csv(ens, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["traj_id", "qubit_state", "M"]
    assert len(rows) == 11
    assert float(rows[1][2]) == ens.records[QubitState.GROUND][0]

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kqipredict.dataset import (
    A_SIZES,
    B_SIZES,
    CSV_HEADER,
    FEATURE_NAMES,
    KB,
    MB,
    Dataset,
    KqiVector,
    LoadLevel,
    LowLayerFeatures,
    MeasurementSample,
    dumps_csv,
    filter_by_file_size,
    kfold_partition,
    load_csv,
    save_csv,
    split_holdout,
    to_matrix,
)
from kqipredict.errors import DomainError, SchemaError, ValidationError

from conftest import make_sample


def _dataset(n):
    return Dataset(tuple(make_sample(-80.0 - i * 0.1, size=1000 + i) for i in range(n)))


def test_size_constants_are_decimal():
    assert KB == 1000 and MB == 1_000_000
    assert A_SIZES == (1000, 100_000, 1_000_000, 10_000_000, 100_000_000)
    assert B_SIZES == (10_000, 500_000, 5_000_000, 20_000_000)


def test_header_only_file_gives_empty_dataset(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text(",".join(CSV_HEADER) + "\n")
    assert len(load_csv(p)) == 0


def test_empty_dataset_saves_header_only(tmp_path):
    p = tmp_path / "d.csv"
    save_csv(Dataset(()), p)
    assert p.read_text() == ",".join(CSV_HEADER) + "\n"


def test_negative_file_size_cites_row(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text(",".join(CSV_HEADER) + "\n-90,-10.8,-62.2,10,none,-5,0.1,1,0.2\n")
    with pytest.raises(ValidationError, match="row 1"):
        load_csv(p)


def test_wrong_header_is_schema_error(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(SchemaError):
        load_csv(p)


@pytest.mark.parametrize(
    "row",
    [
        "-90,-10.8,-62.2,10,heavy,1000,0.1,1,0.2",  # unknown load token
        "-90,-10.8,-62.2,10,none,1000,0.1,-1,0.2",  # negative throughput
        "-90,-10.8,-62.2,10,none,1000,0.3,1,0.2",  # tftd below iftd
        "-90,-10.8,-62.2,0,none,1000,0.1,1,0.2",  # zero bandwidth
        "-90,-10.8,-62.2,10,none,1000,0.1,1",  # short row
        "-90,-10.8,-62.2,10,none,1.5e3x,0.1,1,0.2",  # garbage number
    ],
)
def test_invalid_rows_rejected(tmp_path, row):
    p = tmp_path / "d.csv"
    p.write_text(",".join(CSV_HEADER) + "\n" + row + "\n")
    with pytest.raises(ValidationError):
        load_csv(p)


def test_double_round_trip_is_byte_identical(tmp_path, small_campaign):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    save_csv(small_campaign, a)
    loaded = load_csv(a)
    assert loaded == small_campaign
    save_csv(loaded, b)
    assert a.read_bytes() == b.read_bytes()


_real = st.floats(-120, -40, allow_nan=False)


@st.composite
def samples(draw):
    rsrp = draw(_real)
    rssi = rsrp + draw(st.floats(0, 40))
    rsrq = -draw(st.floats(1e-3, 30))
    bw = draw(st.sampled_from([1.4, 5.0, 10.0, 15.0, 20.0]))
    load = draw(st.sampled_from(list(LoadLevel)))
    size = draw(st.integers(1, 10**9))
    iftd = draw(st.floats(1e-6, 10))
    tftd = iftd + draw(st.floats(1e-9, 1e4))
    fthr = draw(st.floats(1e-6, 1e4))
    return MeasurementSample(LowLayerFeatures(rsrp, rsrq, rssi, bw, load, size), KqiVector(iftd, fthr, tftd))


@settings(max_examples=50, deadline=None)
@given(st.lists(samples(), max_size=20))
def test_csv_round_trip_property(tmp_path_factory, rows):
    p = tmp_path_factory.mktemp("rt") / "d.csv"
    d = Dataset(tuple(rows))
    save_csv(d, p)
    assert load_csv(p) == d
    assert p.read_text() == dumps_csv(d)


def test_holdout_sizes():
    train, test = split_holdout(_dataset(10), 0.7, seed=3)
    assert (len(train), len(test)) == (7, 3)
    assert set(train.samples).isdisjoint(test.samples)


def test_holdout_full_fraction_keeps_everything():
    d = _dataset(10)
    train, test = split_holdout(d, 1.0, seed=3)
    assert len(test) == 0 and sorted(map(id, train)) == sorted(map(id, d))


def test_holdout_deterministic():
    d = _dataset(25)
    assert split_holdout(d, 0.7, 9) == split_holdout(d, 0.7, 9)


@pytest.mark.parametrize("fraction", [0.0, -0.1, 1.5])
def test_holdout_fraction_domain(fraction):
    with pytest.raises(DomainError):
        split_holdout(_dataset(4), fraction, 0)


@pytest.mark.parametrize(
    "n,k,sizes", [(10, 5, [2] * 5), (9000, 5, [1800] * 5), (7, 5, [2, 2, 1, 1, 1])]
)
def test_kfold_sizes(n, k, sizes):
    folds = kfold_partition(_dataset(n) if n < 100 else Dataset((make_sample(),) * n), k, seed=1)
    assert sorted(folds.fold_sizes(), reverse=True) == sizes


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(2, 10), st.integers(0, 2**32))
def test_kfold_partition_property(n, k, seed):
    if k > n:
        with pytest.raises(DomainError):
            kfold_partition(Dataset((make_sample(),) * n), k, seed)
        return
    folds = kfold_partition(Dataset((make_sample(),) * n), k, seed)
    union = np.concatenate([folds.test_indices(i) for i in range(k)])
    assert sorted(union) == list(range(n))
    sizes = folds.fold_sizes()
    assert max(sizes) - min(sizes) <= 1
    for i in range(k):
        assert len(np.intersect1d(folds.test_indices(i), folds.train_indices(i))) == 0


def test_filter_by_file_size(small_campaign):
    a = filter_by_file_size(small_campaign, A_SIZES)
    b = filter_by_file_size(small_campaign, B_SIZES)
    assert {s.features.file_size_bytes for s in a} == set(A_SIZES)
    assert {s.features.file_size_bytes for s in b} == set(B_SIZES)
    assert len(filter_by_file_size(small_campaign, ())) == 0


def test_to_matrix_single_column(tiny_dataset):
    X, y = to_matrix(tiny_dataset.subset([0]), ["bandwidth_mhz"], "tftd_s")
    assert X.shape == (1, 1) and X[0, 0] == 5.0 and y[0] == 0.2


def test_to_matrix_full_extraction(tiny_dataset):
    X, y = to_matrix(tiny_dataset, FEATURE_NAMES, "fthr_mbps")
    for i, s in enumerate(tiny_dataset):
        f = s.features
        expected = [f.rsrp_dbm, f.rsrq_db, f.rssi_dbm, f.bandwidth_mhz, int(f.load_level), f.file_size_bytes]
        assert X[i].tolist() == expected
    assert X[2, 4] == 2.0  # medium
    assert y.tolist() == [1.0, 2.0, 3.0]


def test_to_matrix_rejects_unknown_names(tiny_dataset):
    with pytest.raises(DomainError):
        to_matrix(tiny_dataset, ["bogus"], "tftd_s")
    with pytest.raises(DomainError):
        to_matrix(tiny_dataset, ["rsrp_dbm"], "bogus")


def test_load_level_tokens():
    assert [l.token for l in LoadLevel] == ["none", "low", "medium"]
    assert LoadLevel.parse("MEDIUM") is LoadLevel.MEDIUM
    assert math.isclose(float(LoadLevel.MEDIUM), 2.0)

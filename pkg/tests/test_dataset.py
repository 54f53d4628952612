import numpy as np
import pytest

from mimic_audit.config import SplitConfig
from mimic_audit.dataset import (
    DatasetManifest,
    LabeledSample,
    Scaler,
    apply_scaler,
    build_manifest,
    fit_scaler,
    manifest_arrays,
    parse_label,
    read_feature_csv,
    render_feature_csv,
    split,
    stratified_holdout,
    write_feature_csv,
)
from mimic_audit.errors import (
    DuplicateIndexError,
    FeatureCsvError,
    InsufficientDataError,
    NamingConventionError,
    PathAccessError,
    StratificationError,
)
from mimic_audit.features import FeatureVector
from mimic_audit.schema import CSV_COLUMNS, Label

from conftest import feature_manifest, gaussian_features


def labels_only(n_real: int, n_faked: int) -> DatasetManifest:
    codes = ["r"] * n_real + ["f"] * n_faked
    samples = [LabeledSample(i, parse_label(f"{i:04d}{c}.wav")[1], f"{i:04d}{c}.wav") for i, c in enumerate(codes, start=1)]
    return DatasetManifest(tuple(samples))


@pytest.mark.parametrize("name,expected", [
    ("0001f.wav", (1, Label.FAKED)),
    ("0042r.wav", (42, Label.REAL)),
    ("9999f_take2.wav", (9999, Label.FAKED)),
    ("/some/dir/0007r.wav", (7, Label.REAL)),
])
def test_parse_label(name, expected):
    assert parse_label(name) == expected


@pytest.mark.parametrize("name", ["0001", "abcdf.wav", "0001x.wav", "0001R.wav", "12.wav"])
def test_parse_label_rejects_bad_names(name):
    with pytest.raises(NamingConventionError):
        parse_label(name)


def test_build_manifest_orders_and_counts(tmp_path):
    for name in ("0003f.wav", "0001r.wav", "0002f.WAV", "notes.txt"):
        (tmp_path / name).write_bytes(b"")
    manifest = build_manifest(str(tmp_path))
    assert [s.index for s in manifest] == [1, 2, 3]
    assert manifest.counts == {Label.REAL: 1, Label.FAKED: 2}
    assert manifest.labels.tolist() == [0, 1, 1]


def test_build_manifest_of_empty_directory(tmp_path):
    assert len(build_manifest(str(tmp_path))) == 0


def test_build_manifest_rejects_duplicate_index(tmp_path):
    (tmp_path / "0001r.wav").write_bytes(b"")
    (tmp_path / "0001f.wav").write_bytes(b"")
    with pytest.raises(DuplicateIndexError):
        build_manifest(str(tmp_path))


def test_build_manifest_rejects_bad_name(tmp_path):
    (tmp_path / "badname.wav").write_bytes(b"")
    with pytest.raises(NamingConventionError):
        build_manifest(str(tmp_path))


def test_build_manifest_missing_directory(tmp_path):
    with pytest.raises(PathAccessError):
        build_manifest(str(tmp_path / "nope"))


def test_split_of_933_samples():
    train, test = split(labels_only(466, 467))
    assert len(test) == 187
    assert test.counts == {Label.REAL: 93, Label.FAKED: 94}
    assert len(train) == 746


def test_split_of_1127_samples():
    _, test = split(labels_only(563, 564))
    assert len(test) == 226


def test_split_is_deterministic_and_disjoint():
    manifest = labels_only(120, 80)
    cfg = SplitConfig(seed=7)
    train_a, test_a = split(manifest, cfg)
    train_b, test_b = split(manifest, cfg)
    assert [s.index for s in test_a] == [s.index for s in test_b]
    train_ids, test_ids = {s.index for s in train_a}, {s.index for s in test_a}
    assert not train_ids & test_ids
    assert train_ids | test_ids == set(range(1, 201))


def test_split_depends_on_seed():
    manifest = labels_only(120, 80)
    _, a = split(manifest, SplitConfig(seed=1))
    _, b = split(manifest, SplitConfig(seed=2))
    assert [s.index for s in a] != [s.index for s in b]


def test_holdout_keeps_class_ratio():
    y = np.array([0] * 300 + [1] * 100)
    keep, hold = stratified_holdout(y, 0.25, seed=3)
    assert len(hold) == 100
    assert np.count_nonzero(y[hold] == 0) == 75
    assert np.count_nonzero(y[hold] == 1) == 25
    assert len(keep) + len(hold) == len(y)


def test_holdout_needs_both_labels():
    with pytest.raises(StratificationError):
        stratified_holdout(np.zeros(20, dtype=int), 0.2, seed=0)
    with pytest.raises(StratificationError):
        split(labels_only(0, 10))


@pytest.mark.parametrize("fraction", [0.0, 1.0])
def test_holdout_rejects_degenerate_fraction(fraction):
    with pytest.raises(StratificationError):
        stratified_holdout(np.array([0, 1, 0, 1]), fraction, seed=0)


def test_scaler_standardizes_training_data(rng):
    x = rng.normal(5.0, 3.0, size=(200, 4))
    scaler = fit_scaler(x)
    z = scaler.transform(x)
    np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(z.std(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(scaler.inverse(z), x, atol=1e-12)


def test_scaler_floors_constant_columns():
    scaler = fit_scaler(np.array([[1.0, 2.0], [3.0, 2.0]]))
    assert scaler.mean.tolist() == [2.0, 2.0]
    assert scaler.std[1] == 1e-12
    np.testing.assert_allclose(scaler.transform(np.array([3.0, 2.0])), [1.0, 0.0])


def test_scaler_needs_two_rows():
    with pytest.raises(InsufficientDataError):
        fit_scaler(np.ones((1, 3)))


def test_scaler_accepts_feature_vectors():
    rows = [FeatureVector(np.full(26, float(i))) for i in range(3)]
    scaler = fit_scaler(rows)
    np.testing.assert_allclose(apply_scaler(scaler, rows[2]), np.full(26, np.sqrt(1.5)))
    np.testing.assert_array_equal(Scaler.from_dict(scaler.to_dict()).std, scaler.std)


def test_feature_csv_round_trip(tmp_path):
    x, y = gaussian_features(12, seed=5)
    manifest = feature_manifest(x, y)
    path = tmp_path / "features.csv"
    write_feature_csv(manifest, str(path))

    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.split(b"\n", 1)[0].decode() == ",".join(CSV_COLUMNS)

    back = read_feature_csv(str(path))
    bx, by = manifest_arrays(back)
    np.testing.assert_array_equal(bx, x)
    np.testing.assert_array_equal(by, y)
    assert [s.filename for s in back] == [s.filename for s in manifest]


def test_header_only_csv_is_empty_manifest(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text(",".join(CSV_COLUMNS) + "\n")
    assert len(read_feature_csv(str(path))) == 0


def _write_rows(tmp_path, rows):
    path = tmp_path / "bad.csv"
    path.write_text("\n".join([",".join(CSV_COLUMNS)] + rows) + "\n")
    return str(path)


def _row(name: str, label: str, cell: str = "0.5") -> str:
    return ",".join([name] + [cell] * 26 + [label])


@pytest.mark.parametrize("rows,bad_row", [
    ([_row("0001r.wav", "real"), _row("0002f.wav", "maybe")], 3),
    ([_row("0001r.wav", "real", "abc")], 2),
    ([_row("0001r.wav", "real"), _row("0002f.wav", "faked") + ",extra"], 3),
    ([_row("0001r.wav", "faked")], 2),
    ([_row("oops.wav", "real")], 2),
    ([",".join(["0001r.wav"] + ["0.5"] * 25 + ["real"])], 2),
    ([_row("0001r.wav", "real"), ",".join(["0002f.wav"] + ["0.5"] * 25 + ["faked"])], 3),
])
def test_bad_rows_name_their_row(tmp_path, rows, bad_row):
    with pytest.raises(FeatureCsvError) as err:
        read_feature_csv(_write_rows(tmp_path, rows))
    assert err.value.row == bad_row


def test_short_row_reports_its_field_count(tmp_path):
    short = ",".join(["0001r.wav"] + ["0.5"] * 25 + ["real"])
    with pytest.raises(FeatureCsvError) as err:
        read_feature_csv(_write_rows(tmp_path, [short]))
    assert str(err.value) == "row 2: expected 28 columns, got 27"


def test_bad_header_and_empty_file(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("filename,zcr,label\n")
    with pytest.raises(FeatureCsvError) as err:
        read_feature_csv(str(path))
    assert err.value.row == 1
    path.write_text("")
    with pytest.raises(FeatureCsvError):
        read_feature_csv(str(path))


def test_label_cells_are_normalized(tmp_path):
    back = read_feature_csv(_write_rows(tmp_path, [_row("0001f.wav", " Faked ")]))
    assert back.samples[0].label is Label.FAKED


def test_missing_feature_file(tmp_path):
    with pytest.raises(PathAccessError):
        read_feature_csv(str(tmp_path / "missing.csv"))


def test_render_requires_features():
    with pytest.raises(InsufficientDataError):
        render_feature_csv(labels_only(1, 1))
    with pytest.raises(InsufficientDataError):
        manifest_arrays(labels_only(1, 1))

import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from colorsearch import survey
from colorsearch.errors import DataError, EmptyDatasetError
from colorsearch.survey import (
    ColorNameDataset, Stage, filter_by_frequency, parse_survey,
    remove_outliers, resample_smote, restrict_labels,
)

import oracles


def make_dataset(rows, stage=Stage.RAW):
    rgb = np.asarray([r[:3] for r in rows], dtype=np.uint8)
    labels = [r[3] for r in rows]
    return ColorNameDataset.from_arrays(rgb, labels, stage)


# --- parsing -----------------------------------------------------------------

def test_parse_simple_row():
    d, malformed = parse_survey(io.StringIO('174,199,232,"light blue"\n'))
    assert malformed == 0
    sample = next(d.samples())
    assert (sample.r, sample.g, sample.b, sample.label) == (174, 199, 232, "light blue")
    assert d.stage is Stage.RAW


def test_parse_skips_out_of_range_channel():
    d, malformed = parse_survey(io.StringIO('300,0,0,"red"\n1,2,3,"red"\n'))
    assert malformed == 1
    assert len(d) == 1


def test_parse_tab_delimited_and_normalization():
    d, malformed = parse_survey(io.StringIO('10\t20\t30\t"  Light   BLUE "\n'))
    assert malformed == 0
    assert next(d.samples()).label == "light blue"


def test_parse_label_with_comma_quoted():
    d, _ = parse_survey(io.StringIO('1,2,3,"red, sort of"\n'))
    assert next(d.samples()).label == "red, sort of"


def test_parse_counts_malformed_variants():
    text = 'a,b,c,d\n1,2,3\n1,2,3,""\n5,5,5,"ok"\n'
    d, malformed = parse_survey(io.StringIO(text))
    assert malformed == 3
    assert len(d) == 1


def test_parse_empty_source_is_error():
    with pytest.raises(EmptyDatasetError):
        parse_survey(io.StringIO(""))
    with pytest.raises(EmptyDatasetError):
        parse_survey(io.StringIO('900,0,0,"nope"\n'))


def test_parse_missing_file_is_oserror(tmp_path):
    with pytest.raises(OSError):
        parse_survey(tmp_path / "nope.csv")


# --- frequency filter ---------------------------------------------------------

def test_filter_tau_one_keeps_everything(raw_survey):
    filtered = filter_by_frequency(raw_survey, tau=1.0)
    assert len(filtered) == len(raw_survey)
    assert set(filtered.vocab) == set(raw_survey.vocab)


def test_filter_toy_counts():
    rows = [(i, 0, 0, "a") for i in range(6)]
    rows += [(i, 0, 0, "b") for i in range(3)]
    rows += [(0, 0, 0, "c")]
    filtered = filter_by_frequency(make_dataset(rows), tau=0.6)
    assert set(filtered.vocab) == {"a"}
    assert len(filtered) == 6


def test_filter_requires_raw_ordering():
    d = make_dataset([(0, 0, 0, "a")], stage=Stage.FILTERED)
    with pytest.raises(ValueError):
        filter_by_frequency(d, tau=0.5)


@pytest.mark.parametrize("tau", [0.0, -0.5, 1.2])
def test_filter_bad_tau(raw_survey, tau):
    with pytest.raises(ValueError):
        filter_by_frequency(raw_survey, tau)


@settings(max_examples=60, deadline=None)
@given(
    counts=st.dictionaries(
        st.text(alphabet="abcdefg", min_size=1, max_size=2),
        st.integers(min_value=1, max_value=40),
        min_size=1, max_size=7,
    ),
    tau=st.floats(min_value=0.05, max_value=1.0),
)
def test_filter_coverage_minimality(counts, tau):
    rows = []
    for label, cnt in counts.items():
        rows += [(1, 2, 3, label)] * cnt
    d = make_dataset(rows)
    filtered = filter_by_frequency(d, tau)
    kept = filtered.label_counts
    total = len(d)
    share = sum(kept.values()) / total
    assert share >= tau
    # dropping the least frequent kept label must fall below tau
    least = min(kept.items(), key=lambda kv: (kv[1], kv[0]))
    # resolve count ties the way the filter sorts: by descending count then name
    ordered = sorted(kept.items(), key=lambda kv: (-kv[1], kv[0]))
    last_label, last_count = ordered[-1]
    assert (sum(kept.values()) - last_count) / total < tau


# --- outlier removal -----------------------------------------------------------

def test_outliers_identical_points_all_kept():
    rows = [(7, 7, 7, "x")] * 100
    cleaned = remove_outliers(make_dataset(rows, Stage.FILTERED), k=5, radius=1.0)
    assert len(cleaned) == 100


def test_outliers_lone_far_point_removed():
    rows = [(0, 0, 0, "x")] * 10 + [(255, 255, 255, "x")]
    cleaned = remove_outliers(make_dataset(rows, Stage.FILTERED), k=3, radius=10.0)
    assert len(cleaned) == 10
    assert not any(s.r == 255 for s in cleaned.samples())


def test_outliers_small_class_untouched_with_warning(caplog):
    rows = [(0, 0, 0, "tiny")] * 3 + [(50, 50, 50, "big")] * 20
    with caplog.at_level("WARNING"):
        cleaned = remove_outliers(make_dataset(rows, Stage.FILTERED), k=5, radius=2.0)
    assert cleaned.label_counts["tiny"] == 3
    assert any("tiny" in r.message for r in caplog.records)


def test_outliers_only_same_class_counts():
    # the lone red point sits among blues, which must not rescue it
    rows = [(100, 100, 100, "blue")] * 20
    rows += [(100, 100, 101, "red")]
    rows += [(0, 0, 0, "red")] * 7
    cleaned = remove_outliers(make_dataset(rows, Stage.FILTERED), k=3, radius=5.0)
    assert cleaned.label_counts == {"blue": 20, "red": 7}


@settings(max_examples=40, deadline=None)
@given(
    pts=st.lists(
        st.tuples(st.integers(0, 40), st.integers(0, 40), st.integers(0, 40)),
        min_size=6, max_size=60,
    ),
    k=st.integers(min_value=1, max_value=4),
    radius=st.floats(min_value=1.0, max_value=20.0),
)
def test_outliers_match_brute_force(pts, k, radius):
    if len(pts) <= k:
        return
    rows = [(r, g, b, "only") for r, g, b in pts]
    d = make_dataset(rows, Stage.FILTERED)
    expected = oracles.outlier_keep_mask(np.asarray(pts, dtype=float), k, radius)
    if not expected.any():
        with pytest.raises(EmptyDatasetError):
            remove_outliers(d, k=k, radius=radius)
        return
    cleaned = remove_outliers(d, k=k, radius=radius)
    assert np.array_equal(cleaned.rgb, d.rgb[expected])


def test_outliers_idempotent_on_clustered_data():
    rng = np.random.default_rng(3)
    cluster = rng.normal(100, 2, size=(80, 3)).astype(int)
    stragglers = np.asarray([[0, 0, 0], [255, 255, 255], [0, 255, 0]])
    pts = np.clip(np.concatenate([cluster, stragglers]), 0, 255)
    rows = [(int(r), int(g), int(b), "c") for r, g, b in pts]
    once = remove_outliers(make_dataset(rows, Stage.FILTERED), k=4, radius=8.0)
    again = remove_outliers(
        ColorNameDataset.from_arrays(once.rgb, [s.label for s in once.samples()], Stage.FILTERED),
        k=4, radius=8.0,
    )
    assert np.array_equal(once.rgb, again.rgb)


# --- SMOTE ---------------------------------------------------------------------

def test_smote_balanced_input_unchanged(raw_survey):
    rows = [(i, i, i, "a") for i in range(10)] + [(i, 0, 0, "b") for i in range(10)]
    d = make_dataset(rows, Stage.CLEANED)
    out = resample_smote(d, k=3, seed=1)
    assert np.array_equal(out.rgb, d.rgb)
    assert np.array_equal(out.label_codes, d.label_codes)


def test_smote_balances_and_interpolates_on_segments():
    rows = [(10, 10, 10, "a"), (20, 20, 20, "a"), (30, 30, 30, "a"), (40, 40, 40, "a"),
            (100, 0, 0, "b"), (140, 0, 0, "b")]
    out = resample_smote(make_dataset(rows, Stage.CLEANED), k=5, seed=7)
    counts = out.label_counts
    assert counts == {"a": 4, "b": 4}
    synth = out.rgb[len(rows):]
    for r, g, b in synth:
        assert g == 0 and b == 0
        assert 100 <= r <= 140  # on the segment between the two b points


def test_smote_identical_minority_points_degenerate():
    rows = [(5, 5, 5, "maj")] * 6 + [(77, 77, 77, "min")] * 2
    out = resample_smote(make_dataset(rows, Stage.CLEANED), k=3, seed=0)
    minority = out.rgb[out.label_codes == list(out.vocab).index("min")]
    assert len(minority) == 6
    assert np.all(minority == 77)


def test_smote_single_sample_class_duplicates_with_warning(caplog):
    rows = [(5, 5, 5, "maj")] * 4 + [(200, 10, 10, "solo")]
    with caplog.at_level("WARNING"):
        out = resample_smote(make_dataset(rows, Stage.CLEANED), k=3, seed=0)
    assert out.label_counts["solo"] == 4
    assert any("solo" in r.message for r in caplog.records)


def test_smote_deterministic_per_seed():
    rows = [(i * 10, 0, 0, "a") for i in range(9)] + [(0, 200, 0, "b"), (0, 240, 40, "b")]
    d = make_dataset(rows, Stage.CLEANED)
    one = resample_smote(d, k=2, seed=42)
    two = resample_smote(d, k=2, seed=42)
    other = resample_smote(d, k=2, seed=43)
    assert np.array_equal(one.rgb, two.rgb)
    assert not np.array_equal(one.rgb, other.rgb)


@settings(max_examples=30, deadline=None)
@given(
    class_sizes=st.lists(st.integers(min_value=2, max_value=12), min_size=2, max_size=4),
    seed=st.integers(min_value=0, max_value=1000),
)
def test_smote_equalizes_class_counts(class_sizes, seed):
    rng = np.random.default_rng(seed)
    rows = []
    for ci, size in enumerate(class_sizes):
        base = rng.integers(0, 200, size=3)
        for _ in range(size):
            p = np.clip(base + rng.integers(-10, 10, size=3), 0, 255)
            rows.append((int(p[0]), int(p[1]), int(p[2]), f"c{ci}"))
    out = resample_smote(make_dataset(rows, Stage.CLEANED), k=3, seed=seed)
    counts = set(out.label_counts.values())
    assert counts == {max(class_sizes)}


def test_smote_synthetics_lie_on_neighbor_segments():
    rng = np.random.default_rng(5)
    pts = rng.integers(40, 200, size=(8, 3))
    rows = [(int(r), int(g), int(b), "min") for r, g, b in pts]
    rows += [(0, 0, 0, "maj")] * 30
    d = make_dataset(rows, Stage.CLEANED)
    out = resample_smote(d, k=3, seed=9)
    synth = out.rgb[len(rows):].astype(float)
    originals = pts.astype(float)
    for s in synth:
        best = np.inf
        for a in originals:
            for b in originals:
                ab = b - a
                denom = float(ab @ ab)
                t = 0.0 if denom == 0 else float(np.clip((s - a) @ ab / denom, 0, 1))
                best = min(best, float(np.linalg.norm(s - (a + t * ab))))
        # rounding moves an on-segment point at most 0.5 per channel
        assert best <= np.sqrt(3) * 0.5 + 1e-9


# --- restriction -----------------------------------------------------------------

def test_restrict_identity():
    rows = [(1, 1, 1, "red"), (2, 2, 2, "blue")]
    d = make_dataset(rows, Stage.RESAMPLED)
    out = restrict_labels(d, {"red", "blue"})
    assert len(out) == 2 and out.stage is Stage.RESTRICTED


def test_restrict_single_label():
    rows = [(1, 1, 1, "red"), (2, 2, 2, "blue"), (3, 3, 3, "red")]
    out = restrict_labels(make_dataset(rows, Stage.RESAMPLED), {"red"})
    assert out.label_counts == {"red": 2}


def test_restrict_empty_intersection_is_error():
    rows = [(1, 1, 1, "chartreuse")]
    with pytest.raises(EmptyDatasetError):
        restrict_labels(make_dataset(rows, Stage.RESAMPLED), {"red"})


def test_restrict_to_basic_labels(prepared_survey):
    assert set(prepared_survey.vocab) <= survey.BERLIN_KAY_LABELS
    assert prepared_survey.stage is Stage.RESTRICTED


# --- pipeline-wide properties ------------------------------------------------------

def test_pipeline_monotonicity(raw_survey):
    filtered = filter_by_frequency(raw_survey, tau=0.9)
    assert len(filtered) <= len(raw_survey)
    cleaned = remove_outliers(filtered, k=5, radius=8.0)
    assert len(cleaned) <= len(filtered)
    resampled = resample_smote(cleaned, k=5, seed=11)
    before = cleaned.label_counts
    after = resampled.label_counts
    assert all(after[label] >= count for label, count in before.items())
    assert len(set(after.values())) == 1


def test_pipeline_deterministic(raw_survey):
    def run():
        d = filter_by_frequency(raw_survey, tau=0.8)
        d = remove_outliers(d, k=4, radius=8.0)
        d = resample_smote(d, k=5, seed=23)
        return restrict_labels(d, survey.BERLIN_KAY_LABELS)

    one, two = run(), run()
    assert np.array_equal(one.rgb, two.rgb)
    assert np.array_equal(one.label_codes, two.label_codes)
    assert one.vocab == two.vocab


def test_datasets_are_immutable(raw_survey):
    with pytest.raises(ValueError):
        raw_survey.rgb[0, 0] = 1


# --- persistence ---------------------------------------------------------------------

def test_save_load_roundtrip(tmp_path, prepared_survey):
    path = tmp_path / "d.csv"
    survey.save_dataset(prepared_survey, path, params={"tau": 0.9, "seed": 11})
    loaded, params = survey.load_dataset(path)
    assert params == {"seed": "11", "tau": "0.9"}
    assert loaded.stage is Stage.RESTRICTED
    assert np.array_equal(loaded.rgb, prepared_survey.rgb)
    assert loaded.vocab == prepared_survey.vocab


def test_load_rejects_wrong_header(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("r,g,b,label\n1,2,3,red\n")
    with pytest.raises(DataError):
        survey.load_dataset(path)


def test_load_rejects_row_count_mismatch(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text('# colorsearch-dataset v1 stage=raw rows=5\n1,2,3,"red"\n')
    with pytest.raises(DataError):
        survey.load_dataset(path)

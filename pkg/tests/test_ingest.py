import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dimaudit.errors import DataError, SchemaError
from dimaudit.ingest import (
    RatingTable,
    Schema,
    aggregate_players,
    describe,
    filter_complete,
    load_table,
)
from dimaudit.linalg import standardize

from conftest import as_matrix

SCHEMA = Schema(id_column="pid", rating_column="ovr", attributes=("pace", "shot"), season_column="season")


def write(tmp_path, text, name="t.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_three_rows(tmp_path):
    path = write(tmp_path, "pid,season,ovr,pace,shot\n1,2010,60,50,70\n2,2010,61,55,72\n3,2011,62,58,71\n")
    table = load_table(path, SCHEMA)
    assert len(table) == 3
    assert table.attribute_names == ("pace", "shot")
    assert table.player_ids == ["1", "2", "3"]
    np.testing.assert_array_equal(table.attributes[1], [55, 72])


def test_na_cell_becomes_missing(tmp_path):
    path = write(tmp_path, "pid,season,ovr,pace,shot\n1,2010,60,NA,70\n2,2010,61,55,\n")
    table = load_table(path, SCHEMA)
    assert math.isnan(table.attributes[0, 0])
    assert math.isnan(table.attributes[1, 1])
    assert table.attributes[0, 1] == 70


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_table(tmp_path / "nope.csv", SCHEMA)


def test_header_mismatch(tmp_path):
    path = write(tmp_path, "pid,season,ovr,pace\n1,2010,60,50\n")
    with pytest.raises(SchemaError, match="shot"):
        load_table(path, SCHEMA)


def test_duplicate_attribute_columns(tmp_path):
    path = write(tmp_path, "pid,season,ovr,pace,pace,shot\n1,2010,60,50,50,70\n")
    with pytest.raises(SchemaError, match="duplicate"):
        load_table(path, SCHEMA)
    with pytest.raises(SchemaError, match="duplicate"):
        Schema(attributes=("pace", "pace"))


def test_empty_player_id_rejected(tmp_path):
    path = write(tmp_path, "pid,season,ovr,pace,shot\n,2010,60,50,70\n")
    with pytest.raises(DataError):
        load_table(path, SCHEMA)


def table(ids, attrs, overall=None):
    attrs = np.asarray(attrs, dtype=float)
    overall = np.asarray(overall if overall is not None else attrs[:, 0], dtype=float)
    return RatingTable(list(ids), [None] * len(ids), overall, attrs, tuple(f"a{j}" for j in range(attrs.shape[1])))


def test_aggregate_mean_of_two_seasons():
    out = aggregate_players(table(["x", "x"], [[60.0], [70.0]]))
    assert out.player_ids == ["x"]
    assert out.attributes[0, 0] == 65.0


def test_aggregate_single_season_unchanged():
    t = table(["x", "y", "y"], [[61.3, 1.0], [50.0, 2.0], [52.0, 4.0]])
    out = aggregate_players(t)
    np.testing.assert_array_equal(out.attributes[0], [61.3, 1.0])
    np.testing.assert_array_equal(out.attributes[1], [51.0, 3.0])


def test_aggregate_ignores_missing_cells():
    # oracle: mean over the non-missing cells, by hand (60 + 70) / 2
    out = aggregate_players(table(["x"] * 3, [[60.0], [np.nan], [70.0]]))
    assert out.attributes[0, 0] == 65.0


def test_aggregate_missing_everywhere_stays_missing():
    out = aggregate_players(table(["x", "x"], [[np.nan, 1.0], [np.nan, 3.0]]))
    assert math.isnan(out.attributes[0, 0])
    assert out.attributes[0, 1] == 2.0


def test_aggregate_empty_table():
    with pytest.raises(DataError):
        aggregate_players(table([], np.zeros((0, 2))))


rows = st.lists(
    st.tuples(
        st.sampled_from("abcde"),
        st.one_of(st.none(), st.floats(0, 100)),
        st.one_of(st.none(), st.floats(0, 100)),
    ),
    min_size=1,
    max_size=30,
)


@given(rows)
@settings(max_examples=60, deadline=None)
def test_aggregate_is_idempotent(data):
    ids = [r[0] for r in data]
    attrs = [[np.nan if v is None else v for v in r[1:]] for r in data]
    once = aggregate_players(table(ids, attrs, overall=[50.0] * len(ids)))
    twice = aggregate_players(once)
    assert once.player_ids == twice.player_ids
    np.testing.assert_array_equal(once.attributes, twice.attributes)
    np.testing.assert_array_equal(once.overall, twice.overall)


def test_filter_listwise_deletion():
    t = RatingTable(
        ["a", "b", "c", "d"],
        [None] * 4,
        np.array([60.0, 61.0, 62.0, 63.0]),
        np.array([[1.0, 2.0, 9.0], [2.0, np.nan, 9.0], [3.0, 5.0, 9.0], [4.0, 1.0, 9.0]]),
        ("a0", "a1", "a2"),
    )
    m = filter_complete(t, ["a1", "a0"])
    assert m.n == 3
    assert m.attribute_names == ("a1", "a0")
    assert m.player_ids == ("a", "c", "d")
    assert not np.isnan(m.values).any()


def test_filter_small_example_from_contract():
    # 3 rows, one missing a required cell -> n = 2, which violates n > p for p = 2
    t = table(["a", "b", "c"], [[1.0, 2.0], [np.nan, 3.0], [4.0, 4.0]])
    with pytest.raises(DataError, match="n > p"):
        filter_complete(t, ["a0", "a1"])
    t1 = table(["a", "b", "c", "d"], [[1.0, 2.0], [np.nan, 3.0], [4.0, 4.0], [2.0, 7.0]])
    assert filter_complete(t1, ["a0", "a1"]).n == 3


def test_filter_drops_missing_overall():
    t = table(["a", "b", "c", "d"], [[1.0, 2.0], [2.0, 3.0], [4.0, 4.0], [2.0, 7.0]],
              overall=[1.0, np.nan, 2.0, 3.0])
    assert filter_complete(t, ["a0", "a1"]).player_ids == ("a", "c", "d")


def test_filter_empty_required():
    with pytest.raises(DataError):
        filter_complete(table(["a", "b", "c"], np.ones((3, 2))), [])


def test_describe_simple_column():
    m = as_matrix([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]], overall=[1.0, 2.0, 3.0])
    stats = describe(m)
    col = stats["a0"]
    assert (col.mean, col.min, col.max, col.count) == (2.0, 1.0, 3.0, 3)
    assert col.sd == pytest.approx(1.0)  # sample sd of {1, 2, 3}
    assert stats["a1"].sd == 0.0
    assert stats.to_dict()["sd_denominator"] == "n-1"


def test_describe_standardized_means_zero():
    rng = np.random.default_rng(4)
    m = as_matrix(rng.normal(60, 12, (200, 4)))
    z = standardize(m)
    stats = describe(as_matrix(z.values))
    for v in stats.variables[1:]:
        assert abs(v.mean) < 1e-10
        assert v.min <= v.mean <= v.max

import numpy as np
import pandas as pd
import pytest

from evtkit.errors import IngestError, SchemaError
from evtkit.series import Series, add_calendar, ingest_csv


def test_calendar_300_25():
    f = add_calendar(pd.DataFrame(index=range(600)))
    assert f.loc[0, ["year", "month", "day", "season"]].tolist() == [1, 1, 1, 1]
    assert f.loc[149, "season"] == 1 and f.loc[150, "season"] == 2
    assert f.loc[299, "month"] == 12 and f.loc[300, "year"] == 2


def test_complete_cases_only_uses_listed_columns():
    frame = pd.DataFrame({"y": [1.0, 2.0, 3.0, 4.0], "a": [1.0, np.nan, 3.0, 4.0], "b": [np.nan, 1.0, 1.0, 1.0]})
    s, drop = Series(frame).complete_cases(["y", "a"])
    assert s.n == 3 and drop == pytest.approx(0.25)
    with pytest.raises(SchemaError):
        Series(frame).complete_cases(["zzz"])


def test_csv_round_trip(tmp_path):
    frame = pd.DataFrame({"y": [1.5, np.nan, 3.25], "x": [0.1, 0.2, 1 / 3]})
    s = Series(frame, "y", {"truth": {"xi": 0.1}})
    path = tmp_path / "d.csv"
    s.to_csv(path)
    back = ingest_csv(path, calendar=False)
    assert back.meta["truth"] == {"xi": 0.1}
    pd.testing.assert_frame_equal(back.frame, s.frame)


def test_ingest_errors(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("y,x\n1,2\n3\n")
    with pytest.raises(IngestError, match="line 3"):
        ingest_csv(bad)
    words = tmp_path / "words.csv"
    words.write_text("y,x\n1,2\nfoo,3\n")
    with pytest.raises(IngestError, match="non-numeric"):
        ingest_csv(words)
    with pytest.raises(IngestError):
        ingest_csv(tmp_path / "missing.csv")


def test_ingest_na_and_calendar(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("y,x\n1,NA\n2,\n3,4\n")
    s = ingest_csv(p)
    assert s.missing["x"].sum() == 2
    assert "season" in s.frame.columns

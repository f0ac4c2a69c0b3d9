from datetime import date

import pytest
from hypothesis import given, strategies as st

import synth
from dowfactors import ingest
from dowfactors.errors import MalformedRow, MissingColumn, SchemaViolation

HEADER = ",".join(ingest.COLUMNS)
# first data row of the public UCI file
FIRST_ROW = "1,AA,1/7/2011,$15.82,$16.72,$15.78,$16.42,239655616,3.79267,,,$16.71,$15.97,-4.42849,26,0.182704"


def parse_text(*rows, header=HEADER):
    return ingest.read_records([header + "\n"] + [r + "\n" for r in rows])


def test_first_row_fields():
    d = parse_text(FIRST_ROW)
    rec = d.records[0]
    assert rec.open == 15.82
    assert rec.close == 16.42
    assert rec.date == date(2011, 1, 7)
    assert rec.volume == 239655616
    assert rec.percent_change_volume_over_last_wk is None
    assert rec.previous_weeks_volume is None
    assert rec.percent_change_next_weeks_price == -4.42849


@pytest.mark.parametrize("text,value", [
    ("$15.82", 15.82), ("15.82", 15.82), ("$1,234.50", 1234.5), ("$7", 7.0),
])
def test_parse_dollar(text, value):
    assert ingest.parse_dollar(text) == value


@pytest.mark.parametrize("text", ["USD15", "$1,23.00", "15.82$", "", "$-3.00", "1.2.3"])
def test_parse_dollar_rejects(text):
    with pytest.raises(ValueError):
        ingest.parse_dollar(text)


def test_bad_dollar_is_malformed_row():
    row = FIRST_ROW.replace("$16.72", "16.72 USD")
    with pytest.raises(MalformedRow) as exc:
        parse_text(FIRST_ROW, row)
    assert exc.value.row == 2
    assert exc.value.field == "high"


def test_bad_date_is_malformed_row():
    with pytest.raises(MalformedRow, match="date"):
        parse_text(FIRST_ROW.replace("1/7/2011", "2011-01-07"))


def test_missing_column():
    header = HEADER.replace(",percent_return_next_dividend", "")
    with pytest.raises(MissingColumn, match="percent_return_next_dividend"):
        parse_text(FIRST_ROW.rsplit(",", 1)[0], header=header)


def test_blank_required_field():
    with pytest.raises(MalformedRow, match="close"):
        parse_text(FIRST_ROW.replace("$16.42", ""))


def test_invariant_violations_rejected():
    with pytest.raises(MalformedRow, match="quarter"):
        parse_text("3" + FIRST_ROW[1:])
    with pytest.raises(MalformedRow, match="low"):
        parse_text(FIRST_ROW.replace("$15.78", "$17.00"))


@given(st.integers(min_value=1, max_value=99_999_99))
def test_dollar_cents_round_trip(cents):
    text = f"${cents // 100}.{cents % 100:02d}"
    assert f"${ingest.parse_dollar(text):.2f}" == text


def test_records_sorted_by_stock_then_date():
    rows = synth.make_rows(seed=3, tickers=("ZZ", "AA"), n_weeks=3)
    rows.reverse()
    lines = [HEADER + "\n"] + [",".join(str(r[c]) for c in ingest.COLUMNS) + "\n" for r in rows]
    d = ingest.read_records(lines)
    keys = [(r.stock, r.date) for r in d.records]
    assert keys == sorted(keys)


class TestDedup:
    def test_repeated_row_kept_once(self):
        d = ingest.dedup(parse_text(FIRST_ROW, FIRST_ROW))
        assert len(d) == 1
        assert d.duplicates_removed == 1

    def test_no_duplicates_identity(self, synthetic_dataset):
        assert ingest.dedup(synthetic_dataset).records == synthetic_dataset.records

    def test_n_copies(self):
        assert len(ingest.dedup(parse_text(*[FIRST_ROW] * 9))) == 1

    @given(st.lists(st.integers(min_value=0, max_value=4), max_size=12))
    def test_idempotent_and_order_preserving(self, picks):
        rows = synth.make_rows(seed=1, tickers=("AA", "BB"), n_weeks=3)[:5]
        lines = [HEADER + "\n"] + [
            ",".join(str(rows[i][c]) for c in ingest.COLUMNS) + "\n" for i in picks]
        d = ingest.read_records(lines)
        once = ingest.dedup(d)
        twice = ingest.dedup(once)
        assert twice.records == once.records
        assert len(set(once.records)) == len(once.records)
        assert set(once.records) == set(d.records)
        kept = [r for r in d.records if r in set(once.records)]
        assert list(once.records) == sorted(set(kept), key=kept.index)


class TestValidate:
    def test_synthetic_shape(self, synthetic_dataset):
        rep = ingest.validate(synthetic_dataset)
        assert (rep.row_count, rep.ticker_count, rep.week_count, rep.attribute_count) == \
            (750, 30, 25, 16)
        assert rep.warnings == []

    def test_short_row_is_schema_violation(self):
        d = parse_text(FIRST_ROW, FIRST_ROW.rsplit(",", 1)[0])
        assert d.ragged_rows == ((2, 15),)
        with pytest.raises(SchemaViolation, match="15 fields"):
            ingest.validate(d)

    def test_extra_header_column(self):
        d = parse_text(FIRST_ROW + ",x", header=HEADER + ",extra")
        with pytest.raises(SchemaViolation, match="16 attributes"):
            ingest.validate(d)

    def test_missing_pair(self, tmp_path):
        rows = synth.make_rows(seed=2, tickers=("AA", "BB"), n_weeks=3)
        del rows[4]
        d = ingest.parse_dataset(synth.write_rows(tmp_path / "x.csv", rows))
        with pytest.raises(SchemaViolation, match="missing"):
            ingest.validate(d)

    def test_consistency_warning(self):
        bad = FIRST_ROW.replace("3.79267", "3.9")
        rep = ingest.validate(parse_text(bad))
        assert len(rep.warnings) == 1
        assert "percent_change_price" in rep.warnings[0]
        assert ingest.validate(parse_text(FIRST_ROW.replace("3.79267", "3.8"))).warnings == []

    def test_optional_blank_after_first_week_warns(self, tmp_path):
        rows = synth.make_rows(seed=2, tickers=("AA",), n_weeks=3)
        rows[2]["previous_weeks_volume"] = ""
        d = ingest.parse_dataset(synth.write_rows(tmp_path / "x.csv", rows))
        rep = ingest.validate(d)
        assert any("previous_weeks_volume is blank" in w for w in rep.warnings)

    def test_report_renderings(self, synthetic_dataset):
        rep = ingest.validate(synthetic_dataset)
        kv = dict(line.split("=", 1) for line in rep.to_kv().splitlines())
        assert kv["row_count"] == "750"
        assert kv["attribute_count"] == "16"
        assert "rows               750" in rep.to_text()

    def test_full_grid_after_validation(self, synthetic_dataset):
        ingest.validate(synthetic_dataset)
        pairs = {(r.stock, r.date) for r in synthetic_dataset.records}
        assert len(pairs) == len(synthetic_dataset.tickers) * len(synthetic_dataset.dates)


def test_canonical_file_counts(canonical_path):
    d, rep = ingest.load(canonical_path)
    assert rep.row_count == 750
    assert rep.attribute_count == 16
    assert (rep.ticker_count, rep.week_count) == (30, 25)
    first = d.records[0]
    assert (first.stock, first.date, first.open) == ("AA", date(2011, 1, 7), 15.82)

import random
from datetime import date

import pytest
from hypothesis import given, strategies as st

from tdcomp.errors import IngestError
from tdcomp.table_store import (
    EntityLink,
    Statement,
    Table,
    infer_kind,
    link_entities,
    load_table,
    parse_cell_value,
)


def write_csv(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadTable:
    def test_kind_inference(self, tmp_path):
        path = write_csv(tmp_path, "t.csv", "venue,attendance\nfirhill,9500\ncappielow,8000\nibrox,7200\n")
        t = load_table(path, "t")
        assert t.columns == (("venue", "text"), ("attendance", "number"))
        assert t.n_rows == 3

    def test_ragged_row_rejected(self, tmp_path):
        path = write_csv(tmp_path, "t.csv", "a,b\n1,2,3\n")
        with pytest.raises(IngestError):
            load_table(path, "t")

    def test_empty_cells_ignored_by_inference(self, tmp_path):
        path = write_csv(tmp_path, "t.csv", "venue,attendance\nfirhill,9500\ncappielow,8000\ndens park,\n")
        t = load_table(path, "t")
        assert t.kind_of(1) == "number"
        assert t.is_missing(2, 1)

    def test_duplicate_columns_rejected(self, tmp_path):
        path = write_csv(tmp_path, "t.csv", "a,A \n1,2\n")
        with pytest.raises(IngestError):
            load_table(path, "t")

    def test_empty_table_rejected(self, tmp_path):
        path = write_csv(tmp_path, "t.csv", "a,b\n")
        with pytest.raises(IngestError):
            load_table(path, "t")

    def test_missing_file(self, tmp_path):
        with pytest.raises(IngestError):
            load_table(tmp_path / "nope.csv", "t")

    def test_serialization_round_trip(self, tmp_path):
        path = write_csv(
            tmp_path, "t.csv",
            'venue,attendance,date\n"dens, park",9500,2004-03-05\nfirhill,8000,2004-03-12\n',
        )
        t = load_table(path, "t")
        assert t == Table.from_json(t.to_json())
        # RFC-4180 quoted comma stays inside the cell
        assert t.surface(0, 0) == "dens, park"


class TestParseCellValue:
    def test_thousands_separator(self):
        assert parse_cell_value("9,500", "number") == 9500.0

    def test_text_identity(self):
        assert parse_cell_value("Firhill ", "text") == "firhill"

    def test_bad_number(self):
        with pytest.raises(ValueError):
            parse_cell_value("abc", "number")

    def test_decimal(self):
        assert parse_cell_value("9500.0", "number") == 9500.0

    def test_date_forms(self):
        assert parse_cell_value("2004-03-05", "date") == date(2004, 3, 5)
        assert parse_cell_value("5 march 2004", "date") == date(2004, 3, 5)


class TestInferKind:
    def test_idempotent_and_order_independent(self):
        cells = ["9500", "8000", "", "7,200"]
        assert infer_kind(cells) == "number"
        rng = random.Random(0)
        for _ in range(10):
            rng.shuffle(cells)
            assert infer_kind(cells) == "number"

    def test_mixed_is_text(self):
        assert infer_kind(["9500", "n/a"]) == "text"

    @given(st.lists(st.sampled_from(["12", "7.5", "firhill", "2004-03-05", ""]), min_size=1, max_size=8))
    def test_permutation_invariance(self, cells):
        base = infer_kind(cells)
        assert infer_kind(list(reversed(cells))) == base
        assert infer_kind(sorted(cells)) == base


FIXTURE = Table.build(
    "m",
    [("venue", "text"), ("attendance", "number")],
    [["firhill", "9500"], ["cappielow", "8000"], ["partick thistle", "7000"], ["partick", "6500"]],
)


class TestLinkEntities:
    def test_single_cell_link(self):
        s = Statement(id="s1", table_id="m", text="the attendance at firhill was high")
        links = link_entities(s, FIXTURE)
        assert len(links) == 1
        assert links[0] == EntityLink(start=3, end=4, row=0, col=0, surface="firhill")

    def test_no_match(self):
        s = Statement(id="s2", table_id="m", text="nothing here matches at all")
        assert link_entities(s, FIXTURE) == []

    def test_maximal_span_shadows_contained(self):
        s = Statement(id="s3", table_id="m", text="partick thistle played at home")
        links = link_entities(s, FIXTURE)
        assert len(links) == 1
        assert links[0].surface == "partick thistle"
        assert (links[0].row, links[0].col) == (2, 0)

    def test_link_surface_matches_cell(self):
        s = Statement(id="s4", table_id="m", text="cappielow saw 8000 fans while firhill saw 9500")
        for link in link_entities(s, FIXTURE):
            assert FIXTURE.surface(link.row, link.col) == link.surface
            assert " ".join(s.tokens()[link.start:link.end]) == link.surface

    def test_table_mismatch(self):
        s = Statement(id="s5", table_id="other", text="x")
        with pytest.raises(ValueError):
            link_entities(s, FIXTURE)

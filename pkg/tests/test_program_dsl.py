import random

import pytest

from oracle import reference_eval
from randgen import random_program, random_table

from tdcomp.errors import (
    EmptyAggregate,
    ExecError,
    HopAmbiguous,
    ProgramError,
    ProgramSyntaxError,
    ProgramTypeError,
)
from tdcomp.program_dsl import (
    ALL_ROWS,
    ColumnRef,
    Literal,
    Op,
    execute,
    is_splittable,
    parse_program,
    print_program,
    program_depth,
    skeleton,
    type_check,
)
from tdcomp.table_store import Table

FIG1_TEXT = "eq{max{all_rows;attendance}; hop{filter_eq{all_rows;venue;firhill};attendance}}"

FIG1_TABLE = Table.build(
    "fig1",
    [("venue", "text"), ("attendance", "number")],
    [["firhill", "9500"], ["cappielow", "8000"]],
)


class TestParse:
    def test_flagship_program(self):
        p = parse_program(FIG1_TEXT)
        assert isinstance(p, Op) and p.name == "eq"
        ops = []

        def walk(n):
            if isinstance(n, Op):
                ops.append(n.name)
                for a in n.args:
                    walk(a)

        walk(p)
        assert ops == ["eq", "max", "hop", "filter_eq"]

    def test_smallest_program(self):
        assert parse_program("count{all_rows}") == Op("count", (ALL_ROWS,))

    def test_arity_error(self):
        with pytest.raises(ProgramTypeError):
            parse_program("max{all_rows}")

    def test_unknown_operator(self):
        with pytest.raises(ProgramTypeError):
            parse_program("frobnicate{all_rows}")

    def test_syntax_error_has_position(self):
        with pytest.raises(ProgramSyntaxError):
            parse_program("count{all_rows")
        with pytest.raises(ProgramSyntaxError):
            parse_program("count{all_rows}}")

    def test_multiword_tokens(self):
        p = parse_program("eq{hop{filter_eq{all_rows;venue;dens park};attendance};9500}")
        lits = [n for n in p.args[0].args[0].args if isinstance(n, Literal)]
        assert lits[0].surface == "dens park"

    def test_whitespace_between_tokens_ignored(self):
        a = parse_program("count{ all_rows }")
        b = parse_program("count{all_rows}")
        assert a == b


class TestPrint:
    def test_canonical_form(self):
        assert print_program(Op("count", (ALL_ROWS,))) == "count{all_rows}"

    def test_flagship_round_trip(self):
        p = parse_program(FIG1_TEXT)
        assert parse_program(print_program(p)) == p
        assert " " not in print_program(p).replace("dens park", "")

    def test_nested_braces_balance(self):
        p = parse_program("and{eq{count{all_rows};3};eq{count{all_rows};4}}")
        text = print_program(p)
        assert text.count("{") == text.count("}")

    def test_random_round_trip_1000(self):
        rng = random.Random(20240)
        for _ in range(1000):
            t = random_table(rng)
            p = random_program(rng, t)
            assert parse_program(print_program(p)) == p


class TestTypeCheck:
    def test_flagship_is_bool(self):
        p = parse_program(FIG1_TEXT)
        assert type_check(p, FIG1_TABLE) == "bool"

    def test_numeric_op_on_text_column(self):
        p = parse_program("eq{max{all_rows;venue};9500}")
        with pytest.raises(ProgramTypeError):
            type_check(p, FIG1_TABLE)

    def test_strict_rejects_non_bool_root(self):
        p = parse_program("hop{all_rows;venue}")
        with pytest.raises(ProgramTypeError):
            type_check(p, FIG1_TABLE, strict=True)
        assert type_check(p, FIG1_TABLE) == "text"

    def test_unknown_column(self):
        p = parse_program("count{filter_eq{all_rows;referee;smith}}")
        with pytest.raises(ProgramTypeError):
            type_check(p, FIG1_TABLE)


class TestExecute:
    def test_flagship_true(self):
        p = parse_program(FIG1_TEXT)
        r = execute(p, FIG1_TABLE)
        assert r.kind == "bool" and r.value is True

    def test_count(self):
        t = Table.build("t", [("a", "number")], [["1"], ["2"], ["3"]])
        r = execute(parse_program("count{all_rows}"), t)
        assert r.kind == "number" and r.value == 3.0

    def test_hop_ambiguous(self):
        t = Table.build(
            "t",
            [("venue", "text"), ("attendance", "number")],
            [["firhill", "9500"], ["firhill", "8000"]],
        )
        p = parse_program("hop{filter_eq{all_rows;venue;firhill};attendance}")
        with pytest.raises(HopAmbiguous):
            execute(p, t)

    def test_hop_uniform_multi_row(self):
        t = Table.build(
            "t",
            [("venue", "text"), ("attendance", "number")],
            [["firhill", "9500"], ["firhill", "9500"]],
        )
        p = parse_program("hop{filter_eq{all_rows;venue;firhill};attendance}")
        assert execute(p, t).value == 9500.0

    def test_empty_aggregate(self):
        p = parse_program("max{filter_eq{all_rows;venue;nowhere};attendance}")
        with pytest.raises(EmptyAggregate):
            execute(p, FIG1_TABLE)

    def test_count_empty_rowset_is_zero(self):
        p = parse_program("count{filter_eq{all_rows;venue;nowhere}}")
        assert execute(p, FIG1_TABLE).value == 0.0

    def test_argmax_tie_lowest_row(self):
        t = Table.build("t", [("a", "number")], [["5"], ["5"], ["1"]])
        r = execute(parse_program("argmax{all_rows;a}"), t)
        assert r.value == [0]

    def test_determinism(self):
        rng = random.Random(7)
        t = random_table(rng)
        p = random_program(rng, t)
        outcomes = set()
        for _ in range(3):
            try:
                outcomes.add(repr(execute(p, t)))
            except (ExecError, ProgramError) as exc:
                outcomes.add(type(exc).__name__)
        assert len(outcomes) == 1


class TestOracleEquivalence:
    def test_1000_random_programs_match_reference(self):
        rng = random.Random(99)
        mismatches = 0
        for i in range(1000):
            t = random_table(rng)
            p = random_program(rng, t)
            try:
                got = execute(p, t)
                got_repr = (got.kind, got.value)
            except ExecError as exc:
                got_repr = type(exc).__name__
            try:
                want = reference_eval(p, t)
            except ExecError as exc:
                want = type(exc).__name__
            if got_repr != want:
                mismatches += 1
        assert mismatches == 0


class TestSkeleton:
    def test_flagship_skeleton(self):
        p = parse_program(FIG1_TEXT)
        assert skeleton(p).to_text() == "eq{max{_;_};hop{filter_eq{_;_;_};_}}"

    def test_count_skeleton(self):
        assert skeleton(parse_program("count{all_rows}")).to_text() == "count{_}"

    def test_shape_preserved(self):
        rng = random.Random(5)
        t = random_table(rng)
        p = random_program(rng, t)
        sk = skeleton(p)
        assert sk.to_text().count("{") == print_program(p).count("{")


class TestSplittable:
    def test_flagship_splittable(self):
        assert is_splittable(parse_program(FIG1_TEXT))

    def test_unary_root(self):
        assert not is_splittable(parse_program("count{all_rows}"))

    def test_literal_side_not_splittable(self):
        assert not is_splittable(parse_program("eq{count{all_rows};5}"))

    def test_depth_of_flagship(self):
        assert program_depth(parse_program(FIG1_TEXT)) == 4

"""tdcomp: program-guided statement decomposition and evidence fusion
for table-based fact verification.

The library parses natural-language claims about tables into executable
table programs, selects the most semantically consistent parse with a
margin-trained scorer, builds a pseudo decomposition dataset from program
structure, solves the decomposed subproblems by program execution, and
fuses the resulting (subproblem, answer) evidence with a gated-attention
classifier into an entail/refute prediction.
"""

from .errors import (
    ConfigError,
    EmptyAggregate,
    ExecError,
    HopAmbiguous,
    IngestError,
    MetricError,
    MissingCell,
    ProgramError,
    ProgramSyntaxError,
    ProgramTypeError,
    ShapeError,
    SolveError,
    StageError,
    TemplateError,
    TrainError,
)
from .table_store import (
    EntityLink,
    Statement,
    Table,
    link_entities,
    load_statements,
    load_table,
    load_tables_dir,
    parse_cell_value,
)
from .program_dsl import (
    ALL_ROWS,
    AllRows,
    ColumnRef,
    Literal,
    Op,
    Program,
    RuntimeValue,
    Skeleton,
    execute,
    is_splittable,
    parse_program,
    print_program,
    skeleton,
    type_check,
)

__version__ = "0.1.0"

"""Readers for the dipoloc CSV artifacts.

Each artifact starts with a ``# schema=dipoloc.<kind>.v1`` line, followed by
``# key=value`` metadata comments, a header row, and data rows.  Readers
validate the schema tag and the column set and report the offending field on
mismatch.
"""

from dataclasses import dataclass, field


class SchemaError(ValueError):
    """Input artifact does not match the expected schema."""


#: expected schema tag and column order per figure input kind
TABLE_SCHEMAS = {
    "l_of_t": ("dipoloc.l_of_t.v1", ["time", "mean_L", "se_L"]),
    "ipr_hist": ("dipoloc.ipr_hist.v1", ["bin_lo", "bin_hi", "count"]),
    "shell_hist": ("dipoloc.shell_hist.v1", ["radius", "x_lo", "x_hi", "density"]),
    "phase_grid": (
        "dipoloc.phase_grid.v1",
        ["p", "w", "mean_final_L", "edge_fraction", "classification"],
    ),
    "scaling_line": ("dipoloc.scaling_line.v1", ["p", "w_solved"]),
}


@dataclass
class Table:
    path: str
    schema: str
    metadata: dict = field(default_factory=dict)
    columns: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def column(self, name):
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def floats(self, name):
        return [float(v) for v in self.column(name)]


def read_table(path: str, kind: str) -> Table:
    """Parse one CSV artifact and validate it against the given kind."""
    expected_schema, expected_columns = TABLE_SCHEMAS[kind]
    schema = None
    metadata: dict = {}
    columns = None
    rows = []
    with open(path) as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line:
                continue
            if line.startswith("# schema="):
                schema = line.split("=", 1)[1]
            elif line.startswith("# "):
                key, _, value = line[2:].partition("=")
                metadata[key] = value
            elif columns is None:
                columns = line.split(",")
            else:
                rows.append(line.split(","))
    if schema is None:
        raise SchemaError(f"{path}: missing field 'schema'")
    if schema != expected_schema:
        raise SchemaError(
            f"{path}: field 'schema' is {schema!r}, expected {expected_schema!r}"
        )
    if columns != expected_columns:
        offending = _first_column_mismatch(columns or [], expected_columns)
        raise SchemaError(
            f"{path}: field {offending!r} mismatch; header {columns} does not "
            f"match {expected_columns}"
        )
    for row in rows:
        if len(row) != len(columns):
            raise SchemaError(
                f"{path}: field 'row' has {len(row)} values for "
                f"{len(columns)} columns"
            )
    return Table(path=path, schema=schema, metadata=metadata, columns=columns, rows=rows)


def _first_column_mismatch(found, expected):
    for got, want in zip(found, expected):
        if got != want:
            return want
    if len(found) < len(expected):
        return expected[len(found)]
    return found[len(expected)]

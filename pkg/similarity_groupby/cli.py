"""
Command line interface: ``sgb run``, ``sgb bench`` and ``sgb explain``.

Exit codes: 0 success, 2 query syntax error, 3 semantic or configuration error, 4 input/output
error, 5 benchmark validation failure.
"""

from pathlib import Path
from typing import Annotated, NoReturn

import typer

from similarity_groupby.bench import BenchSpec, Generator, report, run_matrix, write_rows_csv
from similarity_groupby.exceptions import (
    BenchValidationError,
    IngestError,
    InvalidConfigurationError,
    InvalidInputError,
    QuerySemanticError,
    QuerySyntaxError,
    SimilarityGroupByError,
)
from similarity_groupby.executor import ExecutionOptions, execute, render_result
from similarity_groupby.geometry import Metric
from similarity_groupby.logger import PACKAGE_LOGGER_NAME, configure_logger, get_logger
from similarity_groupby.model import GroupingMode, OverlapPolicy, Strategy
from similarity_groupby.query import parse, render_plan
from similarity_groupby.relation import ingest_csv
from similarity_groupby.settings import OutputFormat, get_settings

logger = get_logger(__name__)

EXIT_SYNTAX = 2
EXIT_SEMANTIC = 3
EXIT_IO = 4
EXIT_VALIDATION = 5

app = typer.Typer(
    name="sgb",
    help="Similarity GROUP BY over delimited text files.",
    no_args_is_help=True,
    add_completion=False,
    pretty_exceptions_enable=False,
)

LogLevelOption = Annotated[str | None, typer.Option("--log-level", help="DEBUG, INFO, WARNING or ERROR (default: SGB_LOG_LEVEL or INFO)")]
LogJsonOption = Annotated[bool, typer.Option("--log-json", help="Log one JSON object per line")]
QueryOption = Annotated[str, typer.Option("--query", "-q", help="Query text, or @FILE to read it from a file")]


def exit_code_for(error: BaseException) -> int:
    """Process exit code for an error raised while serving a command."""
    if isinstance(error, QuerySyntaxError):
        return EXIT_SYNTAX
    if isinstance(error, QuerySemanticError | InvalidConfigurationError | InvalidInputError):
        return EXIT_SEMANTIC
    if isinstance(error, IngestError | OSError):
        return EXIT_IO
    if isinstance(error, BenchValidationError):
        return EXIT_VALIDATION
    return 1


def _fail(error: BaseException) -> NoReturn:
    if isinstance(error, SimilarityGroupByError):
        typer.echo(f"error: {error.problem}", err=True)
        typer.echo(f"cause: {error.cause}", err=True)
        typer.echo(f"solution: {error.solution}", err=True)
    else:
        typer.echo(f"error: {error}", err=True)
    logger.debug(f"{type(error).__name__} raised", exc_info=error)
    raise typer.Exit(code=exit_code_for(error))


def _configure_logging(log_level: str | None, log_json: bool) -> None:
    settings = get_settings()
    configure_logger(
        name=PACKAGE_LOGGER_NAME,
        level=log_level or settings.log_level,
        json_format=log_json or settings.log_json,
        env_override=log_level is None,
    )


def read_query(query: str) -> str:
    """Query text itself, or the contents of the file named after a leading '@'."""
    if query.startswith("@"):
        return Path(query[1:]).read_text(encoding="utf-8")
    return query


def parse_params(values: list[str] | None) -> dict[str, float]:
    """
    Turn ``NAME=VALUE`` strings into a parameter mapping.

    Raises
    ------
        typer.BadParameter: If an entry has no '=' or a non-numeric value.

    """
    params: dict[str, float] = {}
    for item in values or []:
        name, sep, value = item.partition("=")
        if not sep or not name.strip():
            raise typer.BadParameter(f"expected NAME=VALUE, got {item!r}", param_hint="--param")
        try:
            params[name.strip()] = float(value)
        except ValueError as e:
            raise typer.BadParameter(f"{name.strip()} must be a number, got {value!r}", param_hint="--param") from e
    return params


def _delimiter(value: str) -> str:
    return "\t" if value in ("\\t", "tab", "TAB") else value


@app.command()
def run(
    input_path: Annotated[Path, typer.Argument(metavar="INPUT", help="Delimited text file with a header row")],
    query: QueryOption,
    strategy: Annotated[Strategy | None, typer.Option(case_sensitive=False, help="Candidate search strategy")] = None,
    output_format: Annotated[OutputFormat | None, typer.Option("--format", case_sensitive=False, help="Result format")] = None,
    seed: Annotated[int | None, typer.Option(help="Seed for a random JOIN-ANY choice (default: lowest group id)")] = None,
    param: Annotated[list[str] | None, typer.Option("--param", help="Threshold parameter as NAME=VALUE")] = None,
    delimiter: Annotated[str, typer.Option(help="Field separator; '\\t' for tab")] = ",",
    columns: Annotated[str | None, typer.Option(help="Comma separated column names for a file without header")] = None,
    output: Annotated[Path | None, typer.Option("--output", "-o", help="Write the result here instead of stdout")] = None,
    max_recursion_depth: Annotated[int | None, typer.Option(min=1, help="FORM-NEW-GROUP pass limit")] = None,
    log_level: LogLevelOption = None,
    log_json: LogJsonOption = False,
) -> None:
    """Run a similarity GROUP BY query over INPUT and print the groups."""
    _configure_logging(log_level, log_json)
    params = parse_params(param)
    try:
        settings = get_settings()
        plan = parse(read_query(query))
        relation = ingest_csv(
            input_path,
            relation_name=plan.source,
            grouping_columns=plan.group_cols,
            delimiter=_delimiter(delimiter),
            column_names=[c.strip() for c in columns.split(",")] if columns else None,
        )
        options = ExecutionOptions.from_settings(
            strategy=strategy,
            join_any_seed=seed,
            max_recursion_depth=max_recursion_depth,
            params=params,
        )
        text = render_result(execute(plan, relation, options), output_format or settings.output_format)
        if output is not None:
            output.write_text(text, encoding="utf-8")
            logger.info(f"Wrote result to {output}")
        else:
            typer.echo(text, nl=False)
    except (SimilarityGroupByError, OSError) as e:
        _fail(e)


@app.command()
def explain(query: QueryOption, log_level: LogLevelOption = None, log_json: LogJsonOption = False) -> None:
    """Parse a query and print its canonical form, followed by notes on non-canonical spellings."""
    _configure_logging(log_level, log_json)
    try:
        plan = parse(read_query(query))
    except (SimilarityGroupByError, OSError) as e:
        _fail(e)
    typer.echo(render_plan(plan))
    for note in plan.notes:
        typer.echo(f"-- {note}")


def _split_floats(value: str) -> list[float]:
    try:
        return [float(item) for item in value.split(",") if item.strip()]
    except ValueError as e:
        raise typer.BadParameter(f"expected comma separated numbers, got {value!r}") from e


def _split_ints(value: str) -> list[int]:
    try:
        return [int(item) for item in value.split(",") if item.strip()]
    except ValueError as e:
        raise typer.BadParameter(f"expected comma separated integers, got {value!r}") from e


@app.command()
def bench(
    spec_path: Annotated[Path | None, typer.Option("--spec", help="TOML benchmark spec; flags below override it")] = None,
    generator: Annotated[Generator | None, typer.Option(case_sensitive=False)] = None,
    n: Annotated[int | None, typer.Option("--n", min=1, help="Point count")] = None,
    sizes: Annotated[str | None, typer.Option(help="Comma separated point counts for a size sweep")] = None,
    eps: Annotated[str | None, typer.Option(help="Comma separated thresholds, e.g. 0.01,0.05")] = None,
    mode: Annotated[list[GroupingMode] | None, typer.Option(case_sensitive=False)] = None,
    policy: Annotated[list[OverlapPolicy] | None, typer.Option(case_sensitive=False)] = None,
    metric: Annotated[list[Metric] | None, typer.Option(case_sensitive=False)] = None,
    strategy: Annotated[list[Strategy] | None, typer.Option(case_sensitive=False)] = None,
    repetitions: Annotated[int | None, typer.Option(min=1)] = None,
    seed: Annotated[int | None, typer.Option()] = None,
    clusters: Annotated[int | None, typer.Option(min=1, help="Cluster count for GAUSS_CLUSTERS")] = None,
    sigma: Annotated[float | None, typer.Option(help="Cluster spread for GAUSS_CLUSTERS")] = None,
    csv_path: Annotated[Path | None, typer.Option("--csv", help="Source file for the CSV generator")] = None,
    parallel: Annotated[bool | None, typer.Option("--parallel/--sequential", help="Run cells on a process pool")] = None,
    exact_baseline: Annotated[bool | None, typer.Option("--exact-baseline/--no-exact-baseline", help="Add a plain group-by reference row")] = None,
    out_dir: Annotated[Path | None, typer.Option("--out-dir", help="Where bench.csv, speedup.txt and .dat files go")] = None,
    log_level: LogLevelOption = None,
    log_json: LogJsonOption = False,
) -> None:
    """Time the grouping strategies over generated data and write a speedup report."""
    _configure_logging(log_level, log_json)
    overrides = {
        "generator": generator,
        "n": n,
        "sizes": _split_ints(sizes) if sizes else None,
        "eps_list": _split_floats(eps) if eps else None,
        "modes": mode or None,
        "policies": policy or None,
        "metrics": metric or None,
        "strategies": strategy or None,
        "repetitions": repetitions,
        "seed": seed,
        "clusters": clusters,
        "sigma": sigma,
        "csv_path": csv_path,
        "parallel": parallel,
        "include_exact_baseline": exact_baseline,
    }
    try:
        settings = get_settings()
        values = BenchSpec.from_toml(spec_path).model_dump() if spec_path else {"repetitions": settings.bench_repetitions}
        values.update({key: value for key, value in overrides.items() if value is not None})
        spec = BenchSpec.build(**values)
        target = out_dir or Path(settings.bench_out_dir)
        rows = run_matrix(spec)
        csv_file = write_rows_csv(rows, target / "bench.csv")
        text = report(rows, target)
    except (SimilarityGroupByError, OSError) as e:
        _fail(e)
    logger.info(f"Wrote {len(rows)} rows to {csv_file}")
    typer.echo(text, nl=False)


def main() -> None:
    """Console script entry point."""
    app()


if __name__ == "__main__":
    main()

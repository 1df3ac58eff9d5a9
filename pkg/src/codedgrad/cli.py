"""Command-line front end: plan, roundtrip, stability, ldpc-threshold, ldpc-trial, simulate.

Every command that takes --out writes its artifacts plus a manifest.json
recording the command, parameters, seed, and library version; re-running the
same invocation reproduces the outputs byte for byte (all seeds are explicit
flags, never wall clock).
"""

from __future__ import annotations

import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import click
import numpy as np

from . import __version__
from .codes import (
    make_gaussian_code,
    make_repetition_code,
    make_systematic_mds,
    make_vandermonde_code,
)
from .errors import CodedGradError, ParameterError, UnrecoverableGroupError
from .ldpc import bec_threshold, peeling_trial, sample_ldpc
from .pipeline import (
    GradientBatch,
    achieved_triple,
    decode_all,
    encode_worker,
    fractional_repetition_placement,
    lower_bound_load,
    plan_to_json,
)
from .simulate import parse_simulation_config, run_training, trace_to_csv, trace_to_json
from .stability import C, DEFAULT_THRESHOLD_GRID, stability_table, table_to_csv, table_to_json

EXIT_VERIFICATION_FAILURE = 1
EXIT_USAGE = 2


@dataclass
class RunManifest:
    """Reproducibility record written next to every file-producing run."""

    command: str
    parameters: dict
    seed: int | None
    version: str = field(default=__version__)
    outputs: list[str] = field(default_factory=list)


def _write_outputs(out_dir, command, parameters, seed, files: dict[str, str]):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
    manifest = RunManifest(
        command=command, parameters=parameters, seed=seed, outputs=sorted(files)
    )
    (out / "manifest.json").write_text(
        json.dumps(asdict(manifest), indent=2, sort_keys=True) + "\n"
    )


def _fail_usage(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_USAGE)


def _fail_verification(message: str):
    click.echo(f"FAIL: {message}", err=True)
    sys.exit(EXIT_VERIFICATION_FAILURE)


def _build_code(kind: str, N: int, K: int, seed: int):
    if kind == "mds":
        return make_systematic_mds(N, K, seed)
    if kind == "gaussian":
        return make_gaussian_code(N, K, seed)
    if kind == "repetition":
        return make_repetition_code(N)
    if kind == "vandermonde":
        return make_vandermonde_code(N, K)
    raise ParameterError(f"unknown code kind {kind!r}")


CODE_KINDS = ["mds", "gaussian", "repetition", "vandermonde"]


@click.group()
@click.version_option(__version__)
def main():
    """Coded gradient aggregation: placement, codes, stability, simulation."""


@main.command("plan")
@click.option("--n", type=int, required=True, help="Number of workers.")
@click.option("--k", type=int, required=True, help="Number of dataset shards.")
@click.option("--N", "N", type=int, required=True, help="Group size (code block length).")
@click.option("--K", "K", type=int, default=1, show_default=True, help="Code dimension.")
@click.option("--code", "code_kind", type=click.Choice(CODE_KINDS), default="mds", show_default=True)
@click.option("--seed", type=int, required=True, help="Code construction seed.")
@click.option("--out", type=click.Path(file_okay=False), default=None)
def cmd_plan(n, k, N, K, code_kind, seed, out):
    """Print the placement plan and the achieved (l, m, s) triple."""
    try:
        code = _build_code(code_kind, N, K, seed)
        plan = fractional_repetition_placement(n, k, N)
        triple = achieved_triple(n, k, code)
        bound = lower_bound_load(n, k, triple.s, triple.m)
    except CodedGradError as exc:
        _fail_usage(str(exc))
    click.echo(
        f"placement: {plan.scheme}, {plan.p} group(s) of {plan.N} workers, load l={plan.l}"
    )
    for i, members in enumerate(plan.groups, start=1):
        datasets = ", ".join(f"D{d}" for d in plan.group_datasets(i))
        click.echo(f"  group {i}: workers {members[0]}-{members[-1]} hold {datasets}")
    click.echo(f"code: {code.kind} [{code.N}, {code.K}, {code.min_distance}]")
    flag = "optimal" if triple.optimal else "suboptimal"
    click.echo(
        f"achieved triple: (l={triple.l}, m={triple.m}, s={triple.s}), {flag} "
        f"(load lower bound {bound})"
    )
    if out:
        doc = {
            "plan": plan_to_json(plan),
            "triple": {"l": triple.l, "m": triple.m, "s": triple.s, "optimal": triple.optimal},
            "lower_bound_load": bound,
        }
        _write_outputs(
            out,
            "plan",
            {"n": n, "k": k, "N": N, "K": K, "code": code_kind, "seed": seed},
            seed,
            {"plan.json": json.dumps(doc, indent=2, sort_keys=True) + "\n"},
        )


@main.command("roundtrip")
@click.option("--n", type=int, required=True)
@click.option("--k", type=int, required=True)
@click.option("--N", "N", type=int, required=True)
@click.option("--K", "K", type=int, default=1, show_default=True)
@click.option("--code", "code_kind", type=click.Choice(CODE_KINDS), default="mds", show_default=True)
@click.option("--d", type=int, required=True, help="Gradient length.")
@click.option("--erase", default="", help="Comma-separated worker ids to drop.")
@click.option("--stragglers-per-group", type=int, default=None,
              help="Drop this many random workers per group instead of --erase.")
@click.option("--seed", type=int, required=True)
@click.option("--tol", type=float, default=1e-8, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
def cmd_roundtrip(n, k, N, K, code_kind, d, erase, stragglers_per_group, seed, tol, out):
    """Encode random gradients, drop stragglers, decode, compare to the true sum."""
    try:
        code = _build_code(code_kind, N, K, seed)
        plan = fractional_repetition_placement(n, k, N)
        rng = np.random.default_rng(seed)
        batch = GradientBatch(rng.standard_normal((k, d)))
        erased: set[int] = set()
        if erase:
            erased = {int(w) for w in erase.split(",")}
            if any(not 1 <= w <= n for w in erased):
                raise ParameterError(f"--erase ids must lie in [1, {n}]")
        elif stragglers_per_group is not None:
            if not 0 <= stragglers_per_group < N:
                raise ParameterError("--stragglers-per-group must lie in [0, N-1]")
            for members in plan.groups:
                erased.update(
                    rng.choice(members, size=stragglers_per_group, replace=False).tolist()
                )
        chunks = [
            encode_worker(plan, code, batch, w)
            for w in range(1, n + 1)
            if w not in erased
        ]
    except CodedGradError as exc:
        _fail_usage(str(exc))

    exact = batch.partial_gradients.sum(axis=0)
    try:
        decoded, costs = decode_all(plan, code, chunks, d)
    except UnrecoverableGroupError as exc:
        _fail_verification(f"unrecoverable-group({exc.group}): {exc}")
    err = float(
        np.linalg.norm(decoded - exact) / max(np.linalg.norm(exact), 1e-300)
    )
    dims = [c.solve_dim for c in costs]
    madds = sum(c.multiply_adds for c in costs)
    report = {
        "erased": sorted(erased),
        "max_relative_error": err,
        "solve_dims": dims,
        "multiply_adds": madds,
        "tolerance": tol,
        "pass": err <= tol,
    }
    if out:
        _write_outputs(
            out,
            "roundtrip",
            {"n": n, "k": k, "N": N, "K": K, "code": code_kind, "d": d,
             "erase": sorted(erased), "seed": seed, "tol": tol},
            seed,
            {"roundtrip.json": json.dumps(report, indent=2, sort_keys=True) + "\n"},
        )
    if err > tol:
        _fail_verification(f"max relative error {err:.3e} exceeds tolerance {tol:.1e}")
    click.echo(
        f"pass: max relative error {err:.3e} (tol {tol:.1e}); "
        f"solve dims per group {dims}; multiply-adds {madds}"
    )


@main.command("stability")
@click.option("--rows", default="", help="Inline rows 'n,s,m;n,s,m;...'.")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON file with a list of [n, s, m] rows.")
@click.option("--default-grid", is_flag=True, help="Use the built-in comparison grid.")
@click.option("--kappa", type=float, default=1000.0, show_default=True)
@click.option("--eps", type=float, default=1e-3, show_default=True)
@click.option("--constant", type=float, default=C, show_default=True,
              help="Tail-bound constant used in the f function.")
@click.option("--out", type=click.Path(file_okay=False), default=None)
def cmd_stability(rows, input_path, default_grid, kappa, eps, constant, out):
    """Emit the straggler-threshold table (baseline vs grouped) as CSV."""
    try:
        if default_grid:
            parsed = list(DEFAULT_THRESHOLD_GRID)
        elif input_path:
            parsed = [tuple(r) for r in json.loads(Path(input_path).read_text())]
        elif rows:
            parsed = [tuple(int(x) for x in chunk.split(",")) for chunk in rows.split(";")]
        else:
            parsed = []
        if any(len(r) != 3 for r in parsed):
            raise ParameterError("each row must be (n, s, m)")
        table = stability_table(parsed, kappa, eps, constant=constant)
    except (CodedGradError, json.JSONDecodeError) as exc:
        _fail_usage(str(exc))
    csv_text = table_to_csv(table)
    click.echo(csv_text, nl=False)
    for row in table:
        if row.note:
            click.echo(f"warning: row (n={row.n}, s={row.s}, m={row.m}): {row.note}", err=True)
    if out:
        _write_outputs(
            out,
            "stability",
            {"rows": [list(r) for r in parsed], "kappa": kappa, "eps": eps,
             "constant": constant},
            None,
            {
                "table.csv": csv_text,
                "table.json": json.dumps(table_to_json(table), indent=2, sort_keys=True) + "\n",
            },
        )


@main.command("ldpc-threshold")
@click.option("--dv", type=int, required=True, help="Variable-node degree.")
@click.option("--dc", type=int, required=True, help="Check-node degree.")
@click.option("--tol", type=float, default=1e-5, show_default=True)
def cmd_ldpc_threshold(dv, dc, tol):
    """Density-evolution erasure threshold of the (dv, dc) ensemble."""
    try:
        p_star = bec_threshold(dv, dc, tol)
    except CodedGradError as exc:
        _fail_usage(str(exc))
    click.echo(f"threshold({dv},{dc}) = {p_star:.6f}")


@main.command("ldpc-trial")
@click.option("--N", "N", type=int, required=True)
@click.option("--K", "K", type=int, required=True)
@click.option("--dv", type=int, required=True)
@click.option("--dc", type=int, required=True)
@click.option("--p", type=float, required=True, help="I.i.d. erasure probability.")
@click.option("--trials", type=int, default=100, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(file_okay=False), default=None)
def cmd_ldpc_trial(N, K, dv, dc, p, trials, seed, out):
    """Sample a regular code and measure peeling success over random erasures."""
    try:
        code = sample_ldpc(N, K, dv, dc, seed)
        report = peeling_trial(code, p, trials, seed + 1)
    except CodedGradError as exc:
        _fail_usage(str(exc))
    click.echo(
        f"success rate {report.success_rate:.3f} over {report.trials} trials "
        f"(p={p}, [{N}, {K}], dv={dv}, dc={dc}); "
        f"mean erasures {report.mean_erasures:.1f}, mean peel steps {report.mean_peel_steps:.1f}"
    )
    if out:
        doc = {
            "success_rate": report.success_rate,
            "trials": report.trials,
            "successes": report.successes,
            "mean_erasures": report.mean_erasures,
            "mean_peel_steps": report.mean_peel_steps,
        }
        _write_outputs(
            out,
            "ldpc-trial",
            {"N": N, "K": K, "dv": dv, "dc": dc, "p": p, "trials": trials, "seed": seed},
            seed,
            {"trial.json": json.dumps(doc, indent=2, sort_keys=True) + "\n"},
        )


@main.command("simulate")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="JSON simulation document.")
@click.option("--out", type=click.Path(file_okay=False), default=None)
def cmd_simulate(config_path, out):
    """Train under each configured scheme and report timing and loss."""
    try:
        doc = json.loads(Path(config_path).read_text())
    except json.JSONDecodeError as exc:
        _fail_usage(f"config is not valid JSON: {exc}")
    try:
        configs = parse_simulation_config(doc)
    except CodedGradError as exc:
        _fail_usage(str(exc))

    files = {}
    summary = []
    for config in configs:
        trace = run_training(config)
        final_loss = trace.records[-1].loss if trace.records else float("nan")
        summary.append(
            {
                "scheme": trace.scheme_name,
                "mean_iteration_time": trace.mean_iteration_time,
                "final_loss": final_loss,
            }
        )
        click.echo(
            f"{trace.scheme_name}: mean iteration time {trace.mean_iteration_time:.6g}, "
            f"final loss {final_loss:.6f}"
        )
        stem = trace.scheme_name.replace("/", "-")
        files[f"trace_{stem}.csv"] = trace_to_csv(trace)
        files[f"trace_{stem}.json"] = json.dumps(trace_to_json(trace), indent=2) + "\n"
    if out:
        files["summary.json"] = json.dumps(summary, indent=2, sort_keys=True) + "\n"
        _write_outputs(
            out,
            "simulate",
            {"config": doc},
            doc.get("seed"),
            files,
        )


if __name__ == "__main__":
    main()

"""Command-line interface: ``akount generate | count | model | verify``."""
from __future__ import annotations

import json
import sys
from dataclasses import asdict
from pathlib import Path

import click
import numpy as np

from . import dataio, model
from .aggregation import AggregationConfig
from .counters import count
from .kmer_core import MAX_K, decode
from .runtime import DEFAULT_C0, TOPOLOGIES


def _on_off(_ctx, _param, value):
    if isinstance(value, bool):
        return value
    return value.lower() in ("on", "true", "1", "yes")


@click.group()
@click.version_option(package_name="akount")
def main():
    """Distributed k-mer counting on a simulated virtual-PE runtime."""


# --------------------------------------------------------------------------- generate

@main.command()
@click.option("--scale", type=int, help="Synthetic recipe: 2**SCALE-base genome, 150-base reads.")
@click.option("--genome-len", type=int)
@click.option("--reads", "n_reads", type=int)
@click.option("--read-len", type=int, default=dataio.SYNTHETIC_READ_LEN, show_default=True)
@click.option("--coverage", type=float, default=dataio.DEFAULT_COVERAGE, show_default=True,
              help="Used to derive --reads when it is omitted.")
@click.option("--skew-motif", default=None, help="Tile this motif over part of the genome.")
@click.option("--skew-frac", type=float, default=0.0, show_default=True)
@click.option("--seed", type=int, envvar="AKOUNT_SEED", default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["fastq", "fasta"]), default="fastq",
              show_default=True)
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path),
              default=Path("reads.fastq"), show_default=True)
def generate(scale, genome_len, n_reads, read_len, coverage, skew_motif, skew_frac, seed,
             fmt, output):
    """Write a synthetic FASTQ/FASTA dataset plus a JSON manifest beside it."""
    if scale is not None:
        if genome_len is not None:
            raise click.UsageError("--scale and --genome-len are mutually exclusive")
        genome_len, read_len, default_n = dataio.synthetic_params(scale)
        n_reads = n_reads or default_n
    if genome_len is None:
        raise click.UsageError("give --scale or --genome-len")
    if genome_len < 1 or read_len < 1 or read_len > genome_len:
        raise click.UsageError("need 1 <= --read-len <= --genome-len")
    if n_reads is None:
        n_reads = dataio.reads_for_coverage(genome_len, read_len, coverage)
    if n_reads < 0:
        raise click.UsageError("--reads must be >= 0")
    if skew_motif:
        try:
            ds = dataio.generate_skewed(genome_len, skew_motif, skew_frac, read_len, n_reads, seed)
        except ValueError as exc:
            raise click.UsageError(str(exc)) from None
    else:
        genome = dataio.generate_genome(genome_len, seed)
        ds = dataio.Dataset(dataio.generate_reads(genome, read_len, n_reads, seed + 1),
                            {"generator": "uniform", "seed": seed, "genome_len": genome_len,
                             "read_len": read_len, "n_reads": n_reads})
    if scale is not None:
        ds.origin["scale"] = scale
    try:
        with open(output, "wb") as fh:
            (dataio.write_fastq if fmt == "fastq" else dataio.write_fasta)(ds.reads, fh)
    except OSError as exc:
        raise click.FileError(str(output), hint=str(exc)) from None
    manifest = Path(str(output) + ".manifest.json")
    manifest.write_text(json.dumps({**ds.origin, "format": fmt, "path": str(output)}, indent=2))
    click.echo(f"wrote {len(ds.reads)} reads to {output}")


# --------------------------------------------------------------------------- count

@main.command("count")
@click.option("-i", "--input", "input_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--algo", type=click.Choice(["serial", "bsp", "fabsp"]), default="fabsp",
              show_default=True)
@click.option("-k", "k", type=int, default=31, show_default=True)
@click.option("--pes", type=int, default=4, show_default=True)
@click.option("--batch", type=int, default=None, help="BSP batch size b (default: one round).")
@click.option("--topology", type=click.Choice(TOPOLOGIES), default="1d", show_default=True)
@click.option("--c0", type=int, default=DEFAULT_C0, show_default=True)
@click.option("--c1", type=int, default=1024, show_default=True)
@click.option("--c2", type=int, default=32, show_default=True)
@click.option("--c3", type=int, default=10_000, show_default=True)
@click.option("--l3", type=click.Choice(["on", "off"]), default="on", show_default=True,
              callback=_on_off)
@click.option("--l2", type=click.Choice(["on", "off"]), default="on", show_default=True,
              callback=_on_off)
@click.option("--parallel", is_flag=True, help="One thread per PE instead of round-robin.")
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path),
              default=Path("counts.akct"), show_default=True)
@click.option("--text", is_flag=True, help="Write '<kmer>\\t<count>' lines instead of binary.")
@click.option("--report", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="Report JSON path (default: OUTPUT.report.json).")
def count_cmd(input_path, algo, k, pes, batch, topology, c0, c1, c2, c3, l3, l2, parallel,
              output, text, report):
    """Count k-mers of a FASTA/FASTQ file."""
    if not 1 <= k <= MAX_K:
        raise click.BadParameter(f"k must be in [1, {MAX_K}]", param_hint="-k")
    if pes < 1:
        raise click.BadParameter("must be >= 1", param_hint="--pes")
    if batch is not None and batch < 1:
        raise click.BadParameter("must be >= 1", param_hint="--batch")
    try:
        reads = dataio.parse_reads(input_path)
    except dataio.ParseError as exc:
        raise click.ClickException(f"{input_path}: {exc}") from None
    kwargs = {}
    if algo == "bsp":
        kwargs = {"P": pes, "b": batch}
    elif algo == "fabsp":
        try:
            config = AggregationConfig(c1=c1, c2=c2, c3=c3, l3_enabled=l3, l2_enabled=l2)
        except ValueError as exc:
            raise click.UsageError(str(exc)) from None
        kwargs = {"P": pes, "topology": topology, "config": config, "c0": c0,
                  "parallel": parallel}
    records, run = count(algo, reads, k, **kwargs)
    with open(output, "wb") as fh:
        dataio.write_counts(records, k, fh, text=text)
    report = report or Path(str(output) + ".report.json")
    report.write_text(json.dumps(run.to_dict(), indent=2, default=_json_default))
    m = run.metrics
    click.echo(f"{algo}: {len(records)} distinct k-mers, {run.kmers_generated} total; "
               f"barriers={m.barriers} collective_rounds={m.collective_rounds} "
               f"digest={run.digest}")


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


# --------------------------------------------------------------------------- model

def _parse_nodes(spec: str) -> list[int]:
    out: list[int] = []
    for part in spec.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = (int(x) for x in part.split("..", 1))
            out.extend(range(lo, hi + 1))
        elif part:
            out.append(int(part))
    if not out or min(out) < 1:
        raise click.BadParameter("node counts must be positive", param_hint="--nodes")
    return out


@main.command("model")
@click.option("--scale", type=int, default=None, help="Synthetic workload: 150-base reads from a 2**SCALE genome.")
@click.option("--reads", "n_reads", type=int, default=None)
@click.option("--read-len", type=int, default=dataio.SYNTHETIC_READ_LEN, show_default=True)
@click.option("-k", "k", type=int, default=31, show_default=True)
@click.option("--nodes", default="32", show_default=True, help="e.g. 32, 1,2,4 or 1..256")
@click.option("--mode", type=click.Choice(["sum", "max", "both"]), default="sum",
              show_default=True)
@click.option("--params", "params_file", type=click.Path(exists=True, dir_okay=False),
              help="JSON file with machine parameters (keys as the flags below).")
@click.option("--c-node", type=float, default=None, help="INT64 ops/s per node.")
@click.option("--beta-mem", type=float, default=None, help="Memory bandwidth, bytes/s.")
@click.option("--cache", "Z", type=float, default=None, help="Cache size, bytes.")
@click.option("--line", "L", type=float, default=None, help="Cache-line size, bytes.")
@click.option("--beta-link", type=float, default=None, help="NIC bandwidth, bytes/s.")
@click.option("-o", "--output", type=click.Path(dir_okay=False, path_type=Path), default=None)
def model_cmd(scale, n_reads, read_len, k, nodes, mode, params_file, c_node, beta_mem, Z, L,
              beta_link, output):
    """Evaluate the analytical cost model and emit CSV."""
    values = asdict(model.DEFAULT_MACHINE)
    if params_file:
        values.update(json.loads(Path(params_file).read_text()))
    for name, v in {"c_node": c_node, "beta_mem": beta_mem, "Z": Z, "L": L,
                    "beta_link": beta_link}.items():
        if v is not None:
            values[name] = v
    try:
        mch = model.MachineParams(**values)
    except (TypeError, ValueError) as exc:
        raise click.UsageError(f"machine parameters: {exc}") from None
    if scale is not None:
        _, read_len, default_n = dataio.synthetic_params(scale)
        n_reads = n_reads or default_n
        name = f"synthetic{scale}"
    elif n_reads is not None:
        name = "custom"
    else:
        raise click.UsageError("give --scale or --reads")
    modes = model.MODES if mode == "both" else (mode,)
    rows = []
    try:
        for P in _parse_nodes(nodes):
            w = model.WorkloadParams(n=n_reads, m=read_len, k=k, P=P)
            rows.extend(model.model_row(name, w, mch, md) for md in modes)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    if output:
        with open(output, "w", newline="") as fh:
            model.write_csv(rows, fh)
    else:
        click.echo(model.write_csv(rows), nl=False)


# --------------------------------------------------------------------------- verify

@main.command()
@click.argument("a", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("b", type=click.Path(exists=True, dir_okay=False, path_type=Path))
def verify(a, b):
    """Exit 0 if two count files hold identical records, 1 if not, 2 on k mismatch."""
    try:
        ra, ka = dataio.read_counts(a)
        rb, kb = dataio.read_counts(b)
    except dataio.CountFileError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    if ka != kb:
        click.echo(f"k mismatch: {a} has k={ka}, {b} has k={kb}", err=True)
        sys.exit(2)
    if len(ra) == len(rb) and np.array_equal(ra, rb):
        click.echo(f"identical: {len(ra)} records")
        sys.exit(0)
    diffs = _diff_records(ra, rb, ka, limit=10)
    for line in diffs:
        click.echo(line)
    sys.exit(1)


def _diff_records(ra, rb, k, limit=10):
    da = dict(zip(ra["kmer"].tolist(), ra["count"].tolist()))
    db = dict(zip(rb["kmer"].tolist(), rb["count"].tolist()))
    out = []
    for kmer in sorted(set(da) | set(db)):
        if da.get(kmer) != db.get(kmer):
            out.append(f"{decode(kmer, k)}\t{da.get(kmer, 0)}\t{db.get(kmer, 0)}")
            if len(out) == limit:
                break
    return out


if __name__ == "__main__":
    main()

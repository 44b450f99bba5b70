"""Command-line client for the retrieval engine service.

Every subcommand is a thin HTTP call: by default the service app runs in
process (no daemon needed), while --server points the same commands at a
remote instance sharing the filesystem. Exit codes: 0 success, 1 domain
error, 2 malformed input.
"""

from __future__ import annotations

import json
import sys

import click
import httpx

EXIT_DOMAIN = 1
EXIT_MALFORMED = 2

SEED_ENV = "CIR_SEED"
DEFAULT_SEED = 42


def _request(server: str | None, path: str, payload: dict) -> httpx.Response:
    if server:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            return client.post(path, json=payload)

    # In-process mode: the service app speaks ASGI, which httpx only drives
    # asynchronously, so run one request on a private event loop.
    import asyncio

    from .service import create_app

    async def go() -> httpx.Response:
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://cirslerp.internal", timeout=None
        ) as client:
            return await client.post(path, json=payload)

    return asyncio.run(go())


def _fail(code: int, error: str, detail) -> None:
    if isinstance(detail, list):  # request-model validation errors
        detail = "; ".join(
            f"{'.'.join(str(p) for p in item.get('loc', []))}: {item.get('msg', '')}" for item in detail
        )
    click.echo(f"error: {error}: {detail}", err=True)
    sys.exit(code)


def _post(server: str | None, path: str, payload: dict) -> dict:
    try:
        resp = _request(server, path, payload)
    except httpx.HTTPError as e:
        _fail(EXIT_DOMAIN, "ConnectionError", str(e))
    try:
        data = resp.json()
    except ValueError:
        _fail(EXIT_DOMAIN, "BadResponse", resp.text[:500])
    if resp.status_code == 200:
        return data
    error = data.get("error", f"HTTP{resp.status_code}")
    detail = data.get("detail", data)
    _fail(EXIT_MALFORMED if resp.status_code == 422 else EXIT_DOMAIN, error, detail)


def _echo_json(data: dict) -> None:
    click.echo(json.dumps(data, sort_keys=True, indent=2))


def _parse_float_list(text: str, what: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise click.UsageError(f"{what} must be a comma-separated list of numbers, got {text!r}")


def _parse_int_list(text: str, what: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise click.UsageError(f"{what} must be a comma-separated list of integers, got {text!r}")


@click.group()
@click.option("--server", default=None, envvar="CIR_SERVER", metavar="URL",
              help="Engine service URL; by default the service runs in process.")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Composed image retrieval: banks, search, metrics, anchored tuning."""
    ctx.obj = {"server": server}


@main.command()
@click.argument("bank", type=click.Path())
@click.option("--pretty", is_flag=True, help="Human-readable report instead of JSON.")
@click.pass_obj
def validate(obj: dict, bank: str, pretty: bool) -> None:
    """Check a bank file's structure and invariants."""
    data = _post(obj["server"], "/validate", {"bank_path": bank})
    if pretty:
        click.echo(f"entries: {data['n_entries']}  dim: {data['dim']}  modality: {data['modality']}")
        click.echo(f"max norm deviation: {data['max_norm_deviation']:.3e}  nan records: {data['nan_count']}")
        for line in data["errors"]:
            click.echo(f"error: {line}")
        for line in data["warnings"]:
            click.echo(f"warning: {line}")
        click.echo("ok" if data["ok"] else "FAILED")
    else:
        _echo_json(data)
    if not data["ok"]:
        sys.exit(EXIT_DOMAIN)


@main.command()
@click.argument("image_bank", type=click.Path())
@click.argument("text_bank", type=click.Path())
@click.argument("pairs", type=click.Path())
@click.argument("out_bank", type=click.Path())
@click.option("--alpha", type=click.FloatRange(0.0, 1.0), default=0.8, show_default=True,
              help="Interpolation weight toward the text embedding.")
@click.pass_obj
def compose(obj: dict, image_bank: str, text_bank: str, pairs: str, out_bank: str, alpha: float) -> None:
    """Write slerp-composed query embeddings to a new bank."""
    data = _post(obj["server"], "/compose", {
        "image_bank": image_bank, "text_bank": text_bank,
        "pairs_path": pairs, "out_bank": out_bank, "alpha": alpha,
    })
    _echo_json(data)


@main.command()
@click.argument("query_bank", type=click.Path())
@click.argument("gallery_bank", type=click.Path())
@click.option("-k", "k", type=click.IntRange(min=1), default=10, show_default=True,
              help="Hits per query.")
@click.option("--exclude", "exclude_path", type=click.Path(), default=None,
              help="TSV of query_id<TAB>gallery_id rows to drop from that query's results.")
@click.option("--shards", type=click.IntRange(min=1), default=1, show_default=True,
              help="Gallery partitions for selection (results are shard-invariant).")
@click.option("-o", "--out", "out_path", type=click.Path(), default=None,
              help="Also write the TSV to this path.")
@click.pass_obj
def search(obj: dict, query_bank: str, gallery_bank: str, k: int,
           exclude_path: str | None, shards: int, out_path: str | None) -> None:
    """Rank the gallery for every query in a bank; TSV to stdout."""
    data = _post(obj["server"], "/search", {
        "query_bank": query_bank, "gallery_bank": gallery_bank, "k": k,
        "exclude_path": exclude_path, "shards": shards, "out_path": out_path,
    })
    click.echo(data["tsv"], nl=False)


@main.command("eval")
@click.argument("protocol")
@click.argument("instances", type=click.Path())
@click.argument("image_bank", type=click.Path())
@click.argument("text_bank", type=click.Path())
@click.argument("gallery_bank", type=click.Path())
@click.option("--alpha", type=click.FloatRange(0.0, 1.0), default=None,
              help="Interpolation weight; defaults to the protocol's value.")
@click.option("--ks", default=None, metavar="K1,K2,...",
              help="Cutoffs to report; defaults to the protocol's list.")
@click.option("--exclude-reference", is_flag=True,
              help="Drop each query's reference image from the gallery ranking.")
@click.option("--shards", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("-o", "--out", "out_path", type=click.Path(), default=None,
              help="Also write the JSON report to this path.")
@click.option("--pretty", is_flag=True, help="Aligned table instead of JSON.")
@click.pass_obj
def eval_cmd(obj: dict, protocol: str, instances: str, image_bank: str, text_bank: str,
             gallery_bank: str, alpha: float | None, ks: str | None,
             exclude_reference: bool, shards: int, out_path: str | None, pretty: bool) -> None:
    """Score a benchmark instance file under a protocol."""
    payload = {
        "protocol": protocol, "instances_path": instances,
        "image_bank": image_bank, "text_bank": text_bank, "gallery_bank": gallery_bank,
        "alpha": alpha, "ks": _parse_int_list(ks, "--ks") if ks else None,
        "exclude_reference": exclude_reference, "shards": shards, "out_path": out_path,
    }
    data = _post(obj["server"], "/eval", payload)
    if pretty:
        click.echo(data["table"], nl=False)
    else:
        _echo_json({"config": data["config"], "report": data["report"]})


@main.command("sweep-alpha")
@click.argument("protocol")
@click.argument("instances", type=click.Path())
@click.argument("image_bank", type=click.Path())
@click.argument("text_bank", type=click.Path())
@click.argument("gallery_bank", type=click.Path())
@click.option("--alphas", default=None, metavar="A1,A2,...",
              help="Grid to sweep; default 0.0,0.1,...,1.0.")
@click.option("--ks", default=None, metavar="K1,K2,...")
@click.option("--exclude-reference", is_flag=True)
@click.option("--shards", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("-o", "--out", "out_path", type=click.Path(), default=None,
              help="Also write the TSV to this path.")
@click.pass_obj
def sweep_alpha(obj: dict, protocol: str, instances: str, image_bank: str, text_bank: str,
                gallery_bank: str, alphas: str | None, ks: str | None,
                exclude_reference: bool, shards: int, out_path: str | None) -> None:
    """Evaluate across an interpolation-weight grid; TSV to stdout."""
    payload = {
        "protocol": protocol, "instances_path": instances,
        "image_bank": image_bank, "text_bank": text_bank, "gallery_bank": gallery_bank,
        "alphas": _parse_float_list(alphas, "--alphas") if alphas else None,
        "ks": _parse_int_list(ks, "--ks") if ks else None,
        "exclude_reference": exclude_reference, "shards": shards, "out_path": out_path,
    }
    data = _post(obj["server"], "/sweep", payload)
    click.echo(data["tsv"], nl=False)


@main.command("train-tat")
@click.argument("config_file", type=click.Path())
@click.option("--out-blob", type=click.Path(), default="adapter.cta1", show_default=True,
              help="Trained adapter blob path.")
@click.option("--out-history", type=click.Path(), default="history.jsonl", show_default=True,
              help="Per-epoch history JSONL path.")
@click.option("--seed", type=int, default=DEFAULT_SEED, envvar=SEED_ENV, show_default=True,
              help="Overrides the config file's seed when given as flag or env.")
@click.option("--pretty", is_flag=True, help="Short human summary instead of JSON.")
@click.pass_context
def train_tat(ctx: click.Context, config_file: str, out_blob: str, out_history: str,
              seed: int, pretty: bool) -> None:
    """Run anchored tuning from a config file; writes blob and history."""
    source = ctx.get_parameter_source("seed")
    seed_override = seed if source in (
        click.core.ParameterSource.COMMANDLINE, click.core.ParameterSource.ENVIRONMENT,
    ) else None
    data = _post(ctx.obj["server"], "/train-tat", {
        "config_path": config_file, "out_blob": out_blob,
        "out_history": out_history, "seed": seed_override,
    })
    if pretty:
        pre, post = data["pre_gap"], data["post_gap"]
        click.echo(f"anchoring: {data['config']['anchoring']}  epochs: {data['config']['epochs']}")
        click.echo(f"loss: {data['initial_loss']:.6f} -> {data['final_loss']:.6f}")
        click.echo(f"held-out paired cosine: {pre['mean_paired_cosine']:.6f} -> {post['mean_paired_cosine']:.6f}")
        click.echo(f"retrieval R@1: {data['pre_recall1']:.4f} -> {data['post_recall1']:.4f}")
        click.echo(f"adapter: {data['out_blob']}  history: {data['out_history']}")
    else:
        _echo_json(data)


@main.command()
@click.argument("image_bank", type=click.Path())
@click.argument("text_bank", type=click.Path())
@click.option("--pairs", "pairs_path", type=click.Path(), default=None,
              help="Pairing file; without it banks align by shared ids or position.")
@click.option("--seed", type=int, default=DEFAULT_SEED, envvar=SEED_ENV, show_default=True,
              help="Seed for the mismatched-pair baseline sample.")
@click.option("--pretty", is_flag=True, help="Human-readable stats instead of JSON.")
@click.pass_obj
def gap(obj: dict, image_bank: str, text_bank: str, pairs_path: str | None,
        seed: int, pretty: bool) -> None:
    """Measure the modality gap between an image bank and a text bank."""
    data = _post(obj["server"], "/gap", {
        "image_bank": image_bank, "text_bank": text_bank,
        "pairs_path": pairs_path, "seed": seed,
    })
    if pretty:
        g = data["gap"]
        click.echo(f"pairs: {g['n_pairs']}")
        click.echo(f"paired cosine:   mean {g['mean_paired_cosine']:.6f}  std {g['std_paired_cosine']:.6f}")
        click.echo(f"paired angle:    mean {g['mean_paired_angle']:.6f} rad")
        if g["mean_unpaired_cosine"] is not None:
            click.echo(
                f"unpaired cosine: mean {g['mean_unpaired_cosine']:.6f}  "
                f"std {g['std_unpaired_cosine']:.6f}  (n={g['n_unpaired']})"
            )
    else:
        _echo_json(data)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int) -> None:
    """Run the engine service as a standalone HTTP server."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()

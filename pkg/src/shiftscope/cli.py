"""Command-line client for the diagnostics service.

By default the CLI mounts the FastAPI app in process (no network); point
--server at a running instance to go remote. The client does the file
handling: it parses inputs into request bodies, posts them, and writes
{schema_version, manifest, payload} reports.

Exit codes: 0 success, 2 malformed input, 3 theory-assertion failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from .errors import InputFormatError, ShiftscopeError
from . import io as sio


def _post_inprocess(path, body):
    import asyncio

    from .service import create_app

    async def go():
        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(
            transport=transport, base_url="http://shiftscope.local", timeout=None
        ) as client:
            return await client.post(path, json=body)

    return asyncio.run(go())


def _post(server, path, body):
    if server:
        with httpx.Client(base_url=server, timeout=3600.0) as client:
            resp = client.post(path, json=body)
    else:
        resp = _post_inprocess(path, body)
    if resp.status_code >= 400:
        try:
            err = resp.json()
        except json.JSONDecodeError:
            err = {"code": "error", "detail": resp.text}
        code = err.get("code", "error")
        click.echo(f"error [{code}]: {err.get('detail', '')}", err=True)
        sys.exit(3 if code == "bound-violated" else 2)
    return resp.json()


def _emit(payload: dict, out, manifest: sio.RunManifest) -> None:
    if out:
        sio.write_report(out, manifest, payload)
        click.echo(f"wrote {out}")
    else:
        click.echo(json.dumps(payload, indent=2, sort_keys=True))


def _fail_input(exc) -> None:
    click.echo(f"error [{getattr(exc, 'code', 'bad-input')}]: {exc}", err=True)
    sys.exit(2)


def _distribution_body(path) -> dict:
    from .dist import Pmf

    dist = sio.load_distribution(path)
    if isinstance(dist, Pmf):
        return {"mass": {str(k): v for k, v in dist.as_dict().items()}}
    return {"counts": {str(k): v for k, v in dist.as_dict().items()}}


@click.group()
@click.option("--server", default=None, help="Remote service URL; default runs in process.")
@click.pass_context
def main(ctx, server):
    """Distribution-shift diagnostics for generated dialogue."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@main.command()
@click.argument("file_a", type=click.Path(exists=True))
@click.argument("file_b", type=click.Path(exists=True))
@click.option("--coarsening", type=click.Path(exists=True), help="Fitted coarsening JSON.")
@click.option("--fit-embeddings", type=click.Path(exists=True), help="Fit a coarsening on these embeddings first.")
@click.option("--k", type=int, default=100, show_default=True, help="Cluster budget for --fit-embeddings.")
@click.option("--seed", type=int, default=None, help="Seed, required with --fit-embeddings.")
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def energy(ctx, file_a, file_b, coarsening, fit_embeddings, k, seed, out):
    """Energy distance between two label CSVs or pmf JSONs."""
    server = ctx.obj["server"]
    try:
        body = {"a": _distribution_body(file_a), "b": _distribution_body(file_b)}
        inputs = {"a": file_a, "b": file_b}
        if coarsening and fit_embeddings:
            raise InputFormatError("--coarsening and --fit-embeddings are exclusive")
        if coarsening:
            body["coarsening"] = {"fitted": json.loads(Path(coarsening).read_text())}
            inputs["coarsening"] = coarsening
        elif fit_embeddings:
            if seed is None:
                raise InputFormatError("--fit-embeddings requires --seed")
            table = sio.load_embeddings(fit_embeddings)
            fit = _post(server, "/v1/coarsen/fit", {
                "embeddings": {i: [float(x) for x in v] for i, v in zip(table.ids, table.vectors)},
                "k": k,
                "seed": seed,
            })
            body["coarsening"] = {"fitted": fit["coarsening"]}
            inputs["embeddings"] = fit_embeddings
    except (InputFormatError, ShiftscopeError, ValueError) as exc:
        _fail_input(exc)
    payload = _post(server, "/v1/energy", body)
    manifest = sio.RunManifest.build("energy", seed=seed, config=body, inputs=inputs)
    _emit(payload, out, manifest)


@main.command()
@click.argument("corpus", type=click.Path(exists=True))
@click.option("--tests", "tests_file", type=click.Path(exists=True), help="JSON list of test specs.")
@click.option("--test", "test_names", multiple=True, help="Builtin test name (repeatable).")
@click.option("--strategy", "strategies", multiple=True, help="name=kw1,kw2 keyword classifier (repeatable).")
@click.option("--scores", type=click.Path(exists=True), help="External score-table CSV (id,u,score).")
@click.option("--scores-name", default="external", show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def testdiv(ctx, corpus, tests_file, test_names, strategies, scores, scores_name, out):
    """Test divergence over a paired-corpus JSONL."""
    server = ctx.obj["server"]
    try:
        paired = sio.load_paired_corpus(corpus)
        tests: list = []
        if tests_file:
            tests.extend(json.loads(Path(tests_file).read_text()))
        tests.extend(test_names)
        for spec in strategies:
            name, _, kws = spec.partition("=")
            if not kws:
                raise InputFormatError(f"bad --strategy {spec!r}, want name=kw1,kw2")
            tests.append({"strategy": name, "keywords": kws.split(",")})
        if scores:
            table = sio.load_score_table_csv(scores)
            tests.append({
                "table": scores_name,
                "scores": {f"{i}|{u or ''}": v for (i, u), v in table.items()},
            })
        if not tests:
            raise InputFormatError("no tests given")
        body = {
            "pairs": [
                {
                    "context_id": item.context_id,
                    "human": sio.dialogue_to_json(item.human) | {"id": item.human.uid},
                    "generated": sio.dialogue_to_json(item.generated) | {"id": item.generated.uid},
                    "u": item.u,
                }
                for item in paired.items
            ],
            "tests": tests,
        }
    except (InputFormatError, ShiftscopeError, ValueError) as exc:
        _fail_input(exc)
    payload = _post(server, "/v1/testdiv", body)
    manifest = sio.RunManifest.build("testdiv", config=body["tests"], inputs={"corpus": corpus})
    _emit(payload, out, manifest)


@main.command()
@click.argument("instance", type=click.Path(exists=True))
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def bound(ctx, instance, out):
    """Evaluate the adaptation bound on a joint-model instance JSON.

    Exits 3 if the bound assertion itself fails (signals a bug, not data).
    """
    server = ctx.obj["server"]
    try:
        doc = json.loads(Path(instance).read_text())
        for key in ("contexts", "human", "gen1", "gen2", "noise", "test", "coarse_map"):
            if key not in doc:
                raise InputFormatError(f"{instance}: missing {key!r}")
        body = {
            "joint": {
                k: doc[k]
                for k in ("contexts", "human", "gen1", "gen2", "noise", "dialogues")
                if k in doc
            },
            "test": doc["test"],
            "coarse_map": doc["coarse_map"],
        }
    except (InputFormatError, json.JSONDecodeError) as exc:
        _fail_input(exc)
    payload = _post(server, "/v1/bound", body)
    manifest = sio.RunManifest.build("bound", config=body, inputs={"instance": instance})
    _emit(payload, out, manifest)


@main.command()
@click.option("--seed", type=int, required=True)
@click.option("--trials", type=int, default=2000, show_default=True, help="Generalized-bound fuzz trials.")
@click.option("--l2-pairs", type=int, default=2000, show_default=True)
@click.option("--quadrature-pairs", type=int, default=5, show_default=True)
@click.option("--quadrature-steps", type=int, default=200000, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def verify(ctx, seed, trials, l2_pairs, quadrature_pairs, quadrature_steps, out):
    """Run the oracle suite; exit 0 only if every check passes."""
    server = ctx.obj["server"]
    body = {
        "seed": seed,
        "fuzz_trials": trials,
        "l2_pairs": l2_pairs,
        "quadrature_pairs": quadrature_pairs,
        "quadrature_steps": quadrature_steps,
    }
    payload = _post(server, "/v1/verify", body)
    manifest = sio.RunManifest.build("verify", seed=seed, config=body)
    _emit(payload, out, manifest)
    if not payload.get("passed"):
        sys.exit(3)


def _scenario_body(config) -> dict:
    if config is None:
        return {}
    try:
        return json.loads(Path(config).read_text())
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{config}: invalid JSON ({exc})") from exc


@main.group()
def simulate():
    """Cooperative-learning game experiments."""


@simulate.command()
@click.option("--config", type=click.Path(exists=True), default=None, help="Scenario JSON.")
@click.option("--magnitudes", default="0,0.1,0.2,0.35,0.5", show_default=True)
@click.option("--seeds", default="1,2,3,4", show_default=True)
@click.option("--out-csv", type=click.Path(), default=None, help="Plot-ready sweep table.")
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def sweep(ctx, config, magnitudes, seeds, out_csv, out):
    """Magnitude sweep: energy vs change in test divergence."""
    server = ctx.obj["server"]
    try:
        scenario = _scenario_body(config)
        body = {
            "scenario": scenario,
            "magnitudes": [float(x) for x in magnitudes.split(",")],
            "seeds": [int(x) for x in seeds.split(",")],
        }
    except (InputFormatError, ValueError) as exc:
        _fail_input(exc)
    payload = _post(server, "/v1/simulate/sweep", body)
    if out_csv:
        Path(out_csv).write_text(
            sio.rows_to_csv_text(payload["rows"], payload["columns"])
        )
        click.echo(f"wrote {out_csv}")
    manifest = sio.RunManifest.build(
        "simulate-sweep", config=body, inputs={"config": config} if config else None
    )
    _emit(payload, out, manifest)


@simulate.command()
@click.option("--config", type=click.Path(exists=True), default=None, help="Scenario JSON.")
@click.option("--epochs", type=int, default=None)
@click.option("--seeds", default="1,2,3,4,5,6,7,8,9,10", show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def compare(ctx, config, epochs, seeds, out):
    """Plain vs human-regularized task phase on shared seeds."""
    server = ctx.obj["server"]
    try:
        body = {
            "scenario": _scenario_body(config),
            "epochs": epochs,
            "seeds": [int(x) for x in seeds.split(",")],
        }
    except (InputFormatError, ValueError) as exc:
        _fail_input(exc)
    payload = _post(server, "/v1/simulate/compare", body)
    manifest = sio.RunManifest.build(
        "simulate-compare", config=body, inputs={"config": config} if config else None
    )
    _emit(payload, out, manifest)


@main.group()
def coarsen():
    """Fit or apply coarsening functions."""


@coarsen.command()
@click.argument("embeddings", type=click.Path(exists=True))
@click.option("--k", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def fit(ctx, embeddings, k, seed, out):
    """Fit k-means on an embedding CSV/JSONL; emit the coarsening JSON."""
    server = ctx.obj["server"]
    try:
        table = sio.load_embeddings(embeddings)
        body = {
            "embeddings": {i: [float(x) for x in v] for i, v in zip(table.ids, table.vectors)},
            "k": k,
            "seed": seed,
        }
    except (InputFormatError, ShiftscopeError) as exc:
        _fail_input(exc)
    payload = _post(server, "/v1/coarsen/fit", body)
    manifest = sio.RunManifest.build(
        "coarsen-fit", seed=seed, config={"k": k}, inputs={"embeddings": embeddings}
    )
    _emit(payload, out, manifest)


@coarsen.command()
@click.argument("coarsening", type=click.Path(exists=True))
@click.option("--vector", "vectors", multiple=True, required=True, help="Comma-separated floats (repeatable).")
@click.option("--out", type=click.Path(), default=None)
@click.pass_context
def apply(ctx, coarsening, vectors, out):
    """Assign vectors to clusters of a fitted coarsening."""
    server = ctx.obj["server"]
    try:
        fitted = json.loads(Path(coarsening).read_text())
        vecs = [[float(x) for x in v.split(",")] for v in vectors]
    except (json.JSONDecodeError, ValueError) as exc:
        _fail_input(exc)
    payload = _post(server, "/v1/coarsen/assign", {"coarsening": fitted, "vectors": vecs})
    manifest = sio.RunManifest.build("coarsen-apply", inputs={"coarsening": coarsening})
    _emit(payload, out, manifest)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the service standalone (requires uvicorn)."""
    import uvicorn

    uvicorn.run("shiftscope.service:app", host=host, port=port)


if __name__ == "__main__":
    main()

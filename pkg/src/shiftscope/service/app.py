"""FastAPI service wrapping the diagnostics toolkit.

The CLI talks to this app in process by default; run it standalone with
uvicorn for multi-client use. All endpoints are pure functions of their
request bodies plus explicit seeds, so responses are reproducible.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..bound import TabularTest, dialogue_backed_test, evaluate_bound
from ..coarsening import CoarseningFunction, EmbeddingTable, fit_kmeans
from ..dist import OutcomeSpace, Pmf, SampleSet, pmf_from_samples
from ..energy import energy_coarsened, energy_estimate, energy_exact
from ..errors import BoundViolatedError, InputFormatError, ShiftscopeError
from ..gamesim import GameConfig, Scenario, compare_cl_leather, shift_sweep
from ..io import dialogue_from_json, joint_from_json
from ..oracle import run_verification
from ..testdiv import PairedCorpus, PairedItem, test_divergence
from ..testfns import BUILTIN_FACTORIES, build_tests
from . import schemas as S

PLUGIN_NOTE = "plug-in V-statistic of the empirical pmfs; bias is O(1/n)"


def create_app() -> FastAPI:
    app = FastAPI(title="shiftscope", version=__version__)

    @app.exception_handler(ShiftscopeError)
    async def _domain_error(request: Request, exc: ShiftscopeError):
        status = 500 if isinstance(exc, BoundViolatedError) else 422
        body = {"code": exc.code, "detail": str(exc)}
        if isinstance(exc, BoundViolatedError) and exc.report is not None:
            body["report"] = exc.report.as_dict()
        return JSONResponse(status_code=status, content=body)

    @app.exception_handler(ValueError)
    async def _value_error(request: Request, exc: ValueError):
        return JSONResponse(status_code=422, content={"code": "bad-input", "detail": str(exc)})

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/v1/energy", response_model=S.EnergyResponse)
    async def energy(req: S.EnergyRequest):
        a = _distribution(req.a)
        b = _distribution(req.b)
        sampled = isinstance(a, SampleSet) or isinstance(b, SampleSet)
        if req.coarsening is not None:
            ev = energy_coarsened(a, b, _coarsening(req.coarsening))
            coarsened = True
        elif isinstance(a, SampleSet) and isinstance(b, SampleSet):
            ev = energy_estimate(a, b)
            coarsened = False
        else:
            from ..dist import align
            from ..energy import EnergyValue

            pa = pmf_from_samples(a) if isinstance(a, SampleSet) else a
            pb = pmf_from_samples(b) if isinstance(b, SampleSet) else b
            ev = energy_exact(*align(pa, pb))
            if sampled:
                ev = EnergyValue(ev.value, "plugin-sample")
            coarsened = False
        note = PLUGIN_NOTE if ev.mode == "plugin-sample" else None
        return S.EnergyResponse(
            value=ev.value, mode=ev.mode, coarsened=coarsened, estimator_note=note
        )

    @app.post("/v1/testdiv", response_model=S.TestdivResponse)
    async def testdiv(req: S.TestdivRequest):
        items = tuple(
            PairedItem(
                context_id=p.context_id,
                human=dialogue_from_json(p.human.model_dump()),
                generated=dialogue_from_json(p.generated.model_dump()),
                u=p.u,
            )
            for p in req.pairs
        )
        report = test_divergence(PairedCorpus(items), build_tests(req.tests))
        return S.TestdivResponse(**report.as_dict())

    @app.post("/v1/bound", response_model=S.BoundResponse)
    async def bound(req: S.BoundRequest):
        joint = joint_from_json(req.joint.model_dump(exclude={"dialogues"}))
        h = _bound_test(req)
        report = evaluate_bound(joint, h, dict(req.coarse_map))
        return S.BoundResponse(**report.as_dict())

    @app.post("/v1/verify")
    async def verify(req: S.VerifyRequest):
        return run_verification(
            seed=req.seed,
            l2_pairs=req.l2_pairs,
            fuzz_trials=req.fuzz_trials,
            quadrature_pairs=req.quadrature_pairs,
            quadrature_tau=req.quadrature_tau,
            quadrature_steps=req.quadrature_steps,
        )

    @app.post("/v1/simulate/sweep", response_model=S.SweepResponse)
    async def simulate_sweep(req: S.SweepRequest):
        result = shift_sweep(_scenario(req.scenario), req.magnitudes, req.seeds)
        rows = [r.as_dict() for r in result.rows]
        return S.SweepResponse(
            rows=rows, pearson_r=result.pearson_r, columns=_sweep_columns(rows)
        )

    @app.post("/v1/simulate/compare", response_model=S.CompareResponse)
    async def simulate_compare(req: S.CompareRequest):
        result = compare_cl_leather(_scenario(req.scenario), req.epochs, req.seeds)
        return S.CompareResponse(**result.as_dict())

    @app.post("/v1/coarsen/fit", response_model=S.CoarsenFitResponse)
    async def coarsen_fit(req: S.CoarsenFitRequest):
        ids = tuple(sorted(req.embeddings))
        table = EmbeddingTable(
            ids=ids, vectors=np.asarray([req.embeddings[i] for i in ids], dtype=float)
        )
        c = fit_kmeans(table, req.k, req.seed)
        return S.CoarsenFitResponse(
            coarsening=c.to_json(), n_clusters=c.n_clusters, k_reduced=c.k_reduced
        )

    @app.post("/v1/coarsen/assign", response_model=S.CoarsenAssignResponse)
    async def coarsen_assign(req: S.CoarsenAssignRequest):
        c = CoarseningFunction.from_json(req.coarsening)
        clusters = [c.assign(v) for v in req.vectors]
        return S.CoarsenAssignResponse(
            clusters=clusters, representatives=[str(c.representatives[i]) for i in clusters]
        )

    return app


def _distribution(d: S.DistributionIn):
    if d.mass is not None:
        return Pmf.from_mapping(d.mass)
    s = SampleSet.from_counts(d.counts)
    if s.n < 1:
        raise InputFormatError("counts sum to zero")
    return s


def _coarsening(c: S.CoarseningIn):
    if c.fitted is not None:
        return CoarseningFunction.from_json(c.fitted)
    return dict(c.label_map)


def _bound_test(req: S.BoundRequest):
    spec = req.test
    kind = spec.get("kind")
    if kind == "table":
        values = {}
        for d, per_u in spec["values"].items():
            for u, v in per_u.items():
                values[(d, u)] = float(v)
        return TabularTest(name=spec.get("name", "table"), values=values)
    if kind == "builtin":
        if req.joint.dialogues is None:
            raise InputFormatError("builtin bound tests need a 'dialogues' table")
        dialogues = {
            k: dialogue_from_json(v.model_dump(), uid=k)
            for k, v in req.joint.dialogues.items()
        }
        name = spec["name"]
        if name not in BUILTIN_FACTORIES:
            raise InputFormatError(f"unknown builtin test {name!r}")
        return dialogue_backed_test(BUILTIN_FACTORIES[name](), dialogues)
    raise InputFormatError(f"unknown test kind {kind!r}")


def _scenario(s: S.ScenarioIn) -> Scenario:
    questions = tuple(s.questions) if s.questions else None
    cfg_kwargs = dict(
        n_contexts=s.n_contexts,
        n_objects_per_context=s.n_objects_per_context,
        m=s.m,
        seed=s.world_seed,
    )
    if questions:
        cfg_kwargs["question_vocab"] = OutcomeSpace.from_labels(questions)
        cfg = GameConfig(**cfg_kwargs)
    else:
        cfg = GameConfig.default(**cfg_kwargs)
    return Scenario(
        cfg=cfg,
        corpus_size=s.corpus_size,
        n_rollouts=s.n_rollouts,
        k_coarse=s.k_coarse,
        encoder_refinement=s.encoder_refinement,
        tests_spec=tuple(s.tests) if s.tests else Scenario.default().tests_spec,
        compare_step=s.compare_step,
        compare_epochs=s.compare_epochs,
    )


def _sweep_columns(rows) -> list:
    columns = ["magnitude", "seed", "epsilon"]
    extra = sorted({k for r in rows for k in r} - set(columns))
    return columns + extra


app = create_app()

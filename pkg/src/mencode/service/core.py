"""Orchestration between the wire models and the core package.

Every function here is pure given its request model, so the CLI can call
them in process while the FastAPI app exposes them over HTTP.
"""

from __future__ import annotations

import csv
import io
import math

import numpy as np

from .. import codelab
from ..data import Dataset, load_csv
from ..errors import ConfigError
from ..estimators import fit
from ..evaluate import (
    auto_ess,
    crossvalidate,
    curve_to_csv,
    learning_curve,
    loo_report,
    reports_to_csv,
)
from ..model import (
    NetworkStructure,
    naive_bayes_structure,
    parameters_to_jsonable,
    single_variable_structure,
)
from . import schemas


def build_dataset(payload: schemas.DatasetPayload) -> Dataset:
    return load_csv(payload.csv_text, payload.schema_spec.to_config_dict(),
                    name=payload.name)


def structure_for(dataset: Dataset, *, classification: bool) -> NetworkStructure:
    if dataset.schema.m >= 2:
        return naive_bayes_structure(dataset.schema)
    if classification:
        raise ConfigError("classification needs at least one attribute besides the class")
    return single_variable_structure(dataset.schema)


def _sizes_from_fractions(fractions, n: int) -> list[int]:
    if n < 2:
        raise ConfigError("protocol needs at least two rows")
    sizes = []
    for f in fractions:
        if not 0.0 < f <= 1.0:
            raise ConfigError(f"training fraction {f} outside (0, 1]")
        sizes.append(max(1, math.floor(f * (n - 1))))
    # dedupe, preserving the request order
    seen: set[int] = set()
    out = []
    for s in sizes:
        if s not in seen:
            seen.add(s)
            out.append(s)
    return out


def _resolve_ess(requested, dataset, structure, methods, protocol, **plan) -> float:
    if requested == "auto":
        return auto_ess(dataset, structure, methods, protocol, **plan)
    value = float(requested)
    if value <= 0:
        raise ConfigError(f"ess must be positive, got {value}")
    return value


def _dump_models(dataset, structure, methods, ess) -> dict[str, dict]:
    out = {}
    for method in methods:
        pred = fit(method, dataset, structure, ess)
        out[method] = parameters_to_jsonable(pred.params, dataset.schema)
    return out


def run_bench(req: schemas.BenchRequest) -> schemas.BenchResponse:
    dataset = build_dataset(req.dataset)
    structure = structure_for(dataset, classification=True)
    ess = _resolve_ess(req.ess, dataset, structure, req.methods, "bench",
                       k=req.k, repeats=req.repeats, seed=req.seed)
    reports = [
        crossvalidate(dataset, structure, method, k=req.k, repeats=req.repeats,
                      ess=ess, seed=req.seed, jobs=req.jobs)
        for method in req.methods
    ]
    return schemas.BenchResponse(
        rows=[schemas.ReportRow(**r.row()) for r in reports],
        ess=ess,
        csv_text=reports_to_csv(reports),
        models=_dump_models(dataset, structure, req.methods, ess)
        if req.dump_models else None,
    )


def run_loo(req: schemas.LooRequest) -> schemas.LooResponse:
    dataset = build_dataset(req.dataset)
    structure = structure_for(dataset, classification=False)
    sizes = _sizes_from_fractions(req.fractions, dataset.n)
    ess = _resolve_ess(req.ess, dataset, structure, req.methods, "loo",
                       s_values=sizes, seed=req.seed)
    reports = [
        loo_report(dataset, structure, method, s, ess, req.seed, jobs=req.jobs)
        for s in sizes
        for method in req.methods
    ]
    return schemas.LooResponse(
        rows=[schemas.ReportRow(**r.row()) for r in reports],
        ess=ess,
        csv_text=reports_to_csv(reports),
        models=_dump_models(dataset, structure, req.methods, ess)
        if req.dump_models else None,
    )


def run_curve(req: schemas.CurveRequest) -> schemas.CurveResponse:
    dataset = build_dataset(req.dataset)
    structure = structure_for(dataset, classification=False)
    sizes = _sizes_from_fractions(req.fractions, dataset.n)
    methods = list(req.methods)
    scan_methods = methods if "MMLWF" in methods else ["MMLWF", *methods]
    ess = _resolve_ess(req.ess, dataset, structure, scan_methods, "curve",
                       s_values=sizes, seed=req.seed)
    points = learning_curve(dataset, structure, methods, sizes, ess, req.seed,
                            jobs=req.jobs)
    full_csv = curve_to_csv(points)
    plot_csv = _plot_csv(points)
    return schemas.CurveResponse(
        rows=[
            schemas.CurvePointRow(
                s=p.s, method=p.method,
                mean_log_score_bits=p.mean_log_score,
                relative_to_mmlwf_bits=p.relative_to_mmlwf,
            )
            for p in points
        ],
        ess=ess,
        csv_text=full_csv,
        plot_csv_text=plot_csv,
    )


def _plot_csv(points) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("s", "method", "relative_to_mmlwf_bits"))
    for p in points:
        writer.writerow((p.s, p.method, format(p.relative_to_mmlwf, ".10g")))
    return buf.getvalue()


# --- codelab demos ---


def _fmt(x) -> str:
    return "" if x is None else format(x, ".10g")


def run_codelab_estimates(req: schemas.EstimatesRequest) -> schemas.EstimatesResponse:
    model = codelab.BernoulliFamily(req.n)
    ks = [req.k] if req.k is not None else list(range(req.n + 1))
    rows = []
    for k in ks:
        if not 0 <= k <= req.n:
            raise ConfigError(f"k={k} outside 0..{req.n}")
        est = {}
        for name, fn in (("mml_wf", codelab.mml_wf_estimate),
                         ("mml_p", codelab.mml_p_estimate),
                         ("mml_v", codelab.mml_v_estimate)):
            try:
                est[name] = fn(model, k, codelab.UNIFORM_PRIOR)
            except codelab.NoInteriorMaximum:
                est[name] = None
        rows.append(schemas.EstimateRow(n=req.n, k=k, **est))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("n", "k", "mml_wf", "mml_p", "mml_v"))
    for r in rows:
        writer.writerow((r.n, r.k, _fmt(r.mml_wf), _fmt(r.mml_p), _fmt(r.mml_v)))
    return schemas.EstimatesResponse(rows=rows, csv_text=buf.getvalue())


def run_codelab_lengths(req: schemas.LengthsRequest) -> schemas.LengthsResponse:
    if req.k > req.n:
        raise ConfigError(f"k={req.k} exceeds n={req.n}")
    model = codelab.BernoulliFamily(req.n)
    rows = []
    for i in range(1, req.points + 1):
        theta = i / (req.points + 1)
        fisher = codelab.fisher_information(model, theta)
        d = codelab.optimal_precision(model, theta)
        two_part = codelab.wf_two_part_length(model, req.k, theta, d,
                                              codelab.UNIFORM_PRIOR)
        expected = codelab.wf_expected_length(model, req.k, theta,
                                              codelab.UNIFORM_PRIOR)
        rows.append(schemas.LengthsRow(
            theta=theta, fisher_information=fisher, optimal_precision=d,
            two_part_nats=two_part, expected_nats=expected,
            expected_bits=codelab.nats_to_bits(expected),
        ))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("theta", "fisher_information", "optimal_precision",
                     "two_part_nats", "expected_nats", "expected_bits"))
    for r in rows:
        writer.writerow([_fmt(v) for v in (r.theta, r.fisher_information,
                                           r.optimal_precision, r.two_part_nats,
                                           r.expected_nats, r.expected_bits)])
    return schemas.LengthsResponse(rows=rows, csv_text=buf.getvalue())


def run_codelab_smml(req: schemas.SmmlRequest) -> schemas.SmmlResponse:
    model = codelab.BernoulliFamily(req.n, space=req.space)
    if req.grid is not None:
        grid = np.asarray(req.grid, dtype=float)
    else:
        grid = np.arange(1, req.grid_points + 1) / (req.grid_points + 1)
    result = codelab.smml_search(model, codelab.UNIFORM_PRIOR,
                                 req.max_codebook_size, grid)
    book = result.codebook
    codebook_rows = [
        schemas.CodewordRow(value=float(v), length_nats=float(L),
                            length_bits=codelab.nats_to_bits(float(L)))
        for v, L in zip(book.values, book.lengths)
    ]
    outcome_rows = []
    for i, out in enumerate(result.outcomes):
        cw = int(result.assignment[i])
        total = float(book.lengths[cw]
                      - model.outcome_log_prob(out, float(book.values[cw])))
        outcome_rows.append(schemas.SmmlOutcomeRow(
            outcome=out.label, successes=out.successes,
            marginal=float(result.marginals[i]), codeword_index=cw,
            total_length_nats=total,
            total_length_bits=codelab.nats_to_bits(total),
        ))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("outcome", "successes", "marginal", "codeword_index",
                     "codeword_value", "total_length_nats", "total_length_bits"))
    for r in outcome_rows:
        writer.writerow((r.outcome, r.successes, _fmt(r.marginal),
                         r.codeword_index, _fmt(float(book.values[r.codeword_index])),
                         _fmt(r.total_length_nats), _fmt(r.total_length_bits)))
    return schemas.SmmlResponse(
        expected_length_nats=result.expected_length,
        expected_length_bits=codelab.nats_to_bits(result.expected_length),
        codebook=codebook_rows,
        outcomes=outcome_rows,
        csv_text=buf.getvalue(),
    )


def run_codelab_normalize(req: schemas.NormalizeRequest) -> schemas.NormalizeResponse:
    model = codelab.BernoulliFamily(req.n, space=req.space)
    values = np.sort(np.asarray(req.codebook, dtype=float))
    book = codelab.QuantizedCodebook(
        values=values, lengths=np.full(values.size, math.log(max(values.size, 1))))
    result = codelab.normalized_two_part(model, book)
    rows = [
        schemas.NormalizeOutcomeRow(
            outcome=out.label, successes=out.successes,
            region=int(result.assignment[i]),
            plain_bits=codelab.nats_to_bits(float(result.plain_lengths[i])),
            normalized_bits=codelab.nats_to_bits(float(result.normalized_lengths[i])),
        )
        for i, out in enumerate(result.outcomes)
    ]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("outcome", "successes", "region", "plain_bits",
                     "normalized_bits"))
    for r in rows:
        writer.writerow((r.outcome, r.successes, r.region, _fmt(r.plain_bits),
                         _fmt(r.normalized_bits)))
    return schemas.NormalizeResponse(
        normalizers=[float(x) for x in result.normalizers],
        rows=rows,
        csv_text=buf.getvalue(),
    )

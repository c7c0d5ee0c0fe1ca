"""Command-line client for the mencode service.

The CLI reads local files, builds the service request models, dispatches
them (in process by default, over HTTP when --server is given), and
writes the returned reports plus a manifest echoing the configuration.

Exit codes: 0 success, 2 configuration problem, 3 no interior mode,
4 instance too large.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .errors import (
    ConfigError,
    InstanceTooLarge,
    MencodeError,
    NoInteriorMaximum,
    NoInteriorMode,
)
from .service import core, schemas

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_INTERIOR = 3
EXIT_TOO_LARGE = 4

RUN_DEFAULTS = {
    "dataset": None,
    "schema": None,
    "methods": list(schemas.DEFAULT_METHODS),
    "k": 5,
    "repeats": 100,
    "s": None,
    "ess": "auto",
    "seed": None,
    "jobs": 1,
    "out": "results",
    "format": "csv",
    "dump_model": False,
    "server": None,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mencode",
        description="Minimum-encoding predictive inference experiments",
    )
    parser.add_argument("--version", action="version", version=f"mencode {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("bench", "repeated k-fold cross-validated 0/1 scores"),
        ("loo", "leave-one-out joint log-scores"),
        ("curve", "learning curve relative to MMLWF"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_run_flags(p)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)

    lab = sub.add_parser("codelab", help="one-parameter codelength demos")
    labsub = lab.add_subparsers(dest="subcommand", required=True)

    est = labsub.add_parser("estimates", help="MML point estimates over k")
    est.add_argument("--n", type=int)
    est.add_argument("--k", type=int)
    _add_common_flags(est)

    lengths = labsub.add_parser("lengths", help="two-part codelengths over a theta grid")
    lengths.add_argument("--n", type=int)
    lengths.add_argument("--k", type=int)
    lengths.add_argument("--points", type=int)
    _add_common_flags(lengths)

    smml = labsub.add_parser("smml", help="exact strict-MML search")
    smml.add_argument("--n", type=int)
    smml.add_argument("--space", choices=["suffstat", "sequence"])
    smml.add_argument("--grid", type=str, help="comma-separated grid values")
    smml.add_argument("--grid-points", type=int, dest="grid_points")
    smml.add_argument("--max-size", type=int, dest="max_codebook_size")
    _add_common_flags(smml)

    norm = labsub.add_parser("normalize", help="normalized two-part code")
    norm.add_argument("--n", type=int)
    norm.add_argument("--codebook", type=str, help="comma-separated codeword values")
    norm.add_argument("--space", choices=["suffstat", "sequence"])
    _add_common_flags(norm)

    return parser


def _add_common_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", type=str, help="JSON config or manifest to rerun")
    p.add_argument("--out", type=str, help="output directory (default: results)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--server", type=str, help="base URL of a running mencode service")


def _add_run_flags(p: argparse.ArgumentParser):
    _add_common_flags(p)
    p.add_argument("--dataset", type=str, help="CSV data file")
    p.add_argument("--schema", type=str, help="JSON schema config file")
    p.add_argument("--method", action="append", dest="methods",
                   choices=list(schemas.DEFAULT_METHODS))
    p.add_argument("--k", type=int, help="fold count")
    p.add_argument("--repeats", type=int, help="cross-validation repeats")
    p.add_argument("--s", action="append", type=float, dest="s",
                   help="training fraction of n-1 (repeatable)")
    p.add_argument("--ess", type=str, help="equivalent sample size or 'auto'")
    p.add_argument("--seed", type=int)
    p.add_argument("--jobs", type=int, help="worker parallelism bound")
    p.add_argument("--dump-model", action="store_const", const=True, default=None,
                   dest="dump_model", help="write full-data parameter tables")


def console_main():  # pragma: no cover - thin wrapper
    sys.exit(main())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoInteriorMode, NoInteriorMaximum) as exc:
        print(f"error: {exc}", file=sys.stderr)
        hint = getattr(exc, "min_feasible_ess", None)
        if hint is not None:
            print(f"hint: retry with --ess {hint:g} or --ess auto", file=sys.stderr)
        return EXIT_NO_INTERIOR
    except InstanceTooLarge as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOO_LARGE
    except MencodeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _dispatch(args: argparse.Namespace) -> int:
    if args.command in ("bench", "loo", "curve"):
        return _run_experiment(args)
    if args.command == "codelab":
        return _run_codelab(args)
    if args.command == "serve":
        import uvicorn

        from .service import app

        uvicorn.run(app, host=args.host, port=args.port)
        return EXIT_OK
    raise ConfigError(f"unknown command {args.command!r}")


# --- configuration plumbing ---


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path!r} does not exist")
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path!r} is not valid JSON: {exc}") from None
    if isinstance(doc, dict) and "config" in doc and "command" in doc:
        doc = doc["config"]  # manifest rerun
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path!r} must hold a JSON object")
    return doc


def _merge_config(args: argparse.Namespace, defaults: dict) -> dict:
    cfg = dict(defaults)
    if getattr(args, "config", None):
        file_cfg = _load_config_file(args.config)
        for key in cfg:
            if key in file_cfg:
                cfg[key] = file_cfg[key]
    for key in cfg:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def _resolve_seed(raw) -> int:
    if raw is not None:
        return int(raw)
    env = os.environ.get("MENCODE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"MENCODE_SEED={env!r} is not an integer") from None
    return 0


def _parse_ess(raw):
    if isinstance(raw, (int, float)):
        value = float(raw)
    elif raw == "auto":
        return "auto"
    else:
        try:
            value = float(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"--ess must be a positive real or 'auto', got {raw!r}") from None
    if value <= 0:
        raise ConfigError(f"--ess must be positive, got {value}")
    return value


def _dataset_payload(cfg: dict) -> schemas.DatasetPayload:
    if not cfg.get("dataset"):
        raise ConfigError("a dataset CSV is required (--dataset or config)")
    if not cfg.get("schema"):
        raise ConfigError("a schema JSON is required (--schema or config)")
    data_path = Path(cfg["dataset"])
    schema_path = Path(cfg["schema"])
    for p in (data_path, schema_path):
        if not p.is_file():
            raise ConfigError(f"file {str(p)!r} does not exist")
    try:
        schema_doc = json.loads(schema_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"schema file is not valid JSON: {exc}") from None
    try:
        spec = schemas.SchemaSpec.model_validate(schema_doc)
    except ValueError as exc:
        raise ConfigError(f"schema file rejected: {exc}") from None
    return schemas.DatasetPayload(
        name=data_path.stem,
        csv_text=data_path.read_text(encoding="utf-8"),
        schema_spec=spec,
    )


# --- dispatch targets ---


def _client_call(server, endpoint: str, request, response_cls):
    if not server:
        local = {
            "/runs/bench": core.run_bench,
            "/runs/loo": core.run_loo,
            "/runs/curve": core.run_curve,
            "/codelab/estimates": core.run_codelab_estimates,
            "/codelab/lengths": core.run_codelab_lengths,
            "/codelab/smml": core.run_codelab_smml,
            "/codelab/normalize": core.run_codelab_normalize,
        }[endpoint]
        return local(request)
    import httpx

    try:
        with httpx.Client(base_url=server, timeout=3600.0) as client:
            resp = client.post(endpoint, json=request.model_dump(mode="json",
                                                                 by_alias=True))
    except httpx.HTTPError as exc:
        raise ConfigError(f"cannot reach server {server!r}: {exc}") from None
    if resp.status_code >= 400:
        raise _remote_error(resp)
    return response_cls.model_validate(resp.json())


def _remote_error(resp) -> MencodeError:
    try:
        body = resp.json()
    except ValueError:
        body = {}
    message = body.get("message") or body.get("detail") or resp.text
    name = body.get("error", "")
    if resp.status_code == 409:
        exc = NoInteriorMode(str(message)) if name != "NoInteriorMaximum" \
            else NoInteriorMaximum(str(message))
        if isinstance(exc, NoInteriorMode):
            exc.min_feasible_ess = body.get("min_feasible_ess")
        return exc
    if resp.status_code == 413:
        return InstanceTooLarge(str(message))
    return ConfigError(f"server rejected the request ({resp.status_code}): {message}")


def _run_experiment(args: argparse.Namespace) -> int:
    cfg = _merge_config(args, RUN_DEFAULTS)
    cfg["seed"] = _resolve_seed(cfg["seed"])
    cfg["ess"] = _parse_ess(cfg["ess"])
    if cfg["s"] is None:
        cfg["s"] = [1.0] if args.command == "loo" else [0.1, 0.25, 0.5, 1.0]
    payload = _dataset_payload(cfg)
    out_dir = Path(cfg["out"])

    if args.command == "bench":
        request = schemas.BenchRequest(
            dataset=payload, methods=cfg["methods"], k=cfg["k"],
            repeats=cfg["repeats"], ess=cfg["ess"], seed=cfg["seed"],
            jobs=cfg["jobs"], dump_models=bool(cfg["dump_model"]),
        )
        resp = _client_call(cfg["server"], "/runs/bench", request,
                            schemas.BenchResponse)
    elif args.command == "loo":
        request = schemas.LooRequest(
            dataset=payload, methods=cfg["methods"], fractions=cfg["s"],
            ess=cfg["ess"], seed=cfg["seed"], jobs=cfg["jobs"],
            dump_models=bool(cfg["dump_model"]),
        )
        resp = _client_call(cfg["server"], "/runs/loo", request, schemas.LooResponse)
    else:
        request = schemas.CurveRequest(
            dataset=payload, methods=cfg["methods"], fractions=cfg["s"],
            ess=cfg["ess"], seed=cfg["seed"], jobs=cfg["jobs"],
        )
        resp = _client_call(cfg["server"], "/runs/curve", request,
                            schemas.CurveResponse)

    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if cfg["format"] == "csv":
        report_path = out_dir / f"{args.command}_report.csv"
        _write_text(report_path, resp.csv_text)
    else:
        report_path = out_dir / f"{args.command}_report.json"
        doc = {"ess": resp.ess, "reports": [r.model_dump() for r in resp.rows]}
        _write_text(report_path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    written.append(report_path)

    if args.command == "curve":
        plot_path = out_dir / "curve_plot.csv"
        _write_text(plot_path, resp.plot_csv_text)
        written.append(plot_path)

    models = getattr(resp, "models", None)
    if models:
        for method, doc in models.items():
            model_path = out_dir / f"model_{method}.json"
            _write_text(model_path, json.dumps(doc, indent=2, sort_keys=True) + "\n")
            written.append(model_path)

    manifest_path = out_dir / "manifest.json"
    _write_text(manifest_path, _manifest(args.command, cfg, resolved_ess=resp.ess))
    written.append(manifest_path)

    for p in written:
        print(f"wrote {p}")
    print(f"ess: {resp.ess:g}")
    return EXIT_OK


CODELAB_DEFAULTS = {
    "estimates": {"n": 5, "k": None},
    "lengths": {"n": 12, "k": 6, "points": 25},
    "smml": {"n": 4, "space": "suffstat", "grid": None, "grid_points": 9,
             "max_codebook_size": 3},
    "normalize": {"n": 2, "codebook": "0.25,0.75", "space": "sequence"},
}


def _run_codelab(args: argparse.Namespace) -> int:
    sub = args.subcommand
    defaults = dict(CODELAB_DEFAULTS[sub])
    defaults.update({"out": "results", "format": "csv", "server": None})
    cfg = _merge_config(args, defaults)

    if sub == "estimates":
        request = schemas.EstimatesRequest(n=cfg["n"], k=cfg["k"])
        resp = _client_call(cfg["server"], "/codelab/estimates", request,
                            schemas.EstimatesResponse)
        rows = [r.model_dump() for r in resp.rows]
    elif sub == "lengths":
        request = schemas.LengthsRequest(n=cfg["n"], k=cfg["k"], points=cfg["points"])
        resp = _client_call(cfg["server"], "/codelab/lengths", request,
                            schemas.LengthsResponse)
        rows = [r.model_dump() for r in resp.rows]
    elif sub == "smml":
        request = schemas.SmmlRequest(
            n=cfg["n"], space=cfg["space"],
            grid=_parse_float_list(cfg["grid"]),
            grid_points=cfg["grid_points"],
            max_codebook_size=cfg["max_codebook_size"],
        )
        resp = _client_call(cfg["server"], "/codelab/smml", request,
                            schemas.SmmlResponse)
        rows = {
            "expected_length_nats": resp.expected_length_nats,
            "expected_length_bits": resp.expected_length_bits,
            "codebook": [r.model_dump() for r in resp.codebook],
            "outcomes": [r.model_dump() for r in resp.outcomes],
        }
    else:
        values = _parse_float_list(cfg["codebook"])
        if not values:
            raise ConfigError("--codebook needs at least one value")
        request = schemas.NormalizeRequest(n=cfg["n"], codebook=values,
                                           space=cfg["space"])
        resp = _client_call(cfg["server"], "/codelab/normalize", request,
                            schemas.NormalizeResponse)
        rows = {
            "normalizers": resp.normalizers,
            "outcomes": [r.model_dump() for r in resp.rows],
        }

    out_dir = Path(cfg["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg["format"] == "csv":
        path = out_dir / f"codelab_{sub}.csv"
        _write_text(path, resp.csv_text)
    else:
        path = out_dir / f"codelab_{sub}.json"
        _write_text(path, json.dumps(rows, indent=2, sort_keys=True) + "\n")
    manifest_path = out_dir / "manifest.json"
    _write_text(manifest_path, _manifest(f"codelab {sub}", cfg))
    print(f"wrote {path}")
    print(f"wrote {manifest_path}")
    if sub == "smml":
        print(f"expected length: {resp.expected_length_bits:.6g} bits")
    return EXIT_OK


def _parse_float_list(raw):
    if raw is None:
        return None
    if isinstance(raw, (list, tuple)):
        return [float(x) for x in raw]
    try:
        return [float(x) for x in str(raw).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated reals, got {raw!r}") from None


def _manifest(command: str, cfg: dict, resolved_ess: float | None = None) -> str:
    doc = {
        "artifact": "mencode",
        "version": __version__,
        "command": command,
        "config": {k: v for k, v in cfg.items() if k != "server"},
    }
    if resolved_ess is not None:
        doc["resolved_ess"] = resolved_ess
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write_text(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


if __name__ == "__main__":  # pragma: no cover
    console_main()

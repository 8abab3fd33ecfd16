"""Command-line interface.

One executable, seven subcommands covering the full pipeline: dataset
generation, image embedding, geometry metrics, JER estimation, task
evaluation, statistics, and report emission. Every run resolves its
configuration from (flag > config file > SENSORANK_SEED env > default) and
echoes the resolved values next to its outputs, so results stay auditable.

Exit codes: 0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__, embio, geometry, imagepipe, jacobian, probes, readout, stats
from .encoders import IdentityEncoder, BagOfFeaturesEncoder, MlpEncoder
from .errors import InsufficientNeighbors, SensorankError
from .fixtures import reference_records
from .wireclient import AdapterOracle

EXIT_CONFIG = 2
EXIT_DATA = 3


class ConfigError(Exception):
    """Bad flags, config keys, or option values; maps to exit code 2."""


# --------------------------------------------------------------------------
# config resolution
# --------------------------------------------------------------------------


def _env_seed() -> int:
    raw = os.environ.get("SENSORANK_SEED")
    if raw is None:
        return 42
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"SENSORANK_SEED must be an integer, got {raw!r}") from None


def _apply_config_file(args: argparse.Namespace, parser_defaults: dict) -> None:
    """Overlay config-file values under explicit CLI flags.

    Precedence: explicit flag > config file > environment/default. A flag
    was "explicit" iff its current value differs from the parser default;
    argparse offers no better signal without custom actions, so a flag
    explicitly set to its own default is indistinguishable from the default
    (the config value wins, which resolves to the same run unless the
    config disagrees). Unknown keys are rejected.
    """
    if not getattr(args, "config", None):
        return
    path = Path(args.config)
    try:
        doc = tomllib.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from None
    for key, value in doc.items():
        attr = key.replace("-", "_")
        if attr not in parser_defaults:
            raise ConfigError(f"unknown config key {key!r} for this subcommand")
        if getattr(args, attr) == parser_defaults[attr]:
            setattr(args, attr, value)


def _resolved_config(args: argparse.Namespace) -> dict:
    skip = {"func", "config", "command"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(value, Path):
            value = str(value)
        out[key] = value
    out["tool_version"] = __version__
    return out


def _emit_result(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _result_envelope(command: str, args: argparse.Namespace, **payload) -> dict:
    return {"tool": "sensorank", "tool_version": __version__, "command": command,
            "config": _resolved_config(args), **payload}


def _parse_shape(text: str) -> tuple[int, ...]:
    try:
        shape = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"bad shape {text!r}; expected comma-separated integers like 3,224,224") from None
    if not shape or any(d < 1 for d in shape):
        raise ConfigError(f"bad shape {text!r}")
    return shape


def _resolve_oracle(spec: str, input_shape: str | None, widths: str, activation: str, encoder_seed: int):
    """Build a JvpOracle (or scene encoder) from its CLI spec string.

    builtin:linear is the flattening identity (Jacobian = I); builtin:mlp is
    the seeded tanh MLP at desk scale unless --input-shape overrides;
    bag:factored / bag:joint embed manifest scenes symbolically;
    adapter:CMD launches a wire-protocol subprocess.
    """
    if spec.startswith("adapter:"):
        return AdapterOracle(spec[len("adapter:"):])
    if spec.startswith("bag:"):
        return BagOfFeaturesEncoder(spec[len("bag:"):], seed=encoder_seed)
    if spec == "builtin:linear":
        shape = _parse_shape(input_shape) if input_shape else (3, 224, 224)
        return IdentityEncoder(shape)
    if spec == "builtin:mlp":
        shape = _parse_shape(input_shape) if input_shape else (3, 16, 16)
        try:
            widths_tuple = tuple(int(w) for w in widths.split(","))
        except ValueError:
            raise ConfigError(f"bad widths {widths!r}") from None
        return MlpEncoder.from_widths(widths_tuple, activation, shape, encoder_seed)
    raise ConfigError(f"unknown oracle/encoder spec {spec!r}")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_gen_probes(args: argparse.Namespace) -> None:
    out_dir = Path(args.out)
    manifest = probes.gen_dataset(args.kind, args.n, args.seed, out_dir)
    echo = _result_envelope("gen-probes", args, n_entries=len(manifest.entries),
                            generator_version=manifest.generator_version)
    (out_dir / "config.json").write_text(json.dumps(echo, indent=2) + "\n")
    print(f"wrote {len(manifest.entries)} {args.kind} entries to {out_dir}")


def cmd_embed(args: argparse.Namespace) -> None:
    manifest = probes.load_manifest(args.manifest)
    root = Path(args.root) if args.root else Path(args.manifest).resolve().parent
    encoder = _resolve_oracle(args.encoder, args.input_shape, args.widths, args.activation, args.encoder_seed)
    try:
        emb = imagepipe.embed_manifest(manifest, encoder, root, out_path=args.out)
    finally:
        if hasattr(encoder, "close"):
            encoder.close()
    echo = _result_envelope("embed", args, n=emb.n, dim=emb.dim)
    Path(str(args.out) + ".config.json").write_text(json.dumps(echo, indent=2) + "\n")
    print(f"wrote {emb.n}x{emb.dim} embeddings to {args.out}")


def cmd_metrics(args: argparse.Namespace) -> None:
    emb = embio.read_embeddings(args.embeddings)
    spectrum = geometry.covariance_spectrum(emb)
    payload = {
        "n": emb.n,
        "dim": emb.dim,
        "g_pr": geometry.participation_ratio(spectrum, normalized=True, dim=emb.dim),
        "g_iso": geometry.isotropy_score(spectrum),
        "effective_rank": geometry.effective_rank_entropy(spectrum),
    }
    # local metrics have data-size preconditions the flags must respect
    try:
        payload["l_iso"] = geometry.local_isotropy(emb, k=args.local_k, n_anchors=args.anchors,
                                                   metric_kind=args.formulation, seed=args.seed)
        if args.sweep:
            sweep = geometry.local_isotropy_sweep(emb, n_anchors=args.anchors, seed=args.seed)
            payload["local_sweep"] = [
                {"k": k, "formulation": kind, "value": value} for (k, kind), value in sorted(sweep.items())
            ]
    except (ValueError, InsufficientNeighbors) as exc:
        raise ConfigError(
            f"--local-k/--anchors do not fit {emb.n} embeddings: {exc}"
        ) from exc
    if args.model_name:
        payload["model"] = args.model_name
        payload["arch"] = args.arch
        payload["objective"] = args.objective
    _emit_result(_result_envelope("metrics", args, **payload), args.out)


def _spectrum_csv(path: str, result: jacobian.JerResult) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["image_index", "sv_index", "sigma", "sigma_normalized"])
        for i, spectrum in enumerate(result.spectra):
            normalized = jacobian.normalized_spectrum(spectrum)
            for j, (sv, nsv) in enumerate(zip(spectrum.values, normalized)):
                writer.writerow([i, j, f"{sv:.10g}", f"{nsv:.10g}"])


def cmd_jer(args: argparse.Namespace) -> None:
    oracle = _resolve_oracle(args.oracle, args.input_shape, args.widths, args.activation, args.encoder_seed)
    if not hasattr(oracle, "jvp"):
        raise ConfigError(f"{args.oracle!r} cannot serve JVPs")
    try:
        result = jacobian.jer_mean(oracle, n_images=args.images, k=args.k, seed=args.seed,
                                   collect_spectra=True)
        payload = {
            "jer_mean": result.mean,
            "per_image": result.per_image,
            "k": result.k,
            "n_images": result.n_images,
            "directions": "per-image",  # fresh orthonormal set per probe image
            "spectrum_mean_normalized": np.mean(
                [jacobian.normalized_spectrum(s) for s in result.spectra], axis=0).tolist(),
        }
        if args.depth_profile:
            payload["depth_profile"] = jacobian.jer_depth_profile(
                oracle, n_images=args.images, k=args.k, seed=args.seed)
        if args.spectrum_out:
            _spectrum_csv(args.spectrum_out, result)
        if args.model_name:
            payload["model"] = args.model_name
            payload["arch"] = args.arch
            payload["objective"] = args.objective
    finally:
        if hasattr(oracle, "close"):
            oracle.close()
    _emit_result(_result_envelope("jer", args, **payload), args.out)


def cmd_eval(args: argparse.Namespace) -> None:
    manifest = probes.load_manifest(args.manifest)
    emb = embio.read_embeddings(args.embeddings)
    if args.task == "binding":
        res = readout.eval_binding(manifest, emb, readout_kind=args.readout,
                                   knn_k=args.k, components=args.components,
                                   neighborhood=args.neighborhood)
        payload = {"task": "binding", "readout": args.readout, "accuracy": res.accuracy,
                   "n": res.n, "per_trial": res.per_trial}
    else:
        if args.readout != "cosine":
            raise ConfigError("same/different evaluation is defined on cosine distances only")
        res = readout.eval_samediff(manifest, emb)
        payload = {"task": "samediff", "readout": "cosine", "accuracy": res["accuracy"],
                   "n": res["n"], "threshold": res["threshold"], "per_trial": res["per_pair"]}
    if args.model_name:
        payload["model"] = args.model_name
        payload["arch"] = args.arch
        payload["objective"] = args.objective
    _emit_result(_result_envelope("eval", args, **payload), args.out)


def cmd_correlate(args: argparse.Namespace) -> None:
    if args.fixtures:
        records = reference_records()
    elif args.records:
        records = stats.load_records(args.records, args.dims)
    else:
        raise ConfigError("provide --records FILE.csv or --fixtures")
    xs = args.x.split(",")
    y = stats.column(records, args.y)
    payload: dict = {"x": args.x, "y": args.y, "n": len(records)}
    if len(xs) == 1:
        x = stats.column(records, xs[0])
        corr = stats.pearson(x, y)
        payload["r"] = corr.r
        payload["p"] = corr.p
        if args.control:
            z = stats.column(records, args.control)
            partial = stats.partial_correlation(x, y, z)
            payload["control"] = args.control
            payload["partial_r"] = partial.r
            payload["partial_p"] = partial.p
        if args.jackknife:
            control = stats.column(records, args.control) if args.control else None
            retained, folds = stats.jackknife_significance(x, y, alpha=args.alpha, control=control)
            payload["jackknife_retained"] = retained
            payload["jackknife_folds"] = len(folds)
    X = np.column_stack([stats.column(records, name) for name in xs])
    fit = stats.ols_r2(X, y)
    payload["r_squared"] = fit.r_squared
    if args.loo:
        payload["loo_r_squared"] = stats.loo_cv_r2(X, y)
    _emit_result(_result_envelope("correlate", args, **payload), args.out)


# ---- report assembly -------------------------------------------------------

LEADERBOARD_COLUMNS = ("model", "arch", "objective", "g_pr", "g_iso", "l_iso", "jer", "disc", "binding")


def _load_report_inputs(paths: list[str]) -> list[dict]:
    results = []
    mismatched = []
    for path in paths:
        doc = json.loads(Path(path).read_text())
        if doc.get("tool_version") != __version__:
            mismatched.append(f"{path} (version {doc.get('tool_version')!r})")
        results.append(doc)
    if mismatched:
        raise SensorankError(
            f"input files were produced by a different tool version than {__version__}: "
            + ", ".join(mismatched)
        )
    return results


def _leaderboard_rows(results: list[dict], fixture_rows: list) -> list[dict]:
    rows: dict[tuple[str, str], dict] = {}
    for rec in fixture_rows:
        row = {"model": rec.name, "arch": rec.arch, "objective": rec.objective, **rec.metrics}
        rows[(rec.name, rec.arch)] = row
    for doc in results:
        model = doc.get("model")
        if not model:
            continue
        key = (model, doc.get("arch", ""))
        row = rows.setdefault(key, {"model": key[0], "arch": key[1], "objective": doc.get("objective", "")})
        if doc["command"] == "metrics":
            for field in ("g_pr", "g_iso", "l_iso"):
                row[field] = doc[field]
        elif doc["command"] == "jer":
            row["jer"] = doc["jer_mean"]
        elif doc["command"] == "eval":
            row["binding" if doc["task"] == "binding" else "disc"] = 100.0 * doc["accuracy"]
    return list(rows.values())


def _correlation_table(records: list) -> list[dict]:
    """Rows in the layout of the headline metric-vs-binding table."""
    y = stats.column(records, "binding")
    table = []
    for category, key in (("geometry", "g_pr"), ("geometry", "g_iso"), ("geometry", "l_iso"),
                          ("functional", "jer"), ("control", "disc")):
        corr = stats.pearson(stats.column(records, key), y)
        table.append({"category": category, "metric": key, "r": round(corr.r, 4),
                      "p": round(corr.p, 6), "r_squared": "", "loo_r_squared": ""})
    X = np.column_stack([stats.column(records, "jer"), stats.column(records, "disc")])
    table.append({"category": "bivariate", "metric": "jer+disc", "r": "", "p": "",
                  "r_squared": round(stats.ols_r2(X, y).r_squared, 4),
                  "loo_r_squared": round(stats.loo_cv_r2(X, y), 4)})
    return table


def cmd_report(args: argparse.Namespace) -> None:
    if not args.inputs and not args.fixtures:
        raise ConfigError("report needs result JSONs (--inputs) and/or --fixtures")
    results = _load_report_inputs(args.inputs)
    fixture_rows = reference_records() if args.fixtures else []
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    rows = _leaderboard_rows(results, fixture_rows)
    rows.sort(key=lambda r: -float(r.get("binding", -1.0)))
    with open(out_dir / "leaderboard.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=LEADERBOARD_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({col: row.get(col, "") for col in LEADERBOARD_COLUMNS})

    if args.fixtures:
        with open(out_dir / "correlations.csv", "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["category", "metric", "r", "p", "r_squared", "loo_r_squared"])
            writer.writeheader()
            writer.writerows(_correlation_table(reference_records()))

    with open(out_dir / "spectrum.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "sv_index", "sigma_normalized"])
        for doc in results:
            if doc["command"] == "jer" and "spectrum_mean_normalized" in doc:
                for j, value in enumerate(doc["spectrum_mean_normalized"]):
                    writer.writerow([doc.get("model", "unnamed"), j, f"{value:.10g}"])

    with open(out_dir / "depth_profile.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["model", "tap_index", "tap", "jer"])
        for doc in results:
            for j, (tap, value) in enumerate(doc.get("depth_profile", {}).items()):
                writer.writerow([doc.get("model", "unnamed"), j, tap, f"{value:.10g}"])

    echo = _result_envelope("report", args, n_inputs=len(results), n_rows=len(rows))
    (out_dir / "config.json").write_text(json.dumps(echo, indent=2) + "\n")
    print(f"report written to {out_dir}")


# --------------------------------------------------------------------------
# parser wiring
# --------------------------------------------------------------------------


def _add_model_tags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--model-name", default="", help="model label for report assembly")
    sub.add_argument("--arch", default="", help="architecture label for report assembly")
    sub.add_argument("--objective", default="", help="training-objective label for report assembly")


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=_env_seed(),
                     help="root RNG seed; SENSORANK_SEED overrides the built-in 42")
    sub.add_argument("--config", default=None,
                     help="TOML config file; explicit flags take precedence over its keys")
    sub.add_argument("--out", default=None, help="write result JSON here instead of stdout")


def _add_oracle_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--input-shape", default=None,
                     help="override oracle input shape, e.g. 3,224,224 (builtin:mlp defaults to 3,16,16)")
    sub.add_argument("--widths", default="64,64,32", help="builtin:mlp layer widths")
    sub.add_argument("--activation", default="tanh", choices=("tanh", "relu", "gelu"),
                     help="builtin:mlp activation")
    sub.add_argument("--encoder-seed", type=int, default=0, help="builtin encoder parameter seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sensorank",
        description=__doc__,
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"sensorank {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)
    registry: dict[str, argparse.ArgumentParser] = {}
    parser.subcommand_parsers = registry  # command name -> subparser, for default lookup

    p = subs.add_parser("gen-probes", help="generate a synthetic probe dataset",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--kind", choices=("binding", "samediff"), required=True)
    p.add_argument("--n", type=int, default=500, help="number of trials/pairs")
    p.add_argument("--out", required=True, help="output directory for PNGs + manifest.json")
    p.add_argument("--seed", type=int, default=_env_seed(),
                   help="dataset seed; SENSORANK_SEED overrides the built-in 42")
    p.add_argument("--config", default=None, help="TOML config file")
    p.set_defaults(func=cmd_gen_probes)

    p = subs.add_parser("embed", help="embed manifest images into an EMB1 file",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--manifest", required=True)
    p.add_argument("--root", default=None, help="image root (defaults to the manifest directory)")
    p.add_argument("--encoder", default="builtin:linear",
                   help="builtin:linear (identity) | builtin:mlp | bag:factored | bag:joint | adapter:CMD; "
                        "images are resized to 256, center-cropped to 224, and ImageNet-normalized "
                        "(mean 0.485,0.456,0.406 / std 0.229,0.224,0.225) before pixel encoders")
    p.add_argument("--out", required=True, help="output EMB1 path")
    p.add_argument("--seed", type=int, default=_env_seed(), help="unused by deterministic encoders; recorded")
    p.add_argument("--config", default=None, help="TOML config file")
    _add_oracle_flags(p)
    p.set_defaults(func=cmd_embed, input_shape="3,224,224")

    p = subs.add_parser("metrics", help="global + local embedding geometry",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--embeddings", required=True, help="EMB1 or CSV embedding file")
    p.add_argument("--local-k", type=int, default=16, help="neighborhood size k")
    p.add_argument("--anchors", type=int, default=500, help="anchor samples for local isotropy")
    p.add_argument("--formulation", default="variance", choices=geometry.METRIC_KINDS,
                   help="local metric formulation")
    p.add_argument("--sweep", action="store_true",
                   help="also evaluate the robustness grid k in {8,16,32} x all formulations")
    _add_common(p)
    _add_model_tags(p)
    p.set_defaults(func=cmd_metrics)

    p = subs.add_parser("jer", help="Jacobian effective rank via randomized sketching",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--oracle", default="builtin:mlp",
                   help="builtin:mlp | builtin:linear (identity) | adapter:CMD")
    p.add_argument("--images", type=int, default=100,
                   help="probe images (Gaussian noise, mean 0.45, std 0.225, clipped to [0,1])")
    p.add_argument("--k", type=int, default=32, help="random orthonormal probe directions")
    p.add_argument("--depth-profile", action="store_true", help="also compute JER at each declared tap")
    p.add_argument("--spectrum-out", default=None, help="write per-image spectra CSV here")
    _add_common(p)
    _add_oracle_flags(p)
    _add_model_tags(p)
    p.set_defaults(func=cmd_jer)

    p = subs.add_parser("eval", help="evaluate binding or same/different from embeddings",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--task", choices=("binding", "samediff"), required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--readout", default="cosine", choices=readout.READOUT_KINDS,
                   help="selection rule (binding); samediff thresholds cosine distance "
                        "over percentiles 0-100 step 5")
    p.add_argument("--k", type=int, default=60, help="kNN neighborhood size (cosine distance)")
    p.add_argument("--components", type=int, default=32, help="local PCA components")
    p.add_argument("--neighborhood", type=int, default=50, help="local PCA neighborhood")
    _add_common(p)
    _add_model_tags(p)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("correlate", help="correlation / regression over model records",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--records", default=None, help="leaderboard CSV (model,arch,objective,metrics...)")
    p.add_argument("--dims", default=None, help="embedding-dims CSV to merge (model,arch,embed_dim)")
    p.add_argument("--fixtures", action="store_true", help="use the bundled 21-model reference leaderboard")
    p.add_argument("--x", default="jer", help="predictor column, or comma list for multivariate R^2")
    p.add_argument("--y", default="binding", help="response column")
    p.add_argument("--control", default=None, help="covariate column for partial correlation")
    p.add_argument("--loo", action="store_true", help="also compute leave-one-out R^2")
    p.add_argument("--jackknife", action="store_true", help="leave-one-out significance retention")
    p.add_argument("--alpha", type=float, default=0.05, help="jackknife retention threshold")
    _add_common(p)
    p.set_defaults(func=cmd_correlate)

    p = subs.add_parser("report", help="emit leaderboard/correlation/spectrum/profile CSVs",
                        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("--inputs", nargs="*", default=[], help="result JSONs from other subcommands")
    p.add_argument("--fixtures", action="store_true", help="include the bundled reference leaderboard")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=_env_seed(), help="recorded in the config echo")
    p.add_argument("--config", default=None, help="TOML config file")
    p.set_defaults(func=cmd_report)

    registry.update(subs.choices)
    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        sub = parser.subcommand_parsers[args.command]
        defaults = {
            key: sub.get_default(key) for key in vars(args) if key not in ("func", "command")
        }
        _apply_config_file(args, defaults)
        args.func(args)
    except ConfigError as exc:
        print(f"sensorank: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SensorankError, OSError, json.JSONDecodeError) as exc:
        print(f"sensorank: {exc}", file=sys.stderr)
        return EXIT_DATA
    return 0


if __name__ == "__main__":
    sys.exit(main())

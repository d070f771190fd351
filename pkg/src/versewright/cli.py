"""Command-line surface: each subcommand writes its outputs plus a run manifest beside them.

The manifest records the command, its configuration, SHA-256 digests of every
input, the seed, and the output paths, so a pipeline run can prove what it read
and skip stages whose inputs have not changed. Exit codes: 0 success, 1 domain
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import shlex
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from .decoder import DecoderConfig, generate
from .errors import EngineError, InputFormatError
from .lm import BridgeClient, Context, NGramModel, train_ngram
from .melody import compile_constraints, ConstraintSet, parse_melody
from .metrics import evaluate, stress_duration_pct
from .multitask import build_dataset
from .phonetics import Lexicon, load_lexicon
from .planner import CooccurrenceTable, GenerationRequest, make_plan, parse_plan_text, render_plan

MODEL_FORMAT = "versewright-lm/1"


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    try:
        with open(path, "rb") as handle:
            for chunk in iter(lambda: handle.read(65536), b""):
                digest.update(chunk)
    except OSError as exc:
        raise InputFormatError(f"cannot read input file {path}: {exc}") from exc
    return digest.hexdigest()


def _manifest_path(output: Path) -> Path:
    return output.with_name(output.name + ".manifest.json")


def _manifest_core(command: str, config: dict, inputs: dict[str, Path]) -> dict:
    return {
        "command": command,
        "config": config,
        "inputs": {
            label: {"path": str(path), "sha256": _sha256(path)}
            for label, path in sorted(inputs.items())
        },
    }


def write_manifest(
    output: Path,
    core: dict,
    outputs: dict[str, str],
    seed: int,
    started: str,
    elapsed: float,
) -> Path:
    manifest = dict(core)
    manifest["outputs"] = dict(sorted(outputs.items()))
    manifest["seed"] = seed
    manifest["timing"] = {"started_utc": started, "elapsed_seconds": round(elapsed, 6)}
    path = _manifest_path(output)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return path


def _stage_current(output: Path, core: dict) -> bool:
    """True when the output and its manifest exist and the manifest matches ``core``."""
    manifest = _manifest_path(output)
    if not output.exists() or not manifest.exists():
        return False
    try:
        with open(manifest, encoding="utf-8") as handle:
            recorded = json.load(handle)
    except (OSError, json.JSONDecodeError):
        return False
    return all(recorded.get(key) == core[key] for key in ("command", "config", "inputs"))


def save_model(path: Path, model: NGramModel, cooccurrence: CooccurrenceTable) -> None:
    payload = {
        "format": MODEL_FORMAT,
        "ngram": model.to_dict(),
        "cooccurrence": cooccurrence.to_dict(),
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True)
        handle.write("\n")


def load_model(path: Path) -> tuple[NGramModel, CooccurrenceTable]:
    try:
        with open(path, encoding="utf-8") as handle:
            payload = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFormatError(f"cannot read model file {path}: {exc}") from exc
    if payload.get("format") != MODEL_FORMAT:
        raise InputFormatError(
            f"unsupported model format {payload.get('format')!r} in {path}"
        )
    return NGramModel.from_dict(payload["ngram"]), CooccurrenceTable.from_dict(
        payload["cooccurrence"]
    )


def _read_text(path: Path, label: str) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputFormatError(f"cannot read {label} file {path}: {exc}") from exc


def _read_lines(path: Path, label: str) -> list[str]:
    return _read_text(path, label).splitlines()


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _load_constraints(path: Path) -> ConstraintSet:
    try:
        payload = json.loads(_read_text(path, "constraints"))
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"constraints file {path} is not valid JSON: {exc}") from exc
    return ConstraintSet.from_dict(payload)


def _lexicon(path: str | None) -> Lexicon:
    return load_lexicon(path)


def _parse_mix(text: str) -> dict[str, float]:
    mix: dict[str, float] = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        name, _, value = part.partition("=")
        if not value:
            raise InputFormatError(f"task mix entry needs task=weight, got {part!r}")
        try:
            mix[name.strip()] = float(value)
        except ValueError as exc:
            raise InputFormatError(f"bad task mix weight in {part!r}") from exc
    if not mix:
        raise InputFormatError("empty task mix")
    return mix


def _parse_words(text: str) -> list[str]:
    words = [w.strip() for w in text.split(",") if w.strip()]
    if not words:
        raise InputFormatError("expected a comma-separated word list")
    return words


def _decoder_config(args: argparse.Namespace, alpha: float | None = None) -> DecoderConfig:
    return DecoderConfig(
        alpha=args.alpha if alpha is None else alpha,
        beam_width=args.beam_width,
        num_groups=args.num_groups,
        diversity_strength=args.diversity,
        top_k=args.top_k,
        oov_policy=args.oov_policy,
        seed=args.seed,
    )


# -- subcommand bodies -------------------------------------------------------


def do_train_lm(
    corpus: Path,
    out: Path,
    order: int,
    smoothing: str,
    k: float,
    min_count: int,
    seed: int,
) -> Path:
    started = datetime.now(timezone.utc).isoformat()
    clock = time.monotonic()
    config = {
        "order": order,
        "smoothing": smoothing,
        "k": k,
        "min_count": min_count,
    }
    core = _manifest_core("train-lm", config, {"corpus": corpus})
    text = _read_text(corpus, "corpus")
    model = train_ngram(text, order=order, smoothing=smoothing, k=k, min_count=min_count)
    table = CooccurrenceTable.build(text)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_model(out, model, table)
    write_manifest(out, core, {"model": str(out)}, seed, started, time.monotonic() - clock)
    return out


def do_compile(melody_path: Path, out: Path, mean_scope: str, seed: int) -> Path:
    started = datetime.now(timezone.utc).isoformat()
    clock = time.monotonic()
    core = _manifest_core("compile", {"mean_scope": mean_scope}, {"melody": melody_path})
    melody = parse_melody(_read_text(melody_path, "melody"))
    constraints = compile_constraints(melody, mean_scope=mean_scope)
    _write_text(out, json.dumps(constraints.to_dict(), indent=2, sort_keys=True) + "\n")
    write_manifest(out, core, {"constraints": str(out)}, seed, started, time.monotonic() - clock)
    return out


def do_plan(
    title: str,
    salient: list[str],
    constraints_path: Path,
    model_path: Path | None,
    out: Path,
    keywords_per_line: int,
    lexicon_path: str | None,
    seed: int,
) -> Path:
    started = datetime.now(timezone.utc).isoformat()
    clock = time.monotonic()
    inputs = {"constraints": constraints_path}
    if model_path is not None:
        inputs["model"] = model_path
    config = {
        "title": title,
        "salient": salient,
        "keywords_per_line": keywords_per_line,
    }
    core = _manifest_core("plan", config, inputs)
    constraints = _load_constraints(constraints_path)
    budgets = [b for b in constraints.budgets if b > 0]
    cooccurrence = None
    if model_path is not None:
        _, cooccurrence = load_model(model_path)
    request = GenerationRequest(
        title=title,
        salient_words=tuple(salient),
        num_lines=len(budgets),
        keywords_per_line=keywords_per_line,
    )
    plan = make_plan(request, lexicon=_lexicon(lexicon_path), cooccurrence=cooccurrence)
    _write_text(out, render_plan(plan, budgets) + "\n")
    write_manifest(out, core, {"plan": str(out)}, seed, started, time.monotonic() - clock)
    return out


def do_generate(
    plan_path: Path,
    constraints_path: Path,
    out: Path,
    model_path: Path | None,
    bridge: str | None,
    config: DecoderConfig,
    lexicon_path: str | None,
    trace_path: Path | None = None,
) -> Path:
    started = datetime.now(timezone.utc).isoformat()
    clock = time.monotonic()
    inputs = {"plan": plan_path, "constraints": constraints_path}
    if model_path is not None:
        inputs["model"] = model_path
    flags = {
        "alpha": config.alpha,
        "beam_width": config.beam_width,
        "num_groups": config.num_groups,
        "diversity": config.diversity_strength,
        "top_k": config.top_k,
        "oov_policy": config.oov_policy,
        "bridge": bridge,
    }
    core = _manifest_core("generate", flags, inputs)
    plan, _ = parse_plan_text(_read_text(plan_path, "plan"))
    constraints = _load_constraints(constraints_path)
    lexicon = _lexicon(lexicon_path)
    if bridge is not None:
        with BridgeClient(shlex.split(bridge)) as model:
            result = generate(
                plan, constraints, model, lexicon, config, collect_trace=trace_path is not None
            )
    elif model_path is not None:
        model, _ = load_model(model_path)
        result = generate(
            plan, constraints, model, lexicon, config, collect_trace=trace_path is not None
        )
    else:
        raise InputFormatError("generate needs either --model or --bridge")
    _write_text(out, "\n".join(result.lines) + "\n")
    outputs = {"lyrics": str(out)}
    if trace_path is not None:
        _write_text(
            trace_path,
            json.dumps(
                {
                    "score": result.score,
                    "violations": result.violations,
                    "relaxations": [
                        {
                            "phrase": r.phrase_index,
                            "slot": r.slot_index,
                            "word": r.word,
                            "stage": r.stage,
                        }
                        for r in result.relaxations
                    ],
                    "steps": list(result.trace or ()),
                },
                indent=2,
                sort_keys=True,
            )
            + "\n",
        )
        outputs["trace"] = str(trace_path)
    write_manifest(out, core, outputs, config.seed, started, time.monotonic() - clock)
    return out


def do_evaluate(
    candidate_path: Path,
    out: Path,
    reference_path: Path | None,
    salient: list[str] | None,
    constraints_path: Path | None,
    lexicon_path: str | None,
    seed: int,
    table: bool = False,
) -> Path:
    started = datetime.now(timezone.utc).isoformat()
    clock = time.monotonic()
    inputs = {"candidate": candidate_path}
    if reference_path is not None:
        inputs["reference"] = reference_path
    if constraints_path is not None:
        inputs["constraints"] = constraints_path
    config = {"salient": salient or []}
    core = _manifest_core("evaluate", config, inputs)
    candidate = _read_lines(candidate_path, "candidate")
    reference = _read_lines(reference_path, "reference") if reference_path else None
    constraints = _load_constraints(constraints_path) if constraints_path else None
    report = evaluate(
        _lexicon(lexicon_path),
        candidate,
        reference_lines=reference,
        salient=salient,
        constraints=constraints,
    )
    _write_text(out, json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    if table:
        print(report.format_table())
    write_manifest(out, core, {"report": str(out)}, seed, started, time.monotonic() - clock)
    return out


def do_make_data(
    corpus: Path,
    out_dir: Path,
    total: int,
    mix: dict[str, float],
    seed: int,
    lexicon_path: str | None,
) -> Path:
    started = datetime.now(timezone.utc).isoformat()
    clock = time.monotonic()
    config = {"total": total, "mix": {k: mix[k] for k in sorted(mix)}}
    core = _manifest_core("make-data", config, {"corpus": corpus})
    build_dataset(
        _lexicon(lexicon_path), _read_text(corpus, "corpus"), out_dir, mix, total, seed=seed
    )
    write_manifest(out_dir, core, {"dataset": str(out_dir)}, seed, started, time.monotonic() - clock)
    return out_dir


def do_sweep(
    plan_path: Path,
    constraints_path: Path,
    model_path: Path,
    out_dir: Path,
    alphas: list[float],
    args: argparse.Namespace,
    lexicon_path: str | None,
) -> Path:
    started = datetime.now(timezone.utc).isoformat()
    clock = time.monotonic()
    config = {
        "alphas": alphas,
        "beam_width": args.beam_width,
        "num_groups": args.num_groups,
        "diversity": args.diversity,
        "top_k": args.top_k,
        "oov_policy": args.oov_policy,
    }
    core = _manifest_core(
        "sweep",
        config,
        {"plan": plan_path, "constraints": constraints_path, "model": model_path},
    )
    plan, _ = parse_plan_text(_read_text(plan_path, "plan"))
    constraints = _load_constraints(constraints_path)
    model, _ = load_model(model_path)
    lexicon = _lexicon(lexicon_path)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for alpha in alphas:
        result = generate(plan, constraints, model, lexicon, _decoder_config(args, alpha=alpha))
        lyric_path = out_dir / f"lyrics_alpha_{alpha:g}.txt"
        _write_text(lyric_path, "\n".join(result.lines) + "\n")
        try:
            stress = stress_duration_pct(lexicon, list(result.lines), constraints)
        except InputFormatError:
            stress = None
        rows.append(
            {
                "alpha": alpha,
                "lyrics": lyric_path.name,
                "score": result.score,
                "violations": result.violations,
                "stress_duration_pct": stress,
            }
        )
    report_path = out_dir / "sweep.json"
    _write_text(report_path, json.dumps(rows, indent=2, sort_keys=True) + "\n")
    write_manifest(
        out_dir, core, {"sweep": str(report_path)}, args.seed, started, time.monotonic() - clock
    )
    return report_path


def do_bridge_check(bridge: str, lexicon_path: str | None, seed: int) -> None:
    with BridgeClient(shlex.split(bridge)) as client:
        candidates = client.next_candidates(Context(), top_k=3)
        if not candidates:
            raise InputFormatError("bridge returned no candidates")
        probe = candidates[0].word
        score = client.sequence_logprob([probe])
        print(f"handshake ok; top candidate {probe!r} (logprob {candidates[0].logprob:.6f})")
        print(f"score ok; logprob([{probe!r}]) = {score:.6f}")


# -- pipeline ----------------------------------------------------------------

_PIPELINE_DEFAULTS = {
    "order": "3",
    "smoothing": "interpolated",
    "k": "0.1",
    "min_count": "2",
    "mean_scope": "phrase",
    "keywords_per_line": "1",
    "alpha": "0.01",
    "beam_width": "8",
    "num_groups": "4",
    "diversity": "0.5",
    "top_k": "50",
    "oov_policy": "penalize",
    "seed": "0",
    "lexicon": "",
    "reference": "",
    "genre": "",
}


def parse_pipeline_config(text: str) -> dict[str, str]:
    values = dict(_PIPELINE_DEFAULTS)
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise InputFormatError(f"pipeline config line {number} is not key = value: {raw!r}")
        values[key.strip()] = value.strip()
    missing = [key for key in ("corpus", "melody", "title", "salient", "out_dir") if not values.get(key)]
    if missing:
        raise InputFormatError("pipeline config missing keys: " + ", ".join(missing))
    return values


def do_pipeline(config_path: Path) -> Path:
    values = parse_pipeline_config(_read_text(config_path, "pipeline config"))
    out_dir = Path(values["out_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    seed = int(values["seed"])
    lexicon_path = values["lexicon"] or None
    corpus = Path(values["corpus"])
    melody = Path(values["melody"])
    salient = _parse_words(values["salient"])

    model_path = out_dir / "model.json"
    train_config = {
        "order": int(values["order"]),
        "smoothing": values["smoothing"],
        "k": float(values["k"]),
        "min_count": int(values["min_count"]),
    }
    core = _manifest_core("train-lm", train_config, {"corpus": corpus})
    if not _stage_current(model_path, core):
        do_train_lm(
            corpus,
            model_path,
            order=train_config["order"],
            smoothing=train_config["smoothing"],
            k=train_config["k"],
            min_count=train_config["min_count"],
            seed=seed,
        )

    constraints_path = out_dir / "constraints.json"
    core = _manifest_core("compile", {"mean_scope": values["mean_scope"]}, {"melody": melody})
    if not _stage_current(constraints_path, core):
        do_compile(melody, constraints_path, values["mean_scope"], seed)

    plan_path = out_dir / "plan.txt"
    plan_config = {
        "title": values["title"],
        "salient": salient,
        "keywords_per_line": int(values["keywords_per_line"]),
    }
    core = _manifest_core(
        "plan", plan_config, {"constraints": constraints_path, "model": model_path}
    )
    if not _stage_current(plan_path, core):
        do_plan(
            values["title"],
            salient,
            constraints_path,
            model_path,
            plan_path,
            int(values["keywords_per_line"]),
            lexicon_path,
            seed,
        )

    lyrics_path = out_dir / "lyrics.txt"
    decoder_config = DecoderConfig(
        alpha=float(values["alpha"]),
        beam_width=int(values["beam_width"]),
        num_groups=int(values["num_groups"]),
        diversity_strength=float(values["diversity"]),
        top_k=int(values["top_k"]),
        oov_policy=values["oov_policy"],
        seed=seed,
    )
    generate_flags = {
        "alpha": decoder_config.alpha,
        "beam_width": decoder_config.beam_width,
        "num_groups": decoder_config.num_groups,
        "diversity": decoder_config.diversity_strength,
        "top_k": decoder_config.top_k,
        "oov_policy": decoder_config.oov_policy,
        "bridge": None,
    }
    core = _manifest_core(
        "generate",
        generate_flags,
        {"plan": plan_path, "constraints": constraints_path, "model": model_path},
    )
    if not _stage_current(lyrics_path, core):
        do_generate(
            plan_path,
            constraints_path,
            lyrics_path,
            model_path,
            None,
            decoder_config,
            lexicon_path,
        )

    report_path = out_dir / "report.json"
    reference = Path(values["reference"]) if values["reference"] else None
    inputs = {"candidate": lyrics_path, "constraints": constraints_path}
    if reference is not None:
        inputs["reference"] = reference
    core = _manifest_core("evaluate", {"salient": salient}, inputs)
    if not _stage_current(report_path, core):
        do_evaluate(
            lyrics_path, report_path, reference, salient, constraints_path, lexicon_path, seed
        )
    return report_path


# -- argument parsing ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="versewright",
        description="Melody-constrained lyric generation: train, plan, decode, evaluate.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="run seed, recorded in the manifest")
    common.add_argument("--lexicon", default=None, help="pronunciation lexicon path override")

    decoding = argparse.ArgumentParser(add_help=False)
    decoding.add_argument("--beam-width", type=int, default=8)
    decoding.add_argument("--num-groups", type=int, default=4)
    decoding.add_argument("--diversity", type=float, default=0.5)
    decoding.add_argument("--top-k", type=int, default=50)
    decoding.add_argument("--oov-policy", choices=["reject", "penalize"], default="penalize")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-lm", parents=[common], help="train the n-gram model + co-occurrence table")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--smoothing", choices=["interpolated", "add-k"], default="interpolated")
    p.add_argument("--k", type=float, default=0.1)
    p.add_argument("--min-count", type=int, default=2)

    p = sub.add_parser("compile", parents=[common], help="melody file to syllable/rhythm constraints")
    p.add_argument("--melody", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--mean-scope", choices=["phrase", "song"], default="phrase")

    p = sub.add_parser("plan", parents=[common], help="lay out per-line keywords")
    p.add_argument("--title", required=True)
    p.add_argument("--salient", required=True, help="comma-separated salient words")
    p.add_argument("--constraints", type=Path, required=True)
    p.add_argument("--model", type=Path, default=None, help="model file providing co-occurrence fills")
    p.add_argument("--keywords-per-line", type=int, default=1)
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("generate", parents=[common, decoding], help="decode lyrics under constraints")
    p.add_argument("--plan", type=Path, required=True)
    p.add_argument("--constraints", type=Path, required=True)
    p.add_argument("--model", type=Path, default=None)
    p.add_argument("--bridge", default=None, help="external model command speaking the line protocol")
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--trace", type=Path, default=None, help="write decode trace JSON here")

    p = sub.add_parser("evaluate", parents=[common], help="score a candidate lyric")
    p.add_argument("--candidate", type=Path, required=True)
    p.add_argument("--reference", type=Path, default=None)
    p.add_argument("--salient", default=None, help="comma-separated salient words")
    p.add_argument("--constraints", type=Path, default=None)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--table", action="store_true", help="also print a readable table")

    p = sub.add_parser("make-data", parents=[common], help="emit multi-task training samples")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--total", type=int, required=True)
    p.add_argument("--mix", required=True, help="task=weight, comma separated")

    p = sub.add_parser("sweep", parents=[common, decoding], help="decode across several alpha values")
    p.add_argument("--plan", type=Path, required=True)
    p.add_argument("--constraints", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--alphas", required=True, help="comma-separated alpha values")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("bridge-check", parents=[common], help="handshake an external model command")
    p.add_argument("--bridge", required=True)

    p = sub.add_parser("pipeline", help="run train/compile/plan/generate/evaluate from one config")
    p.add_argument("--config", type=Path, required=True)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "train-lm":
            do_train_lm(args.corpus, args.out, args.order, args.smoothing, args.k, args.min_count, args.seed)
        elif args.command == "compile":
            do_compile(args.melody, args.out, args.mean_scope, args.seed)
        elif args.command == "plan":
            do_plan(
                args.title,
                _parse_words(args.salient),
                args.constraints,
                args.model,
                args.out,
                args.keywords_per_line,
                args.lexicon,
                args.seed,
            )
        elif args.command == "generate":
            do_generate(
                args.plan,
                args.constraints,
                args.out,
                args.model,
                args.bridge,
                _decoder_config(args),
                args.lexicon,
                args.trace,
            )
        elif args.command == "evaluate":
            do_evaluate(
                args.candidate,
                args.out,
                args.reference,
                _parse_words(args.salient) if args.salient else None,
                args.constraints,
                args.lexicon,
                args.seed,
                table=args.table,
            )
        elif args.command == "make-data":
            do_make_data(args.corpus, args.out, args.total, _parse_mix(args.mix), args.seed, args.lexicon)
        elif args.command == "sweep":
            try:
                alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
            except ValueError as exc:
                raise InputFormatError(f"bad alpha list {args.alphas!r}") from exc
            do_sweep(args.plan, args.constraints, args.model, args.out, alphas, args, args.lexicon)
        elif args.command == "bridge-check":
            do_bridge_check(args.bridge, args.lexicon, args.seed)
        elif args.command == "pipeline":
            do_pipeline(args.config)
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

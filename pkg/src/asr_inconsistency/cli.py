"""Command-line interface.

Subcommands: decode, score, eval, baselines, report. Exit codes follow a
scripting contract: 0 success, 1 runtime failure, 2 validation/usage
failure detected before any work starts.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from .baselines import (
    WORDS_PER_MINUTE,
    WORDS_PER_SECOND,
    BaselineConfig,
    speech_rate,
    wada_snr,
)
from .audio import read_wav
from .decoder import DecoderConfig, beam_search_decode, collapse, greedy_decode
from .errors import MissingDurationError, ToolkitError
from .harness import (
    EvalConfig,
    LlmSpec,
    llm_accuracy_report,
    render_report_text,
    replay_run_results,
    run_pipeline,
)
from .manifest import load_manifest
from .metrics import inconsistency_score
from .ngram import load_arpa
from .posteriors import load_posteriors
from .refgen import (
    ENV_API_KEY,
    ENV_ENDPOINT,
    ENV_MODEL,
    HttpChatClient,
    MockCorrector,
    correct_with_llm,
)
from .vocab import load_vocabulary

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _add_decoder_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=float, default=0.5,
                        help="language model weight (default 0.5)")
    parser.add_argument("--beta", type=float, default=0.5,
                        help="word insertion bonus (default 0.5)")
    parser.add_argument("--beam-width", type=int, default=100)


def _add_llm_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", action="append", default=None,
                        help="correction model name; repeatable")
    parser.add_argument("--runs", type=int, default=3,
                        help="independent correction runs (default 3)")
    parser.add_argument("--temperature", type=float, default=0.0)
    parser.add_argument("--mock", action="store_true",
                        help="use the offline mock corrector")
    parser.add_argument("--mock-replies", action="append", default=None,
                        help="JSON substitution table for the mock; repeatable, "
                             "paired with --model in order")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="asrinc",
        description="Reference-free speech intelligibility scoring from CTC posteriors")
    sub = parser.add_subparsers(dest="command", required=True)

    p_decode = sub.add_parser("decode", help="decode posterior files to text")
    p_decode.add_argument("--vocab", required=True)
    p_decode.add_argument("--greedy", action="store_true",
                          help="emit the acoustic-driven transcript")
    p_decode.add_argument("--beam", action="store_true",
                          help="emit the LM-fused beam transcript")
    p_decode.add_argument("--lm", help="ARPA language model for --beam")
    _add_decoder_args(p_decode)
    p_decode.add_argument("posteriors", nargs="+")

    p_score = sub.add_parser("score", help="per-utterance inconsistency scores")
    p_score.add_argument("--manifest", required=True)
    p_score.add_argument("--vocab", required=True)
    p_score.add_argument("--method", required=True)
    p_score.add_argument("--lm")
    p_score.add_argument("--language", default="unknown")
    p_score.add_argument("--out", help="CSV output path (default stdout)")
    _add_decoder_args(p_score)
    _add_llm_args(p_score)

    p_eval = sub.add_parser("eval", help="full evaluation run with a report")
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--vocab", required=True)
    p_eval.add_argument("--methods", required=True,
                        help="comma-separated subset of "
                             "speech_rate,wada_snr,ngram,llm,reference_wer")
    p_eval.add_argument("--out", required=True, help="run directory")
    p_eval.add_argument("--lm")
    p_eval.add_argument("--language", default="unknown")
    p_eval.add_argument("--dataset-name")
    p_eval.add_argument("--jobs", type=int, default=1)
    p_eval.add_argument("--speech-rate-unit", default=WORDS_PER_MINUTE,
                        choices=[WORDS_PER_MINUTE, WORDS_PER_SECOND])
    _add_decoder_args(p_eval)
    _add_llm_args(p_eval)

    p_base = sub.add_parser("baselines", help="confounder baseline scores")
    p_base.add_argument("--manifest", required=True)
    p_base.add_argument("--methods", default="speech_rate,wada_snr")
    p_base.add_argument("--speech-rate-unit", default=WORDS_PER_MINUTE,
                        choices=[WORDS_PER_MINUTE, WORDS_PER_SECOND])
    p_base.add_argument("--out", help="CSV output path (default stdout)")

    p_report = sub.add_parser("report", help="views over a persisted run directory")
    p_report.add_argument("run_dir")
    p_report.add_argument("--llm-accuracy", action="store_true",
                          help="print the reference accuracy table")
    return parser


def _load_decoder_config(args) -> DecoderConfig:
    return DecoderConfig(alpha=args.alpha, beta=args.beta,
                         beam_width=args.beam_width)


def _build_llm_specs(args) -> list[LlmSpec]:
    models = args.model or []
    if args.mock:
        if not models:
            models = ["mock-corrector"]
        tables = args.mock_replies or []
        specs = []
        for i, name in enumerate(models):
            if i < len(tables):
                specs.append(LlmSpec(name, MockCorrector.from_json(tables[i])))
            else:
                specs.append(LlmSpec(name, MockCorrector()))
        return specs
    missing = [v for v in (ENV_ENDPOINT, ENV_API_KEY) if not os.environ.get(v)]
    if missing:
        raise UsageError(
            f"llm method needs --mock or environment {' and '.join(missing)}")
    if not models:
        env_model = os.environ.get(ENV_MODEL, "")
        if not env_model:
            raise UsageError(f"no --model given and {ENV_MODEL} is not set")
        models = [env_model]
    client = HttpChatClient.from_env()
    return [LlmSpec(name, client) for name in models]


def cmd_decode(args) -> int:
    if not args.greedy and not args.beam:
        raise UsageError("choose --greedy and/or --beam")
    if args.beam and not args.lm:
        raise UsageError("--beam needs --lm ARPA_FILE")
    vocab = load_vocabulary(args.vocab)
    lm = load_arpa(args.lm) if args.lm else None
    cfg = _load_decoder_config(args)
    for path in args.posteriors:
        post = load_posteriors(path, vocab)
        if args.greedy:
            transcript = collapse(greedy_decode(post), vocab)
            print(f"{post.utterance_id}\tgreedy\t{transcript.text()}")
        if args.beam:
            transcript = beam_search_decode(post, vocab, lm, cfg)
            print(f"{post.utterance_id}\tbeam\t{transcript.text()}")
    return EXIT_OK


def _open_out(path: str | None):
    if path:
        return open(path, "w", encoding="utf-8", newline="")
    return sys.stdout


def cmd_score(args) -> int:
    if args.method not in ("ngram", "llm"):
        raise UsageError(f"unknown method {args.method!r} (choose ngram or llm)")
    if args.method == "ngram" and not args.lm:
        raise UsageError("--method ngram needs --lm ARPA_FILE")
    specs = _build_llm_specs(args) if args.method == "llm" else []
    if len(specs) > 1:
        raise UsageError("score supports a single --model; use eval for several")

    vocab = load_vocabulary(args.vocab)
    lm = load_arpa(args.lm) if args.lm else None
    cfg = _load_decoder_config(args)
    manifest = load_manifest(args.manifest)
    base_dir = Path(args.manifest).resolve().parent

    out = _open_out(args.out)
    try:
        writer = csv.writer(out, lineterminator="\n")
        if args.method == "ngram":
            writer.writerow(["utterance_id", "speaker_id", "method", "value"])
        else:
            writer.writerow(["utterance_id", "speaker_id", "method",
                             *[f"run_{i}" for i in range(args.runs)]])
        for record in manifest:
            post = load_posteriors(base_dir / record.posterior_path, vocab)
            greedy = collapse(greedy_decode(post), vocab)
            if args.method == "ngram":
                ref = beam_search_decode(post, vocab, lm, cfg)
                score = inconsistency_score(greedy, ref, record.utterance_id)
                writer.writerow([record.utterance_id, record.speaker_id,
                                 "ngram", repr(score.value)])
            else:
                spec = specs[0]
                if not greedy.words:
                    # nothing to correct; leave the run cells blank
                    writer.writerow([record.utterance_id, record.speaker_id,
                                     f"llm[{spec.model_name}]",
                                     *[""] * args.runs])
                    continue
                corrections = correct_with_llm(
                    spec.client, greedy, args.language, spec.model_name,
                    runs=args.runs, temperature=args.temperature)
                values = [
                    inconsistency_score(greedy, c.corrected, record.utterance_id,
                                        model_name=spec.model_name,
                                        run_index=c.run_index).value
                    for c in corrections]
                writer.writerow([record.utterance_id, record.speaker_id,
                                 f"llm[{spec.model_name}]",
                                 *[repr(v) for v in values]])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_eval(args) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    if not methods:
        raise UsageError("--methods is empty")
    manifest = load_manifest(args.manifest)
    if not any(r.rating is not None for r in manifest):
        raise UsageError(
            "eval needs perceptual ratings in the manifest; none found "
            "(use score/baselines for rating-free scoring)")
    if "ngram" in methods and not args.lm:
        raise UsageError("--methods ngram needs --lm ARPA_FILE")
    specs = _build_llm_specs(args) if "llm" in methods else []

    vocab = load_vocabulary(args.vocab)
    lm = load_arpa(args.lm) if args.lm else None
    config = EvalConfig(
        methods=methods,
        vocab=vocab,
        lm=lm,
        decoder=_load_decoder_config(args),
        llm_models=tuple(specs),
        llm_runs=args.runs,
        llm_temperature=args.temperature,
        language=args.language,
        dataset_name=args.dataset_name or Path(args.manifest).stem,
        jobs=args.jobs,
        baseline=BaselineConfig(speech_rate_unit=args.speech_rate_unit),
        base_dir=Path(args.manifest).resolve().parent,
        snapshot={"argv": sys.argv[1:], "manifest": args.manifest,
                  "vocab": args.vocab, "lm": args.lm,
                  "mock": bool(args.mock), "jobs": args.jobs},
    )
    result = run_pipeline(manifest, config, args.out)
    print(render_report_text(result.report))
    print(f"run directory: {result.run_dir}")
    return EXIT_OK


def cmd_baselines(args) -> int:
    methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
    bad = [m for m in methods if m not in ("speech_rate", "wada_snr")]
    if bad:
        raise UsageError(f"unknown baseline methods: {', '.join(bad)}")
    manifest = load_manifest(args.manifest)
    base_dir = Path(args.manifest).resolve().parent
    from .transcript import Transcript, TranscriptSource

    out = _open_out(args.out)
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["utterance_id", "speaker_id", "method", "value", "error"])
        for record in manifest:
            gt = None
            if record.ground_truth_text is not None:
                gt = Transcript.from_raw(record.ground_truth_text,
                                         TranscriptSource.GROUND_TRUTH)
            for method in methods:
                try:
                    if method == "speech_rate":
                        duration = record.duration_s
                        if duration is None:
                            if record.audio_path is None:
                                raise MissingDurationError(
                                    f"{record.utterance_id}: no duration or audio")
                            duration = read_wav(base_dir / record.audio_path).duration_s
                        score = speech_rate(gt, duration, record.utterance_id,
                                            unit=args.speech_rate_unit)
                    else:
                        if record.audio_path is None:
                            raise MissingDurationError(
                                f"{record.utterance_id}: no audio_path")
                        buffer = read_wav(base_dir / record.audio_path)
                        score = wada_snr(buffer, record.utterance_id)
                    writer.writerow([record.utterance_id, record.speaker_id,
                                     method, repr(score.value), ""])
                except ToolkitError as exc:
                    writer.writerow([record.utterance_id, record.speaker_id,
                                     method, "", str(exc)])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_report(args) -> int:
    run_dir = Path(args.run_dir)
    if not (run_dir / "utterance_scores.csv").exists():
        raise UsageError(f"{run_dir} does not look like a run directory")
    if args.llm_accuracy:
        print(llm_accuracy_report(run_dir))
        return EXIT_OK
    for rr in replay_run_results(run_dir):
        label = f"{rr.method}[{rr.model_name}]" if rr.model_name else rr.method
        run = "" if rr.run_index is None else f" run{rr.run_index}"
        print(f"{label}{run}: r={rr.pearson_r:.4f} over {rr.n_points} points")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    handlers = {
        "decode": cmd_decode,
        "score": cmd_score,
        "eval": cmd_eval,
        "baselines": cmd_baselines,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ToolkitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())

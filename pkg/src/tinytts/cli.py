"""Command-line interface: one subcommand per pipeline operation.

Flag precedence: explicit flags > --config file > built-in defaults. Commands
that create an output directory refuse a non-empty one unless --force is
given and echo the resolved configuration into it. Exit codes: 0 success,
1 validation/usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import audio as audio_mod
from . import curation
from .augment import build_augmented_dataset, read_aug_manifest, verify_augmented_dataset
from .config import (
    RunConfig,
    load_config_file,
    parse_aug_profiles,
    parse_noise_specs,
    parse_spectrum,
)
from .errors import TinyTtsError
from .evalkit import (
    AttentionMatrix,
    read_attention,
    sharpness_report,
    sus_csv,
    sus_report,
)
from .toytrain import (
    ToyConfig,
    ToyModel,
    gen_synthetic_corpus,
    infer,
    load_corpus,
    load_model,
    run_study,
    save_corpus,
    save_model,
    train,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def _load_cfg(args) -> RunConfig:
    cfg = load_config_file(args.config) if args.config else RunConfig()
    for key, value in getattr(args, "overrides", []) or []:
        cfg.set(key, value)
    return cfg


def _prepare_out_dir(path: str | Path, force: bool) -> Path:
    out = Path(path)
    if out.exists() and any(out.iterdir()) and not force:
        raise TinyTtsError(
            f"output directory {out} is not empty (use --force to reuse)"
        )
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit(args, human: str, payload: dict) -> None:
    if args.json:
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print(human)


def _toy_config_from(cfg: RunConfig, seed: int | None = None) -> ToyConfig:
    return ToyConfig(
        vocab_size=cfg.get("toy.vocab_size"),
        feat_dim=cfg.get("toy.feat_dim"),
        embed_dim=cfg.get("toy.embed_dim"),
        enc_hidden=cfg.get("toy.enc_hidden"),
        aug_embed_dim=cfg.get("toy.aug_embed_dim"),
        dec_hidden=cfg.get("toy.dec_hidden"),
        attn_dim=cfg.get("toy.attn_dim"),
        n_aug_ids=cfg.get("toy.n_aug_ids"),
        max_decode_frames=cfg.get("toy.max_decode_frames"),
        gate_loss_weight=cfg.get("toy.gate_loss_weight"),
        learning_rate=cfg.get("toy.learning_rate"),
        grad_clip_norm=cfg.get("toy.grad_clip_norm"),
        batch_size=cfg.get("toy.batch_size"),
        steps=cfg.get("toy.steps"),
        seed=cfg.get("toy.seed") if seed is None else seed,
    )


def _mel_config_from(cfg: RunConfig) -> audio_mod.MelConfig:
    return audio_mod.MelConfig(
        n_fft=cfg.get("mel.n_fft"),
        hop_length=cfg.get("mel.hop_length"),
        win_length=cfg.get("mel.win_length"),
        n_mels=cfg.get("mel.n_mels"),
        fmin_hz=cfg.get("mel.fmin_hz"),
        fmax_hz=cfg.get("mel.fmax_hz"),
        log_floor=cfg.get("mel.log_floor"),
    )


# --- subcommand implementations ---

def cmd_curate(args) -> int:
    cfg = _load_cfg(args)
    root = args.corpus_root or cfg.get("corpus_root")
    if not root:
        raise TinyTtsError("no corpus root given (--corpus-root or config)")
    mode = args.mode or cfg.get("selection_mode")
    budget = args.budget_s if args.budget_s is not None else cfg.get("budget_s")
    seed = args.seed if args.seed is not None else cfg.get("seed")
    out = _prepare_out_dir(args.out_dir, args.force)

    entries = curation.load_ljspeech_manifest(root)
    curation.measure_durations(entries)
    if mode == curation.INFORMED:
        subset = curation.select_informed_subset(entries, budget)
    elif mode == curation.RANDOM:
        subset = curation.select_random_subset(entries, budget, seed)
    else:
        raise TinyTtsError(f"unknown selection mode {mode!r}")

    selected = {e.id for e in subset.entries}
    prefix_ok = True
    if mode == curation.INFORMED:
        excluded = [e for e in entries if e.id not in selected]
        if excluded:
            prefix_ok = max(e.duration_s for e in subset.entries) <= min(
                e.duration_s for e in excluded
            )
    curation.write_subset_manifest(subset, out / "subset.jsonl")
    cfg.set("corpus_root", str(root))
    cfg.set("selection_mode", mode)
    cfg.set("budget_s", budget)
    cfg.set("seed", seed)
    cfg.write_snapshot(out)
    _emit(
        args,
        f"selected {len(subset.entries)} of {len(entries)} entries, "
        f"{subset.total_duration_s:.1f} s of {budget:.1f} s budget, "
        f"prefix property {'holds' if prefix_ok else 'VIOLATED'}",
        {
            "n_selected": len(subset.entries),
            "n_corpus": len(entries),
            "total_s": subset.total_duration_s,
            "budget_s": budget,
            "mode": mode,
            "prefix_property": prefix_ok,
        },
    )
    return EXIT_OK if prefix_ok else EXIT_VALIDATION


def cmd_augment(args) -> int:
    cfg = _load_cfg(args)
    specs = parse_noise_specs(args.noise_specs or cfg.get("noise_specs"))
    master_seed = (
        args.master_seed if args.master_seed is not None else cfg.get("master_seed")
    )
    jobs = args.jobs if args.jobs is not None else cfg.get("jobs")
    out = _prepare_out_dir(args.out_dir, args.force)
    subset = curation.read_subset_manifest(args.manifest)
    manifest = build_augmented_dataset(subset, specs, out, master_seed, jobs=jobs)
    cfg.set("master_seed", master_seed)
    cfg.write_snapshot(out)
    _emit(
        args,
        f"wrote {len(manifest)} files for {len(subset.entries)} sources "
        f"({len(specs)} noise specs + clean)",
        {
            "n_outputs": len(manifest),
            "n_sources": len(subset.entries),
            "aug_ids": sorted({m.aug_id for m in manifest}),
        },
    )
    return EXIT_OK


def cmd_verify_aug(args) -> int:
    manifest = read_aug_manifest(args.manifest)
    report = verify_augmented_dataset(
        manifest, tolerance_db=args.tolerance_db, jobs=args.jobs or 1
    )
    _emit(
        args,
        f"{report.n_noisy} noisy files (+{report.n_clean} clean skipped): "
        f"max deviation {report.max_deviation_db:.3f} dB, "
        f"{report.n_exceeding_half_db} over {args.tolerance_db} dB",
        {
            "n_noisy": report.n_noisy,
            "n_clean": report.n_clean,
            "max_deviation_db": report.max_deviation_db,
            "n_flagged": report.n_exceeding_half_db,
            "flagged_ids": report.flagged_ids,
        },
    )
    return EXIT_OK if report.n_exceeding_half_db == 0 else EXIT_VALIDATION


def cmd_p56(args) -> int:
    clip = audio_mod.read_wav(args.infile)
    result = audio_mod.active_speech_level_p56(clip)
    _emit(
        args,
        f"active {result.active_level_db:.2f} dBFS, "
        f"long-term {result.long_term_level_db:.2f} dBFS, "
        f"activity {result.activity_factor:.3f}",
        {
            "active_level_db": result.active_level_db,
            "long_term_level_db": result.long_term_level_db,
            "activity_factor": result.activity_factor,
        },
    )
    return EXIT_OK


def cmd_mix(args) -> int:
    from .noisegen import mix_at_snr

    clip = audio_mod.read_wav(args.infile)
    result = mix_at_snr(clip, parse_spectrum(args.noise), args.snr_db, args.seed)
    audio_mod.write_wav(result.clip, args.outfile)
    _emit(
        args,
        f"mixed {args.noise} at {args.snr_db} dB: noise gain {result.noise_gain:.6f}, "
        f"mixture gain {result.mixture_gain:.6f}",
        {
            "noise_gain": result.noise_gain,
            "mixture_gain": result.mixture_gain,
            "out": str(args.outfile),
        },
    )
    return EXIT_OK


def cmd_mel(args) -> int:
    cfg = _load_cfg(args)
    clip = audio_mod.read_wav(args.infile)
    mel = audio_mod.mel_spectrogram(clip, _mel_config_from(cfg))
    audio_mod.write_melb(mel, args.outfile)
    _emit(
        args,
        f"wrote {mel.frames.shape[0]} x {mel.frames.shape[1]} mel frames",
        {"frames": mel.frames.shape[0], "n_mels": mel.frames.shape[1]},
    )
    return EXIT_OK


def cmd_sharpness(args) -> int:
    if len(args.attn_dir) != len(args.label):
        raise TinyTtsError("need one --label per --attn-dir")
    by_label: dict[str, list[AttentionMatrix]] = {}
    for directory, label in zip(args.attn_dir, args.label):
        files = sorted(Path(directory).glob("*.attn"))
        if not files:
            raise TinyTtsError(f"no .attn files under {directory}")
        by_label.setdefault(label, []).extend(read_attention(f) for f in files)
    csv = sharpness_report(by_label)
    if args.out:
        Path(args.out).write_text(csv, encoding="utf-8")
    else:
        sys.stdout.write(csv)
    return EXIT_OK


def _read_lines(path) -> list[str]:
    return Path(path).read_text(encoding="utf-8").splitlines()


def _sentence_pairs(args) -> list[tuple[str, str]]:
    if args.tsv:
        pairs = []
        for line_no, line in enumerate(_read_lines(args.tsv), start=1):
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise TinyTtsError(f"{args.tsv}:{line_no}: expected 2 TSV fields")
            pairs.append((fields[0], fields[1]))
        return pairs
    refs = _read_lines(args.ref)
    hyps = _read_lines(args.hyp)
    if len(refs) != len(hyps):
        raise TinyTtsError(
            f"line count mismatch: {len(refs)} references vs {len(hyps)} hypotheses"
        )
    return list(zip(refs, hyps))


def cmd_wer(args) -> int:
    agg = sus_report(_sentence_pairs(args))
    _emit(
        args,
        f"pooled WER {agg.pooled_wer_percent:.2f}% "
        f"({agg.total_errors} errors / {agg.total_ref_words} reference words)",
        {
            "pooled_wer_percent": agg.pooled_wer_percent,
            "errors": agg.total_errors,
            "ref_words": agg.total_ref_words,
        },
    )
    return EXIT_OK


def cmd_sus(args) -> int:
    agg = sus_report(_sentence_pairs(args))
    csv = sus_csv(agg)
    if args.out:
        Path(args.out).write_text(csv, encoding="utf-8")
    else:
        sys.stdout.write(csv)
    _emit(
        args,
        f"pooled WER {agg.pooled_wer_percent:.2f}% over {len(agg.per_sentence)} sentences",
        {
            "pooled_wer_percent": agg.pooled_wer_percent,
            "n_sentences": len(agg.per_sentence),
        },
    )
    return EXIT_OK


def cmd_toy_gen(args) -> int:
    cfg = _load_cfg(args)
    seed = args.seed if args.seed is not None else cfg.get("toy.seed")
    profiles = parse_aug_profiles(
        args.aug_profiles if args.aug_profiles is not None else cfg.get("toy.aug_profiles")
    )
    corpus = gen_synthetic_corpus(
        cfg.get("toy.vocab_size"),
        cfg.get("toy.feat_dim"),
        cfg.get("toy.n_utts"),
        (cfg.get("toy.len_min"), cfg.get("toy.len_max")),
        profiles,
        seed=seed,
    )
    save_corpus(corpus, args.out)
    _emit(
        args,
        f"wrote {len(corpus.examples)} examples "
        f"({cfg.get('toy.n_utts')} utterances x {len(profiles) + 1} copies)",
        {"n_examples": len(corpus.examples), "n_utts": cfg.get("toy.n_utts")},
    )
    return EXIT_OK


def cmd_toy_train(args) -> int:
    cfg = _load_cfg(args)
    seed = args.seed if args.seed is not None else None
    toy_cfg = _toy_config_from(cfg, seed=seed)
    if args.steps is not None:
        from dataclasses import replace

        toy_cfg = replace(toy_cfg, steps=args.steps)
    out = _prepare_out_dir(args.out_dir, args.force)
    corpus = load_corpus(args.corpus)
    model = ToyModel(toy_cfg)
    report = train(model, corpus, batch_plan_mode=args.batch_mode)
    save_model(model, out / "model.toym")
    report_payload = {
        "initial_loss": report.initial_loss,
        "final_loss": report.final_loss,
        "steps": len(report.loss_curve),
        "seed": report.seed,
        "wall_clock_s": report.wall_clock_s,
        "loss_curve": report.loss_curve,
    }
    (out / "train_report.json").write_text(
        json.dumps(report_payload, indent=2) + "\n", encoding="utf-8"
    )
    cfg.write_snapshot(out)
    _emit(
        args,
        f"trained {len(report.loss_curve)} steps: loss "
        f"{report.initial_loss:.4f} -> {report.final_loss:.4f}",
        {k: v for k, v in report_payload.items() if k != "loss_curve"},
    )
    return EXIT_OK


def cmd_toy_infer(args) -> int:
    model = load_model(args.model)
    tokens = [int(t) for t in args.tokens.split(",") if t.strip()]
    frames, gates, attn = infer(model, tokens, args.aug_id)
    if args.out_frames:
        audio_mod.write_melb(frames, args.out_frames)
    if args.out_attn:
        from .evalkit import write_attention

        write_attention(AttentionMatrix(attn), args.out_attn)
    _emit(
        args,
        f"emitted {frames.shape[0]} frames (gate max {gates.max():.3f})",
        {"n_frames": int(frames.shape[0]), "gate_max": float(gates.max())},
    )
    return EXIT_OK


def cmd_study(args) -> int:
    cfg = _load_cfg(args)
    jobs = args.jobs if args.jobs is not None else cfg.get("jobs")
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    out = _prepare_out_dir(args.out_dir, args.force)
    summary = run_study(args.study, seeds, out, jobs=jobs)
    cfg.write_snapshot(out)
    _emit(args, json.dumps(summary, indent=2, sort_keys=True), summary)
    return EXIT_OK


# --- argument parser ---

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tinytts",
        description="Low-resource TTS data tooling and toy attention trainer",
    )
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument(
        "--json", action="store_true", help="machine-readable summaries on stdout"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curate", help="select a training subset from a corpus")
    p.add_argument("--corpus-root")
    p.add_argument("--mode", choices=[curation.INFORMED, curation.RANDOM])
    p.add_argument("--budget-s", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_curate)

    p = sub.add_parser("augment", help="build the noise-augmented dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--master-seed", type=int)
    p.add_argument("--noise-specs")
    p.add_argument("--jobs", type=int)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("verify-aug", help="re-measure achieved SNRs of a dataset")
    p.add_argument("--manifest", required=True)
    p.add_argument("--tolerance-db", type=float, default=0.5)
    p.add_argument("--jobs", type=int)
    p.set_defaults(func=cmd_verify_aug)

    p = sub.add_parser("p56", help="active speech level of one WAV")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_p56)

    p = sub.add_parser("mix", help="add noise to one WAV at an exact SNR")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--noise", default="white", help="white|usasi|sensor|<table.csv>")
    p.add_argument("--snr-db", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("mel", help="extract a MELB mel spectrogram")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.set_defaults(func=cmd_mel)

    p = sub.add_parser("sharpness", help="sharpness statistics of ATTN1 files")
    p.add_argument("--attn-dir", action="append", required=True)
    p.add_argument("--label", action="append", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sharpness)

    for name, fn in (("wer", cmd_wer), ("sus", cmd_sus)):
        p = sub.add_parser(name, help=f"{name} over reference/hypothesis sentences")
        p.add_argument("--ref")
        p.add_argument("--hyp")
        p.add_argument("--tsv", help="2-column TSV alternative to --ref/--hyp")
        if name == "sus":
            p.add_argument("--out", help="per-sentence CSV path (default stdout)")
        p.set_defaults(func=fn)

    p = sub.add_parser("toy-gen", help="generate a synthetic toy corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--aug-profiles", help='e.g. "0:0.1,0.2:0.05,-0.15:0.08"')
    p.set_defaults(func=cmd_toy_gen)

    p = sub.add_parser("toy-train", help="train the toy model on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument(
        "--batch-mode",
        choices=[curation.BUCKETED, curation.RANDOM_SHUFFLE],
        default=curation.BUCKETED,
    )
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_toy_train)

    p = sub.add_parser("toy-infer", help="run inference with a trained toy model")
    p.add_argument("--model", required=True)
    p.add_argument("--tokens", required=True, help="comma-separated token ids")
    p.add_argument("--aug-id", type=int, default=0)
    p.add_argument("--out-frames", help="MELB output path")
    p.add_argument("--out-attn", help="ATTN1 output path")
    p.set_defaults(func=cmd_toy_infer)

    p = sub.add_parser("study", help="run a batching or augmentation-embedding study")
    p.add_argument("--study", choices=["batching", "augembedding"], required=True)
    p.add_argument("--seeds", required=True, help="comma-separated seed list")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int)
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_study)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    try:
        if args.config:
            load_config_file(args.config)  # reject unknown keys before any work
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except TinyTtsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())

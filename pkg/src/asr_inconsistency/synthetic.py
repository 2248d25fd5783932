"""Deterministic synthetic corpus generator.

Builds a self-contained evaluation fixture: a character vocabulary, a
unigram ARPA model over a small lexicon, and per-speaker utterances whose
posteriors spell the ground-truth sentence with a controlled rate of
word-substitution noise. Corrupted words differ from the intended word in
exactly one character; that character's frame carries probability mass on
both letters, so greedy decoding reads the corrupted word while an
LM-fused beam decode can recover the intended one. Ratings are defined as
5 * (1 - noise_rate), which makes the expected sign of every correlation
known by construction.

Also emits substitution tables for the mock corrector: one that repairs
every corrupted word and one that repairs only every second corruption.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .audio import AudioBuffer, write_wav
from .manifest import UtteranceRecord, write_manifest
from .posteriors import PosteriorMatrix, write_posteriors
from .vocab import BLANK_MARKER, DELIMITER_MARKER, Vocabulary

LEXICON = (
    "bal", "beuk", "dak", "den", "dorp", "gans", "hek", "huis",
    "jas", "kat", "kers", "lamp", "mos", "net", "pad", "pen",
    "riet", "roos", "tak", "touw", "vis", "wolk", "zon", "zwaan",
)

HOT_PROB = 0.994          # sharp frames: the emitted symbol
AMBIG_EMIT_PROB = 0.60    # corrupted character, what greedy reads
AMBIG_TRUE_PROB = 0.38    # intended character, what the LM can recover


@dataclass
class SyntheticCorpus:
    root: Path
    vocab_path: Path
    lm_path: Path
    manifest_path: Path
    mock_full_fix_path: Path
    mock_half_fix_path: Path
    meta_path: Path
    records: list[UtteranceRecord] = field(default_factory=list)


def _alphabet() -> list[str]:
    letters = sorted({ch for word in LEXICON for ch in word})
    return letters


def _corrupted_variant(word: str, alphabet: list[str]) -> str:
    """Deterministic one-character corruption that lands outside the lexicon."""
    for pos in range(len(word) - 1, -1, -1):
        for letter in alphabet:
            if letter == word[pos]:
                continue
            variant = word[:pos] + letter + word[pos + 1:]
            if variant in LEXICON:
                continue
            # keep runs of identical characters out of the emission stream
            if pos > 0 and variant[pos - 1] == letter:
                continue
            if pos + 1 < len(word) and variant[pos + 1] == letter:
                continue
            return variant
    raise RuntimeError(f"no corruption available for {word!r}")


def _unigram_arpa() -> str:
    logp = math.log10(1.0 / len(LEXICON))
    lines = ["", "\\data\\", f"ngram 1={len(LEXICON)}", "", "\\1-grams:"]
    for word in LEXICON:
        lines.append(f"{logp:.8f}\t{word}")
    lines.extend(["", "\\end\\", ""])
    return "\n".join(lines)


def _build_vocab() -> tuple[Vocabulary, list[str]]:
    letters = _alphabet()
    symbols = (BLANK_MARKER, DELIMITER_MARKER, *letters)
    return Vocabulary(symbols=symbols, blank_index=0, delimiter_index=1), letters


def _emission_rows(noisy_words: list[str], true_words: list[str],
                   vocab: Vocabulary) -> np.ndarray:
    """Log-probability rows spelling the noisy sentence.

    Characters where the noisy word deviates from the intended word get an
    ambiguous row with mass on both letters; every emission is preceded and
    followed by a blank frame where needed to keep collapses exact.
    """
    index = {sym: i for i, sym in enumerate(vocab.symbols)}
    n_sym = len(vocab.symbols)

    def sharp(sym: str) -> np.ndarray:
        row = np.full(n_sym, (1.0 - HOT_PROB) / (n_sym - 1))
        row[index[sym]] = HOT_PROB
        return row

    def ambiguous(emit: str, intended: str) -> np.ndarray:
        rest = 1.0 - AMBIG_EMIT_PROB - AMBIG_TRUE_PROB
        row = np.full(n_sym, rest / (n_sym - 2))
        row[index[emit]] = AMBIG_EMIT_PROB
        row[index[intended]] = AMBIG_TRUE_PROB
        return row

    blank_row = sharp(BLANK_MARKER)
    rows = [blank_row]
    prev_sym: str | None = None
    for w, (noisy, true) in enumerate(zip(noisy_words, true_words)):
        if w > 0:
            rows.append(sharp(DELIMITER_MARKER))
            prev_sym = DELIMITER_MARKER
        for i, ch in enumerate(noisy):
            if ch == prev_sym:
                rows.append(blank_row)
            if len(noisy) == len(true) and ch != true[i]:
                rows.append(ambiguous(ch, true[i]))
            else:
                rows.append(sharp(ch))
            prev_sym = ch
    rows.append(blank_row)
    return np.log(np.asarray(rows))


def _gamma_speech_with_noise(rng: np.random.Generator, n: int,
                             snr_db: float) -> np.ndarray:
    speech = rng.gamma(0.4, 1.0, n) * rng.choice([-1.0, 1.0], n)
    speech /= np.sqrt(np.mean(speech ** 2))
    noise = rng.standard_normal(n) * math.sqrt(10.0 ** (-snr_db / 10.0))
    mix = speech + noise
    return 0.9 * mix / np.max(np.abs(mix))


def generate_corpus(
    out_dir: str | Path,
    *,
    n_speakers: int = 12,
    utterances_per_speaker: int = 6,
    words_per_utterance: int = 5,
    noise_rate_step: float = 0.05,
    seed: int = 20240,
    write_audio: bool = True,
    audio_rate_hz: int = 8000,
) -> SyntheticCorpus:
    """Write a full fixture corpus under out_dir and return its layout.

    Speaker k gets word-substitution noise rate k * noise_rate_step and
    rating 5 * (1 - rate). Durations and (optional) audio SNRs increase
    with the rating so the confounder baselines have a known sign too.
    """
    root = Path(out_dir)
    (root / "post").mkdir(parents=True, exist_ok=True)
    if write_audio:
        (root / "wav").mkdir(exist_ok=True)

    vocab, letters = _build_vocab()
    vocab_path = root / "vocab.txt"
    vocab_path.write_text("\n".join(vocab.symbols) + "\n", encoding="utf-8")
    lm_path = root / "lm.arpa"
    lm_path.write_text(_unigram_arpa(), encoding="utf-8")

    corruption = {w: _corrupted_variant(w, letters) for w in LEXICON}
    rng = np.random.default_rng(seed)

    records: list[UtteranceRecord] = []
    mock_full: dict[str, str] = {}
    mock_half: dict[str, str] = {}
    meta_utts: list[dict] = []
    seen_sentences: set[str] = set()

    for spk in range(n_speakers):
        p = spk * noise_rate_step
        rating = 5.0 * (1.0 - p)
        wpm = 30.0 + 12.0 * rating + float(rng.uniform(-1.0, 1.0))
        for utt in range(utterances_per_speaker):
            # resample until the noisy sentence is unique: the mock
            # substitution tables are keyed by exact sentence text
            while True:
                true_words = [str(w) for w in rng.choice(LEXICON, words_per_utterance)]
                corrupt_mask = rng.random(words_per_utterance) < p
                noisy_words = [corruption[w] if m else w
                               for w, m in zip(true_words, corrupt_mask)]
                noisy_sentence = " ".join(noisy_words)
                if noisy_sentence not in seen_sentences:
                    seen_sentences.add(noisy_sentence)
                    break

            uid = f"spk{spk:02d}_utt{utt:02d}"
            matrix = PosteriorMatrix.from_array(
                uid, _emission_rows(noisy_words, true_words, vocab))
            write_posteriors(matrix, root / "post" / f"{uid}.ctcp")

            corrupted_positions = [i for i, m in enumerate(corrupt_mask) if m]
            full_fix = list(true_words)
            half_fix = list(noisy_words)
            for j, pos in enumerate(corrupted_positions):
                if j % 2 == 0:
                    half_fix[pos] = true_words[pos]
            mock_full[noisy_sentence] = f"[{' '.join(full_fix)}]"
            mock_half[noisy_sentence] = f"[{' '.join(half_fix)}]"

            audio_path = None
            if write_audio:
                snr_db = 1.0 + 4.0 * rating + float(rng.uniform(-0.5, 0.5))
                samples = _gamma_speech_with_noise(
                    rng, int(0.35 * audio_rate_hz), snr_db)
                audio_path = f"wav/{uid}.wav"
                write_wav(AudioBuffer(samples, audio_rate_hz), root / audio_path)

            records.append(UtteranceRecord(
                utterance_id=uid,
                speaker_id=f"spk{spk:02d}",
                posterior_path=f"post/{uid}.ctcp",
                audio_path=audio_path,
                ground_truth_text=" ".join(true_words),
                rating=rating,
                duration_s=round(words_per_utterance / wpm * 60.0, 3),
            ))
            meta_utts.append({
                "utterance_id": uid,
                "noise_rate": p,
                "true_words": true_words,
                "noisy_words": noisy_words,
                "corrupted_positions": corrupted_positions,
            })

    manifest_path = root / "manifest.jsonl"
    write_manifest(records, manifest_path)
    mock_full_path = root / "mock_replies_full.json"
    mock_full_path.write_text(json.dumps(mock_full, indent=1, sort_keys=True),
                              encoding="utf-8")
    mock_half_path = root / "mock_replies_half.json"
    mock_half_path.write_text(json.dumps(mock_half, indent=1, sort_keys=True),
                              encoding="utf-8")
    meta_path = root / "meta.json"
    meta_path.write_text(json.dumps({
        "seed": seed,
        "n_speakers": n_speakers,
        "utterances_per_speaker": utterances_per_speaker,
        "words_per_utterance": words_per_utterance,
        "noise_rate_step": noise_rate_step,
        "utterances": meta_utts,
    }, indent=1), encoding="utf-8")

    return SyntheticCorpus(
        root=root,
        vocab_path=vocab_path,
        lm_path=lm_path,
        manifest_path=manifest_path,
        mock_full_fix_path=mock_full_path,
        mock_half_fix_path=mock_half_path,
        meta_path=meta_path,
        records=records,
    )


def main(argv: list[str] | None = None) -> int:
    import argparse

    parser = argparse.ArgumentParser(
        description="generate a synthetic evaluation corpus")
    parser.add_argument("out_dir")
    parser.add_argument("--speakers", type=int, default=12)
    parser.add_argument("--utterances", type=int, default=6)
    parser.add_argument("--words", type=int, default=5)
    parser.add_argument("--seed", type=int, default=20240)
    parser.add_argument("--no-audio", action="store_true")
    args = parser.parse_args(argv)
    corpus = generate_corpus(
        args.out_dir,
        n_speakers=args.speakers,
        utterances_per_speaker=args.utterances,
        words_per_utterance=args.words,
        seed=args.seed,
        write_audio=not args.no_audio,
    )
    print(f"wrote {len(corpus.records)} utterances under {corpus.root}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

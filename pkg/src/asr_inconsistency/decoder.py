"""Greedy and beam CTC decoding over log-posterior matrices.

Greedy decoding takes the per-frame argmax and collapses the raw path
(merge runs of identical labels, then drop blanks). Beam decoding is a
prefix beam search: hypotheses are collapsed label prefixes carrying
separate probability mass for paths ending in blank vs. non-blank, merged
by log-sum-exp, with a word-level language model fused in at every word
boundary and once more at the end of the utterance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyBeamError
from .ngram import NGramModel
from .posteriors import PosteriorMatrix
from .transcript import Transcript, TranscriptSource
from .vocab import Vocabulary

NEG_INF = float("-inf")


def _logaddexp(a: float, b: float) -> float:
    if a == NEG_INF:
        return b
    if b == NEG_INF:
        return a
    if a < b:
        a, b = b, a
    return a + math.log1p(math.exp(b - a))


@dataclass(frozen=True)
class RawPath:
    """Per-frame label indices before collapsing."""

    labels: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class DecoderConfig:
    alpha: float = 0.5   # language-model weight
    beta: float = 0.5    # per-word insertion bonus
    beam_width: int = 100
    prune_logp_floor: float = -20.0  # mass floor relative to the frame's best

    def __post_init__(self) -> None:
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


def greedy_decode(post: PosteriorMatrix) -> RawPath:
    """Most probable symbol per frame; ties go to the lowest index."""
    labels = np.argmax(post.frames, axis=1)
    return RawPath(tuple(int(x) for x in labels))


def collapse_labels(labels: tuple[int, ...] | list[int], blank_index: int) -> list[int]:
    """Merge runs of identical labels, then remove blanks (in that order)."""
    merged: list[int] = []
    prev: int | None = None
    for lab in labels:
        if lab != prev:
            merged.append(lab)
        prev = lab
    return [lab for lab in merged if lab != blank_index]


def labels_to_words(labels: list[int] | tuple[int, ...], vocab: Vocabulary) -> list[str]:
    """Join blank-free labels into word strings, splitting at the delimiter."""
    words: list[str] = []
    current: list[str] = []
    for lab in labels:
        if lab == vocab.delimiter_index:
            if current:
                words.append("".join(current))
                current = []
        else:
            current.append(vocab.symbols[lab])
    if current:
        words.append("".join(current))
    return words


def collapse(raw: RawPath, vocab: Vocabulary,
             source: TranscriptSource = TranscriptSource.GREEDY) -> Transcript:
    """Collapse a raw path into a normalized transcript."""
    labels = collapse_labels(raw.labels, vocab.blank_index)
    words = labels_to_words(labels, vocab)
    return Transcript.from_raw(" ".join(words), source)


def fused_score(acoustic_logp: float, lm_logp: float, word_count: int,
                cfg: DecoderConfig) -> float:
    """Combined hypothesis score: acoustic + alpha * LM + beta * word count."""
    return acoustic_logp + cfg.alpha * lm_logp + cfg.beta * word_count


@dataclass
class BeamHypothesis:
    """One collapsed prefix tracked during the search.

    All fields besides the two mass slots are functions of the prefix, so
    hypotheses reaching the same prefix from different parents can be merged
    by adding their masses.
    """

    prefix: tuple[int, ...]
    logp_blank: float = NEG_INF      # mass of alignments ending in blank
    logp_nonblank: float = NEG_INF   # mass ending in the last prefix symbol
    lm_state: tuple[str, ...] = ()
    lm_logp: float = 0.0             # accumulated ln P of completed words
    word_count: int = 0
    partial_word: str = ""

    @property
    def total_logp(self) -> float:
        return _logaddexp(self.logp_blank, self.logp_nonblank)


@dataclass(frozen=True)
class DecodedBeam:
    """A finished hypothesis with its score decomposition."""

    prefix: tuple[int, ...]
    words: tuple[str, ...]
    acoustic_logp: float
    lm_logp: float
    word_count: int
    score: float


def decode_beams(post: PosteriorMatrix, vocab: Vocabulary,
                 lm: NGramModel | None, cfg: DecoderConfig) -> list[DecodedBeam]:
    """Run the prefix beam search and return surviving hypotheses, best first.

    With lm=None (or alpha=0) the score of a hypothesis is exactly the
    log-sum of all alignment paths that collapse to its prefix. Ties are
    broken toward the lexicographically smallest prefix, which makes the
    search fully deterministic.
    """
    blank = vocab.blank_index
    delim = vocab.delimiter_index
    symbols = vocab.symbols
    n_symbols = len(symbols)
    ctx0 = lm.initial_context() if lm is not None else ()

    def child_of(parent: BeamHypothesis, label: int) -> BeamHypothesis:
        if label == delim and parent.partial_word:
            if lm is not None:
                word_lp, state = lm.advance(parent.lm_state, parent.partial_word)
            else:
                word_lp, state = 0.0, ()
            return BeamHypothesis(
                prefix=parent.prefix + (label,),
                lm_state=state,
                lm_logp=parent.lm_logp + word_lp,
                word_count=parent.word_count + 1,
                partial_word="",
            )
        partial = parent.partial_word
        if label != delim:
            partial = partial + symbols[label]
        return BeamHypothesis(
            prefix=parent.prefix + (label,),
            lm_state=parent.lm_state,
            lm_logp=parent.lm_logp,
            word_count=parent.word_count,
            partial_word=partial,
        )

    beams: dict[tuple[int, ...], BeamHypothesis] = {
        (): BeamHypothesis(prefix=(), logp_blank=0.0, lm_state=ctx0)
    }

    for t in range(post.frame_count):
        row = post.frames[t].tolist()
        next_beams: dict[tuple[int, ...], BeamHypothesis] = {}
        for prefix, hyp in beams.items():
            p_total = hyp.total_logp
            if p_total == NEG_INF:
                continue
            # blank keeps the prefix
            same = next_beams.get(prefix)
            if same is None:
                same = BeamHypothesis(
                    prefix=prefix, lm_state=hyp.lm_state, lm_logp=hyp.lm_logp,
                    word_count=hyp.word_count, partial_word=hyp.partial_word)
                next_beams[prefix] = same
            same.logp_blank = _logaddexp(same.logp_blank, p_total + row[blank])
            # repeating the last symbol also keeps the prefix
            if prefix:
                same.logp_nonblank = _logaddexp(
                    same.logp_nonblank, hyp.logp_nonblank + row[prefix[-1]])
            # extensions with a new non-blank symbol
            for k in range(n_symbols):
                if k == blank:
                    continue
                # a repeated symbol needs an intervening blank; only the
                # blank-ending mass may extend with it
                src = hyp.logp_blank if (prefix and k == prefix[-1]) else p_total
                if src == NEG_INF:
                    continue
                new_prefix = prefix + (k,)
                child = next_beams.get(new_prefix)
                if child is None:
                    child = child_of(hyp, k)
                    next_beams[new_prefix] = child
                child.logp_nonblank = _logaddexp(child.logp_nonblank, src + row[k])
        if not next_beams:
            raise EmptyBeamError(f"{post.utterance_id}: no surviving hypothesis")
        best_total = max(h.total_logp for h in next_beams.values())
        if best_total == NEG_INF:
            raise EmptyBeamError(f"{post.utterance_id}: all hypotheses at -inf mass")
        floor = best_total + cfg.prune_logp_floor
        ranked = sorted(
            (h for h in next_beams.values() if h.total_logp >= floor),
            key=lambda h: (-fused_score(h.total_logp, h.lm_logp, h.word_count, cfg),
                           h.prefix),
        )
        beams = {h.prefix: h for h in ranked[:cfg.beam_width]}

    finished: list[DecodedBeam] = []
    for hyp in beams.values():
        lm_total = hyp.lm_logp
        word_count = hyp.word_count
        state = hyp.lm_state
        if hyp.partial_word:
            if lm is not None:
                word_lp, state = lm.advance(state, hyp.partial_word)
                lm_total += word_lp
            word_count += 1
        if lm is not None:
            lm_total += lm.final_logprob(state)
        finished.append(DecodedBeam(
            prefix=hyp.prefix,
            words=tuple(labels_to_words(list(hyp.prefix), vocab)),
            acoustic_logp=hyp.total_logp,
            lm_logp=lm_total,
            word_count=word_count,
            score=fused_score(hyp.total_logp, lm_total, word_count, cfg),
        ))
    finished.sort(key=lambda b: (-b.score, b.prefix))
    return finished


def beam_search_decode(post: PosteriorMatrix, vocab: Vocabulary,
                       lm: NGramModel | None, cfg: DecoderConfig) -> Transcript:
    """Highest-scoring sentence under the fused acoustic + LM score."""
    best = decode_beams(post, vocab, lm, cfg)[0]
    return Transcript.from_raw(" ".join(best.words), TranscriptSource.NGRAM_REFERENCE)

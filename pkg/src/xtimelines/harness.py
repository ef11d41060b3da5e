"""Experiment harness: corpus manifests, extraction runs, splits, statistics.

Everything here is a pure function of (corpus, configuration, seed), so
any experiment can be re-run bit-for-bit. Randomized protocols draw from
the package's own portable generator.

The corpus manifest is a line-oriented TSV-ish file:

    #DOC <path> <lang> <topic>
    #TARGET <name> <head> <kb_uri or ->
    #GOLD <task> <directory>        task: a language code, or "cross"

Paths are resolved against the manifest's directory. Gold directories
hold one ``<entity-slug>.timeline`` file per target.
"""

from __future__ import annotations

import re
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from math import inf, sqrt
from pathlib import Path

from scipy.stats import t as t_distribution

from .corpus import AnnotatedDocument, DOC_ID_RE, parse_document, validate_document
from .crosslingual import EventContext, merge_timelines
from .errors import DataError, ParseError
from .extraction import (
    AGENT_PATIENT_ROLES,
    DocumentIndex,
    TargetEntity,
    bte_anchors,
    build_timeline,
    dlt_anchors,
    explicit_anchors,
    find_target_mentions,
    select_events,
)
from .resources import ResourceTables
from .rng import SplitMix64
from .scorer import CorpusScore, micro_average, score_pair
from .timeline import Timeline, parse_timeline, restrict_timeline

SYSTEM_BTE = "bte"
SYSTEM_DLT = "dlt"
SYSTEM_CLE = "cle"
SYSTEMS = (SYSTEM_BTE, SYSTEM_DLT, SYSTEM_CLE)

TASK_CROSS = "cross"

LAYER_SRL = "SRL"
LAYER_NERNED = "NER+NED"
LAYER_CR = "CR"
LAYER_TIME = "TEI+TEN+TRE"
LAYERS = (LAYER_SRL, LAYER_NERNED, LAYER_CR, LAYER_TIME)

SWEEP_MIX = "mix90"
SWEEP_ALL_EN_PLUS_ES = "all_en_plus_es"
SWEEP_ALL_ES_PLUS_EN = "all_es_plus_en"
SWEEP_VARIANTS = (SWEEP_MIX, SWEEP_ALL_EN_PLUS_ES, SWEEP_ALL_ES_PLUS_EN)
SWEEP_PERCENTAGES = tuple(range(5, 100, 5))
SWEEP_SETS_PER_POINT = 30


def entity_slug(name: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "_", name.lower()).strip("_")
    if not slug:
        raise DataError(f"entity name {name!r} yields an empty slug")
    return slug


@dataclass(frozen=True)
class ManifestEntry:
    path: Path
    language: str
    topic: str


@dataclass(frozen=True)
class CorpusManifest:
    base_dir: Path
    docs: tuple[ManifestEntry, ...]
    targets: tuple[TargetEntity, ...]
    gold_dirs: tuple[tuple[str, Path], ...]  # (task, directory)


def load_manifest(path) -> CorpusManifest:
    path = Path(path)
    base = path.parent
    docs = []
    targets = []
    gold_dirs = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        fields = line.split("\t")
        marker = fields[0]
        if marker == "#DOC":
            if len(fields) != 4:
                raise ParseError("#DOC needs path, language, topic", line=line_no, source=str(path))
            docs.append(ManifestEntry(base / fields[1], fields[2], fields[3]))
        elif marker == "#TARGET":
            if len(fields) != 4:
                raise ParseError("#TARGET needs name, head, kb_uri (or -)",
                                 line=line_no, source=str(path))
            uri = None if fields[3] == "-" else fields[3]
            targets.append(TargetEntity(fields[1], fields[2], uri))
        elif marker == "#GOLD":
            if len(fields) != 3:
                raise ParseError("#GOLD needs task and directory", line=line_no, source=str(path))
            gold_dirs.append((fields[1], base / fields[2]))
        else:
            raise ParseError(f"unknown manifest marker {marker!r}", line=line_no, source=str(path))
    if not docs:
        raise ParseError("manifest lists no documents", source=str(path))
    if not targets:
        raise ParseError("manifest lists no target entities", source=str(path))
    return CorpusManifest(base, tuple(docs), tuple(targets), tuple(gold_dirs))


@dataclass(frozen=True)
class Corpus:
    manifest: CorpusManifest
    docs: tuple[AnnotatedDocument, ...]
    gold: dict  # task -> {entity slug -> Timeline}

    def doc_ids(self, language=None) -> list[str]:
        return [d.doc_id for d in self.docs if language is None or d.language == language]

    def languages(self) -> list[str]:
        return sorted({d.language for d in self.docs})

    def by_id(self, doc_id) -> AnnotatedDocument:
        for d in self.docs:
            if d.doc_id == doc_id:
                return d
        raise KeyError(doc_id)


def load_corpus(manifest_path) -> Corpus:
    """Parse and validate every document and gold timeline of a manifest."""
    manifest = load_manifest(manifest_path)
    docs = []
    seen = {}
    for entry in manifest.docs:
        doc = parse_document(entry.path.read_bytes(), source=str(entry.path))
        if doc.doc_id in seen:
            raise DataError(f"duplicate document id {doc.doc_id} ({entry.path} and {seen[doc.doc_id]})")
        seen[doc.doc_id] = entry.path
        if doc.language != entry.language:
            raise DataError(f"{entry.path}: manifest says language {entry.language}, "
                            f"document says {doc.language}")
        problems = validate_document(doc)
        if problems:
            listing = "; ".join(str(v) for v in problems)
            raise DataError(f"{entry.path}: invalid document: {listing}")
        docs.append(doc)
    docs.sort(key=lambda d: d.doc_id)

    target_names = {t.name for t in manifest.targets}
    gold = {}
    for task, directory in manifest.gold_dirs:
        timelines = {}
        for file in sorted(Path(directory).glob("*.timeline")):
            timeline = parse_timeline(file.read_text(encoding="utf-8"), source=str(file))
            if timeline.target not in target_names:
                raise DataError(f"{file}: gold timeline target {timeline.target!r} "
                                f"is not in the manifest's entity list")
            timelines[entity_slug(timeline.target)] = timeline
        gold[task] = timelines
    return Corpus(manifest, tuple(docs), gold)


# ---------------------------------------------------------------------------
# Extraction runs

def _doc_events(doc, target, tables, system):
    """Anchored events of one (document, target) pair, plus CLE contexts."""
    idx = DocumentIndex(doc)
    target_mentions = find_target_mentions(doc, target, tables)
    if not target_mentions:
        return [], {}
    events = select_events(doc, target_mentions)
    explicit = explicit_anchors(doc, events)
    if system == SYSTEM_BTE:
        anchored = bte_anchors(doc, events, explicit)
    else:
        anchored = dlt_anchors(doc, events, explicit)
    kept = [anchored[pid] for pid in events if anchored[pid].anchor is not None]

    contexts = {}
    for event in kept:
        p = idx.predicates[event.pred_id]
        role_label = None
        filler = None
        for label in AGENT_PATIENT_ROLES:
            candidate = p.role_target(label)
            if candidate in target_mentions:
                role_label = label
                filler = idx.mentions[candidate]
                break
        if role_label is None:
            continue
        contexts[event.mention().key()] = EventContext(
            language=doc.language,
            predicate_sense=p.sense,
            role=role_label,
            entity_id=tables.resolve_entity(filler.ned_link),
            anchor=event.anchor,
        )
    return kept, contexts


def extract_timeline(docs, target: TargetEntity, tables: ResourceTables,
                     system: str) -> Timeline:
    """One target's timeline from a document collection under one system."""
    if system not in SYSTEMS:
        raise ValueError(f"unknown system {system!r}")
    per_language = {}
    contexts = {}
    for doc in sorted(docs, key=lambda d: d.doc_id):
        kept, doc_contexts = _doc_events(doc, target, tables, system)
        if kept:
            per_language.setdefault(doc.language, []).extend(kept)
            contexts.update(doc_contexts)
    all_events = [e for events in per_language.values() for e in events]
    if not all_events:
        return Timeline(target.name, ())
    if system == SYSTEM_CLE:
        timelines = [build_timeline(target.name, events)
                     for _, events in sorted(per_language.items())]
        return merge_timelines(timelines, contexts, tables)
    return build_timeline(target.name, all_events)


def run_extraction(corpus: Corpus, system: str, tables: ResourceTables,
                   language=None, doc_ids=None) -> dict[str, Timeline]:
    """Timelines for every manifest target, keyed by entity slug."""
    docs = [d for d in corpus.docs
            if (language is None or d.language == language)
            and (doc_ids is None or d.doc_id in set(doc_ids))]
    return {entity_slug(t.name): extract_timeline(docs, t, tables, system)
            for t in corpus.manifest.targets}


# ---------------------------------------------------------------------------
# Scoring runs

def score_run(sys_timelines: dict, gold_timelines: dict, mode: str):
    """Per-entity scores plus the corpus micro average.

    Entities present in gold but absent from the system are scored as
    empty system timelines (a pure recall penalty); returns a list of
    (slug, PairScore, warning-or-None) and the CorpusScore.
    """
    rows = []
    scores = []
    for slug in sorted(gold_timelines):
        gold = gold_timelines[slug]
        warning = None
        sys_timeline = sys_timelines.get(slug)
        if sys_timeline is None:
            sys_timeline = Timeline(gold.target, ())
            warning = f"no system timeline for {slug}; scored as empty"
        pair = score_pair(sys_timeline, gold, mode)
        rows.append((slug, pair, warning))
        scores.append(pair)
    return rows, micro_average(scores)


def evaluate_docset(corpus: Corpus, tables: ResourceTables, doc_ids,
                    system: str, mode: str, gold_task: str) -> CorpusScore:
    """Extract on a document subset and score against restricted gold.

    The gold reference keeps only mentions whose documents are in the
    subset; rows left empty disappear.
    """
    sys_timelines = run_extraction(corpus, system, tables, doc_ids=doc_ids)
    gold = {slug: restrict_timeline(timeline, doc_ids)
            for slug, timeline in corpus.gold[gold_task].items()}
    _, corpus_score = score_run(sys_timelines, gold, mode)
    return corpus_score


# ---------------------------------------------------------------------------
# Split protocols

def parallel_pairs(corpus: Corpus):
    """Translation pairs, identified by the shared numeric document id.

    Returns (languages, pairs) where pairs maps each numeric id to its
    per-language document ids. Fails unless the corpus is exactly two
    languages with a complete pairing.
    """
    langs = corpus.languages()
    if len(langs) != 2:
        raise DataError(f"parallel splitting needs exactly two languages, got {langs}")
    pairs = {}
    for doc in corpus.docs:
        num = DOC_ID_RE.match(doc.doc_id).group(2)
        pairs.setdefault(num, {})[doc.language] = doc.doc_id
    for num, members in sorted(pairs.items()):
        if sorted(members) != langs:
            raise DataError(f"document group {num} is not a complete translation pair")
    ordered = sorted(pairs.items(), key=lambda item: int(item[0]))
    return langs, ordered


def split_5050(corpus: Corpus, seed: int, n: int):
    """n random half-and-half subsets with no translation pair co-occurring.

    Each subset holds half the documents of each language. Because a pair
    may contribute at most one side, choosing which pair ids go to the
    first language determines the subset: the second language takes the
    complement. Reproducible for a fixed seed.
    """
    if n < 1:
        raise ValueError("need at least one subset")
    langs, pairs = parallel_pairs(corpus)
    if len(pairs) % 2:
        raise DataError(f"cannot halve {len(pairs)} translation pairs")
    half = len(pairs) // 2
    nums = [num for num, _ in pairs]
    members = dict(pairs)
    rng = SplitMix64(seed)
    subsets = []
    for _ in range(n):
        chosen = set(rng.sample(nums, half))
        first = [members[num][langs[0]] for num in nums if num in chosen]
        second = [members[num][langs[1]] for num in nums if num not in chosen]
        subsets.append(tuple(sorted(first + second)))
    return subsets


def percentage_count(percent: int, total: int) -> int:
    """Documents for a percentage point: floor, but at least 1 when > 0."""
    if percent == 0:
        return 0
    return max(1, percent * total // 100)


def sweep_subsets(corpus: Corpus, variant: str, seed: int,
                  percentages=SWEEP_PERCENTAGES, sets_per_point=SWEEP_SETS_PER_POINT):
    """Document subsets for one sweep variant, as (percentage, doc_ids) rows.

    mix90 draws x% of the pairs on the second-language side and the rest
    on the first-language side (never both sides of a pair), so every
    subset is one corpus-half. The all_X_plus_Y variants keep every
    document of the base language and add x% of the other language;
    translation pairs are allowed there.
    """
    if variant not in SWEEP_VARIANTS:
        raise ValueError(f"unknown sweep variant {variant!r}")
    langs, pairs = parallel_pairs(corpus)
    nums = [num for num, _ in pairs]
    members = dict(pairs)
    total = len(pairs)
    rng = SplitMix64(seed)
    rows = []
    for percent in percentages:
        for _ in range(sets_per_point):
            if variant == SWEEP_MIX:
                k = percentage_count(percent, total)
                varied = set(rng.sample(nums, k))
                docs = [members[num][langs[1]] for num in nums if num in varied]
                docs += [members[num][langs[0]] for num in nums if num not in varied]
            else:
                base, varied_lang = (("en", "es") if variant == SWEEP_ALL_EN_PLUS_ES
                                     else ("es", "en"))
                if base not in langs or varied_lang not in langs:
                    raise DataError(f"sweep variant {variant} needs languages en and es, got {langs}")
                k = percentage_count(percent, total)
                extra = set(rng.sample(nums, k))
                docs = [members[num][base] for num in nums]
                docs += [members[num][varied_lang] for num in nums if num in extra]
            rows.append((percent, tuple(sorted(docs))))
    return rows


# ---------------------------------------------------------------------------
# Statistics

@dataclass(frozen=True)
class TTestResult:
    statistic: float
    p_value: float
    degenerate: bool = False


def paired_t_test(scores_a, scores_b) -> TTestResult:
    """Two-sided paired t-test on equal-length samples.

    Zero-variance differences are reported as degenerate rather than NaN:
    all-zero differences give (0, p=1); constant nonzero differences give
    a signed infinite statistic with p=0.
    """
    a = list(scores_a)
    b = list(scores_b)
    if len(a) != len(b):
        raise ValueError("paired samples must have equal length")
    if len(a) < 2:
        raise ValueError("need at least two pairs")
    diffs = [x - y for x, y in zip(a, b)]
    mean = statistics.fmean(diffs)
    variance = statistics.variance(diffs)  # sample variance, n-1
    n = len(diffs)
    if variance == 0.0:
        if mean == 0.0:
            return TTestResult(0.0, 1.0, degenerate=True)
        return TTestResult(inf if mean > 0 else -inf, 0.0, degenerate=True)
    statistic = mean / sqrt(variance / n)
    p_value = 2.0 * float(t_distribution.sf(abs(statistic), n - 1))
    return TTestResult(statistic, p_value)


@dataclass(frozen=True)
class SplitStats:
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float
    mean: float


def boxplot_stats(scores) -> SplitStats:
    """Five-number summary plus mean; quartiles by linear interpolation.

    With the sample sorted and n = len(scores), quartile q is taken at
    rank h = (n - 1) * q and interpolated linearly between the order
    statistics around h (the "inclusive" scheme). Whiskers are min/max.
    """
    xs = sorted(scores)
    if not xs:
        raise ValueError("need at least one score")
    if len(xs) == 1:
        x = xs[0]
        return SplitStats(x, x, x, x, x, x)
    q1, median, q3 = statistics.quantiles(xs, n=4, method="inclusive")
    return SplitStats(xs[0], q1, median, q3, xs[-1], statistics.fmean(xs))


# ---------------------------------------------------------------------------
# Error analysis

def find_target_mentions_shallow(doc, target, tables):
    """Target mentions without the coreference-chain closure."""
    idx = DocumentIndex(doc)
    target_id = tables.resolve_entity(target.kb_uri)
    matched = set()
    for m in doc.entity_mentions:
        if target_id is not None and m.ned_link is not None:
            if tables.resolve_entity(m.ned_link) == target_id:
                matched.add(m.mention_id)
                continue
        if idx.head_surface(m).lower() == target.head.lower():
            matched.add(m.mention_id)
    return frozenset(matched)


def _captured_mentions(docs, target, tables, system, layers):
    """Mention keys the pipeline yields when only ``layers`` are available.

    Without SRL there are no events at all. Without NER+NED there is no
    target filtering (every predicate counts, selection constraints
    included); CR only matters on top of NER+NED, where it enables the
    coreference-chain closure. Without the time layers no anchoring is
    required (or possible); with them, events must end up anchored under
    the given system to count.
    """
    captured = set()
    if LAYER_SRL not in layers:
        return captured
    for doc in docs:
        idx = DocumentIndex(doc)
        if LAYER_NERNED in layers:
            if LAYER_CR in layers:
                target_mentions = find_target_mentions(doc, target, tables)
            else:
                target_mentions = find_target_mentions_shallow(doc, target, tables)
            events = select_events(doc, target_mentions)
        else:
            events = [p.pred_id for p in doc.predicates]
        if LAYER_TIME in layers:
            explicit = explicit_anchors(doc, events)
            anchored = (bte_anchors if system == SYSTEM_BTE else dlt_anchors)(doc, events, explicit)
            events = [pid for pid in events if anchored[pid].anchor is not None]
        for pid in events:
            p = idx.predicates[pid]
            captured.add((doc.doc_id, p.sentence, idx.span_surface(p.sentence, p.span)))
    return captured


@dataclass(frozen=True)
class CaptureStat:
    group: str  # language code or "cross"
    gold_mentions: int
    captured: int

    @property
    def percentage(self):
        return 100.0 * self.captured / self.gold_mentions if self.gold_mentions else 0.0


def event_capture_stats(corpus: Corpus, tables: ResourceTables, system: str,
                        layers) -> list[CaptureStat]:
    """Share of gold event mentions the pipeline finds, per gold task.

    Matching is by (document, sentence, extent) and ignores time ordering
    entirely; anchors only matter when the time layers are enabled, where
    unanchored events do not count as captured.
    """
    layers = frozenset(layers)
    unknown = layers - set(LAYERS)
    if unknown:
        raise ValueError(f"unknown annotation layers: {sorted(unknown)}")
    stats = []
    for task in sorted(corpus.gold, key=lambda t: (t == TASK_CROSS, t)):
        language = None if task == TASK_CROSS else task
        docs = [d for d in corpus.docs if language is None or d.language == language]
        gold_keys = set()
        sys_keys = set()
        for target in corpus.manifest.targets:
            slug = entity_slug(target.name)
            gold_timeline = corpus.gold[task].get(slug)
            if gold_timeline is None:
                continue
            gold_keys.update(m.key() for m in gold_timeline.mentions())
            sys_keys.update(_captured_mentions(docs, target, tables, system, layers))
        stats.append(CaptureStat(task, len(gold_keys), len(gold_keys & sys_keys)))
    return stats


@dataclass(frozen=True)
class AnchorAccuracyStat:
    group: str
    matched: int
    correct: int

    @property
    def accuracy(self):
        # Undefined with no matched events; reported as None (N/A).
        return self.correct / self.matched if self.matched else None


def anchor_accuracy_core(sys_timelines: dict, gold_timelines: dict, group: str) -> AnchorAccuracyStat:
    matched = 0
    correct = 0
    for slug in sorted(gold_timelines):
        gold = gold_timelines[slug]
        gold_anchor = {m.key(): row.anchor for row in gold.rows for m in row.mentions}
        sys_timeline = sys_timelines.get(slug)
        if sys_timeline is None:
            continue
        for row in sys_timeline.rows:
            for m in row.mentions:
                anchor = gold_anchor.get(m.key())
                if anchor is None:
                    continue
                matched += 1
                if anchor == row.anchor:
                    correct += 1
    return AnchorAccuracyStat(group, matched, correct)


def anchor_accuracy(corpus: Corpus, tables: ResourceTables, system: str) -> list[AnchorAccuracyStat]:
    """Exact-anchor accuracy over system events matched to gold mentions."""
    stats = []
    for task in sorted(corpus.gold, key=lambda t: (t == TASK_CROSS, t)):
        language = None if task == TASK_CROSS else task
        sys_timelines = run_extraction(corpus, system, tables, language=language)
        stats.append(anchor_accuracy_core(sys_timelines, corpus.gold[task], task))
    return stats


# ---------------------------------------------------------------------------
# Experiment drivers

def _split_job(args):
    corpus, tables, doc_ids, systems, modes, gold_task = args
    results = []
    for system in systems:
        for mode in modes:
            results.append((system, mode, evaluate_docset(corpus, tables, doc_ids,
                                                          system, mode, gold_task)))
    return results


def run_split_experiment(corpus: Corpus, tables: ResourceTables, seed: int, n: int,
                         systems, modes, gold_task=TASK_CROSS, jobs: int = 1):
    """The n-fold 50-50 protocol: per-split scores, summaries, and t-tests.

    Returns (split_rows, summary_rows, ttest_rows) where split_rows are
    (split index, system, mode, CorpusScore), summaries are five-number
    statistics per (system, mode, score kind), and t-tests compare each
    pair of systems on per-split F1.
    """
    subsets = split_5050(corpus, seed, n)
    job_args = [(corpus, tables, doc_ids, tuple(systems), tuple(modes), gold_task)
                for doc_ids in subsets]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_split = list(pool.map(_split_job, job_args))
    else:
        per_split = [_split_job(args) for args in job_args]

    split_rows = []
    series = {}
    for index, results in enumerate(per_split):
        for system, mode, score in results:
            split_rows.append((index, system, mode, score))
            series.setdefault((system, mode), []).append(score)

    summary_rows = []
    for (system, mode) in sorted(series):
        scores = series[(system, mode)]
        for kind, values in (("precision", [s.precision for s in scores]),
                             ("recall", [s.recall for s in scores]),
                             ("f1", [s.f1 for s in scores])):
            summary_rows.append((system, mode, kind, boxplot_stats(values)))

    ttest_rows = []
    ordered = sorted(set(systems), key=SYSTEMS.index)
    for mode in modes:
        for i, system_a in enumerate(ordered):
            for system_b in ordered[i + 1:]:
                f1_a = [s.f1 for s in series[(system_a, mode)]]
                f1_b = [s.f1 for s in series[(system_b, mode)]]
                if len(f1_a) < 2:
                    continue
                ttest_rows.append((mode, system_a, system_b, paired_t_test(f1_a, f1_b)))
    return split_rows, summary_rows, ttest_rows


def run_sweep(corpus: Corpus, tables: ResourceTables, variant: str, seed: int,
              systems, gold_task=TASK_CROSS, mode: str = "relaxed",
              percentages=SWEEP_PERCENTAGES, sets_per_point=SWEEP_SETS_PER_POINT,
              jobs: int = 1):
    """Percentage sweep: arithmetic-mean scores per point, relaxed metric."""
    rows = sweep_subsets(corpus, variant, seed, percentages, sets_per_point)
    job_args = [(corpus, tables, doc_ids, tuple(systems), (mode,), gold_task)
                for _, doc_ids in rows]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_subset = list(pool.map(_split_job, job_args))
    else:
        per_subset = [_split_job(args) for args in job_args]

    bucket = {}
    for (percent, _), results in zip(rows, per_subset):
        for system, _, score in results:
            bucket.setdefault((percent, system), []).append(score)

    mean_rows = []
    for (percent, system) in sorted(bucket, key=lambda k: (k[0], SYSTEMS.index(k[1]))):
        scores = bucket[(percent, system)]
        mean_rows.append((
            variant, percent, system, mode,
            statistics.fmean(s.precision for s in scores),
            statistics.fmean(s.recall for s in scores),
            statistics.fmean(s.f1 for s in scores),
        ))
    return mean_rows

"""LoCoMo-style QA evaluation: loading, answering, scoring and reporting."""

from __future__ import annotations

import json
import logging
import math
import re
import string
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Iterable

from .config import ABLATIONS, EngineConfig, with_ablation
from .engine import Answer, MemoryEngine, count_tokens
from .types import ConversationTurn, QACategory, QAItem

logger = logging.getLogger(__name__)

# LoCoMo's integer codes.
CATEGORY_CODES = {
    1: QACategory.MULTI_HOP,
    2: QACategory.TEMPORAL,
    3: QACategory.OPEN_DOMAIN,
    4: QACategory.SINGLE_HOP,
    5: QACategory.ADVERSARIAL,
}
CATEGORY_ORDER = [
    QACategory.MULTI_HOP,
    QACategory.TEMPORAL,
    QACategory.OPEN_DOMAIN,
    QACategory.SINGLE_HOP,
    QACategory.ADVERSARIAL,
]

_DATE_FORMATS = (
    "%I:%M %p on %d %B, %Y",
    "%I:%M %p on %d %b, %Y",
    "%I:%M %p on %d %B %Y",
    "%I:%M%p on %d %B, %Y",
    "%d %B %Y",
    "%d %B, %Y",
    "%B %d, %Y",
)


class DatasetError(ValueError):
    pass


class AnswerError(RuntimeError):
    """A backend failure while answering one question; the original error is ``__cause__``."""

    def __init__(self, question_id: str, cause: BaseException):
        super().__init__(f"{question_id}: {type(cause).__name__}: {cause}")
        self.question_id = question_id


@dataclass
class Conversation:
    sample_id: str
    sessions: list[list[ConversationTurn]]
    qa: list[QAItem]

    @property
    def turns(self) -> list[ConversationTurn]:
        return [t for s in self.sessions for t in s]

    @property
    def last_time(self) -> datetime:
        return max(t.timestamp for t in self.turns)


def parse_date(raw: str) -> datetime:
    text = " ".join(str(raw).split())
    for fmt in _DATE_FORMATS:
        try:
            return datetime.strptime(text, fmt)
        except ValueError:
            pass
    try:
        return datetime.fromisoformat(text)
    except ValueError:
        raise DatasetError(f"unparseable date {raw!r}") from None


def parse_category(raw: Any, where: str) -> QACategory:
    if isinstance(raw, int) and not isinstance(raw, bool) and raw in CATEGORY_CODES:
        return CATEGORY_CODES[raw]
    if isinstance(raw, str):
        key = raw.strip().lower().replace("-", "_").replace(" ", "_")
        if key.isdigit() and int(key) in CATEGORY_CODES:
            return CATEGORY_CODES[int(key)]
        try:
            return QACategory(key)
        except ValueError:
            pass
    raise DatasetError(f"{where}: unknown question category {raw!r}")


def _session_numbers(conv: dict) -> list[int]:
    nums = []
    for key in conv:
        m = re.fullmatch(r"session_(\d+)", key)
        if m and isinstance(conv[key], list):
            nums.append(int(m.group(1)))
    return sorted(nums)


def load_locomo(path: str | Path) -> list[Conversation]:
    """Read a LoCoMo JSON file (a list of samples, or a single sample).

    Every turn takes its session's date as timestamp; order within a
    session is the turn order in the file.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    samples = raw if isinstance(raw, list) else [raw]
    return [_load_sample(s, f"{path.name}[{i}]") for i, s in enumerate(samples)]


def _load_sample(sample: Any, where: str) -> Conversation:
    if not isinstance(sample, dict):
        raise DatasetError(f"{where}: expected an object")
    sample_id = str(sample.get("sample_id", where))
    conv = sample.get("conversation")
    if not isinstance(conv, dict):
        raise DatasetError(f"{where}.conversation: missing or not an object")
    sessions = []
    for n in _session_numbers(conv):
        date_key = f"session_{n}_date_time"
        if date_key not in conv:
            raise DatasetError(f"{where}.conversation.{date_key}: missing")
        try:
            when = parse_date(conv[date_key])
        except DatasetError as exc:
            raise DatasetError(f"{where}.conversation.{date_key}: {exc}") from None
        turns = []
        for t_idx, turn in enumerate(conv[f"session_{n}"]):
            tw = f"{where}.conversation.session_{n}[{t_idx}]"
            if not isinstance(turn, dict) or "speaker" not in turn or "text" not in turn:
                raise DatasetError(f"{tw}: turn needs 'speaker' and 'text'")
            text = str(turn["text"]).strip()
            if turn.get("blip_caption"):
                text = f"{text} [shares an image: {turn['blip_caption']}]".strip()
            if not text:
                continue
            turns.append(
                ConversationTurn(
                    session_id=f"{sample_id}:session_{n}",
                    turn_id=str(turn.get("dia_id", f"S{n}:{t_idx}")),
                    speaker=str(turn["speaker"]),
                    text=text,
                    timestamp=when,
                )
            )
        sessions.append(turns)
    if not sessions:
        raise DatasetError(f"{where}.conversation: no sessions found")

    qa = []
    for q_idx, item in enumerate(sample.get("qa", [])):
        qw = f"{where}.qa[{q_idx}]"
        if not isinstance(item, dict) or "question" not in item or "category" not in item:
            raise DatasetError(f"{qw}: needs 'question' and 'category'")
        category = parse_category(item["category"], qw)
        if "answer" in item:
            gold = item["answer"]
        elif "adversarial_answer" in item:
            gold = item["adversarial_answer"]
        else:
            raise DatasetError(f"{qw}: missing 'answer'")
        qa.append(
            QAItem(
                question=str(item["question"]),
                answer=str(gold),
                category=category,
                evidence=[str(e) for e in item.get("evidence", [])],
            )
        )
    return Conversation(sample_id, sessions, qa)


# ---- metrics ------------------------------------------------------------------

_ARTICLES = re.compile(r"\b(a|an|the)\b")
_PUNCT = str.maketrans("", "", string.punctuation)


def normalize_answer(text: str) -> list[str]:
    """SQuAD-style normalisation: lowercase, drop punctuation and articles, split."""
    text = str(text).lower().translate(_PUNCT)
    return _ARTICLES.sub(" ", text).split()


def f1_score(prediction: str, gold: str) -> float:
    pred, ref = normalize_answer(prediction), normalize_answer(gold)
    if not pred and not ref:
        return 1.0
    if not pred or not ref:
        return 0.0
    common = sum((Counter(pred) & Counter(ref)).values())
    if common == 0:
        return 0.0
    precision = common / len(pred)
    recall = common / len(ref)
    return 2 * precision * recall / (precision + recall)


def bleu1_score(prediction: str, gold: str) -> float:
    """Clipped unigram precision times the brevity penalty."""
    if not str(prediction).strip():
        return 0.0
    pred, ref = normalize_answer(prediction), normalize_answer(gold)
    if not pred and not ref:
        return 1.0
    if not pred:
        return 0.0
    clipped = sum((Counter(pred) & Counter(ref)).values())
    precision = clipped / len(pred)
    bp = 1.0 if len(pred) >= len(ref) else math.exp(1 - len(ref) / len(pred))
    return precision * bp


# ---- running ------------------------------------------------------------------


def generate_answer(
    engine: MemoryEngine, question: str, now: datetime, chat=None, *, question_id: str | None = None
) -> Answer:
    """Retrieve, render the response prompt and ask the chat backend.

    Failures are re-raised as :class:`AnswerError` naming ``question_id``.
    """
    try:
        return engine.answer(question, now, chat)
    except Exception as exc:
        raise AnswerError(question_id or question, exc) from exc


@dataclass
class EvalRow:
    sample_id: str
    index: int
    category: str
    question: str
    prediction: str
    gold: str
    f1: float
    bleu1: float
    context_tokens: int
    retrieved: list[int]
    paths: list[str]
    error: str | None = None

    def to_json(self) -> str:
        return json.dumps(self.__dict__, ensure_ascii=False, sort_keys=True)


@dataclass
class CategoryScore:
    count: int = 0
    f1: float = 0.0
    bleu1: float = 0.0


@dataclass
class EvalReport:
    name: str
    rows: list[EvalRow] = field(default_factory=list)

    def by_category(self) -> dict[str, CategoryScore]:
        out: dict[str, CategoryScore] = {}
        for cat in CATEGORY_ORDER:
            rows = [r for r in self.rows if r.category == cat.value]
            if rows:
                out[cat.value] = _aggregate(rows)
        return out

    def overall(self) -> CategoryScore:
        return _aggregate(self.rows)

    @property
    def mean_context_tokens(self) -> float:
        if not self.rows:
            return 0.0
        return sum(r.context_tokens for r in self.rows) / len(self.rows)

    def format(self) -> str:
        lines = [f"== {self.name} ==", f"{'category':<14}{'n':>6}{'F1':>9}{'BLEU-1':>9}"]
        for cat, s in self.by_category().items():
            lines.append(f"{cat:<14}{s.count:>6}{100 * s.f1:>9.2f}{100 * s.bleu1:>9.2f}")
        o = self.overall()
        lines.append(f"{'overall':<14}{o.count:>6}{100 * o.f1:>9.2f}{100 * o.bleu1:>9.2f}")
        lines.append(f"mean context tokens: {self.mean_context_tokens:.1f}")
        errors = sum(1 for r in self.rows if r.error)
        if errors:
            lines.append(f"items with backend errors: {errors}")
        return "\n".join(lines) + "\n"

    def rows_jsonl(self) -> str:
        return "".join(r.to_json() + "\n" for r in self.rows)


def _aggregate(rows: list[EvalRow]) -> CategoryScore:
    if not rows:
        return CategoryScore()
    return CategoryScore(len(rows), sum(r.f1 for r in rows) / len(rows), sum(r.bleu1 for r in rows) / len(rows))


def evaluate_conversations(
    conversations: Iterable[Conversation],
    config: EngineConfig,
    embedder,
    chat,
    *,
    name: str = "full",
    token_counter: Callable[[str], int] = count_tokens,
    progress: Callable[[str], None] | None = None,
) -> EvalReport:
    """Ingest each conversation into a fresh engine, then answer its questions in order.

    Questions are posed at the conversation's final session date.  A backend
    failure scores the item 0 and records the error; the run continues.
    """
    report = EvalReport(name)
    for conv in conversations:
        engine = MemoryEngine(config, embedder, chat, token_counter=token_counter)
        engine.ingest_many(conv.turns)
        now = conv.last_time
        for idx, qa in enumerate(conv.qa):
            try:
                ans = generate_answer(engine, qa.question, now, question_id=f"{conv.sample_id}#{idx}")
            except AnswerError as exc:
                logger.warning("%s", exc)
                report.rows.append(
                    EvalRow(conv.sample_id, idx, qa.category.value, qa.question, "", qa.answer, 0.0, 0.0, 0, [], [], str(exc))
                )
                continue
            report.rows.append(
                EvalRow(
                    sample_id=conv.sample_id,
                    index=idx,
                    category=qa.category.value,
                    question=qa.question,
                    prediction=ans.text,
                    gold=qa.answer,
                    f1=f1_score(ans.text, qa.answer),
                    bleu1=bleu1_score(ans.text, qa.answer),
                    context_tokens=ans.context_tokens,
                    retrieved=ans.retrieval.node_ids,
                    paths=[r.path for r in ans.retrieval.episodic],
                )
            )
        if progress:
            progress(f"{name}: {conv.sample_id} done ({len(conv.qa)} questions)")
    return report


def run_eval(dataset_path: str | Path, config: EngineConfig, embedder, chat, **kw) -> EvalReport:
    return evaluate_conversations(load_locomo(dataset_path), config, embedder, chat, **kw)


def run_ablation_sweep(
    dataset_path: str | Path,
    config: EngineConfig,
    backend_factory: Callable[[], tuple[Any, Any]],
    names: Iterable[str] = tuple(ABLATIONS),
    **kw,
) -> list[EvalReport]:
    """One report per ablation, each with fresh backends from ``backend_factory``."""
    conversations = load_locomo(dataset_path)
    reports = []
    for name in names:
        embedder, chat = backend_factory()
        reports.append(evaluate_conversations(conversations, with_ablation(config, name), embedder, chat, name=name, **kw))
    return reports

"""Model discovery: hub client, offline fixture registry, filtering.

Two interchangeable backends serve model cards:

* :class:`FixtureRegistry` reads a directory of ``<org>__<name>/card.json``
  (+ optional ``README.md``) entries plus a ``tasks.json`` listing the known
  task tags.
* :class:`HubClient` talks to a Hugging-Face-compatible HTTP API
  (``GET /api/models?filter=<tag>&sort=downloads&limit=N`` and the raw
  README path).

Search ordering is downloads desc, likes desc, then model id; both backends
share it, so identical card data yields identical results.

Servability is a deliberate simplification: a model is considered servable
when its README mentions at least one usage keyword (usage, inference,
pipeline, api) and its footprint fits under the edge size ceiling.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Protocol

import json

import requests

from .errors import BackendUnavailable, ModelNotFound, NoCandidates, UnknownTask

USAGE_KEYWORDS = ("usage", "inference", "pipeline", "api")
DEFAULT_SIZE_CEILING_MB = 2048.0
REASON_NO_USAGE = "no-usage-section"
REASON_TOO_LARGE = "exceeds-size-ceiling"
MAX_CONCURRENT_FETCHES = 4
POLITENESS_DELAY_S = 0.05


@dataclass
class ModelCard:
    model_id: str
    task_tags: list[str] = field(default_factory=list)
    downloads: int = 0
    likes: int = 0
    size_mb: float = 0.0
    gpu_required: bool = False
    min_cpu: int = 1
    min_mem_mb: int = 512
    base_inference_ms: float | None = None
    accuracy: float | None = None  # carried but never scored: no benchmark data
    readme_text: str | None = None
    servable: bool | None = None
    servability_reasons: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "task_tags": list(self.task_tags),
            "downloads": self.downloads,
            "likes": self.likes,
            "size_mb": self.size_mb,
            "gpu_required": self.gpu_required,
            "min_cpu": self.min_cpu,
            "min_mem_mb": self.min_mem_mb,
            "base_inference_ms": self.base_inference_ms,
            "servable": self.servable,
            "servability_reasons": list(self.servability_reasons),
        }


def card_sort_key(card: ModelCard):
    return (-card.downloads, -card.likes, card.model_id)


def assess_servability(
    card: ModelCard, readme: str, *, size_ceiling_mb: float = DEFAULT_SIZE_CEILING_MB
) -> tuple[bool, list[str]]:
    """Keyword + footprint rule; reasons name every failed check."""
    reasons = []
    text = (readme or "").lower()
    if not any(keyword in text for keyword in USAGE_KEYWORDS):
        reasons.append(REASON_NO_USAGE)
    if card.size_mb > size_ceiling_mb:
        reasons.append(REASON_TOO_LARGE)
    return (not reasons, reasons)


def filter_and_rank(cards: list[ModelCard], profile, nodes) -> list[ModelCard]:
    """Keep servable cards deployable on at least one node, preserving order.

    ``profile`` is accepted for interface symmetry (accuracy-based scoring is
    out of scope, so it currently does not influence the result).
    Raises NoCandidates when nothing survives.
    """
    for card in cards:
        if card.servable is None:
            raise ValueError(f"servability not computed for '{card.model_id}'")
    kept = []
    for card in cards:
        if not card.servable:
            continue
        if any(_deployable_on(card, node) for node in nodes):
            kept.append(card)
    if not kept:
        raise NoCandidates("no servable, deployable model matched the use case")
    return kept


def _deployable_on(card: ModelCard, node) -> bool:
    if node.free_cpu < card.min_cpu or node.free_mem < card.min_mem_mb:
        return False
    if card.gpu_required and node.free_gpu < 1:
        return False
    return True


class ModelBackend(Protocol):
    def search(self, task_tag: str, limit: int) -> list[ModelCard]: ...
    def card(self, model_id: str) -> ModelCard: ...
    def readme(self, model_id: str) -> str: ...


class FixtureRegistry:
    """Offline registry over a directory of card + README files."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self._cards: dict[str, ModelCard] = {}
        self._readmes: dict[str, str] = {}
        self._tasks: set[str] = set()
        self._load()

    def _load(self) -> None:
        tasks_file = self.root / "tasks.json"
        if tasks_file.exists():
            self._tasks = set(json.loads(tasks_file.read_text(encoding="utf-8")))
        for card_path in sorted(self.root.glob("*/card.json")):
            raw = json.loads(card_path.read_text(encoding="utf-8"))
            card = ModelCard(
                model_id=raw["model_id"],
                task_tags=list(raw.get("task_tags", [])),
                downloads=int(raw.get("downloads", 0)),
                likes=int(raw.get("likes", 0)),
                size_mb=float(raw.get("size_mb", 0.0)),
                gpu_required=bool(raw.get("gpu_required", False)),
                min_cpu=int(raw.get("min_cpu", 1)),
                min_mem_mb=int(raw.get("min_mem_mb", 512)),
                base_inference_ms=raw.get("base_inference_ms"),
                accuracy=raw.get("accuracy"),
            )
            self._cards[card.model_id] = card
            self._tasks.update(card.task_tags)
            readme_path = card_path.parent / "README.md"
            if readme_path.exists():
                self._readmes[card.model_id] = readme_path.read_text(encoding="utf-8")

    def all_cards(self) -> list[ModelCard]:
        return [replace(c) for c in self._cards.values()]

    def search(self, task_tag: str, limit: int) -> list[ModelCard]:
        if task_tag not in self._tasks:
            raise UnknownTask(task_tag)
        matches = [replace(c) for c in self._cards.values() if task_tag in c.task_tags]
        return sorted(matches, key=card_sort_key)[:limit]

    def card(self, model_id: str) -> ModelCard:
        if model_id not in self._cards:
            raise ModelNotFound(model_id)
        return replace(self._cards[model_id])

    def readme(self, model_id: str) -> str:
        if model_id not in self._cards:
            raise ModelNotFound(model_id)
        return self._readmes.get(model_id, "")


class HubClient:
    """Client for a Hugging-Face-compatible model hub API.

    Extended card fields (size_mb, gpu_required, ...) are honored when the
    endpoint provides them; otherwise conservative defaults apply, with
    size_mb derived from sibling file sizes when listed.
    """

    def __init__(self, base_url: str, *, timeout_s: float = 10.0, session=None):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s
        self._session = session or requests.Session()
        self._readme_lock = threading.Lock()
        self._last_request = 0.0

    def _politeness_wait(self) -> None:
        with self._readme_lock:
            wait = self._last_request + POLITENESS_DELAY_S - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_request = time.monotonic()

    def _get(self, path: str, **kw):
        self._politeness_wait()
        try:
            resp = self._session.get(f"{self.base_url}{path}", timeout=self.timeout_s, **kw)
        except requests.RequestException as exc:
            raise BackendUnavailable(f"hub unreachable: {exc}") from exc
        if resp.status_code >= 500:
            raise BackendUnavailable(f"hub returned {resp.status_code} for {path}")
        return resp

    def search(self, task_tag: str, limit: int) -> list[ModelCard]:
        resp = self._get(
            "/api/models",
            params={"filter": task_tag, "sort": "downloads", "limit": str(limit)},
        )
        if resp.status_code != 200:
            raise BackendUnavailable(f"hub search failed with {resp.status_code}")
        cards = [self._to_card(entry) for entry in resp.json()]
        return sorted(cards, key=card_sort_key)[:limit]

    @staticmethod
    def _to_card(entry: dict) -> ModelCard:
        model_id = entry.get("id") or entry.get("modelId") or ""
        size_mb = entry.get("size_mb")
        if size_mb is None:
            siblings = entry.get("siblings") or []
            total = sum(s.get("size", 0) or 0 for s in siblings if isinstance(s, dict))
            size_mb = total / (1024 * 1024) if total else 0.0
        tags = entry.get("task_tags")
        if tags is None:
            tags = [t for t in entry.get("tags", []) if not t.startswith("license:")]
            if entry.get("pipeline_tag"):
                tags.append(entry["pipeline_tag"])
        return ModelCard(
            model_id=model_id,
            task_tags=list(dict.fromkeys(tags)),
            downloads=int(entry.get("downloads", 0) or 0),
            likes=int(entry.get("likes", 0) or 0),
            size_mb=float(size_mb),
            gpu_required=bool(entry.get("gpu_required", False)),
            min_cpu=int(entry.get("min_cpu", 1) or 1),
            min_mem_mb=int(entry.get("min_mem_mb", 512) or 512),
            base_inference_ms=entry.get("base_inference_ms"),
        )

    def card(self, model_id: str) -> ModelCard:
        resp = self._get(f"/api/models/{model_id}")
        if resp.status_code == 404:
            raise ModelNotFound(model_id)
        if resp.status_code != 200:
            raise BackendUnavailable(f"hub card fetch failed with {resp.status_code}")
        return self._to_card(resp.json())

    def readme(self, model_id: str) -> str:
        resp = self._get(f"/{model_id}/raw/main/README.md")
        if resp.status_code == 404:
            # distinguish unknown model from missing README via the model API
            info = self._get(f"/api/models/{model_id}")
            if info.status_code == 200:
                return ""
            raise ModelNotFound(model_id)
        if resp.status_code != 200:
            raise BackendUnavailable(f"hub readme fetch failed with {resp.status_code}")
        return resp.text


class ModelCatalog:
    """Session facade: search + cached README fetches over one backend."""

    def __init__(self, backend: ModelBackend, *, size_ceiling_mb: float = DEFAULT_SIZE_CEILING_MB):
        self.backend = backend
        self.size_ceiling_mb = size_ceiling_mb
        self._readme_cache: dict[str, str] = {}
        self.backend_calls = 0

    def search_models(self, task_tag: str, limit: int) -> list[ModelCard]:
        if limit < 1:
            raise ValueError("limit must be >= 1")
        self.backend_calls += 1
        return self.backend.search(task_tag, limit)

    def fetch_readme(self, model_id: str) -> str:
        if model_id not in self._readme_cache:
            self.backend_calls += 1
            self._readme_cache[model_id] = self.backend.readme(model_id)
        return self._readme_cache[model_id]

    def card(self, model_id: str) -> ModelCard:
        self.backend_calls += 1
        return self.backend.card(model_id)

    def assess(self, card: ModelCard) -> ModelCard:
        readme = self.fetch_readme(card.model_id)
        card.readme_text = readme
        card.servable, card.servability_reasons = assess_servability(
            card, readme, size_ceiling_mb=self.size_ceiling_mb
        )
        return card

    def filter_and_rank(self, cards, profile, nodes) -> list[ModelCard]:
        return filter_and_rank(cards, profile, nodes)

    def discover(self, task_tag: str, limit: int, profile, nodes) -> list[ModelCard]:
        """search + readme + servability + filter, the agent's one-stop call."""
        cards = self.search_models(task_tag, limit)
        for card in cards:
            self.assess(card)
        return filter_and_rank(cards, profile, nodes)


def fetch_readmes_concurrently(catalog: ModelCatalog, cards: Iterable[ModelCard]) -> None:
    """Warm the README cache with at most MAX_CONCURRENT_FETCHES workers."""
    from concurrent.futures import ThreadPoolExecutor

    pending = [c.model_id for c in cards]
    with ThreadPoolExecutor(max_workers=MAX_CONCURRENT_FETCHES) as pool:
        list(pool.map(catalog.fetch_readme, pending))

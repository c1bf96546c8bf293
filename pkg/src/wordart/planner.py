"""Turn free-form requests into the structured directive bundle.

A remote planning service may be consulted over ``POST /v1/plan``; its reply
is validated against the directives schema before use.  Without a backend
(or when it is unreachable) a deterministic rule-based fallback maps known
domain words to texture prompts and target silhouettes.  Replanning after a
failed quality gate advances seeds and, in fallback mode, shrinks the
deformation ratio when the failures scored badly.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field, replace

from .errors import BackendUnavailable, EmptyRequest, SchemaViolation
from .deform import target_shape_names
from .shapeparam import (
    MODE_ALL,
    MODE_CONTOUR_INDICES,
    MODE_SALIENCY_RATIO,
    RegionPolicy,
)

DEFAULT_NUM_VARIANTS = 4
DEFAULT_MIN_SUCCESSES = 2
DEFAULT_RETRY_BUDGET = 2
DEFAULT_DEFORM_RATIO = 0.5

_MODES = (MODE_ALL, MODE_CONTOUR_INDICES, MODE_SALIENCY_RATIO)

_STOPWORDS = {
    "a", "an", "the", "in", "on", "of", "with", "for", "and", "or", "to",
    "as", "at", "by", "into", "style", "design", "create", "make", "please",
}

# Domain word -> (texture prompt, target silhouette).
_KEYWORDS = {
    "jewelry": ("sparkling jewelry, polished gemstones, gold inlay", "diamond"),
    "jewellery": ("sparkling jewelry, polished gemstones, gold inlay", "diamond"),
    "gold": ("brushed gold surface, fine engraving", "diamond"),
    "metal": ("polished chrome, brushed steel highlights", "diamond"),
    "food": ("glossy food styling, appetizing sauce drizzle", "circle"),
    "fruit": ("ripe fruit skin, juicy highlights", "circle"),
    "plant": ("lush green foliage, dewy leaves", "leaf"),
    "leaf": ("lush green foliage, dewy leaves", "leaf"),
    "wood": ("carved wood grain, warm varnish", "circle"),
    "flower": ("blooming petals, soft pollen dust", "star"),
    "love": ("romantic satin ribbons, rose petals", "heart"),
    "heart": ("romantic satin ribbons, rose petals", "heart"),
    "star": ("night sky glitter, starlight sparkle", "star"),
}


def stable_hash(text: str) -> int:
    """Process-independent 31-bit hash, used for fallback seeds."""
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big") & 0x7FFFFFFF


@dataclass(frozen=True)
class Directives:
    semantic_concept: str
    target_shape: str = "circle"
    style_prompt: str = ""
    texture_prompt: str = ""
    region_policy: RegionPolicy = field(default_factory=RegionPolicy)
    num_variants: int = DEFAULT_NUM_VARIANTS
    min_successes_K: int = DEFAULT_MIN_SUCCESSES
    retry_budget: int = DEFAULT_RETRY_BUDGET
    base_seed: int = 0
    provenance: str = "rules"  # local bookkeeping only, never sent

    def __post_init__(self):
        problems = []
        if self.num_variants < 1:
            problems.append("num_variants")
        if self.min_successes_K < 1:
            problems.append("min_successes_K")
        if self.retry_budget < 0:
            problems.append("retry_budget")
        if (
            self.num_variants >= 1
            and self.retry_budget >= 0
            and self.min_successes_K
            > self.num_variants * (self.retry_budget + 1)
        ):
            problems.append("min_successes_K")
        if self.target_shape not in target_shape_names():
            problems.append("target_shape")
        if problems:
            raise SchemaViolation(problems)

    def to_jsonable(self) -> dict:
        return {
            "semantic_concept": self.semantic_concept,
            "target_shape": self.target_shape,
            "style_prompt": self.style_prompt,
            "texture_prompt": self.texture_prompt,
            "region_policy": {
                "mode": self.region_policy.mode,
                "contour_indices": list(self.region_policy.contour_indices),
                "deform_ratio": self.region_policy.deform_ratio,
            },
            "num_variants": self.num_variants,
            "min_successes_K": self.min_successes_K,
            "retry_budget": self.retry_budget,
            "base_seed": self.base_seed,
        }


@dataclass(frozen=True)
class PlanFeedback:
    iteration: int
    successes_so_far: int
    failure_scores: tuple[float, ...] = ()

    def __post_init__(self):
        if self.successes_so_far < 0:
            raise ValueError("successes_so_far must be non-negative")


def _is_int(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def validate_directives(raw: dict) -> Directives:
    """Schema-gate an untrusted directives document.

    Missing fields take defaults, unknown fields are ignored, and every
    offending field path is collected into one SchemaViolation.
    """
    if not isinstance(raw, dict):
        raise SchemaViolation(["$"])
    problems: list[str] = []

    def take_str(key: str, default: str) -> str:
        value = raw.get(key, default)
        if not isinstance(value, str):
            problems.append(key)
            return default
        return value

    def take_int(key: str, default: int, minimum: int) -> int:
        value = raw.get(key, default)
        if not _is_int(value) or value < minimum:
            problems.append(key)
            return default
        return value

    concept = take_str("semantic_concept", "design")
    shape = take_str("target_shape", "circle")
    if shape not in target_shape_names():
        problems.append("target_shape")
        shape = "circle"
    style = take_str("style_prompt", "")
    texture = take_str("texture_prompt", "")
    variants = take_int("num_variants", DEFAULT_NUM_VARIANTS, 1)
    k = take_int("min_successes_K", DEFAULT_MIN_SUCCESSES, 1)
    budget = take_int("retry_budget", DEFAULT_RETRY_BUDGET, 0)
    seed = raw.get("base_seed", 0)
    if not _is_int(seed):
        problems.append("base_seed")
        seed = 0

    policy = RegionPolicy(deform_ratio=DEFAULT_DEFORM_RATIO)
    rp = raw.get("region_policy")
    if rp is not None:
        if not isinstance(rp, dict):
            problems.append("region_policy")
        else:
            mode = rp.get("mode", MODE_SALIENCY_RATIO)
            if mode not in _MODES:
                problems.append("region_policy.mode")
                mode = MODE_SALIENCY_RATIO
            ratio = rp.get("deform_ratio", DEFAULT_DEFORM_RATIO)
            if not isinstance(ratio, (int, float)) or isinstance(ratio, bool) or not 0.0 <= float(ratio) <= 1.0:
                problems.append("region_policy.deform_ratio")
                ratio = DEFAULT_DEFORM_RATIO
            indices = rp.get("contour_indices", [])
            if not isinstance(indices, list) or not all(_is_int(i) and i >= 0 for i in indices):
                problems.append("region_policy.contour_indices")
                indices = []
            policy = RegionPolicy(
                mode=mode, contour_indices=tuple(indices), deform_ratio=float(ratio)
            )

    if k > variants * (budget + 1):
        problems.append("min_successes_K")

    if problems:
        raise SchemaViolation(sorted(set(problems)))
    return Directives(
        semantic_concept=concept,
        target_shape=shape,
        style_prompt=style,
        texture_prompt=texture,
        region_policy=policy,
        num_variants=variants,
        min_successes_K=k,
        retry_budget=budget,
        base_seed=seed,
        provenance="backend",
    )


def _rule_based_plan(user_text: str) -> Directives:
    tokens = [t.lower() for t in re.findall(r"[A-Za-z]+", user_text)]
    content = [t for t in tokens if t not in _STOPWORDS]
    concept = content[0] if content else "design"

    texture = ""
    shape = "circle"
    for token in tokens:
        if token in _KEYWORDS:
            texture, shape = _KEYWORDS[token]
            break
    if not texture:
        texture = f"{concept} surface texture, rich detail"

    return Directives(
        semantic_concept=concept,
        target_shape=shape,
        style_prompt=f"{concept} themed artistic typography, studio lighting",
        texture_prompt=texture,
        region_policy=RegionPolicy(deform_ratio=DEFAULT_DEFORM_RATIO),
        base_seed=stable_hash(user_text),
        provenance="rules",
    )


def plan(user_text: str, backend=None) -> Directives:
    """User request -> validated directives.

    With a planning backend the reply of ``POST /v1/plan`` is validated;
    if the backend is unreachable the rule-based fallback answers instead
    (recorded in the provenance field).  Invalid backend replies raise
    SchemaViolation.
    """
    if not user_text or not user_text.strip():
        raise EmptyRequest("user_text is empty")
    if backend is not None:
        try:
            reply = backend.plan_request(user_text)
        except BackendUnavailable:
            fallback = _rule_based_plan(user_text)
            return replace(fallback, provenance="rules-after-backend-error")
        if reply is not None:
            return validate_directives(reply)
    return _rule_based_plan(user_text)


# Fallback replanning shrinks the deformation ratio when failures scored
# far off target (mean below this), never below the floor.
REPLAN_SCORE_CUTOFF = 0.3
REPLAN_RATIO_STEP = 0.1
REPLAN_RATIO_FLOOR = 0.1


def replan(
    prev: Directives,
    fb: PlanFeedback,
    backend=None,
    user_text: str | None = None,
) -> Directives:
    """Next-iteration directives after a failed gate.

    Seeds advance deterministically by ``iteration * num_variants``.  A
    backend (when given along with the original user text) may refresh the
    prompts, but can never raise K or the variant count above the previous
    round's values.
    """
    if fb.iteration < 1:
        raise ValueError("feedback iteration must be >= 1")
    new_seed = prev.base_seed + fb.iteration * prev.num_variants

    refreshed = None
    if backend is not None and user_text:
        try:
            reply = backend.plan_request(user_text)
            if reply is not None:
                refreshed = validate_directives(reply)
        except (BackendUnavailable, SchemaViolation):
            refreshed = None

    if refreshed is not None:
        return replace(
            refreshed,
            num_variants=min(refreshed.num_variants, prev.num_variants),
            min_successes_K=min(refreshed.min_successes_K, prev.min_successes_K),
            retry_budget=prev.retry_budget,
            base_seed=new_seed,
            provenance="backend-replan",
        )

    policy = prev.region_policy
    if fb.failure_scores:
        mean_score = sum(fb.failure_scores) / len(fb.failure_scores)
        if mean_score < REPLAN_SCORE_CUTOFF:
            new_ratio = max(REPLAN_RATIO_FLOOR, policy.deform_ratio - REPLAN_RATIO_STEP)
            policy = RegionPolicy(
                mode=policy.mode,
                contour_indices=policy.contour_indices,
                deform_ratio=new_ratio,
            )
    return replace(prev, region_policy=policy, base_seed=new_seed)

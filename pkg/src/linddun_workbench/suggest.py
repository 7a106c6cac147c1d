"""Lexical embrace suggestions over the preliminary table.

Scores are Jaccard indexes over normalized token sets, kept as exact
rationals so ordering and threshold comparisons never suffer float drift.
The scorer is deliberately replaceable; nothing downstream depends on how
the score was produced, only on its value and the shared tokens.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .errors import PreconditionError
from .model import Label, ThreatId
from .replay import ProjectState

STOPWORDS = frozenset(
    "a an the of in on to and or is are be may with for by his her its could can".split()
)

# Domain initialisms that would otherwise vanish into the stopword list or
# lose their meaning once lowercased. Matched against the raw token before
# lowering; project config can extend or replace this set.
DEFAULT_PROTECTED_TERMS = ("CAN", "OEM", "TCU", "GDPR", "ID")


def _raw_tokens(text: str) -> list[str]:
    out = []
    current = []
    for ch in text:
        if ch.isalnum():
            current.append(ch)
        elif current:
            out.append("".join(current))
            current = []
    if current:
        out.append("".join(current))
    return out


def normalize(label: Label, protected: tuple[str, ...] = ()) -> frozenset[str]:
    """Token set of a label: lowercased, stopword-free, order-insensitive.

    A raw token equal to a protected term keeps its lowercase form even
    when that form is a stopword.
    """
    protected_set = set(protected)
    tokens = set()
    for raw in _raw_tokens(label.text):
        lowered = raw.lower()
        if raw in protected_set:
            tokens.add(lowered)
        elif lowered not in STOPWORDS:
            tokens.add(lowered)
    return frozenset(tokens)


def similarity(a: Label, b: Label, protected: tuple[str, ...] = ()) -> Fraction:
    left = normalize(a, protected)
    right = normalize(b, protected)
    union = left | right
    if not union:
        return Fraction(0)
    return Fraction(len(left & right), len(union))


@dataclass(frozen=True)
class EmbraceCandidate:
    ids: tuple[ThreatId, ...]
    score: Fraction
    shared_tokens: tuple[str, ...]


def suggest_embraces(
    state: ProjectState,
    threshold: Fraction | float = Fraction(1, 10),
    max_results: int | None = None,
    protected: tuple[str, ...] = DEFAULT_PROTECTED_TERMS,
) -> list[EmbraceCandidate]:
    """Cluster unconsumed preliminary threats by pairwise label similarity.

    Pairs at or above the threshold qualify. Qualifying pairs with a
    positive score link their members; each connected component becomes one
    candidate whose score is its best internal pair. Qualifying zero-score
    pairs (threshold 0 only) stay independent, so nothing is clustered by
    the accident of sharing no tokens.
    """
    threshold = Fraction(threshold).limit_denominator(10**9)
    if threshold < 0 or threshold > 1:
        raise PreconditionError(
            f"threshold must be within [0, 1], got {float(threshold)}",
            code="invalid-argument",
        )
    pool = [
        entry.threat
        for entry in state.prelims.values()
        if entry.available
    ]
    pool.sort(key=lambda t: t.id.sort_key)
    token_sets = {t.id: normalize(t.label, protected) for t in pool}

    parent: dict[ThreatId, ThreatId] = {t.id: t.id for t in pool}

    def find(x: ThreatId) -> ThreatId:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x: ThreatId, y: ThreatId):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry, key=lambda i: i.sort_key)] = min(
                rx, ry, key=lambda i: i.sort_key
            )

    pair_scores: dict[tuple[ThreatId, ThreatId], Fraction] = {}
    zero_pairs: list[tuple[ThreatId, ThreatId]] = []
    for a, b in combinations(pool, 2):
        left, right = token_sets[a.id], token_sets[b.id]
        union_size = len(left | right)
        score = Fraction(len(left & right), union_size) if union_size else Fraction(0)
        if score < threshold:
            continue
        pair_scores[(a.id, b.id)] = score
        if score > 0:
            union(a.id, b.id)
        else:
            zero_pairs.append((a.id, b.id))

    clusters: dict[ThreatId, list[ThreatId]] = {}
    for threat in pool:
        clusters.setdefault(find(threat.id), []).append(threat.id)

    candidates: list[EmbraceCandidate] = []
    for members in clusters.values():
        if len(members) < 2:
            continue
        members.sort(key=lambda i: i.sort_key)
        best = Fraction(0)
        shared: set[str] = set()
        for a, b in combinations(members, 2):
            score = pair_scores.get((a, b))
            if score is None or score == 0:
                continue
            best = max(best, score)
            shared |= token_sets[a] & token_sets[b]
        candidates.append(EmbraceCandidate(tuple(members), best, tuple(sorted(shared))))
    for a, b in zero_pairs:
        if find(a) == find(b) and len(clusters[find(a)]) >= 2:
            # Already absorbed into a positive-score cluster.
            continue
        candidates.append(EmbraceCandidate((a, b), Fraction(0), ()))

    candidates.sort(key=lambda c: (-c.score, tuple(i.sort_key for i in c.ids)))
    if max_results is not None:
        candidates = candidates[:max_results]
    return candidates

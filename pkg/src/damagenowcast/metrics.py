"""Temporal binning and per-region activity summaries.

Bins are half-open ``[epoch + k*width, epoch + (k+1)*width)`` with signed
indices, so "hours since the event" is just ``bin * width``. Per-user
normalization always divides by the count of distinct users active at any
point of the whole collection period, not just the window under analysis.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterable, Literal, Mapping, Sequence

from .ingest import MessageRecord

__all__ = [
    "TimeWindow",
    "ActivitySummary",
    "bin_offsets",
    "bin_window",
    "compute_activity_summary",
    "normalized_activity",
    "retweet_fraction",
    "local_popularity",
    "summarize_regions",
    "summarize_daily",
]

NormalizationMode = Literal["per_period_user", "per_capita"]


@dataclass(frozen=True)
class TimeWindow:
    """Half-open UTC interval [start, end)."""

    start: datetime
    end: datetime

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValueError("window start must precede end")

    def contains(self, stamp: datetime) -> bool:
        return self.start <= stamp < self.end


@dataclass(frozen=True)
class ActivitySummary:
    """Counts for one region over one window.

    ``active_users_period`` is the distinct-user count over the full
    collection period (the per-user denominator); ``active_users_window``
    is retained for diagnostics only. ``mean_sentiment`` averages only the
    messages that carry a score.
    """

    region_id: str
    window: TimeWindow | None
    n_messages: int
    n_original: int
    n_retweets: int
    n_popular: int
    active_users_window: int
    active_users_period: int
    mean_sentiment: float | None = None
    population: int | None = None


def bin_offsets(
    timestamps: Iterable[datetime], epoch: datetime, width: timedelta
) -> list[int]:
    """Signed bin index per timestamp; bin k covers [epoch+k*width, epoch+(k+1)*width)."""
    if width <= timedelta(0):
        raise ValueError("bin width must be positive")
    width_us = width // timedelta(microseconds=1)
    return [((t - epoch) // timedelta(microseconds=1)) // width_us for t in timestamps]


def bin_window(epoch: datetime, width: timedelta, index: int) -> TimeWindow:
    """The half-open window covered by one bin index."""
    return TimeWindow(start=epoch + index * width, end=epoch + (index + 1) * width)


def compute_activity_summary(
    messages: Iterable[MessageRecord],
    region_id: str,
    window: TimeWindow | None,
    period_users: int,
    population: int | None = None,
) -> ActivitySummary:
    """Aggregate one region's messages over a window (all messages when None).

    Callers pass messages already assigned to ``region_id``; a window with no
    messages yields a valid all-zero summary.
    """
    n_messages = n_original = n_retweets = n_popular = 0
    users: set[str] = set()
    sentiment_sum = 0.0
    sentiment_n = 0
    for m in messages:
        if window is not None and not window.contains(m.timestamp):
            continue
        n_messages += 1
        users.add(m.user_id)
        if m.is_retweet:
            n_retweets += 1
        else:
            n_original += 1
            if m.retweeted_count >= 1:
                n_popular += 1
        if m.sentiment is not None:
            sentiment_sum += m.sentiment
            sentiment_n += 1
    return ActivitySummary(
        region_id=region_id,
        window=window,
        n_messages=n_messages,
        n_original=n_original,
        n_retweets=n_retweets,
        n_popular=n_popular,
        active_users_window=len(users),
        active_users_period=period_users,
        mean_sentiment=sentiment_sum / sentiment_n if sentiment_n else None,
        population=population,
    )


def normalized_activity(
    summary: ActivitySummary,
    mode: NormalizationMode = "per_period_user",
    original_only: bool = False,
) -> float | None:
    """Message count divided by the chosen denominator; None when undefined."""
    count = summary.n_original if original_only else summary.n_messages
    if mode == "per_period_user":
        denominator = summary.active_users_period
    elif mode == "per_capita":
        denominator = summary.population or 0
    else:
        raise ValueError(f"unknown normalization mode {mode!r}")
    if denominator <= 0:
        return None
    return count / denominator


def retweet_fraction(summary: ActivitySummary) -> float | None:
    """Share of the window's messages that are rebroadcasts; None when empty."""
    if summary.n_messages == 0:
        return None
    return summary.n_retweets / summary.n_messages


def local_popularity(summary: ActivitySummary) -> float | None:
    """Locally authored messages rebroadcast at least once, per period-active user."""
    if summary.active_users_period <= 0:
        return None
    return summary.n_popular / summary.active_users_period


def _assigned(
    messages: Iterable[MessageRecord],
    assignments: Mapping[str, str | None],
    keywords: frozenset[str] | None,
) -> dict[str, list[MessageRecord]]:
    per_region: dict[str, list[MessageRecord]] = {}
    for m in messages:
        region = assignments.get(m.message_id)
        if region is None:
            continue
        if keywords is not None and not (m.keywords & keywords):
            continue
        per_region.setdefault(region, []).append(m)
    return per_region


def summarize_regions(
    messages: Sequence[MessageRecord],
    assignments: Mapping[str, str | None],
    window: TimeWindow | None,
    keywords: frozenset[str] | None = None,
    population: Mapping[str, int] | None = None,
    region_ids: Iterable[str] | None = None,
) -> dict[str, ActivitySummary]:
    """One summary per region over ``window``.

    The per-user denominator counts distinct users over the whole input
    corpus (after keyword filtering), not just the window. Regions listed in
    ``region_ids`` but silent in the corpus get all-zero summaries.
    """
    per_region = _assigned(messages, assignments, keywords)
    wanted = set(region_ids) if region_ids is not None else set(per_region)
    wanted.update(per_region)
    out: dict[str, ActivitySummary] = {}
    for region_id in sorted(wanted):
        region_messages = per_region.get(region_id, [])
        period_users = len({m.user_id for m in region_messages})
        out[region_id] = compute_activity_summary(
            region_messages,
            region_id,
            window,
            period_users=period_users,
            population=(population or {}).get(region_id),
        )
    return out


def summarize_daily(
    messages: Sequence[MessageRecord],
    assignments: Mapping[str, str | None],
    epoch: datetime,
    width: timedelta,
    bins: Sequence[int],
    keywords: frozenset[str] | None = None,
    population: Mapping[str, int] | None = None,
) -> dict[tuple[str, int], ActivitySummary]:
    """Summaries keyed by (region_id, bin index) for each requested bin."""
    per_region = _assigned(messages, assignments, keywords)
    out: dict[tuple[str, int], ActivitySummary] = {}
    for region_id in sorted(per_region):
        region_messages = per_region[region_id]
        period_users = len({m.user_id for m in region_messages})
        indices = bin_offsets([m.timestamp for m in region_messages], epoch, width)
        by_bin: dict[int, list[MessageRecord]] = {}
        for m, k in zip(region_messages, indices):
            by_bin.setdefault(k, []).append(m)
        for k in bins:
            out[(region_id, k)] = compute_activity_summary(
                by_bin.get(k, []),
                region_id,
                bin_window(epoch, width, k),
                period_users=period_users,
                population=(population or {}).get(region_id),
            )
    return out

"""
Domain Mappers.

Functions to convert between wire records (one JSON object per log line) and
domain entities, keeping the JSONL layout out of the domain layer.
"""

from typing import Any, Dict

from dwellrec.domain.entities import Candidate, ClickRecord, Impression, NewsItem
from dwellrec.schemas.logs import ImpressionRecord, NewsRecord


def news_record_to_entity(record: NewsRecord) -> NewsItem:
    """
    Convert a catalog line to a NewsItem.

    Raises:
        ValueError: Topic mixture is not a probability vector
    """
    return NewsItem(news_id=record.nid, topic_mix=record.topics)


def news_entity_to_dict(item: NewsItem) -> Dict[str, Any]:
    return {"nid": item.news_id, "topics": [float(x) for x in item.topic_mix]}


def impression_record_to_entity(record: ImpressionRecord) -> Impression:
    """
    Convert an impression line to an Impression.

    Args:
        record: Validated impression record

    Returns:
        Impression domain object
    """
    return Impression(
        impression_id=record.iid,
        user_id=record.uid,
        history=[ClickRecord(news_id=h.nid, dwell=h.dwell) for h in record.history],
        candidates=[
            Candidate(news_id=c.nid, label=c.y, dwell=c.dwell if c.y == 1 else None)
            for c in record.cands
        ],
    )


def impression_entity_to_dict(imp: Impression) -> Dict[str, Any]:
    """
    Plain-dict form of an impression in canonical key order.

    Negatives carry no "dwell" key; positives always do (null when unknown).
    """
    cands = []
    for c in imp.candidates:
        entry: Dict[str, Any] = {"nid": c.news_id, "y": c.label}
        if c.label == 1:
            entry["dwell"] = c.dwell
        cands.append(entry)
    return {
        "iid": imp.impression_id,
        "uid": imp.user_id,
        "history": [{"nid": r.news_id, "dwell": r.dwell} for r in imp.history],
        "cands": cands,
    }

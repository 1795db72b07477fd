"""LETOR / LibSVM text format.

One document per line::

    <label> qid:<q> <i>:<v> <i>:<v> ... [# comment]

Fields are separated by runs of spaces or tabs, feature indices are positive
and strictly increasing, blank lines are skipped, LF and CRLF both work.
"""

import logging
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ltr.errors import DatasetError, ParseError
from ltr.models.data import Dataset, QueryGroup

logger = logging.getLogger(__name__)

FOLD_FILES = ("train.txt", "vali.txt", "test.txt")


class ParsedLine(NamedTuple):
    label: float
    qid: str
    features: list[tuple[int, float]]
    comment: str | None = None


def _parse_real(token: str, what: str, line_number: int | None) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(
            detail=f"malformed {what}", line_number=line_number, token=token
        ) from None
    if not np.isfinite(value):
        raise ParseError(detail=f"non-finite {what}", line_number=line_number, token=token)
    return value


def parse_libsvm_line(
    line: str,
    comment_policy: str = "strip",
    line_number: int | None = None,
) -> ParsedLine:
    """Parse one document line into label, qid and 1-based sparse features."""
    text = line.strip()
    comment: str | None = None
    if "#" in text:
        text, _, raw_comment = text.partition("#")
        text = text.strip()
        if comment_policy == "keep":
            comment = raw_comment.strip()
    if not text:
        raise ParseError(detail="empty line", line_number=line_number, token="")
    tokens = text.split()
    label = _parse_real(tokens[0], "label", line_number)
    if len(tokens) < 2 or not tokens[1].startswith("qid:") or len(tokens[1]) == len("qid:"):
        raise ParseError(
            detail="missing qid",
            line_number=line_number,
            token=tokens[1] if len(tokens) > 1 else "",
        )
    qid = tokens[1][len("qid:") :]
    features: list[tuple[int, float]] = []
    previous = 0
    for token in tokens[2:]:
        index_text, sep, value_text = token.partition(":")
        if not sep or not index_text.isdigit():
            raise ParseError(detail="malformed feature token", line_number=line_number, token=token)
        index = int(index_text)
        if index < 1:
            raise ParseError(
                detail="feature index must be positive", line_number=line_number, token=token
            )
        if index <= previous:
            raise ParseError(
                detail="non-increasing or duplicate feature index",
                line_number=line_number,
                token=token,
            )
        features.append((index, _parse_real(value_text, "feature value", line_number)))
        previous = index
    return ParsedLine(label, qid, features, comment)


def _format_real(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def serialize_libsvm_line(
    label: float,
    qid: str,
    sparse_features: Iterable[tuple[int, float]],
    comment: str | None = None,
) -> str:
    """Canonical writer; ``parse`` then ``serialize`` is a fixed point on its output."""
    parts = [_format_real(label), f"qid:{qid}"]
    parts.extend(f"{i}:{_format_real(v)}" for i, v in sparse_features)
    text = " ".join(parts)
    if comment:
        text = f"{text} # {comment}"
    return text


def to_sparse(row: np.ndarray) -> list[tuple[int, float]]:
    """Nonzero entries of a dense row as 1-based (index, value) pairs."""
    return [(int(i) + 1, float(row[i])) for i in np.flatnonzero(row)]


def densify(sparse_features: Sequence[tuple[int, float]], feature_dim: int) -> np.ndarray:
    row = np.zeros(feature_dim)
    for index, value in sparse_features:
        row[index - 1] = value
    return row


def _read_documents(path: Path, comment_policy: str) -> list[tuple[int, ParsedLine]]:
    try:
        handle = path.open("r", encoding="utf-8")
    except OSError as exc:
        raise DatasetError(detail="dataset file not readable", path=str(path)) from exc
    docs: list[tuple[int, ParsedLine]] = []
    with handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            docs.append((line_number, parse_libsvm_line(line, comment_policy, line_number)))
    return docs


def load_dataset(
    path: str | Path,
    feature_dim: int | None = None,
    on_noncontiguous: str = "error",
    comment_policy: str = "strip",
) -> Dataset:
    """Read a LETOR file; consecutive lines sharing a qid form one query."""
    path = Path(path)
    docs = _read_documents(path, comment_policy)
    if not docs:
        raise DatasetError(detail="dataset file has no documents", path=str(path))

    order: list[str] = []
    members: dict[str, list[ParsedLine]] = {}
    current: str | None = None
    for line_number, doc in docs:
        if doc.qid != current:
            if doc.qid in members:
                if on_noncontiguous != "merge":
                    raise DatasetError(
                        detail="qid reappears after a different qid",
                        path=str(path),
                        qid=doc.qid,
                        line_number=line_number,
                    )
                logger.debug("Merging non-contiguous qid %s at line %d", doc.qid, line_number)
            else:
                members[doc.qid] = []
                order.append(doc.qid)
            current = doc.qid
        members[doc.qid].append(doc)

    max_index = max((d.features[-1][0] for _, d in docs if d.features), default=0)
    dim = feature_dim if feature_dim is not None else max_index
    if dim < 1:
        raise DatasetError(detail="no feature dimension could be inferred", path=str(path))
    if max_index > dim:
        raise DatasetError(
            detail="feature index exceeds feature_dim",
            path=str(path),
            feature_dim=dim,
            max_index=max_index,
        )

    groups = []
    for qid in order:
        rows = members[qid]
        groups.append(
            QueryGroup(
                qid=qid,
                features=np.vstack([densify(d.features, dim) for d in rows]),
                labels=np.array([d.label for d in rows]),
            )
        )
    label_max = max(float(g.labels.max()) for g in groups)
    logger.info(
        "Loaded %s: %d queries, %d documents, d=%d", path, len(groups), len(docs), dim
    )
    return Dataset(
        groups=tuple(groups),
        feature_dim=dim,
        label_max=label_max,
        provenance=(f"source={path}",),
    )


def dump_dataset(dataset: Dataset, path: str | Path) -> Path:
    """Write a dataset back out, dropping explicit zeros."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for group in dataset:
            for label, row in zip(group.labels, group.features, strict=True):
                fh.write(serialize_libsvm_line(float(label), group.qid, to_sparse(row)) + "\n")
    return path


def load_fold_directory(
    path: str | Path,
    feature_dim: int | None = None,
    on_noncontiguous: str = "error",
) -> tuple[Dataset, Dataset, Dataset]:
    """Load a pre-split fold (``train.txt``, ``vali.txt``, ``test.txt``) with a shared dimension."""
    root = Path(path)
    missing = [name for name in FOLD_FILES if not (root / name).is_file()]
    if missing:
        raise DatasetError(detail="fold directory incomplete", path=str(root), missing=missing)
    if feature_dim is None:
        parts = [load_dataset(root / name, None, on_noncontiguous) for name in FOLD_FILES]
        dim = max(p.feature_dim for p in parts)
        if all(p.feature_dim == dim for p in parts):
            return parts[0], parts[1], parts[2]
        feature_dim = dim
    train, vali, test = (
        load_dataset(root / name, feature_dim, on_noncontiguous) for name in FOLD_FILES
    )
    return train, vali, test

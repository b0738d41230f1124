import logging
import math
from datetime import datetime
from typing import NamedTuple

import numpy as np
import yaml

from .codec import Pattern, code_lengths, cover_length, cover_transaction
from .ingest import Category, HOUR_FORMAT, Item, Transaction, format_hour, parse_item

log = logging.getLogger()

REPORT_HEADER = '# mdl-anomaly-report v1'
HOURS_PER_DAY = 24


class AnomalyError(Exception):
    pass


class ScoredTransaction(NamedTuple):
    transaction: Transaction
    cover: tuple
    score: float
    rank: int


class HourHistogram(NamedTuple):
    bins: tuple

    @property
    def total(self):
        return sum(self.bins)

    @property
    def peak(self):
        '''Hour of day with the most selections (earliest on ties).'''
        return int(np.argmax(self.bins))


def score_all(transactions, table):
    '''Score every transaction by its code length and rank them, longest
    first; equal scores keep the earlier hour first.
    '''
    lengths = code_lengths(table)
    rows = []
    for txn in transactions:
        cover = cover_transaction(txn, table)
        rows.append((cover_length(cover.parts, lengths), txn, cover.parts))
    rows.sort(key=lambda r: (-r[0], r[1].timestamp))
    return [ScoredTransaction(txn, parts, score, rank)
            for rank, (score, txn, parts) in enumerate(rows, 1)]


def _check_fraction(fraction):
    if isinstance(fraction, bool) or not isinstance(fraction, (int, float)) \
            or math.isnan(fraction) or not 0.0 < fraction <= 1.0:
        raise AnomalyError('fraction must be in (0, 1], got %r' % (fraction,))


def top_fraction(scored, fraction):
    '''The first ceil(fraction * n) ranked transactions.'''
    _check_fraction(fraction)
    if not scored:
        raise AnomalyError('nothing to select from: no scored transactions')
    count = math.ceil(round(fraction * len(scored), 9))
    return list(scored[:count])


def hour_frequency(selected):
    hours = np.array([s.transaction.timestamp.hour for s in selected], dtype=int)
    bins = np.bincount(hours, minlength=HOURS_PER_DAY)
    return HourHistogram(tuple(int(b) for b in bins))


def recall(selected, expected_hours):
    '''Share of `expected_hours` present among the selected transactions.'''
    expected = set(expected_hours)
    if not expected:
        return 1.0
    found = expected & {s.transaction.timestamp for s in selected}
    return len(found) / len(expected)


def _entry(s):
    items = s.transaction.itemset
    covered = frozenset().union(*(p.items for p in s.cover)) if s.cover else frozenset()
    if covered != items or sum(len(p.items) for p in s.cover) != len(items):
        raise AnomalyError('cover of %s is not an exact partition of its items' %
                           format_hour(s.transaction.timestamp))
    return {
        'rank':       s.rank,
        'hour':       format_hour(s.transaction.timestamp),
        'weekday':    s.transaction.timestamp.strftime('%A'),
        'categories': {i.attribute: int(i.category) for i in s.transaction.items},
        'labels':     {i.attribute: Category(i.category).label for i in s.transaction.items},
        'cover':      [str(p) for p in s.cover],
        'score':      float(s.score),
    }


def report(scored, selected, histogram, k, fraction=None):
    '''Assemble the report document: the top-k view, the top-fraction
    listing and the 24-bin hour-of-day histogram.
    '''
    if k < 0 or k > len(scored):
        raise AnomalyError('k must be in [0, %d], got %d' % (len(scored), k))
    if histogram.total != len(selected):
        raise AnomalyError('histogram counts %d selection(s), %d given' % (
            histogram.total, len(selected)))
    return {
        'summary': {
            'transactions':   len(scored),
            'top_k':          k,
            'top_fraction':   fraction,
            'selected':       len(selected),
            'max_score':      float(scored[0].score) if scored else None,
            'selected_min_score': float(selected[-1].score) if selected else None,
        },
        'top_k': [_entry(s) for s in scored[:k]],
        'top_fraction': [
            {'rank': s.rank, 'hour': format_hour(s.transaction.timestamp), 'score': float(s.score)}
            for s in selected
        ],
        'hour_histogram': [{'hour': h, 'count': c} for h, c in enumerate(histogram.bins)],
    }


def write_report(document, stream):
    stream.write(REPORT_HEADER + '\n')
    yaml.safe_dump(document, stream, default_flow_style=False, sort_keys=False)


def read_report(stream):
    text = stream.read()
    if not text.startswith(REPORT_HEADER):
        raise AnomalyError('not an anomaly report (expected header %r)' % REPORT_HEADER)
    return yaml.safe_load(text)


def write_scores(scored, attributes, stream):
    stream.write('\t'.join(['rank', 'hour'] + list(attributes) + ['score', 'cover']) + '\n')
    for s in scored:
        categories = [str(int(i.category)) for i in s.transaction.items]
        stream.write('\t'.join([str(s.rank), format_hour(s.transaction.timestamp)] + categories +
                               [repr(float(s.score)), ';'.join(str(p) for p in s.cover)]) + '\n')


def read_scores(stream):
    '''Read a scored file. Returns (attributes, scored transactions).'''
    lines = [line.rstrip('\r\n') for line in stream]
    if not lines:
        raise AnomalyError('scored file is empty')
    header = lines[0].split('\t')
    if header[:2] != ['rank', 'hour'] or header[-2:] != ['score', 'cover'] or len(header) < 5:
        raise AnomalyError('bad scored-file header %r' % lines[0])
    attributes = header[2:-2]

    scored = []
    for number, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        fields = line.split('\t')
        if len(fields) != len(header):
            raise AnomalyError('line %d: expected %d fields, got %d' % (number, len(header), len(fields)))
        try:
            hour = datetime.strptime(fields[1], HOUR_FORMAT)
            items = tuple(Item(a, Category(int(c))) for a, c in zip(attributes, fields[2:-2]))
            cover = tuple(Pattern(parse_item(t) for t in part.split(','))
                          for part in fields[-1].split(';') if part)
            scored.append(ScoredTransaction(Transaction(hour, items), cover,
                                            float(fields[-2]), int(fields[0])))
        except ValueError as e:
            raise AnomalyError('line %d: %s' % (number, e))
    return attributes, scored

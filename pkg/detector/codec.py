import logging
import math
from collections import Counter
from typing import NamedTuple

import numpy as np

from .ingest import parse_item
from .mining import canonical_key, format_items, frequent_itemsets

log = logging.getLogger()

TABLE_HEADER = '# pattern-table v1'
ORDER_NOTE = '# rows in cover order (fixed from the usages before the last recompute)'
SINGLETON_PREFIX = '# r'
NO_CODE = '-'


class CodecError(Exception):
    pass


class UnknownItemError(CodecError):
    '''A transaction holds an item the pattern table has no singleton for.'''

    def __init__(self, message, item=None):
        super().__init__(message)
        self.item = item


class Pattern(object):
    '''An itemset of the pattern table and the number of covers using it.

    `support` is the weight a newly inserted pattern is ordered by until its
    usage has been computed.
    '''

    __slots__ = ('items', 'usage', 'support')

    def __init__(self, items, usage=0, support=None):
        self.items = frozenset(items)
        self.usage = usage
        self.support = usage if support is None else support

    @property
    def is_singleton(self):
        return len(self.items) == 1

    def __str__(self):
        return format_items(self.items)

    def __repr__(self):
        return 'Pattern(%s, usage=%d)' % (self, self.usage)


class Cover(NamedTuple):
    transaction: object
    parts: tuple

    @property
    def items(self):
        return frozenset().union(*(p.items for p in self.parts))


class PatternTable(object):
    '''The code dictionary.

    `patterns` is kept in cover order: the order fixed when usages were last
    recomputed (cardinality desc, usage desc, lexicographic). Covers always
    scan this list, so usages and covers stay consistent after a reload.
    '''

    def __init__(self, patterns=(), singleton_counts=None):
        self.patterns = list(patterns)
        self.singleton_counts = dict(singleton_counts or {})
        self._index = {p.items: p for p in self.patterns}

    @property
    def total_singleton_count(self):
        return sum(self.singleton_counts.values())

    def find(self, items):
        return self._index.get(frozenset(items))

    def has_singleton(self, item):
        return frozenset((item,)) in self._index

    def insert(self, items, support=0):
        items = frozenset(items)
        if items in self._index:
            raise CodecError('pattern %s is already in the table' % format_items(items))
        pattern = Pattern(items, 0, support)
        self.patterns.append(pattern)
        self._index[items] = pattern
        return pattern

    def remove(self, items):
        pattern = self._index.get(frozenset(items))
        if pattern is None:
            raise CodecError('pattern %s is not in the table' % format_items(items))
        if pattern.is_singleton:
            raise CodecError('singleton %s cannot be removed' % pattern)
        del self._index[pattern.items]
        self.patterns.remove(pattern)
        return pattern

    def prune(self):
        '''Drop non-singleton patterns nothing uses.'''
        for pattern in [p for p in self.patterns if p.usage == 0 and not p.is_singleton]:
            self.remove(pattern.items)

    def sort(self):
        self.patterns.sort(key=lambda p: canonical_key(p.items, p.usage or p.support))

    def in_use(self):
        return [p for p in self.patterns if p.usage > 0]

    def usage_total(self):
        return sum(p.usage for p in self.patterns if p.usage > 0)

    def copy(self):
        return PatternTable((Pattern(p.items, p.usage, p.support) for p in self.patterns),
                            self.singleton_counts)

    def __len__(self):
        return len(self.patterns)


def init_pattern_table(transactions):
    '''Singleton-only table: one pattern per distinct item, usage = its count.'''
    if not transactions:
        raise CodecError('cannot build a pattern table from an empty database')
    counts = Counter(item for txn in transactions for item in txn.items)
    table = PatternTable((Pattern([item], r) for item, r in counts.items()), counts)
    table.sort()
    log.info('Initial pattern table: %d singleton(s), c=%d' % (len(table), table.total_singleton_count))
    return table


def _cover_parts(items, table):
    uncovered = set(items)
    for item in sorted(uncovered):
        if not table.has_singleton(item):
            raise UnknownItemError('item %s has no singleton in the pattern table' % (item,), item)
    parts = []
    for pattern in table.patterns:
        if pattern.items <= uncovered:
            parts.append(pattern)
            uncovered -= pattern.items
            if not uncovered:
                break
    if uncovered:
        raise CodecError('cover left %s uncovered' % format_items(uncovered))
    return parts


def cover_transaction(txn, table):
    '''Greedy disjoint cover of one transaction in the table's cover order.'''
    return Cover(txn, tuple(_cover_parts(txn.itemset, table)))


def _distinct_rows(transactions):
    counts = Counter(txn.itemset for txn in transactions)
    return sorted(counts.items(), key=lambda kv: tuple(sorted(kv[0])))


def recompute_usages(table, transactions):
    '''Fix the cover order from the current usages, re-cover every
    transaction and store the new usages. Identical rows are covered once.
    '''
    table.sort()
    for pattern in table.patterns:
        pattern.usage = 0
    for items, count in _distinct_rows(transactions):
        for pattern in _cover_parts(items, table):
            pattern.usage += count
    return table


def code_lengths(table):
    '''Bits per in-use pattern: -log2(usage / sum of usages).'''
    used = table.in_use()
    if not used:
        return {}
    usages = np.array([p.usage for p in used], dtype=float)
    bits = np.log2(usages.sum()) - np.log2(usages)
    return {p.items: float(b) for p, b in zip(used, bits)}


def pattern_code_length(pattern, table):
    if pattern.usage <= 0:
        raise CodecError('pattern %s has usage 0 and no code' % pattern)
    return code_lengths(table)[pattern.items]


def cover_length(parts, lengths):
    try:
        return math.fsum(lengths[p.items] for p in parts)
    except KeyError as ke:
        raise CodecError('pattern %s in cover has usage 0 and no code' % format_items(ke.args[0]))


def transaction_code_length(txn, table):
    return cover_length(_cover_parts(txn.itemset, table), code_lengths(table))


def database_length(transactions, table):
    if not transactions:
        return 0.0
    lengths = code_lengths(table)
    return math.fsum(count * cover_length(_cover_parts(items, table), lengths)
                     for items, count in _distinct_rows(transactions))


def table_length(table):
    '''Code lengths of the in-use patterns plus the cost of spelling out
    every singleton: sum of -r*log2(r/c) over the raw item counts.
    '''
    first = math.fsum(code_lengths(table).values())
    if not table.singleton_counts:
        return first
    counts = np.array(list(table.singleton_counts.values()), dtype=float)
    second = math.fsum(counts * (np.log2(counts.sum()) - np.log2(counts)))
    return first + second


def total_length(transactions, table):
    return database_length(transactions, table) + table_length(table)


class Trial(NamedTuple):
    candidate: object
    length: float
    accepted: bool
    best: float


class CompressResult(NamedTuple):
    table: PatternTable
    initial_length: float
    length: float
    trials: list

    @property
    def compression_ratio(self):
        if self.initial_length == 0:
            return 1.0
        return self.length / self.initial_length

    @property
    def accepted(self):
        return [t.candidate for t in self.trials if t.accepted]


def compress(transactions, threshold, candidates=None):
    '''Greedy MDL selection of the pattern table.

    Each frequent itemset is tried once in canonical order: insert it,
    re-cover, and keep it only if the total length strictly decreases.
    `candidates` may carry an already mined set (in canonical order).
    '''

    table = init_pattern_table(transactions)
    initial = best = total_length(transactions, table)
    log.info('L0 = %.6f bits' % initial)
    if candidates is None:
        candidates = frequent_itemsets(transactions, threshold)

    trials = []
    for candidate in candidates:
        trial = table.copy()
        trial.insert(candidate.items, candidate.support)
        recompute_usages(trial, transactions)
        length = total_length(transactions, trial)
        accepted = length < best
        if accepted:
            trial.prune()
            table = trial
            best = length
        trials.append(Trial(candidate, length, accepted, best))
        log.debug('Trial %s (support %d): L=%.6f %s' % (
            candidate, candidate.support, length, 'accepted' if accepted else 'rejected'))

    result = CompressResult(table, initial, best, trials)
    log.info('Compressed: %d of %d candidate(s) accepted, L=%.6f bits (ratio %.4f)' % (
        len(result.accepted), len(trials), best, result.compression_ratio))
    return result


def _format_bits(value):
    return repr(float(value))


def write_pattern_table(table, stream):
    lengths = code_lengths(table)
    stream.write(TABLE_HEADER + '\n')
    stream.write(ORDER_NOTE + '\n')
    for pattern in table.patterns:
        bits = lengths.get(pattern.items)
        stream.write('%s\t%d\t%s\n' % (pattern, pattern.usage,
                                       NO_CODE if bits is None else _format_bits(bits)))
    for item in sorted(table.singleton_counts):
        stream.write('%s\t%s\t%d\n' % (SINGLETON_PREFIX, item, table.singleton_counts[item]))


def read_pattern_table(stream):
    '''Reload a written table; pattern order (the cover order) is preserved.'''
    lines = [line.rstrip('\r\n') for line in stream]
    if not lines or lines[0] != TABLE_HEADER:
        raise CodecError('not a pattern table (expected header %r)' % TABLE_HEADER)
    patterns = []
    counts = {}
    for number, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        fields = line.split('\t')
        try:
            if fields[0] == SINGLETON_PREFIX:
                counts[parse_item(fields[1])] = int(fields[2])
            elif line.startswith('#'):
                continue
            else:
                items = frozenset(parse_item(t) for t in fields[0].split(','))
                patterns.append(Pattern(items, int(fields[1])))
        except (IndexError, ValueError) as e:
            raise CodecError('line %d: %s' % (number, e))
    return PatternTable(patterns, counts)


def write_acceptance_log(result, stream):
    stream.write('# initial_length\t%s\n' % _format_bits(result.initial_length))
    stream.write('candidate\tsupport\tlength\taccepted\tbest\n')
    for trial in result.trials:
        stream.write('%s\t%d\t%s\t%s\t%s\n' % (
            trial.candidate, trial.candidate.support, _format_bits(trial.length),
            'yes' if trial.accepted else 'no', _format_bits(trial.best)))
    stream.write('# final_length\t%s\n' % _format_bits(result.length))

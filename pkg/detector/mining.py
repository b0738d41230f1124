import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import NamedTuple, Union

from .ingest import parse_item

log = logging.getLogger()

DEFAULT_FRACTION = 0.05
DEFAULT_MINIMUM = 2
COMPARISONS = ('ge', 'gt')


class MiningError(Exception):
    pass


class Itemset(NamedTuple):
    items: frozenset
    support: int

    @property
    def key(self):
        return tuple(sorted(self.items))

    def __str__(self):
        return format_items(self.items)


def format_items(items):
    return ','.join(str(i) for i in sorted(items))


def canonical_key(items, weight):
    '''Sort key shared by candidate trials and covers: larger sets first, then
    larger weight (support or usage), then lexicographic on the items.
    '''
    return (-len(items), -weight, tuple(sorted(items)))


@dataclass(frozen=True)
class SupportThreshold(object):
    '''Minimum support for mining.

    An int value is an absolute count; a float is a fraction of the number of
    transactions, rounded up and floored at `minimum`.
    '''

    value: Union[int, float] = DEFAULT_FRACTION
    minimum: int = DEFAULT_MINIMUM
    comparison: str = 'ge'

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, (int, float)):
            raise MiningError('threshold must be a number, got %r' % (self.value,))
        if isinstance(self.value, int) and self.value < 1:
            raise MiningError('absolute threshold must be >= 1, got %d' % self.value)
        if isinstance(self.value, float) and not 0.0 < self.value <= 1.0:
            raise MiningError('fractional threshold must be in (0, 1], got %r' % self.value)
        if self.minimum < 1:
            raise MiningError('threshold minimum must be >= 1, got %r' % self.minimum)
        if self.comparison not in COMPARISONS:
            raise MiningError('comparison must be one of %s, got %r' % (COMPARISONS, self.comparison))

    @classmethod
    def parse(cls, text, minimum=DEFAULT_MINIMUM, comparison='ge'):
        '''"5" is an absolute count, "0.05" (or "5%") a fraction.'''
        text = str(text).strip()
        try:
            if text.endswith('%'):
                return cls(float(text[:-1]) / 100.0, minimum, comparison)
            if any(c in text for c in '.eE'):
                return cls(float(text), minimum, comparison)
            return cls(int(text), minimum, comparison)
        except ValueError:
            raise MiningError('cannot parse threshold %r' % text)

    @classmethod
    def from_config(cls, config):
        value = config.support_threshold
        if isinstance(value, str):
            return cls.parse(value, int(config.support_minimum), config.support_comparison)
        return cls(value, int(config.support_minimum), config.support_comparison)

    def resolve(self, n_transactions):
        if isinstance(self.value, int):
            return self.value
        # Rounding guards against 0.05 * 100 = 5.000000000000001.
        return max(math.ceil(round(self.value * n_transactions, 9)), self.minimum, 1)

    def admits(self, support, resolved):
        if self.comparison == 'gt':
            return support > resolved
        return support >= resolved


def support(itemset, transactions):
    '''Number of transactions containing every item of `itemset`.'''
    items = itemset.items if isinstance(itemset, Itemset) else frozenset(itemset)
    return sum(1 for txn in transactions if items <= txn.itemset)


def _join(level):
    '''Candidate (k+1)-sets from frequent k-sets (sorted tuples) sharing a
    k-1 prefix. Two items of one attribute never co-occur, so such pairs are
    skipped.
    '''
    by_prefix = defaultdict(list)
    for key in sorted(level):
        by_prefix[key[:-1]].append(key)
    for prefix, group in by_prefix.items():
        for a, b in itertools.combinations(group, 2):
            if a[-1].attribute == b[-1].attribute:
                continue
            cand = tuple(sorted(a + b[-1:]))
            # Downward closure: every k-subset must itself be frequent.
            if all(sub in level for sub in itertools.combinations(cand, len(cand) - 1)):
                yield cand, a, b


def frequent_itemsets(transactions, threshold):
    '''Apriori over the transactions.

    Returns every itemset of size >= 2 that the threshold admits, in
    canonical order. Singletons only seed the level-wise search.
    '''

    n = len(transactions)
    resolved = threshold.resolve(n)
    tidsets = defaultdict(set)
    for tid, txn in enumerate(transactions):
        for item in txn.items:
            tidsets[(item,)].add(tid)
    level = {key: tids for key, tids in tidsets.items()
             if threshold.admits(len(tids), resolved)}

    found = []
    size = 1
    while level:
        size += 1
        next_level = {}
        for cand, a, b in _join(level):
            tids = level[a] & level[b]
            if threshold.admits(len(tids), resolved):
                next_level[cand] = tids
        found.extend(Itemset(frozenset(k), len(t)) for k, t in next_level.items())
        log.debug('Apriori level %d: %d frequent itemset(s)' % (size, len(next_level)))
        level = next_level

    found.sort(key=lambda s: canonical_key(s.items, s.support))
    log.info('Mined %d frequent itemset(s) of size >= 2 at T=%d (%s) over %d transaction(s)' % (
        len(found), resolved, threshold.comparison, n))
    return found


def write_itemsets(itemsets, stream):
    for itemset in itemsets:
        stream.write('%s\t%d\n' % (itemset, itemset.support))


def read_itemsets(stream):
    itemsets = []
    for number, line in enumerate(stream, 1):
        line = line.rstrip('\r\n')
        if not line.strip():
            continue
        try:
            items_text, support_text = line.split('\t')
            items = frozenset(parse_item(t) for t in items_text.split(','))
            itemsets.append(Itemset(items, int(support_text)))
        except ValueError as e:
            raise MiningError('line %d: %s' % (number, e))
    return itemsets

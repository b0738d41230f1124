'''Shared fixtures: the six-row bridge example and small database builders.'''

import io
from datetime import datetime, timedelta

from hypothesis import strategies as st

from detector.ingest import Category, Item, Transaction

BASE_HOUR = datetime(2016, 9, 5, 0, 0)
BRIDGES = ('PB', 'LQ', 'RB')

# Four hours of {PB:1, LQ:2, RB:1} followed by two of {PB:1, LQ:2, RB:2}.
EXAMPLE_ROWS = [(1, 2, 1)] * 4 + [(1, 2, 2)] * 2
FULL_ROW = frozenset([Item('PB', 1), Item('LQ', 2), Item('RB', 1)])
PB_LQ = frozenset([Item('PB', 1), Item('LQ', 2)])
RB_2 = frozenset([Item('RB', 2)])

# Raw minutes that land in each category.
MINUTES = {1: 0, 2: 10, 3: 20, 4: 45}


def make_transactions(rows, attributes=BRIDGES, start=BASE_HOUR):
    '''One transaction per row of category indices, one hour apart.'''
    return [Transaction(start + timedelta(hours=h),
                        tuple(Item(a, Category(c)) for a, c in zip(attributes, row)))
            for h, row in enumerate(rows)]


def example_transactions():
    return make_transactions(EXAMPLE_ROWS)


def example_records_csv(direction='ToCanada', vehicle_class='Car'):
    '''The example database as raw five-minute / hourly records.'''
    lines = ['timestamp,site,direction,vehicle_class,wait_minutes']
    for h, row in enumerate(EXAMPLE_ROWS):
        hour = BASE_HOUR + timedelta(hours=h)
        for site, category in zip(BRIDGES, row):
            samples = 1 if site == 'RB' else 12
            for i in range(samples):
                ts = hour + timedelta(minutes=5 * i)
                lines.append('%s,%s,%s,%s,%s' % (ts.strftime('%Y-%m-%dT%H:%M'), site, direction,
                                                 vehicle_class, MINUTES[category]))
    return '\n'.join(lines) + '\n'


def example_records_stream():
    return io.StringIO(example_records_csv())


@st.composite
def databases(draw, max_rows=12, attributes=BRIDGES, max_category=4, min_rows=1):
    '''Random databases: rows of one category per attribute.'''
    n_attributes = draw(st.integers(1, len(attributes)))
    attrs = attributes[:n_attributes]
    n_categories = draw(st.integers(1, max_category))
    rows = draw(st.lists(
        st.tuples(*[st.integers(1, n_categories) for _ in attrs]),
        min_size=min_rows, max_size=max_rows))
    return make_transactions(rows, attrs)

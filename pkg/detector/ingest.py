import enum
import io
import logging
import math
from datetime import datetime
from typing import NamedTuple

import pandas as pd

log = logging.getLogger()

# Upper bounds (inclusive, minutes) of the "slight delay" and "delay" bins.
SLIGHT_DELAY_MAX = 15.0
DELAY_MAX = 30.0

HOUR_FORMAT = '%Y-%m-%dT%H:%M'
HOUR_COLUMN = 'hour'
OVERFLOW_COLUMN = '__overflow__'


class IngestError(Exception):
    '''Fatal problem with an input stream (unreadable, missing column, bad
    transaction file, unknown attribute).
    '''

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class DiscretizationError(ValueError):
    pass


class Direction(enum.Enum):
    TO_US = 'ToUS'
    TO_CANADA = 'ToCanada'


class VehicleClass(enum.Enum):
    CAR = 'Car'
    TRUCK = 'Truck'


_DIRECTION_ALIASES = {
    'tous': Direction.TO_US, 'us': Direction.TO_US,
    'tocanada': Direction.TO_CANADA, 'canada': Direction.TO_CANADA,
}
_CLASS_ALIASES = {
    'car': VehicleClass.CAR, 'passenger': VehicleClass.CAR,
    'truck': VehicleClass.TRUCK, 'commercial': VehicleClass.TRUCK,
}


def parse_direction(value):
    if isinstance(value, Direction):
        return value
    try:
        return _DIRECTION_ALIASES[str(value).strip().lower()]
    except KeyError:
        raise ValueError('unknown direction %r' % (value,))


def parse_vehicle_class(value):
    if isinstance(value, VehicleClass):
        return value
    try:
        return _CLASS_ALIASES[str(value).strip().lower()]
    except KeyError:
        raise ValueError('unknown vehicle class %r' % (value,))


class Category(enum.IntEnum):
    NO_WAITING = 1
    SLIGHT_DELAY = 2
    DELAY = 3
    HEAVY_DELAY = 4

    @property
    def label(self):
        return self.name.lower().replace('_', ' ')


class Item(NamedTuple):
    '''An attribute-qualified category: LQ:2 and RB:2 are different items.'''
    attribute: str
    category: int

    def __str__(self):
        return '%s:%d' % (self.attribute, self.category)


def parse_item(text):
    attribute, sep, category = text.strip().rpartition(':')
    if not sep or not attribute:
        raise ValueError('malformed item %r' % (text,))
    return Item(attribute, int(category))


class WaitTimeRecord(NamedTuple):
    timestamp: datetime
    site: str
    direction: Direction
    vehicle_class: VehicleClass
    wait_minutes: float


class Transaction(NamedTuple):
    '''One hourly row of the database: one item per configured site.'''
    timestamp: datetime
    items: tuple

    @property
    def itemset(self):
        return frozenset(self.items)


class Diagnostic(NamedTuple):
    row: int
    message: str

    def __str__(self):
        return 'row %d: %s' % (self.row, self.message)


class ParseResult(NamedTuple):
    records: list
    diagnostics: list


class TransactionBuild(NamedTuple):
    transactions: list
    excluded_hours: int
    diagnostics: tuple = ()


def _parse_timestamp(text, timezone):
    ts = pd.Timestamp(text.strip())
    if ts is pd.NaT:
        raise ValueError('empty timestamp')
    if ts.tzinfo is not None:
        ts = ts.tz_convert(timezone).tz_localize(None)
    return ts.to_pydatetime()


def _parse_wait(text):
    try:
        wait = float(text)
    except ValueError:
        raise ValueError('unparseable wait %r' % (text,))
    if math.isnan(wait) or math.isinf(wait):
        raise ValueError('non-finite wait %r' % (text,))
    if wait < 0:
        raise ValueError('negative wait')
    return wait


def _read_text(stream):
    if hasattr(stream, 'read'):
        return stream.read()
    with open(stream, encoding='utf-8', newline='') as f:
        return f.read()


def parse_records(stream, schema=None, delimiter=',', timezone='UTC'):
    '''Parse delimiter-separated wait-time records.

    Rows that cannot be parsed (including rows with too few or too many
    fields) are skipped and reported as diagnostics; a missing mandatory
    column or an unreadable stream is fatal. Duplicate (site, direction,
    class, timestamp) keys keep the last occurrence. Diagnostics number data
    rows from 1, header and blank lines excluded.

    Arguments:
    stream    -- text stream or path
    schema    -- mapping of record field -> column name (identity by default)
    delimiter -- field separator
    timezone  -- zone for timestamps carrying an explicit offset
    '''

    fields = list(WaitTimeRecord._fields)
    schema = dict(schema or {})
    columns = [schema.get(f, f) for f in fields]
    options = dict(sep=delimiter, dtype=str, keep_default_na=False, skipinitialspace=True,
                   engine='python', index_col=False)

    try:
        text = _read_text(stream).lstrip('\r\n')
        header = [str(c).strip() for c in pd.read_csv(io.StringIO(text), nrows=0, **options).columns]
    except pd.errors.EmptyDataError:
        raise IngestError('input has no header row')
    except (OSError, UnicodeDecodeError, pd.errors.ParserError) as e:
        raise IngestError('unreadable input: %s' % e)

    for field, column in zip(fields, columns):
        if column not in header:
            raise IngestError('missing mandatory column %r (field %s)' % (column, field),
                              column=column)

    # Over-long rows keep their position: the surplus goes to an extra column.
    width = len(header)
    names = header + [OVERFLOW_COLUMN]
    try:
        frame = pd.read_csv(
            io.StringIO(text), header=None, skiprows=1, names=names,
            on_bad_lines=lambda bad: bad[:width] + [delimiter.join(bad[width:])],
            **options)
    except pd.errors.EmptyDataError:
        frame = pd.DataFrame(columns=names)
    except pd.errors.ParserError as e:
        raise IngestError('unreadable input: %s' % e)

    diagnostics = []
    kept = {}
    used = [header.index(c) for c in columns]
    for number, row in enumerate(frame[names].itertuples(index=False, name=None), 1):
        if not pd.isna(row[width]):
            diagnostics.append(Diagnostic(number, 'wrong number of fields: more than %d' % width))
            continue
        if any(pd.isna(v) for v in row[:width]):
            diagnostics.append(Diagnostic(number, 'wrong number of fields: fewer than %d' % width))
            continue
        text_ts, site, direction, vehicle_class, wait = (row[i] for i in used)
        try:
            record = WaitTimeRecord(
                timestamp=_parse_timestamp(text_ts, timezone),
                site=site.strip(),
                direction=parse_direction(direction),
                vehicle_class=parse_vehicle_class(vehicle_class),
                wait_minutes=_parse_wait(wait),
            )
            if not record.site:
                raise ValueError('empty site')
        except ValueError as e:
            diagnostics.append(Diagnostic(number, str(e)))
            continue
        key = record[:4]
        if key in kept:
            diagnostics.append(Diagnostic(number, 'duplicate %s %s %s %s, keeping last' % (
                record.site, record.direction.value, record.vehicle_class.value,
                record.timestamp.isoformat())))
        kept[key] = record

    for d in diagnostics:
        log.warning('%s', d)
    log.info('Parsed %d record(s), %d diagnostic(s)' % (len(kept), len(diagnostics)))
    return ParseResult(list(kept.values()), diagnostics)


def aggregate_hourly(records):
    '''Mean wait per (site, direction, vehicle_class, hour).

    Hours without records are absent. Means are clipped into [min, max] of
    the contributing values so float rounding cannot push a constant hour
    across a category boundary.
    '''

    if not records:
        return {}
    frame = pd.DataFrame({
        'site':          [r.site for r in records],
        'direction':     [r.direction.value for r in records],
        'vehicle_class': [r.vehicle_class.value for r in records],
        'hour':          pd.to_datetime([r.timestamp for r in records]).floor('h'),
        'wait':          [float(r.wait_minutes) for r in records],
    })
    stats = frame.groupby(['site', 'direction', 'vehicle_class', 'hour'], sort=True)['wait'] \
        .agg(['mean', 'min', 'max'])
    means = stats['mean'].clip(lower=stats['min'], upper=stats['max'])

    hourly = {}
    for (site, direction, vehicle_class, hour), mean in means.items():
        key = (site, Direction(direction), VehicleClass(vehicle_class), hour.to_pydatetime())
        hourly[key] = float(mean)
    return hourly


def discretize(mean_wait):
    '''Map an hourly mean wait (minutes) to its delay category.'''
    if mean_wait is None or math.isnan(mean_wait):
        raise DiscretizationError('wait must be a number, got %r' % (mean_wait,))
    if mean_wait < 0:
        raise DiscretizationError('wait must be >= 0, got %r' % (mean_wait,))
    if mean_wait == 0:
        return Category.NO_WAITING
    if mean_wait <= SLIGHT_DELAY_MAX:
        return Category.SLIGHT_DELAY
    if mean_wait <= DELAY_MAX:
        return Category.DELAY
    return Category.HEAVY_DELAY


def build_transactions(hourly, attributes, direction, vehicle_class):
    '''Assemble one transaction per hour in which every attribute has a value.

    Hours missing any attribute are dropped and counted in excluded_hours.
    '''

    attributes = list(attributes)
    if not attributes:
        raise IngestError('attribute list is empty')
    if len(set(attributes)) != len(attributes):
        raise IngestError('attributes are not distinct: %s' % ','.join(attributes))
    direction = parse_direction(direction)
    vehicle_class = parse_vehicle_class(vehicle_class)

    by_hour = {}
    seen_sites = set()
    for (site, d, vc, hour), mean in hourly.items():
        if d is not direction or vc is not vehicle_class:
            continue
        seen_sites.add(site)
        if site in attributes:
            by_hour.setdefault(hour, {})[site] = mean
    if seen_sites:
        unknown = [a for a in attributes if a not in seen_sites]
        if unknown:
            raise IngestError('unknown attribute(s) for %s/%s: %s' % (
                direction.value, vehicle_class.value, ','.join(unknown)), column=unknown[0])

    transactions = []
    excluded = 0
    for hour in sorted(by_hour):
        values = by_hour[hour]
        if len(values) < len(attributes):
            excluded += 1
            continue
        items = tuple(Item(a, discretize(values[a])) for a in attributes)
        transactions.append(Transaction(hour, items))

    if not transactions:
        log.warning('No complete hour for %s/%s (%d hour(s) excluded)' % (
            direction.value, vehicle_class.value, excluded))
    else:
        log.info('Built %d transaction(s) for %s/%s, %d incomplete hour(s) excluded' % (
            len(transactions), direction.value, vehicle_class.value, excluded))
    return TransactionBuild(transactions, excluded)


def load_transactions(stream, config):
    '''Run parse -> aggregate -> build with the options in `config`.'''
    parsed = parse_records(stream, schema=config.schema, delimiter=config.delimiter,
                           timezone=config.timezone)
    hourly = aggregate_hourly(parsed.records)
    build = build_transactions(hourly, config.attributes, config.direction,
                               config.vehicle_class)
    return build._replace(diagnostics=parsed.diagnostics)


def format_hour(timestamp):
    return timestamp.strftime(HOUR_FORMAT)


def write_transactions(transactions, attributes, stream):
    '''Write the transaction file: header, then hour and one category index
    per attribute.
    '''
    stream.write(','.join([HOUR_COLUMN] + list(attributes)) + '\n')
    for txn in transactions:
        if [i.attribute for i in txn.items] != list(attributes):
            raise IngestError('transaction at %s does not match attributes %s' % (
                format_hour(txn.timestamp), ','.join(attributes)))
        stream.write(','.join([format_hour(txn.timestamp)] +
                              [str(int(i.category)) for i in txn.items]) + '\n')


def read_transactions(stream):
    '''Read a transaction file. Returns (attributes, transactions).'''
    lines = [line.rstrip('\r\n') for line in stream]
    if not lines or not lines[0].strip():
        raise IngestError('transaction file has no header')
    header = [h.strip() for h in lines[0].split(',')]
    if header[0] != HOUR_COLUMN or len(header) < 2:
        raise IngestError('transaction header must be "hour,<attribute>,...", got %r' % lines[0])
    attributes = header[1:]

    transactions = []
    for number, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split(',')]
        if len(fields) != len(header):
            raise IngestError('line %d: expected %d fields, got %d' % (
                number, len(header), len(fields)))
        try:
            hour = datetime.strptime(fields[0], HOUR_FORMAT)
            items = tuple(Item(a, Category(int(c))) for a, c in zip(attributes, fields[1:]))
        except ValueError as e:
            raise IngestError('line %d: %s' % (number, e))
        transactions.append(Transaction(hour, items))
    return attributes, transactions

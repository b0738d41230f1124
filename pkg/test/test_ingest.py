import io
import logging
import os
import sys
import unittest
from datetime import datetime

from hypothesis import given
from hypothesis import strategies as st

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
from detector import ingest
from detector.ingest import Category, Direction, Item, VehicleClass, WaitTimeRecord

import fixtures
import log_opts
log = logging.getLogger()

HEADER = 'timestamp,site,direction,vehicle_class,wait_minutes\n'


def record(ts, site, wait, direction=Direction.TO_CANADA, vehicle_class=VehicleClass.CAR):
    return WaitTimeRecord(datetime.strptime(ts, '%Y-%m-%dT%H:%M'), site, direction,
                          vehicle_class, float(wait))


class TestDiscretize(unittest.TestCase):
    '''Test for the wait-time category bins.'''

    def test_boundaries(self):
        waits = [0, 0.1, 15, 15.01, 30, 30.01, 45]
        self.assertEqual([int(ingest.discretize(w)) for w in waits], [1, 2, 2, 3, 3, 4, 4])

    def test_labels(self):
        self.assertEqual(ingest.discretize(0).label, 'no waiting')
        self.assertEqual(ingest.discretize(90).label, 'heavy delay')

    def test_invalid(self):
        with self.assertRaises(ingest.DiscretizationError):
            ingest.discretize(-0.5)
        with self.assertRaises(ValueError):
            ingest.discretize(float('nan'))

    @given(st.floats(min_value=0, max_value=1e6, allow_nan=False))
    def test_total_on_non_negative(self, wait):
        category = ingest.discretize(wait)
        self.assertIn(category, list(Category))
        if category == Category.NO_WAITING:
            self.assertEqual(wait, 0)


class TestParseRecords(unittest.TestCase):
    '''Test for reading raw records into WaitTimeRecord.'''

    def test_single_row(self):
        res = ingest.parse_records(io.StringIO(HEADER + '2016-09-05T14:05,LQ,ToCanada,Car,87\n'))
        self.assertEqual(len(res.records), 1)
        rec = res.records[0]
        self.assertEqual(rec.wait_minutes, 87)
        self.assertEqual(rec.site, 'LQ')
        self.assertIs(rec.direction, Direction.TO_CANADA)
        self.assertIs(rec.vehicle_class, VehicleClass.CAR)
        self.assertEqual(rec.timestamp, datetime(2016, 9, 5, 14, 5))
        self.assertEqual(res.diagnostics, [])

    def test_header_only(self):
        res = ingest.parse_records(io.StringIO(HEADER))
        self.assertEqual(res.records, [])
        self.assertEqual(res.diagnostics, [])

    def test_negative_wait_rejected(self):
        with self.assertLogs(level='WARNING'):
            res = ingest.parse_records(io.StringIO(
                HEADER + '2016-09-05T14:05,LQ,ToCanada,Car,-5\n2016-09-05T14:10,LQ,ToCanada,Car,3\n'))
        self.assertEqual(len(res.records), 1)
        self.assertEqual(len(res.diagnostics), 1)
        self.assertEqual(res.diagnostics[0].row, 1)
        self.assertIn('negative wait', res.diagnostics[0].message)

    def test_unparseable_rows_reported(self):
        text = HEADER + ('not-a-date,LQ,ToCanada,Car,1\n'
                         '2016-09-05T14:05,LQ,Sideways,Car,1\n'
                         '2016-09-05T14:05,LQ,ToCanada,Bus,1\n'
                         '2016-09-05T14:05,LQ,ToCanada,Car,abc\n'
                         '2016-09-05T14:05,,ToCanada,Car,1\n')
        with self.assertLogs(level='WARNING'):
            res = ingest.parse_records(io.StringIO(text))
        self.assertEqual(res.records, [])
        self.assertEqual([d.row for d in res.diagnostics], [1, 2, 3, 4, 5])

    def test_short_row_reported(self):
        with self.assertLogs(level='WARNING'):
            res = ingest.parse_records(io.StringIO(
                HEADER + '2016-09-05T14:05\n2016-09-05T14:10,LQ,ToCanada,Car,3\n'))
        self.assertEqual(len(res.records), 1)
        self.assertEqual(res.records[0].wait_minutes, 3)
        self.assertEqual([d.row for d in res.diagnostics], [1])
        self.assertIn('wrong number of fields', res.diagnostics[0].message)

    def test_long_first_row_reported(self):
        text = HEADER + ('2016-09-05T14:05,LQ,ToCanada,Car,3,extra\n'
                         '2016-09-05T14:10,LQ,ToCanada,Car,4\n'
                         '2016-09-05T14:15,LQ,ToCanada,Car,5\n')
        with self.assertLogs(level='WARNING'):
            res = ingest.parse_records(io.StringIO(text))
        self.assertEqual([r.wait_minutes for r in res.records], [4, 5])
        self.assertEqual([d.row for d in res.diagnostics], [1])
        self.assertIn('wrong number of fields', res.diagnostics[0].message)

    def test_bad_rows_keep_position(self):
        text = HEADER + ('2016-09-05T14:05,LQ,ToCanada,Car,1\n'
                         '2016-09-05T14:10,LQ,ToCanada,Car,2,3,4\n'
                         '2016-09-05T14:15,LQ,ToCanada\n'
                         '2016-09-05T14:20,LQ,ToCanada,Car,-1\n'
                         '2016-09-05T14:25,LQ,ToCanada,Car,5\n')
        with self.assertLogs(level='WARNING'):
            res = ingest.parse_records(io.StringIO(text))
        self.assertEqual([r.wait_minutes for r in res.records], [1, 5])
        self.assertEqual([d.row for d in res.diagnostics], [2, 3, 4])
        self.assertIn('negative wait', res.diagnostics[2].message)

    def test_missing_column(self):
        with self.assertRaises(ingest.IngestError) as cm:
            ingest.parse_records(io.StringIO('timestamp,site,direction,vehicle_class\n'))
        self.assertEqual(cm.exception.column, 'wait_minutes')
        self.assertIn('wait_minutes', str(cm.exception))

    def test_unreadable(self):
        with self.assertRaises(ingest.IngestError):
            ingest.parse_records(io.StringIO(''))
        with self.assertRaises(ingest.IngestError):
            ingest.parse_records('/nonexistent/waits.csv')

    def test_schema_and_delimiter(self):
        schema = {'timestamp': 'time', 'site': 'bridge', 'direction': 'dir',
                  'vehicle_class': 'type', 'wait_minutes': 'delay'}
        text = 'time;bridge;dir;type;delay\n2016-09-05T14:05;PB;US;Truck;12.5\n'
        res = ingest.parse_records(io.StringIO(text), schema=schema, delimiter=';')
        self.assertEqual(res.records[0].wait_minutes, 12.5)
        self.assertIs(res.records[0].direction, Direction.TO_US)
        self.assertIs(res.records[0].vehicle_class, VehicleClass.TRUCK)

    def test_duplicate_keeps_last(self):
        text = HEADER + ('2016-09-05T14:05,PB,ToCanada,Car,5\n'
                         '2016-09-05T14:05,PB,ToCanada,Car,50\n')
        with self.assertLogs(level='WARNING'):
            res = ingest.parse_records(io.StringIO(text))
        self.assertEqual(len(res.records), 1)
        self.assertEqual(res.records[0].wait_minutes, 50)
        self.assertIn('duplicate', res.diagnostics[0].message)

    def test_offset_converted_to_timezone(self):
        text = HEADER + '2016-09-05T18:05+00:00,PB,ToCanada,Car,5\n'
        res = ingest.parse_records(io.StringIO(text), timezone='America/New_York')
        self.assertEqual(res.records[0].timestamp, datetime(2016, 9, 5, 14, 5))


class TestAggregateHourly(unittest.TestCase):
    '''Test for hourly means.'''

    def test_constant_hour(self):
        recs = [record('2016-09-05T14:%02d' % (5 * i), 'PB', 10) for i in range(12)]
        hourly = ingest.aggregate_hourly(recs)
        key = ('PB', Direction.TO_CANADA, VehicleClass.CAR, datetime(2016, 9, 5, 14))
        self.assertEqual(hourly, {key: 10.0})

    def test_two_point_mean(self):
        hourly = ingest.aggregate_hourly([record('2016-09-05T14:00', 'PB', 0),
                                          record('2016-09-05T14:55', 'PB', 30)])
        self.assertEqual(list(hourly.values()), [15.0])

    def test_hourly_feed(self):
        hourly = ingest.aggregate_hourly([record('2016-09-05T14:00', 'RB', 25),
                                          record('2016-09-05T15:00', 'RB', 40)])
        self.assertEqual(sorted(hourly.values()), [25.0, 40.0])
        self.assertEqual(sorted(k[3].hour for k in hourly), [14, 15])

    def test_keys_separate(self):
        recs = [record('2016-09-05T14:00', 'PB', 10),
                record('2016-09-05T14:00', 'PB', 99, direction=Direction.TO_US),
                record('2016-09-05T14:00', 'PB', 77, vehicle_class=VehicleClass.TRUCK)]
        self.assertEqual(len(ingest.aggregate_hourly(recs)), 3)

    def test_empty(self):
        self.assertEqual(ingest.aggregate_hourly([]), {})

    @given(st.lists(st.floats(min_value=0, max_value=500, allow_nan=False), min_size=1, max_size=12))
    def test_mean_within_range(self, waits):
        recs = [record('2016-09-05T14:%02d' % (5 * i), 'PB', w) for i, w in enumerate(waits)]
        (mean,) = ingest.aggregate_hourly(recs).values()
        self.assertGreaterEqual(mean, min(waits))
        self.assertLessEqual(mean, max(waits))


class TestBuildTransactions(unittest.TestCase):
    '''Test for assembling hourly multi-site transactions.'''

    def hourly(self, values, direction=Direction.TO_CANADA, vehicle_class=VehicleClass.CAR):
        return {(site, direction, vehicle_class, datetime(2016, 9, 5, h)): wait
                for (site, h), wait in values.items()}

    def test_complete_hour(self):
        build = ingest.build_transactions(
            self.hourly({('PB', 14): 0, ('LQ', 14): 10, ('RB', 14): 45}),
            ['PB', 'LQ', 'RB'], 'ToCanada', 'Car')
        self.assertEqual(build.excluded_hours, 0)
        self.assertEqual(len(build.transactions), 1)
        self.assertEqual(build.transactions[0].items,
                         (Item('PB', 1), Item('LQ', 2), Item('RB', 4)))

    def test_incomplete_hour_excluded(self):
        build = ingest.build_transactions(
            self.hourly({('PB', 14): 0, ('LQ', 14): 10, ('RB', 14): 45,
                         ('PB', 15): 0, ('LQ', 15): 10}),
            ['PB', 'LQ', 'RB'], Direction.TO_CANADA, VehicleClass.CAR)
        self.assertEqual(len(build.transactions), 1)
        self.assertEqual(build.excluded_hours, 1)

    def test_truck_two_attributes(self):
        values = {('PB', 9): 20, ('LQ', 9): 0}
        build = ingest.build_transactions(
            self.hourly(values, vehicle_class=VehicleClass.TRUCK), ['PB', 'LQ'], 'ToUS', 'Truck')
        self.assertEqual(len(build.transactions), 0)
        build = ingest.build_transactions(
            self.hourly(values, direction=Direction.TO_US, vehicle_class=VehicleClass.TRUCK),
            ['PB', 'LQ'], 'ToUS', 'Truck')
        self.assertEqual([len(t.items) for t in build.transactions], [2])

    def test_unknown_attribute(self):
        with self.assertRaises(ingest.IngestError):
            ingest.build_transactions(self.hourly({('PB', 14): 0}), ['PB', 'XX'], 'ToCanada', 'Car')

    def test_bad_attribute_lists(self):
        with self.assertRaises(ingest.IngestError):
            ingest.build_transactions({}, [], 'ToCanada', 'Car')
        with self.assertRaises(ingest.IngestError):
            ingest.build_transactions({}, ['PB', 'PB'], 'ToCanada', 'Car')

    def test_empty_result_warns(self):
        with self.assertLogs(level='WARNING'):
            build = ingest.build_transactions({}, ['PB'], 'ToCanada', 'Car')
        self.assertEqual(build.transactions, [])

    def test_sorted_and_counted(self):
        values = {}
        for h in (5, 3, 9, 1):
            values[('PB', h)] = h
            values[('LQ', h)] = 2 * h
        values[('PB', 7)] = 1
        build = ingest.build_transactions(self.hourly(values), ['PB', 'LQ'], 'ToCanada', 'Car')
        hours = [t.timestamp.hour for t in build.transactions]
        self.assertEqual(hours, [1, 3, 5, 9])
        self.assertEqual(len(build.transactions) + build.excluded_hours, 5)
        for txn in build.transactions:
            self.assertEqual([i.attribute for i in txn.items], ['PB', 'LQ'])


class TestExampleIngest(unittest.TestCase):
    '''The six-row bridge example built from raw records.'''

    def load(self):
        config = type('Config', (), {
            'schema': {}, 'delimiter': ',', 'timezone': 'UTC',
            'attributes': ['PB', 'LQ', 'RB'], 'direction': 'ToCanada', 'vehicle_class': 'Car',
        })()
        return ingest.load_transactions(fixtures.example_records_stream(), config)

    def test_example_database(self):
        build = self.load()
        self.assertEqual(build.transactions, fixtures.example_transactions())
        self.assertEqual(build.excluded_hours, 0)
        self.assertEqual(len(build.diagnostics), 0)

    def test_deterministic(self):
        self.assertEqual(self.load(), self.load())


class TestTransactionFile(unittest.TestCase):
    '''Test for the transaction file format.'''

    def test_write_read(self):
        txns = fixtures.example_transactions()
        out = io.StringIO()
        ingest.write_transactions(txns, ['PB', 'LQ', 'RB'], out)
        lines = out.getvalue().splitlines()
        self.assertEqual(lines[0], 'hour,PB,LQ,RB')
        self.assertEqual(lines[1], '2016-09-05T00:00,1,2,1')
        attributes, back = ingest.read_transactions(io.StringIO(out.getvalue()))
        self.assertEqual(attributes, ['PB', 'LQ', 'RB'])
        self.assertEqual(back, txns)

    def test_bad_files(self):
        for text in ('', 'time,PB\n', 'hour,PB\n2016-09-05T00:00,7\n',
                     'hour,PB,LQ\n2016-09-05T00:00,1\n', 'hour,PB\nyesterday,1\n'):
            with self.assertRaises(ingest.IngestError, msg=text):
                ingest.read_transactions(io.StringIO(text))

    def test_attribute_mismatch(self):
        with self.assertRaises(ingest.IngestError):
            ingest.write_transactions(fixtures.example_transactions(), ['PB', 'LQ'], io.StringIO())


if __name__ == '__main__':
    unittest.main()

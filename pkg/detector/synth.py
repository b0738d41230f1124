import logging
from typing import NamedTuple

import numpy as np
import pandas as pd

from .ingest import HOUR_FORMAT, parse_direction, parse_vehicle_class

log = logging.getLogger()

# Sites report every five minutes unless listed in hourly_sites.
SAMPLES_PER_HOUR = 12
SAMPLE_MINUTES = 60 // SAMPLES_PER_HOUR
DEFAULT_DOMINANT = {'PB': 1, 'LQ': 1, 'RB': 1}
DEFAULT_HOURLY_SITES = ('RB',)
# Injected hours draw every site from these categories.
ANOMALY_CATEGORIES = (3, 4)
# Minute ranges a generated sample falls in, per category.
_WAIT_RANGES = {
    1: (0.0, 0.0),
    2: (1.0, 14.0),
    3: (16.0, 29.0),
    4: (31.0, 90.0),
}
PEAK_WIDTH_HOURS = 2.0


class SyntheticData(NamedTuple):
    records: pd.DataFrame
    injected: list
    hourly_categories: dict


def _injection_positions(rng, hours, count, peak_hour):
    n = len(hours)
    if peak_hour is None:
        return rng.choice(n, size=count, replace=False)
    distance = np.abs(hours.hour.to_numpy() - peak_hour)
    distance = np.minimum(distance, 24 - distance)
    weights = np.exp(-distance.astype(float) ** 2 / (2 * PEAK_WIDTH_HOURS ** 2))
    return rng.choice(n, size=count, replace=False, p=weights / weights.sum())


def _deviate(rng, category):
    '''Shift one site by one category, staying below the anomaly range.'''
    options = [c for c in (category - 1, category + 1) if 1 <= c < min(ANOMALY_CATEGORIES)]
    if not options:
        options = [c for c in (category - 1, category + 1) if 1 <= c <= 4]
    return int(rng.choice(options))


def _samples(rng, category, count):
    low, high = _WAIT_RANGES[category]
    if high == 0.0:
        return np.zeros(count)
    return np.round(rng.uniform(low, high, size=count), 1)


def generate_synthetic(seed, days=30, dominance=0.95, injections=20, start='2016-08-22',
                       dominant=None, direction='ToCanada', vehicle_class='Car',
                       hourly_sites=DEFAULT_HOURLY_SITES, peak_hour=None):
    '''Generate wait-time records with a dominant cross-site pattern.

    Each hour follows the dominant categories with probability `dominance`,
    otherwise one site deviates by one category. `injections` distinct hours
    are then overwritten with heavy delays at every site; their timestamps
    form the manifest. With `peak_hour` the injected hours cluster around
    that hour of day.
    '''

    dominant = dict(dominant or DEFAULT_DOMINANT)
    sites = list(dominant)
    direction = parse_direction(direction).value
    vehicle_class = parse_vehicle_class(vehicle_class).value
    hours = pd.date_range(pd.Timestamp(start), periods=int(days) * 24, freq='h')
    if injections > len(hours):
        raise ValueError('cannot inject %d anomalies into %d hours' % (injections, len(hours)))
    if not 0.0 <= dominance <= 1.0:
        raise ValueError('dominance must be in [0, 1], got %r' % dominance)

    rng = np.random.default_rng(seed)
    categories = np.tile(np.array([dominant[s] for s in sites], dtype=int), (len(hours), 1))
    noisy = rng.random(len(hours)) >= dominance
    for row in np.flatnonzero(noisy):
        col = int(rng.integers(len(sites)))
        categories[row, col] = _deviate(rng, int(categories[row, col]))
    injected = np.sort(_injection_positions(rng, hours, int(injections), peak_hour))
    for row in injected:
        categories[row] = rng.choice(ANOMALY_CATEGORIES, size=len(sites))

    columns = {'timestamp': [], 'site': [], 'direction': [], 'vehicle_class': [], 'wait_minutes': []}
    for row, hour in enumerate(hours):
        for col, site in enumerate(sites):
            count = 1 if site in hourly_sites else SAMPLES_PER_HOUR
            stamps = [hour + pd.Timedelta(minutes=SAMPLE_MINUTES * i) for i in range(count)]
            columns['timestamp'].extend(t.strftime(HOUR_FORMAT) for t in stamps)
            columns['site'].extend([site] * count)
            columns['direction'].extend([direction] * count)
            columns['vehicle_class'].extend([vehicle_class] * count)
            columns['wait_minutes'].extend(_samples(rng, int(categories[row, col]), count))

    hourly_categories = {hours[r].to_pydatetime(): dict(zip(sites, (int(c) for c in categories[r])))
                         for r in range(len(hours))}
    log.info('Generated %d record(s) over %d hour(s), %d noisy, %d injected (seed %s)' % (
        len(columns['site']), len(hours), int(noisy.sum()), len(injected), seed))
    return SyntheticData(pd.DataFrame(columns),
                         [hours[r].to_pydatetime() for r in injected],
                         hourly_categories)


def write_synthetic(data, records_stream, manifest_stream):
    data.records.to_csv(records_stream, index=False, lineterminator='\n')
    for hour in data.injected:
        manifest_stream.write(hour.strftime(HOUR_FORMAT) + '\n')


def read_manifest(stream):
    return [pd.Timestamp(line.strip()).to_pydatetime() for line in stream if line.strip()]

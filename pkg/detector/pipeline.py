import contextlib
import logging
import os
import traceback
from typing import NamedTuple

from . import anomaly, codec, ingest, mining
from .cfg import ConfigError

log = logging.getLogger()

STAGE_EXIT_CODES = {
    'ingest':   10,
    'mine':     20,
    'compress': 30,
    'score':    40,
    'report':   50,
}
CONFIG_EXIT_CODE = 2

CONFIG_FILE = 'config.yml'
TRANSACTIONS_FILE = 'transactions.csv'
ITEMSETS_FILE = 'itemsets.tsv'
PATTERN_TABLE_FILE = 'pattern_table.tsv'
ACCEPTANCE_LOG_FILE = 'acceptance_log.tsv'
SCORES_FILE = 'scores.tsv'
REPORT_FILE = 'report.yml'


class StageError(Exception):
    '''A pipeline stage failed; exit_code tells which one.'''

    def __init__(self, stage, message, original_exception=None):
        super().__init__('%s: %s' % (stage, message))
        self.stage = stage
        self.exit_code = STAGE_EXIT_CODES.get(stage, 1)
        self.original_exception = original_exception


@contextlib.contextmanager
def stage(name):
    log.info('Stage %s...' % name)
    try:
        yield
    except StageError:
        raise
    except (ConfigError, KeyboardInterrupt):
        raise
    except Exception as e:
        log.debug(''.join(traceback.format_exception(type(e), e, e.__traceback__)))
        raise StageError(name, str(e) or repr(e), e)


def _open_out(output_dir, name):
    return open(os.path.join(output_dir, name), 'w', encoding='utf-8', newline='\n')


def _open_in(path):
    return open(path, encoding='utf-8', newline='')


class PipelineResult(NamedTuple):
    output_dir: str
    rows: int
    excluded_hours: int
    initial_length: float
    length: float
    compression_ratio: float
    top: object

    def summary(self):
        top = 'none'
        if self.top is not None:
            top = '%s score=%.4f [%s]' % (
                ingest.format_hour(self.top.transaction.timestamp), self.top.score,
                ','.join(str(i) for i in self.top.transaction.items))
        return ('%s: rows=%d excluded=%d L0=%.4f L=%.4f ratio=%.4f top1=%s' % (
            self.output_dir, self.rows, self.excluded_hours, self.initial_length,
            self.length, self.compression_ratio, top))


def run_pipeline(config):
    '''ingest -> mine -> compress -> score -> report, every artifact written
    into config.output_dir. Identical config and input give identical files.
    '''

    config.validate()
    os.makedirs(config.output_dir, exist_ok=True)
    with _open_out(config.output_dir, CONFIG_FILE) as f:
        config.dump(f)

    with stage('ingest'):
        build = ingest.load_transactions(config.input, config)
        transactions = build.transactions
        if not transactions:
            raise ingest.IngestError('no complete hour for %s/%s (%d excluded)' % (
                config.direction, config.vehicle_class, build.excluded_hours))
        with _open_out(config.output_dir, TRANSACTIONS_FILE) as f:
            ingest.write_transactions(transactions, config.attributes, f)

    with stage('mine'):
        threshold = mining.SupportThreshold.from_config(config)
        candidates = mining.frequent_itemsets(transactions, threshold)
        with _open_out(config.output_dir, ITEMSETS_FILE) as f:
            mining.write_itemsets(candidates, f)

    with stage('compress'):
        result = codec.compress(transactions, threshold, candidates)
        with _open_out(config.output_dir, PATTERN_TABLE_FILE) as f:
            codec.write_pattern_table(result.table, f)
        with _open_out(config.output_dir, ACCEPTANCE_LOG_FILE) as f:
            codec.write_acceptance_log(result, f)

    with stage('score'):
        scored = anomaly.score_all(transactions, result.table)
        with _open_out(config.output_dir, SCORES_FILE) as f:
            anomaly.write_scores(scored, config.attributes, f)

    with stage('report'):
        _write_report(scored, config)

    return PipelineResult(config.output_dir, len(transactions), build.excluded_hours,
                          result.initial_length, result.length, result.compression_ratio,
                          scored[0] if scored else None)


def _write_report(scored, config, path=None):
    k = int(config.top_k)
    if k > len(scored):
        log.warning('top_k %d exceeds %d transaction(s), reporting all' % (k, len(scored)))
        k = len(scored)
    selected = anomaly.top_fraction(scored, float(config.top_fraction))
    histogram = anomaly.hour_frequency(selected)
    document = anomaly.report(scored, selected, histogram, k, float(config.top_fraction))
    if path is None:
        path = os.path.join(config.output_dir, REPORT_FILE)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        anomaly.write_report(document, f)
    return document


def scenario_dir(direction, vehicle_class):
    return '%s-%s' % (ingest.parse_direction(direction).value,
                      ingest.parse_vehicle_class(vehicle_class).value)


def run_scenarios(config):
    '''Run the pipeline once per configured scenario (direction x vehicle
    class, each with its own attribute list), each into its own directory.
    '''
    if not config.scenarios:
        return [run_pipeline(config)]
    results = []
    for entry in config.scenarios:
        try:
            direction = entry['direction']
            vehicle_class = entry['vehicle_class']
        except (KeyError, TypeError) as e:
            raise ConfigError('scenario %r lacks %s' % (entry, e))
        sub = config.derive(
            direction=direction,
            vehicle_class=vehicle_class,
            attributes=list(entry.get('attributes', config.attributes)),
            output_dir=os.path.join(config.output_dir, scenario_dir(direction, vehicle_class)),
            scenarios=None,
        )
        results.append(run_pipeline(sub))
    return results


# Single-stage commands working on artifact files.

def discretize_file(config, out_path):
    config.validate()
    with stage('ingest'):
        build = ingest.load_transactions(config.input, config)
        with open(out_path, 'w', encoding='utf-8', newline='\n') as f:
            ingest.write_transactions(build.transactions, config.attributes, f)
    return build


def mine_file(transactions_path, out_path, threshold):
    with stage('mine'):
        with _open_in(transactions_path) as f:
            _, transactions = ingest.read_transactions(f)
        itemsets = mining.frequent_itemsets(transactions, threshold)
        with open(out_path, 'w', encoding='utf-8', newline='\n') as f:
            mining.write_itemsets(itemsets, f)
    return itemsets


def compress_file(transactions_path, table_path, log_path, threshold):
    with stage('compress'):
        with _open_in(transactions_path) as f:
            _, transactions = ingest.read_transactions(f)
        result = codec.compress(transactions, threshold)
        with open(table_path, 'w', encoding='utf-8', newline='\n') as f:
            codec.write_pattern_table(result.table, f)
        with open(log_path, 'w', encoding='utf-8', newline='\n') as f:
            codec.write_acceptance_log(result, f)
    return result


def score_file(transactions_path, table_path, out_path):
    with stage('score'):
        with _open_in(transactions_path) as f:
            attributes, transactions = ingest.read_transactions(f)
        with _open_in(table_path) as f:
            table = codec.read_pattern_table(f)
        scored = anomaly.score_all(transactions, table)
        with open(out_path, 'w', encoding='utf-8', newline='\n') as f:
            anomaly.write_scores(scored, attributes, f)
    return scored


def report_file(scores_path, out_path, config):
    with stage('report'):
        with _open_in(scores_path) as f:
            _, scored = anomaly.read_scores(f)
        return _write_report(scored, config, out_path)

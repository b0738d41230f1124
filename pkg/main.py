#!/usr/bin/env python3

import argparse
import logging
import platform
import socket
import sys

import detector.cfg
import detector.pipeline as pipeline
from detector import mining, synth

import log_opts
log = logging.getLogger()

PROJECT = 'mdl-border-anomaly'
VERSION = 'v0.1.0'


def _csv_list(text):
    return [t.strip() for t in text.split(',') if t.strip()]


def _threshold_value(text):
    try:
        return mining.SupportThreshold.parse(text).value
    except mining.MiningError as e:
        raise argparse.ArgumentTypeError(str(e))


def build_parser():
    parser = argparse.ArgumentParser(
        description='MDL pattern-table anomaly ranking for multi-site border wait times')
    parser.add_argument('--config', metavar='CONFIG-FILE', type=str,
        help='config (YAML) file path; flags override its values')
    parser.add_argument('--log-level', dest='log_level', type=str,
        help='DEBUG, INFO, WARNING, ...')
    sub = parser.add_subparsers(dest='command', required=True)

    def scenario_flags(p):
        p.add_argument('--input', type=str, help='raw wait-time records')
        p.add_argument('--attributes', type=_csv_list, help='ordered site list, e.g. PB,LQ,RB')
        p.add_argument('--direction', type=str, help='ToUS or ToCanada')
        p.add_argument('--vehicle-class', dest='vehicle_class', type=str, help='Car or Truck')
        p.add_argument('--delimiter', type=str)

    def threshold_flags(p):
        p.add_argument('--threshold', dest='support_threshold', type=_threshold_value,
            help='absolute count ("5"), fraction ("0.05") or percent ("5%%")')
        p.add_argument('--comparison', dest='support_comparison', choices=mining.COMPARISONS)

    def report_flags(p):
        p.add_argument('--top-k', dest='top_k', type=int)
        p.add_argument('--top-fraction', dest='top_fraction', type=float)

    p = sub.add_parser('discretize', help='records -> hourly transaction file')
    scenario_flags(p)
    p.add_argument('--out', default='transactions.csv')

    p = sub.add_parser('mine', help='transaction file -> frequent itemsets')
    p.add_argument('transactions')
    threshold_flags(p)
    p.add_argument('--out', default='itemsets.tsv')

    p = sub.add_parser('compress', help='transaction file -> pattern table + acceptance log')
    p.add_argument('transactions')
    threshold_flags(p)
    p.add_argument('--table', default='pattern_table.tsv')
    p.add_argument('--log', default='acceptance_log.tsv')

    p = sub.add_parser('score', help='transaction file + pattern table -> scored file')
    p.add_argument('transactions')
    p.add_argument('table')
    p.add_argument('--out', default='scores.tsv')

    p = sub.add_parser('report', help='scored file -> anomaly report')
    p.add_argument('scores')
    report_flags(p)
    p.add_argument('--out', default='report.yml')

    p = sub.add_parser('run', help='full pipeline into an output directory')
    scenario_flags(p)
    threshold_flags(p)
    report_flags(p)
    p.add_argument('--output-dir', dest='output_dir', type=str)

    p = sub.add_parser('synth', help='generate synthetic records and an injection manifest')
    p.add_argument('--seed', type=int)
    p.add_argument('--days', type=int)
    p.add_argument('--dominance', type=float)
    p.add_argument('--injections', type=int)
    p.add_argument('--start', type=str)
    p.add_argument('--peak-hour', dest='peak_hour', type=int)
    p.add_argument('--direction', type=str)
    p.add_argument('--vehicle-class', dest='vehicle_class', type=str)
    p.add_argument('--out', default='waits.csv')
    p.add_argument('--manifest', default='injections.txt')
    return parser


def load_config(args):
    if args.config:
        log.info('Using config file: %s' % args.config)
        config = detector.cfg.RunConfig.load(args.config)
    else:
        config = detector.cfg.RunConfig()
    flags = {k: getattr(args, k, None) for k in (
        'input', 'attributes', 'direction', 'vehicle_class', 'delimiter', 'support_threshold',
        'support_comparison', 'top_k', 'top_fraction', 'output_dir', 'log_level')}
    if args.command == 'synth':
        # Generator flags go to the synth section, not the scenario.
        flags.pop('direction')
        flags.pop('vehicle_class')
    return config.override(**flags)


def run_synth(config, args):
    options = dict(config.synth)
    for key in ('seed', 'days', 'dominance', 'injections', 'start', 'peak_hour',
                'direction', 'vehicle_class'):
        value = getattr(args, key)
        if value is not None:
            options[key] = value
    options.setdefault('seed', 0)
    data = synth.generate_synthetic(**options)
    with open(args.out, 'w', encoding='utf-8', newline='\n') as records, \
            open(args.manifest, 'w', encoding='utf-8', newline='\n') as manifest:
        synth.write_synthetic(data, records, manifest)
    print('%s: %d record(s); %s: %d injected hour(s)' % (
        args.out, len(data.records), args.manifest, len(data.injected)))


def main(argv=None):
    args = build_parser().parse_args(argv)
    log_opts.set_level(args.log_level or 'INFO')
    log.info('Starting %s %s on %s (Python %s)...' % (
        PROJECT, VERSION, socket.gethostname(), platform.python_version()))

    try:
        config = load_config(args)
        # Set log level to the value of 'log_level' in the config; the flag wins.
        log_opts.set_level(config.log_level)
        command = args.command
        if command == 'synth':
            run_synth(config, args)
        elif command == 'discretize':
            build = pipeline.discretize_file(config, args.out)
            print('%s: %d transaction(s), %d hour(s) excluded, %d diagnostic(s)' % (
                args.out, len(build.transactions), build.excluded_hours, len(build.diagnostics)))
        elif command == 'mine':
            threshold = mining.SupportThreshold.from_config(config.validate())
            itemsets = pipeline.mine_file(args.transactions, args.out, threshold)
            print('%s: %d frequent itemset(s)' % (args.out, len(itemsets)))
        elif command == 'compress':
            threshold = mining.SupportThreshold.from_config(config.validate())
            result = pipeline.compress_file(args.transactions, args.table, args.log, threshold)
            print('%s: %d pattern(s), L0=%.4f L=%.4f ratio=%.4f' % (
                args.table, len(result.table), result.initial_length, result.length,
                result.compression_ratio))
        elif command == 'score':
            scored = pipeline.score_file(args.transactions, args.table, args.out)
            print('%s: %d scored transaction(s)' % (args.out, len(scored)))
        elif command == 'report':
            pipeline.report_file(args.scores, args.out, config.validate())
            print('%s written' % args.out)
        elif command == 'run':
            for result in pipeline.run_scenarios(config):
                print(result.summary())
    except pipeline.StageError as se:
        print(str(se), file=sys.stderr)
        return se.exit_code
    except (detector.cfg.ConfigError, mining.MiningError) as ce:
        print('config: %s' % ce, file=sys.stderr)
        return pipeline.CONFIG_EXIT_CODE
    except (OSError, ValueError) as e:
        print('%s: %s' % (args.command, e), file=sys.stderr)
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())

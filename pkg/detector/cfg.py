import copy
import logging

import yaml

log = logging.getLogger()


class ConfigError(Exception):
    pass


class RunConfig(object):
    '''
    RunConfig is loaded from YAML when a command starts.
    It provides default values for every option; flags given on the command
    line are applied on top with override().
    '''

    # Raw wait-time records (delimiter-separated, header required).
    input = 'waits.csv'
    delimiter = ','
    # Column names in the input for each record field.
    schema = {
        'timestamp':     'timestamp',
        'site':          'site',
        'direction':     'direction',
        'vehicle_class': 'vehicle_class',
        'wait_minutes':  'wait_minutes',
    }
    # Offset-carrying timestamps are converted to this zone. No DST handling.
    timezone = 'America/New_York'

    # One transaction item per site, in this order.
    attributes = ['PB', 'LQ', 'RB']
    direction = 'ToCanada'
    vehicle_class = 'Car'

    # Apriori threshold: an int is an absolute count, a float a fraction of
    # the number of transactions (floored at support_minimum).
    support_threshold = 0.05
    support_minimum = 2
    # 'ge' keeps support >= T, 'gt' keeps support > T.
    support_comparison = 'ge'

    top_fraction = 0.05
    top_k = 3

    output_dir = 'out'
    log_level = 'INFO'

    # Optional list of {direction, vehicle_class, attributes}; when set, `run`
    # processes every scenario into its own subdirectory.
    scenarios = None

    # Options of the synthetic generator (see detector.synth).
    synth = {}

    def __init__(self, **entries):
        # Copy mutable defaults so instances never share them.
        self.schema = dict(RunConfig.schema)
        self.attributes = list(RunConfig.attributes)
        self.synth = dict(RunConfig.synth)
        self.__dict__.update(entries)

    @classmethod
    def load(cls, path):
        '''Load a config from the YAML file at `path`. An empty file gives the
        defaults.
        '''
        try:
            with open(path) as f:
                data_map = yaml.safe_load(f)
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError('cannot load config %s: %s' % (path, e))
        if data_map is None:
            return cls()
        if not isinstance(data_map, dict):
            raise ConfigError('config %s is not a mapping' % path)
        return cls(**data_map)

    def override(self, **flags):
        '''Apply command-line values; None means "not given".'''
        for key, value in flags.items():
            if value is not None:
                setattr(self, key, value)
        return self

    def derive(self, **entries):
        '''Return a copy with `entries` replaced (used per scenario).'''
        other = copy.deepcopy(self)
        other.__dict__.update(entries)
        return other

    def validate(self):
        if not self.attributes:
            raise ConfigError('attributes must not be empty')
        if len(set(self.attributes)) != len(self.attributes):
            raise ConfigError('attributes must be distinct: %r' % (self.attributes,))
        threshold = self.support_threshold
        if isinstance(threshold, str):
            from .mining import MiningError, SupportThreshold
            try:
                threshold = self.support_threshold = SupportThreshold.parse(threshold).value
            except MiningError as e:
                raise ConfigError(str(e))
        if isinstance(threshold, bool) or not isinstance(threshold, (int, float)):
            raise ConfigError('support_threshold must be a number, got %r' % (threshold,))
        if isinstance(threshold, int) and threshold < 1:
            raise ConfigError('absolute support_threshold must be >= 1, got %d' % threshold)
        if isinstance(threshold, float) and not 0.0 < threshold <= 1.0:
            raise ConfigError('fractional support_threshold must be in (0, 1], got %r' % threshold)
        if self.support_comparison not in ('ge', 'gt'):
            raise ConfigError('support_comparison must be ge or gt, got %r' % (self.support_comparison,))
        if not 0.0 < float(self.top_fraction) <= 1.0:
            raise ConfigError('top_fraction must be in (0, 1], got %r' % (self.top_fraction,))
        if int(self.top_k) < 0:
            raise ConfigError('top_k must be >= 0, got %r' % (self.top_k,))
        missing = [f for f in RunConfig.schema if f not in self.schema]
        if missing:
            raise ConfigError('schema lacks field(s): %s' % ', '.join(missing))
        return self

    def as_dict(self):
        '''Every option with its effective value, defaults included.'''
        keys = [k for k in vars(RunConfig)
                if not k.startswith('_') and not callable(getattr(RunConfig, k))]
        keys += [k for k in self.__dict__ if k not in keys]
        return {k: copy.deepcopy(getattr(self, k)) for k in keys}

    def dump(self, stream):
        yaml.safe_dump(self.as_dict(), stream, default_flow_style=False, sort_keys=True)

__all__ = ['anomaly', 'cfg', 'codec', 'ingest', 'mining', 'pipeline', 'synth']

from . import *

import logging
import sys

log = logging.getLogger()
_loghdl = logging.StreamHandler(sys.stderr)
_loghdl.setFormatter(logging.Formatter('%(asctime)s | %(levelname)-8s | %(lineno)04d | %(filename)s: %(message)s'))
log.addHandler(_loghdl)
log.setLevel(logging.WARNING)


def set_level(level):
    '''Set the root level from a config value ('DEBUG', 'info', 10...).

    Unknown values leave the level untouched.
    '''
    if isinstance(level, str) and not level.isdigit():
        level = level.upper()
    elif level is not None:
        level = int(level)
    try:
        log.setLevel(level)
    except (TypeError, ValueError) as e:
        log.warning('Ignoring log_level %r: %s' % (level, e))

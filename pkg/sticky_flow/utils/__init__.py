import logging
import os
import time
try:
    from statsd import StatsClient
    STATSD = 'STATSD_HOST' in os.environ
except ImportError:
    STATSD = False

if STATSD:
    statsd = StatsClient(host=os.environ['STATSD_HOST'],
                         port=int(os.environ.get('STATSD_PORT', 8125)))


def time_f(fun, metric, *args, **kwargs):
    start = time.perf_counter()
    ret = fun(*args, **kwargs)
    lapse = int((time.perf_counter() - start) * 1000)
    if STATSD:
        statsd.timing(metric, lapse)
    else:
        log = logging.getLogger(metric)
        log.info('timing: %d', lapse)
    return ret

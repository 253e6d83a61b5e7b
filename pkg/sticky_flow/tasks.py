"""
Batch work: seeded instance generation and thread-pool sweeps.

Results always come back in input order, so anything reduced from them is
independent of the thread count.
"""
from concurrent.futures import ThreadPoolExecutor
import logging

from sticky_flow.dynamics import ParticleInit

log = logging.getLogger('sticky_flow.tasks')


def seeded_instances(n, count, seed=0):
    """
    [(seed, ParticleInit), ...] for count consecutive seeds
    """
    log.info("Generating %d instances of %d particles from seed %d",
             count, n, seed)
    return [(seed + k, ParticleInit.random(n, seed + k))
            for k in range(count)]


def sweep(fun, items, threads=1):
    """
    [fun(item) for item in items], spread over a thread pool when
    threads > 1
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fun(item) for item in items]
    log.debug("Sweeping %d items over %d threads", len(items), threads)
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fun, items))

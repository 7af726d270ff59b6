"""Running an experiment over its sweep points."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor

from mtlab.conf import setting
from mtlab.exceptions import ConfigError
from mtlab.hilbert.geometry import check_dimension
from mtlab.lab.config import ExperimentConfig
from mtlab.lab.experiments import EXPERIMENTS, Experiment, Point
from mtlab.lab.results import PointResult, RunResult


logger = logging.getLogger(__name__)


def _measure(exp: Experiment, config: ExperimentConfig, point: Point) -> PointResult:
    start = time.perf_counter()
    exp.measure(config, point)
    seconds = time.perf_counter() - start
    logger.info("%s [%s]: %d rows in %.2fs", exp.name, point.label, len(point.rows), seconds)
    return point.result(seconds)


def run_experiment(config: ExperimentConfig, workers: int | None = None) -> RunResult:
    """Measure every sweep point, up to ``workers`` at a time.

    Points are independent; their results are merged in sweep order so the
    output does not depend on the worker count.
    """
    try:
        exp = EXPERIMENTS[config.experiment]
    except KeyError:
        raise config.error(f"unknown experiment {config.experiment!r}", 'experiment') from None
    check_dimension(config.geometry.total_dim)
    workers = setting('MTLAB_WORKERS') if workers is None else workers
    if workers < 1:
        raise ConfigError("at least one worker is needed")

    points = exp.points(config)
    if not points:
        raise config.error("the sweep has no points", 'sweep')
    logger.info("running %s (%s) over %d points", config.name, exp.name, len(points))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_measure, exp, config, p) for p in points]
        results = [f.result() for f in futures]
    if exp.summarize is not None:
        results += [s.result() for s in exp.summarize(config, results)]

    run = RunResult(config.experiment, config.name, config.config_hash, config.to_json(), results)
    for row in run.failures:
        logger.warning("%s [%s]: %s %s %s failed (margin %.3e)",
                       config.name, row.point, row.quantity, row.relation, row.bound, row.margin)
    return run

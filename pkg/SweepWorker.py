"""! @brief This module contains the 'SweepWorker' process """
##
# @file SweepWorker.py
#
# @brief Evaluates independent sweep points in separate processes. Jobs are
#        (index, point) tuples on the in-queue, results are
#        (index, result, exception) tuples on the shared result queue.
#
import queue
import pickle
import logging
import multiprocessing

from Errors import QndError
from QndProcess import QndProcess

logger = logging.getLogger(__name__)

_STOP = None


def _portable(error):
    """! The exception itself when it survives pickling, a QndError otherwise
    """
    try:
        pickle.loads(pickle.dumps(error))
        return error
    except Exception:
        return QndError("%s: %s" % (type(error).__name__, error))


class SweepWorker(QndProcess):
    """! The 'SweepWorker' pulls jobs from its in-queue and applies 'function' to them
    """

    def __init__(self, function, in_q, result_q):
        """! Initializes the worker
        @param function  Picklable module-level callable taking one point
        @param in_q      Shared job queue
        @param result_q  Shared result queue
        """
        super().__init__()
        self.set_process_param("function", function)
        self.set_process_param("in_q", in_q)
        self.set_process_param("result_q", result_q)

    @staticmethod
    def run(function, in_q, result_q, parent, stopped, done):
        """! Static method, processes jobs until a stop marker arrives
        """
        while stopped.value == 0:
            try:
                job = in_q.get(timeout=0.1)
            except queue.Empty:
                continue
            if job is _STOP:
                break
            index, point = job
            try:
                result_q.put((index, function(point), None))
            except Exception as e:
                logger.error("Sweep point %i failed: %s" % (index, e))
                result_q.put((index, None, _portable(e)))
        logger.debug("Sweep worker stopped")


def run_points(function, points, threads=1):
    """! Evaluates function(point) for every point
    @param function  Module-level callable
    @param points    List of inputs
    @param threads   Worker processes, 1 evaluates inline
    @return Results in input order
    """
    points = list(points)
    if threads <= 1 or len(points) <= 1:
        return [function(p) for p in points]

    in_q = multiprocessing.Queue()
    result_q = multiprocessing.Queue()
    workers = [SweepWorker(function, in_q, result_q) for _ in range(min(threads, len(points)))]
    for index, point in enumerate(points):
        in_q.put((index, point))
    for _ in workers:
        in_q.put(_STOP)

    results = {}
    errors = []
    try:
        for w in workers:
            w.start()
        while len(results) + len(errors) < len(points):
            try:
                index, result, error = result_q.get(timeout=0.5)
            except queue.Empty:
                if all(w.isDone() for w in workers):
                    raise QndError("Sweep workers exited (%i failed) with %i of %i points missing"
                            % (sum(w.isFailed() for w in workers),
                               len(points) - len(results) - len(errors), len(points)))
                continue
            if error is not None:
                errors.append((index, error))
            else:
                results[index] = result
    finally:
        for w in workers:
            w.join(timeout=1.0)
            if not w.isDone():
                w.stop()

    if errors:
        raise min(errors, key=lambda e: e[0])[1]
    return [results[i] for i in range(len(points))]

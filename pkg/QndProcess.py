"""! @brief This file contains the 'QndProcess' """
##
# @file QndProcess.py
#
# @brief Base class of the sweep workers and the renderer.
#        A subclass registers its queues and callables with
#        'set_process_param' and implements the static 'run' method. 'run'
#        is called in the child process with every registered parameter
#        plus 'parent', 'stopped' and 'done'. 'stopped' asks the loop to
#        end, 'done' is raised by the base class once 'run' has returned.
#
import time
import signal
import logging
import multiprocessing
import multiprocessing.queues

from Utils import get_config

logger = logging.getLogger(__name__)


def _drain(q):
    """! Empties a queue so that its feeder thread can exit """
    try:
        while not q.empty():
            q.get_nowait()
    except Exception:
        pass


class QndProcess(object):
    def __init__(self):
        self._stopped = multiprocessing.Value('i', 0)
        self._done = multiprocessing.Value('i', 0)
        self._failed = multiprocessing.Value('i', 0)
        self._process = None
        self._process_params = {}
        self._started = False

    @property
    def name(self):
        return self.__class__.__name__

    def set_process_param(self, name, value):
        if name in ("parent", "stopped", "done"):
            raise ValueError("'%s' is reserved for the process base class" % (name,))
        self._process_params[name] = value

    def isDone(self):
        return self._done.value == 1

    def isFailed(self):
        """! True when 'run' ended with an exception """
        return self._failed.value == 1

    def start(self):
        args = dict(self._process_params)
        args.update(parent=self.__class__, stopped=self._stopped, done=self._done)
        self._process = multiprocessing.Process(target=QndProcess._main, args=(args, self._failed),
                name=self.name, daemon=True)
        self._process.start()
        self._started = True
        logger.debug("%s started as pid %s" % (self.name, self._process.pid))

    def join(self, timeout=None):
        if self._started:
            self._process.join(timeout)

    def stop(self):
        """! Raises the stop flag, waits WORKER_JOIN_TIMEOUT seconds and
             terminates the process if it is still running
        """
        self._stopped.value = 1
        if not self._started:
            return
        timeout = get_config("WORKER_JOIN_TIMEOUT")
        deadline = time.time() + timeout
        while not self.isDone() and time.time() < deadline:
            time.sleep(0.01)
        if not self.isDone():
            logger.warning("%s did not stop within %.1fs, terminating it" % (self.name, timeout))
            self._process.terminate()
        for value in self._process_params.values():
            if isinstance(value, multiprocessing.queues.Queue):
                _drain(value)

    @staticmethod
    def run(**kwargs):
        raise NotImplementedError("QndProcess subclasses implement 'run'")

    @staticmethod
    def _main(args, failed):
        # Ctrl-C is handled by the parent, which stops its workers
        signal.signal(signal.SIGINT, signal.SIG_IGN)
        try:
            args["parent"].run(**args)
        except Exception:
            failed.value = 1
            logger.exception("%s failed" % (args["parent"].__name__,))
        finally:
            args["stopped"].value = 1
            args["done"].value = 1

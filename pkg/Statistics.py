"""! @brief This module keeps track of integration statistics. """
##
# @file Statistics.py
#
# @brief 'StepStatistics' describes the step-size audit of one propagation,
#        'Statistics' accumulates the work done by the whole process and is
#        logged when a scenario finishes.
#
import logging
from dataclasses import dataclass, asdict

logger = logging.getLogger(__name__)


@dataclass
class StepStatistics(object):
    """! Step accounting of a single propagation.

    'accepted' counts the steps of the run whose samples are reported,
    'rejected' the steps of runs discarded by the step-size audit and
    'max_local_error' the largest observable difference between the
    reported run and its audit run.
    """
    accepted: int = 0
    rejected: int = 0
    max_local_error: float = 0.0
    step: float = 0.0
    refinements: int = 0

    def as_dict(self):
        return asdict(self)


class Statistics(object):
    """! The 'Statistics' class counts the work of all propagations in this process.
    """

    def __init__(self):
        """! Initializes the statistics object
        """
        self.resetStatistics()

    def addPropagation(self, steps, rhs_evaluations):
        """! Records a finished single-mode propagation
        @param steps            RK4 steps taken, including audit runs
        @param rhs_evaluations  Master equation right-hand sides evaluated
        """
        self._propagations += 1
        self._steps += steps
        self._rhsEvaluations += rhs_evaluations

    def addRefinement(self):
        """! Increases the step-refinement counter
        """
        self._refinements += 1

    def addMultimodeRun(self, steps):
        """! Records a finished wave-packet propagation
        @param steps  RK4 steps taken
        """
        self._multimodeRuns += 1
        self._multimodeSteps += steps

    def readStatistics(self):
        """! Returns the counters as a dictionary
        """
        return {
            "propagations": self._propagations,
            "steps": self._steps,
            "rhs_evaluations": self._rhsEvaluations,
            "refinements": self._refinements,
            "multimode_runs": self._multimodeRuns,
            "multimode_steps": self._multimodeSteps,
        }

    def logStatistics(self):
        """! Writes the counters to the log
        """
        s = self.readStatistics()
        logger.info("Propagations: %i (%i steps, %i rhs evaluations, %i refinements), multimode runs: %i (%i steps)"
                % (s["propagations"], s["steps"], s["rhs_evaluations"], s["refinements"],
                   s["multimode_runs"], s["multimode_steps"]))

    def resetStatistics(self):
        """! Resets all counters
        """
        self._propagations = 0
        self._steps = 0
        self._rhsEvaluations = 0
        self._refinements = 0
        self._multimodeRuns = 0
        self._multimodeSteps = 0


__stats = None
def getStatistics():
    """! Returns the process wide statistics object
    @return The statistics instance
    """
    global __stats
    if __stats is None:
        __stats = Statistics()

    return __stats

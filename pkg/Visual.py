"""! @brief This module contains the 'Visual' module to render result maps """
##
# @file Visual.py
#
# @brief Uses opencv to render Wigner functions and phase maps as PNG images
#
import time
import logging
import multiprocessing

import cv2
import numpy as np

from QndProcess import QndProcess

logger = logging.getLogger(__name__)

# Pixels per grid point of the rendered maps
PIXEL_SCALE = 4
NAN_COLOR = (128, 128, 128)


def to_image(values, lo=None, hi=None):
    """! Colour-maps a real matrix, NaN entries are drawn grey
    @param values  Real matrix, values[i, j] drawn at column i and row j from the bottom
    @param lo, hi  Colour range, symmetric around zero by default
    @return BGR uint8 image
    """
    values = np.asarray(values, dtype=float)
    finite = np.isfinite(values)
    if lo is None or hi is None:
        bound = float(np.max(np.abs(values[finite]))) if finite.any() else 1.0
        bound = bound or 1.0
        lo, hi = -bound, bound
    scaled = np.zeros(values.shape)
    scaled[finite] = (np.clip(values[finite], lo, hi) - lo) / (hi - lo)
    gray = (255.0 * scaled).astype(np.uint8)
    img = cv2.applyColorMap(gray, cv2.COLORMAP_JET)
    img[~finite] = NAN_COLOR
    # first axis horizontal, second axis pointing up
    img = np.ascontiguousarray(np.flipud(np.transpose(img, (1, 0, 2))))
    return cv2.resize(img, (img.shape[1] * PIXEL_SCALE, img.shape[0] * PIXEL_SCALE),
            interpolation=cv2.INTER_NEAREST)


def render_map(path, values, lo=None, hi=None):
    """! Writes a colour-mapped matrix as PNG
    """
    img = to_image(values, lo, hi)
    if not cv2.imwrite(path, img):
        raise IOError("Could not write '%s'" % (path,))
    logger.debug("Rendered '%s'" % (path,))
    return img


class Visual(QndProcess):
    """! The 'Visual' module uses a separate process to render maps.
         It uses an in-queue to receive (path, values, lo, hi) items
    """

    def __init__(self):
        """! Initializes the renderer
        """
        super().__init__()
        self._inQueue = multiprocessing.Queue(maxsize=20)
        self.set_process_param("in_q", self._inQueue)

    def getInQueue(self):
        """! Returns the input queue
        """
        return self._inQueue

    def render(self, path, values, lo=None, hi=None):
        """! Queues a map for rendering
        """
        self._inQueue.put((path, np.asarray(values, dtype=float), lo, hi))

    def finish(self):
        """! Queues the stop marker and waits for all images to be written
        """
        self._inQueue.put(None)
        self.join()

    @staticmethod
    def run(in_q, parent, stopped, done):
        """! Static method, renders queued maps until the stop marker arrives
        """
        count = 0
        while stopped.value == 0:
            if in_q.empty():
                time.sleep(0.01)
                continue
            item = in_q.get()
            if item is None:
                break
            path, values, lo, hi = item
            try:
                render_map(path, values, lo, hi)
                count += 1
            except Exception as e:
                logger.error("Rendering '%s' failed: %s" % (path, e))

        logger.info("Renderer stopped after %i images" % (count,))

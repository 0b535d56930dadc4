# # -----------------------------------------------------------------------------
# # Utility File Containing Helper Functions
# # Author: ehlink developers
# # Date Created: 18-10-2026
# # -----------------------------------------------------------------------------

import logging
import os
import pathlib

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


class Utils:
    def __init__(self):
        pass

    @staticmethod
    def initLogging(isEnabled, verbose=False):
        # console logging; disabled means nothing below CRITICAL gets through
        if not isEnabled:
            level = logging.CRITICAL + 1
        elif verbose:
            level = logging.DEBUG
        else:
            level = logging.INFO
        logging.basicConfig(level=level, format=LOG_FORMAT, force=True)

    @staticmethod
    def ensureFolderExists(folderPath):
        if folderPath and not os.path.exists(folderPath):
            os.makedirs(folderPath)

    @staticmethod
    def parentFolder(filePath):
        return os.path.dirname(os.path.abspath(filePath))

    @staticmethod
    def splitNameFromExtension(filePath):
        name = pathlib.Path(filePath).stem
        extension = "".join([s for s in pathlib.Path(filePath).suffixes if " " not in s])
        return name, extension

    @staticmethod
    def siblingPath(filePath, suffix):
        # same folder and stem; suffix replaces the extension
        name, _ = Utils.splitNameFromExtension(filePath)
        return os.path.join(os.path.dirname(filePath), name + suffix)

    @staticmethod
    def parseFloatList(text):
        try:
            return [float(value) for value in text.split(",") if value.strip()]
        except ValueError as e:
            raise ValueError(f"expected comma separated numbers, got '{text}'") from e

__author__ = "Mehdi Samsami"
__version__ = "0.1.0"

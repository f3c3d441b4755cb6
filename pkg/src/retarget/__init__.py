"""retarget: convert a MATLAB-style algorithm subset once into a portable
C++ dialect, stage it for any number of targets, and validate that the
converted heart-rate pipeline matches a reference interpreter."""

__version__ = "0.1.0"

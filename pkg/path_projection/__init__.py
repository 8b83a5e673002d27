"""Project a mobile robot's navigation intent onto the floor.

A planned path is resampled into evenly spaced arrows ending in a
destination circle, the markers are projected through a calibrated
projector model, and the result is rasterized into the frame the projector
displays.
"""

__version__ = "1.0.0"

"""
DwellRec

Dwell-time-injected neural news recommendation: baseline attention user
encoders, the DweW and DweA dwell injection strategies, and the robustness
experiments around missing dwell telemetry.
"""

__version__ = "0.1.0"

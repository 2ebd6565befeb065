"""Real-time meeting feedback-channel engine.

Event-sourced sessions for four feedback mechanisms (participation mirror,
listening-channel switchboard, pedal-controlled evaluation balls, and
video-conference feedback dots), a scripted-agent simulator, and metrics
over recorded session logs.
"""

__version__ = "0.1.0"

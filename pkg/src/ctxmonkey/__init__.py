"""Contextual fuzz testing for Android apps on the emulator.

Generates seeded contextual-event scenarios, injects them per activity while
fuzzing text fields, and correlates the app's W/E/F logcat output with the
injected events.
"""

__version__ = "0.1.0"

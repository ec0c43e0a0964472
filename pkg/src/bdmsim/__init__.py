"""Discrete-event 802.11b DCF simulator for VoIP with bandwidth/data-rate moderation."""

__version__ = "0.1.0"

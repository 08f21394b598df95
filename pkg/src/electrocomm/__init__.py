"""Underwater electric-field communication: channel model, 2FSK modem, neural demodulator, BER lab."""

__version__ = "0.1.0"

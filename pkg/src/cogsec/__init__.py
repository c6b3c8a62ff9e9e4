"""Secure multicast beamforming with jamming noise for cooperative cognitive radio."""

__version__ = "0.1.0"

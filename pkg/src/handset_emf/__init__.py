"""Handset antenna topology, MIMO capacity and RF exposure simulation."""

__version__ = '0.1.0'

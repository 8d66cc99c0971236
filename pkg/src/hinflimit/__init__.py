"""Infimal H-infinity levels of SISO output-feedback problems."""

"""Tests package for laguerre-vcm."""

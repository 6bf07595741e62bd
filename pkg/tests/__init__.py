"""Tests for the EnQSP simulator and experiment runner."""

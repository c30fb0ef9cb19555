"""Tests for the zevrpp package."""

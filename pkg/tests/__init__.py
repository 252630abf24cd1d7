"""Test suite for soft2hard."""

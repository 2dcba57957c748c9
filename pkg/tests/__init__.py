"""Tests for the ratio-allocator package."""

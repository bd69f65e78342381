"""Minimal project layout with no application messages yet."""

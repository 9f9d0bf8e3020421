"""Bundled experiment presets"""

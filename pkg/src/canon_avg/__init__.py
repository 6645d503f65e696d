"""Canonical averaging for amplitude equations with discrete spectra."""

"""
Built-in verification checks.

All checks are registered when this package is imported.
"""

from noisy_choice.checks import accuracy_checks, analysis_checks, core_checks, privacy_checks

__all__ = ["accuracy_checks", "analysis_checks", "core_checks", "privacy_checks"]

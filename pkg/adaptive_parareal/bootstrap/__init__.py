from adaptive_parareal.bootstrap.validation import validate_run_config, validate_settings

__all__ = [
    "validate_run_config",
    "validate_settings",
]

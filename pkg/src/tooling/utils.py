# Path: /src/tooling/utils.py
# Helper functions for reading and writing run configuration and manifest files
import json
import os


class ConfigurationError(ValueError):
    def __init__(self, path, reason):
        self.path = path
        self.message = f"{path}: {reason}"
        super().__init__(self.message)


# Helper function to resolve a user-supplied path against the working directory
def resolve_file_path(file_path):
    return os.path.abspath(os.path.expanduser(file_path))


def read_manifest_json(file_path) -> dict:
    """Parse a JSON object from ``file_path``; any other top-level value is rejected."""
    try:
        with open(file_path, 'r') as config_file:
            data = json.load(config_file)
    except json.JSONDecodeError as e:
        raise ConfigurationError(file_path, f"invalid JSON at line {e.lineno} column {e.colno}")
    except (PermissionError, IsADirectoryError) as e:
        raise ConfigurationError(file_path, f"cannot be read ({e.strerror})")
    if not isinstance(data, dict):
        raise ConfigurationError(file_path, f"expected a JSON object, got {type(data).__name__}")
    return data


def load_configuration(file_path: str) -> dict:
    config_file_path = resolve_file_path(file_path)

    if not os.path.exists(config_file_path):
        raise FileNotFoundError(f"Configuration file not found: {config_file_path}")

    return read_manifest_json(config_file_path)


# Function to save configuration data to a specified file path.
def save_configuration(file_path, config_data):
    try:
        with open(file_path, 'w') as config_file:
            json.dump(config_data, config_file, indent=2, sort_keys=True)
    except (FileNotFoundError, PermissionError) as e:
        raise ConfigurationError(file_path, f"cannot be opened for writing ({e.strerror})")
    except TypeError as e:
        raise ConfigurationError(file_path, f"data is not JSON serializable ({e})")


def parse_seeds(text: str) -> list:
    """Parse a comma separated seed list such as ``0,1,2``."""
    try:
        seeds = [int(part) for part in text.split(',') if part.strip()]
    except ValueError:
        raise ValueError(f"Invalid seed list: {text!r}")
    if not seeds:
        raise ValueError("Seed list is empty")
    if len(set(seeds)) != len(seeds):
        raise ValueError(f"Seed list has duplicates: {text!r}")
    return seeds


def parse_floats(text: str) -> tuple:
    try:
        return tuple(float(part) for part in text.split(',') if part.strip())
    except ValueError:
        raise ValueError(f"Invalid number list: {text!r}")

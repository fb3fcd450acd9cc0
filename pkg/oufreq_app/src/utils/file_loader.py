"""
File loader utilities for OUFreq.
Handles JSON configs, CSV tables and the provenance header written on every output.
"""

import csv  # For CSV table output
import hashlib  # For config hashes used in provenance lines
import json  # For JSON file parsing
import logging  # For application logging
import os  # For file system operations
from typing import Dict, Any, Iterable, List, Optional, Sequence

# Set up logger for this module
logger = logging.getLogger(__name__)

# Directory holding the packaged configuration files
PACKAGE_CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.dirname(
    os.path.abspath(__file__)))), 'config')

# Float format giving 17 significant digits (round-trips doubles)
FLOAT_FORMAT = '%.17g'


def config_hash(data: Dict[str, Any]) -> str:
    """
    Hash a configuration dictionary in a key-order independent way.

    Args:
        data: JSON-serialisable configuration

    Returns:
        str: Hex SHA-256 digest of the canonical JSON text

    Example:
        >>> config_hash({'b': 1, 'a': 2}) == config_hash({'a': 2, 'b': 1})
        True
    """
    canonical = json.dumps(data, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def provenance_line(digest: str, seed: Optional[int]) -> str:
    """Comment line recorded at the top of every output file."""
    return f"# config_sha256={digest} seed={seed}"


def _strip_comment_lines(text: str) -> str:
    """Drop leading '#' lines so provenance-headed JSON files still parse."""
    lines = text.splitlines()
    while lines and lines[0].lstrip().startswith('#'):
        lines.pop(0)
    return "\n".join(lines)


def load_json(filename: str) -> Dict[str, Any]:
    """
    Load and parse a JSON file, returning an empty dict if it cannot be read.

    Leading comment lines (provenance headers) are skipped.

    Args:
        filename: Name of the JSON file, with or without extension

    Returns:
        Dict[str, Any]: Parsed JSON data or empty dict on failure

    Example:
        >>> config = load_json('oufreq_app/config/experiments/default')
        >>> config['model']['theta']
        1.0
    """
    # Add .json extension if not present
    if not filename.endswith('.json'):
        filename = f"{filename}.json"

    # Try the path as given, then relative to the packaged config directory
    possible_paths = [
        filename,
        os.path.join(PACKAGE_CONFIG_DIR, filename),
    ]

    for file_path in possible_paths:
        try:
            with open(file_path, 'r', encoding='utf-8') as file:
                logger.info(f"Loading JSON file: {file_path}")
                data = json.loads(_strip_comment_lines(file.read()))
                logger.debug(f"Successfully loaded JSON data from {file_path}")
                return data if isinstance(data, dict) else {}
        except FileNotFoundError:
            continue  # Try next path if file not found
        except json.JSONDecodeError as e:
            logger.error(f"Error decoding JSON from {file_path}: {str(e)}")
            return {}
        except OSError as e:
            logger.error(f"Unexpected error loading {file_path}: {str(e)}")
            return {}

    logger.warning(f"JSON file not found in any location: {filename}")
    return {}


def save_json(data: Dict[str, Any], filename: str, indent: int = 2,
              header: Optional[str] = None) -> bool:
    """
    Save data to a JSON file, optionally preceded by a comment line.

    Args:
        data: Data to save as JSON
        filename: Name of the file to save to, with or without extension
        indent: Indentation level for JSON formatting (default: 2)
        header: Optional comment line (e.g. a provenance line) written first

    Returns:
        bool: True if successful, False otherwise
    """
    if not filename.endswith('.json'):
        filename = f"{filename}.json"

    try:
        directory = os.path.dirname(filename)
        if directory:
            os.makedirs(directory, exist_ok=True)

        with open(filename, 'w', encoding='utf-8') as file:
            if header:
                file.write(header.rstrip("\n") + "\n")
            json.dump(data, file, indent=indent, ensure_ascii=False, allow_nan=True)
            file.write("\n")
            logger.info(f"Successfully saved JSON data to {filename}")
            return True
    except (OSError, TypeError, ValueError) as e:
        logger.error(f"Error saving JSON data to {filename}: {str(e)}")
        return False


def _format_cell(value: Any) -> Any:
    """Render floats with full precision; leave other values to the csv module."""
    if isinstance(value, bool) or value is None:
        return "" if value is None else str(value).lower()
    if isinstance(value, float):
        return FLOAT_FORMAT % value
    try:
        import numpy as np  # Local import keeps this module light for config-only use
        if isinstance(value, np.floating):
            return FLOAT_FORMAT % float(value)
        if isinstance(value, np.integer):
            return int(value)
    except ImportError:  # pragma: no cover - numpy is a hard dependency
        pass
    return value


def write_csv(filename: str, columns: Sequence[str], rows: Iterable[Sequence[Any]],
              header: Optional[str] = None) -> bool:
    """
    Write a table to CSV with an optional leading comment line.

    Args:
        filename: Output path
        columns: Column names (written as the first non-comment row)
        rows: Iterable of row sequences aligned with columns
        header: Optional comment line written before the column names

    Returns:
        bool: True if successful, False otherwise

    Example:
        >>> write_csv('out/path.csv', ['t', 'X'], [(0.0, 0.0)], '# config_sha256=... seed=1')
        True
    """
    try:
        directory = os.path.dirname(filename)
        if directory:
            os.makedirs(directory, exist_ok=True)

        count = 0
        with open(filename, 'w', encoding='utf-8', newline='') as file:
            if header:
                file.write(header.rstrip("\n") + "\n")
            writer = csv.writer(file)
            writer.writerow(list(columns))
            for row in rows:
                writer.writerow([_format_cell(value) for value in row])
                count += 1
        logger.info(f"Wrote {count} rows to {filename}")
        return True
    except OSError as e:
        logger.error(f"Error writing CSV to {filename}: {str(e)}")
        return False


def read_csv(filename: str) -> List[Dict[str, str]]:
    """
    Read a CSV written by write_csv, skipping comment lines.

    Args:
        filename: Path to the CSV file

    Returns:
        List[Dict[str, str]]: One dict per data row, empty list on failure
    """
    try:
        with open(filename, 'r', encoding='utf-8', newline='') as file:
            lines = [line for line in file if not line.startswith('#')]
        return list(csv.DictReader(lines))
    except OSError as e:
        logger.error(f"Error reading CSV from {filename}: {str(e)}")
        return []


def find_file_in_directories(filename: str, directories: list) -> Optional[str]:
    """
    Search for a file in multiple directories.

    Args:
        filename: Name of the file to find
        directories: List of directories to search

    Returns:
        Optional[str]: Full path to the file if found, None otherwise
    """
    for directory in directories:
        file_path = os.path.join(directory, filename)
        if os.path.exists(file_path):
            logger.info(f"Found file {filename} in {directory}")
            return file_path

    logger.warning(
        f"File {filename} not found in any of the specified directories")
    return None


def load_config_file(config_name: str) -> Dict[str, Any]:
    """
    Load an experiment configuration by path or by packaged name.

    Args:
        config_name: A path, or the name of a file under config/experiments

    Returns:
        Dict[str, Any]: Configuration data, empty dict if not found

    Example:
        >>> default = load_config_file('default')
        >>> default['model']['T']
        10.0
    """
    name = config_name if config_name.endswith('.json') else f"{config_name}.json"
    path = find_file_in_directories(name, [
        '',  # As given (absolute or relative to the working directory)
        os.path.join(PACKAGE_CONFIG_DIR, 'experiments'),
    ])
    if path is None:
        logger.warning(f"Configuration file {config_name} not found, using empty config")
        return {}
    config_data = load_json(path)
    if config_data:
        logger.info(f"Loaded configuration from: {path}")
    return config_data


def load_schema(schema_name: str = 'experiment_config.schema') -> Dict[str, Any]:
    """Load a published JSON schema from config/schema."""
    return load_json(os.path.join(PACKAGE_CONFIG_DIR, 'schema', schema_name))

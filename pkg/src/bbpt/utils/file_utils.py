"""File utility functions for the application."""

import asyncio
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, TextIO

import aiofiles
import yaml

from ..errors import ConfigError
from .constants import LOG_SUFFIX


def ensure_directory(path: Path) -> None:
    """Create directory if it doesn't exist."""
    path.mkdir(parents=True, exist_ok=True)


def write_json(data: Dict[str, Any], file_path: Path) -> None:
    """Write data to a JSON file with proper formatting."""
    ensure_directory(file_path.parent)
    with open(file_path, 'w', encoding='utf-8') as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
        f.write('\n')


def read_json(file_path: Path) -> Dict[str, Any]:
    """Read data from a JSON file."""
    with open(file_path, 'r', encoding='utf-8') as f:
        return json.load(f)


def write_text(text: str, file_path: Path) -> None:
    ensure_directory(file_path.parent)
    with open(file_path, 'w', encoding='utf-8') as f:
        f.write(text)


def read_yaml(file_path: Path) -> Dict[str, Any]:
    """Parse a YAML mapping document."""
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse YAML file '{file_path}': {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"'{file_path}' must hold a mapping at top level")
    return data


def write_yaml(data: Dict[str, Any], file_path: Path) -> None:
    ensure_directory(file_path.parent)
    with open(file_path, 'w', encoding='utf-8') as f:
        yaml.safe_dump(data, f, sort_keys=False)


def list_node_logs(log_dir: Path) -> List[Path]:
    """Node log files in ``log_dir``, sorted by name."""
    if not log_dir.is_dir():
        raise FileNotFoundError(f"log directory '{log_dir}' does not exist")
    return sorted(p for p in log_dir.iterdir() if p.is_file() and p.suffix == LOG_SUFFIX)


def open_node_log(path: Path) -> TextIO:
    # Undecodable bytes survive as lone surrogates and the line parser rejects them.
    return open(path, 'r', encoding='utf-8', errors='surrogateescape')


async def _write_lines(path: Path, lines: Iterable[str]) -> Path:
    async with aiofiles.open(path, 'w', encoding='utf-8') as f:
        await f.write(''.join(f"{line}\n" for line in lines))
    return path


async def write_node_logs(logs: Mapping[str, Iterable[str]], out_dir: Path) -> List[Path]:
    """Write one ``<node>.log`` per node concurrently."""
    ensure_directory(out_dir)
    return list(await asyncio.gather(*(
        _write_lines(out_dir / f"{node}{LOG_SUFFIX}", lines)
        for node, lines in sorted(logs.items())
    )))

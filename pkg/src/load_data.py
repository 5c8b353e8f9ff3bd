"""
Data loading module for the sym-cube lab.
Coefficient cache files and the modular-forms database client.
"""

import logging
import os
import re
import tempfile
from pathlib import Path
from typing import Dict, Any, List, Optional, Tuple

import requests

try:
    from .errors import CacheMissError, IntegrityError, InsufficientCoefficientsError, NetworkError
    from .hecke import (BUILTIN_WEIGHTS, DEFAULT_MAX_TERMS, CoefficientTable, EigenformSpec,
                        builtin_coefficients, validate_table)
except ImportError:
    from errors import CacheMissError, IntegrityError, InsufficientCoefficientsError, NetworkError
    from hecke import (BUILTIN_WEIGHTS, DEFAULT_MAX_TERMS, CoefficientTable, EigenformSpec,
                       builtin_coefficients, validate_table)

logger = logging.getLogger(__name__)

CACHE_MAGIC = "SYMCUBE-COEFF"
CACHE_VERSION = "v1"
CACHE_SUFFIX = ".coeffs"

LABEL_PATTERN = re.compile(r'^(\d+)\.(\d+)\.([a-z]+)\.([a-z]+)$')


def parse_label(label: str) -> Tuple[int, int]:
    """
    Extract (level, weight) from a newform label.

    Examples:
        "1.12.a.a" -> (1, 12)
        "1.16.a.a" -> (1, 16)
    """
    match = LABEL_PATTERN.match(label)
    if not match:
        raise ValueError(f"Unrecognised newform label: {label}")
    return int(match.group(1)), int(match.group(2))


def cache_path(cache_dir, label: str) -> Path:
    """Cache file location for a label."""
    return Path(cache_dir) / f"{label}{CACHE_SUFFIX}"


def write_cache_file(path, table: CoefficientTable) -> None:
    """
    Write a coefficient table atomically.

    Format: header `SYMCUBE-COEFF v1 <label> <weight> <level> <N_max>` then
    a(1), ..., a(N_max), one decimal integer per line.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    spec = table.spec
    header = f"{CACHE_MAGIC} {CACHE_VERSION} {spec.label} {spec.weight} {spec.level} {table.N_max}\n"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, 'w') as f:
            f.write(header)
            f.write("\n".join(str(c) for c in table.a[1:]))
            f.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    logger.info(f"wrote {table.N_max} coefficients of {spec.label} to {path}")


def read_cache_file(path) -> CoefficientTable:
    """
    Read a coefficient cache file.

    Raises:
        FileNotFoundError: If the file doesn't exist
        IntegrityError: If the header or body is malformed
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Cache file not found: {path}")

    with open(path, 'r') as f:
        lines = f.read().split("\n")
    header = lines[0].split()
    if len(header) != 6 or header[0] != CACHE_MAGIC or header[1] != CACHE_VERSION:
        raise IntegrityError(f"{path}: bad cache header {lines[0]!r}")
    label = header[2]
    try:
        weight, level, N_max = int(header[3]), int(header[4]), int(header[5])
        body = [int(line) for line in lines[1:] if line.strip()]
    except ValueError as e:
        raise IntegrityError(f"{path}: non-integer entry ({e})")
    if len(body) != N_max:
        raise IntegrityError(f"{path}: header promises {N_max} coefficients, found {len(body)}")
    return CoefficientTable(EigenformSpec(weight, label, level), (0,) + tuple(body))


def fetch_newform_coefficients(label: str, settings: Dict[str, Any]) -> List[int]:
    """
    GET the q-expansion coefficients of a newform from the database API.

    Args:
        label: Newform label
        settings: `database` section of the configuration (plus `offline`)

    Returns:
        [a(1), a(2), ...] as Python ints

    Raises:
        NetworkError: On transport failure, HTTP error or offline mode
        IntegrityError: If the response lacks the expected fields
    """
    if settings.get('offline', False):
        raise NetworkError(f"offline mode: refusing to fetch {label}")

    url = f"{settings['base_url'].rstrip('/')}/{settings['endpoint'].strip('/')}/"
    params = dict(settings.get('params', {}))
    params[settings.get('label_param', 'label')] = label
    try:
        response = requests.get(url, params=params, timeout=settings.get('timeout', 30))
        response.raise_for_status()
        payload = response.json()
    except requests.RequestException as e:
        raise NetworkError(f"database request for {label} failed: {e}")
    except ValueError as e:
        raise IntegrityError(f"database response for {label} is not JSON: {e}")

    records = payload.get(settings.get('data_field', 'data')) if isinstance(payload, dict) else None
    if not records:
        raise IntegrityError(f"database returned no record for {label}")
    coeffs = records[0].get(settings.get('coeff_field', 'traces'))
    if not isinstance(coeffs, list):
        raise IntegrityError(f"database record for {label} has no coefficient list")
    offset = int(settings.get('offset', 1))
    try:
        values = [int(c) for c in coeffs[offset:]]
    except (TypeError, ValueError):
        raise IntegrityError(f"database coefficients for {label} are not integers")
    logger.info(f"fetched {len(values)} coefficients of {label} from {url}")
    return values


def _cached_table(label: str, N_max: int, directories) -> Optional[CoefficientTable]:
    for directory in directories:
        if directory is None:
            continue
        path = cache_path(directory, label)
        if path.exists():
            table = read_cache_file(path)
            if table.N_max >= N_max:
                validate_table(table, N_max)
                return table.truncate(N_max)
    return None


def ingest_newform(label: str, N_max: int, cache_dir, settings: Dict[str, Any],
                   fixtures_dir=None) -> CoefficientTable:
    """
    Coefficients of a newform from cache, offline fixture or the database.

    Fetched coefficients are revalidated against the Hecke recursion before
    they are written to the cache.

    Raises:
        CacheMissError: Offline and no cache/fixture covers N_max
        NetworkError: Fetch failed
        IntegrityError: Cached or fetched data violates the recursion
        InsufficientCoefficientsError: Database returned fewer than N_max terms
    """
    cached = _cached_table(label, N_max, [cache_dir, fixtures_dir])
    if cached is not None:
        return cached
    if settings.get('offline', False):
        raise CacheMissError(f"offline mode and no cache for {label} with {N_max} terms in {cache_dir}")

    level, weight = parse_label(label)
    values = fetch_newform_coefficients(label, settings)
    if len(values) < N_max:
        raise InsufficientCoefficientsError(
            f"database has {len(values)} coefficients of {label}, need {N_max}")
    table = CoefficientTable(EigenformSpec(weight, label, level), (0,) + tuple(values[:N_max]))
    validate_table(table)
    write_cache_file(cache_path(cache_dir, label), table)
    return table


def load_coefficients(spec: EigenformSpec, N_max: int, cache_dir, settings: Dict[str, Any],
                      fixtures_dir=None, max_terms: int = DEFAULT_MAX_TERMS) -> CoefficientTable:
    """
    Cache-first coefficient resolution.

    A valid cache with enough terms is used as-is. Otherwise built-in weights
    are computed (and the cache extended, checking the old prefix), and other
    labels go through database ingestion.
    """
    cached = _cached_table(spec.label, N_max, [cache_dir, fixtures_dir])
    if cached is not None:
        logger.info(f"cache hit for {spec.label} ({N_max} terms)")
        return cached

    if spec.weight not in BUILTIN_WEIGHTS:
        return ingest_newform(spec.label, N_max, cache_dir, settings, fixtures_dir)

    table = builtin_coefficients(spec, N_max, max_terms)
    path = cache_path(cache_dir, spec.label)
    if path.exists():
        old = read_cache_file(path)
        if old.a[1:] != table.a[1:old.N_max + 1]:
            raise IntegrityError(f"{path}: cached prefix disagrees with recomputed coefficients")
    write_cache_file(path, table)
    return table

"""
Configuration loader for the sym-cube lab.
Loads and validates the YAML configuration file.
"""

import os
import math
import yaml
from pathlib import Path
from typing import Dict, Any

try:
    from .errors import ConfigurationError
except ImportError:
    from errors import ConfigurationError


DEFAULT_CONFIG_PATH = "config/symcube_config.yaml"

REQUIRED_SECTIONS = ['metadata', 'paths', 'database', 'runtime', 'afe',
                     'family', 'forms', 'experiment', 'grh']

CACHE_ENV_VAR = "SYMCUBE_CACHE"


def load_config(config_path: str = DEFAULT_CONFIG_PATH) -> Dict[str, Any]:
    """
    Load lab configuration from YAML file.

    Args:
        config_path: Path to the YAML configuration file

    Returns:
        Dictionary containing configuration data

    Raises:
        FileNotFoundError: If configuration file doesn't exist
        ConfigurationError: If the file is not valid YAML or fails validation
    """
    config_file = Path(config_path)

    if not config_file.exists():
        raise FileNotFoundError(f"Configuration file not found: {config_path}")

    with open(config_file, 'r') as f:
        try:
            config = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigurationError(f"Invalid YAML in {config_path}: {e}")

    if not isinstance(config, dict):
        raise ConfigurationError(f"Configuration root must be a mapping: {config_path}")

    # Validate required sections
    for section in REQUIRED_SECTIONS:
        if section not in config:
            raise ConfigurationError(f"Missing required configuration section: {section}")

    validate_config(config)
    return config


def validate_config(config: Dict[str, Any]) -> None:
    """
    Check the invariants every command relies on.

    Raises:
        ConfigurationError: On the first violated invariant
    """
    runtime = config['runtime']
    if int(runtime.get('workers', 1)) < 1:
        raise ConfigurationError("runtime.workers must be >= 1")
    if int(runtime.get('max_terms', 1)) < 1:
        raise ConfigurationError("runtime.max_terms must be >= 1")

    afe = config['afe']
    for key in ('A', 'c', 'c_alt', 'sigma0', 'step', 'height', 'grid_step', 'tail_tol'):
        if key not in afe:
            raise ConfigurationError(f"Missing afe setting: {key}")
        if not float(afe[key]) > 0:
            raise ConfigurationError(f"afe.{key} must be positive")

    family = config['family']
    modulus = int(family['modulus'])
    residue = int(family['residue'])
    if modulus < 4 or modulus % 4:
        raise ConfigurationError(f"family.modulus must be a positive multiple of 4, got {modulus}")
    if residue % 4 != 1:
        raise ConfigurationError(
            f"family.residue must be 1 mod 4 so that every member is fundamental, got {residue}")
    if math.gcd(residue, modulus) != 1:
        raise ConfigurationError(
            f"family.residue {residue} is not coprime to modulus {modulus}")
    if family.get('normalisation', 'D') not in ('D', 'family'):
        raise ConfigurationError("family.normalisation must be 'D' or 'family'")

    labels = [f['label'] for f in config['forms']]
    if len(set(labels)) != len(labels):
        raise ConfigurationError("forms must be pairwise distinct (duplicate label)")
    for form in config['forms']:
        weight = int(form['weight'])
        if weight < 12 or weight % 2:
            raise ConfigurationError(f"form {form['label']}: weight must be even and >= 12")

    ells = config['experiment'].get('ells', [])
    if any(float(ell) <= 0 for ell in ells):
        raise ConfigurationError("experiment.ells must be positive")

    if not 0 < float(config['grh']['epsilon']) < 0.5:
        raise ConfigurationError("grh.epsilon must lie in (0, 1/2)")


def get_cache_dir(config: Dict[str, Any]) -> Path:
    """
    Resolve the coefficient cache directory.

    Precedence: --cache-dir, then the SYMCUBE_CACHE environment variable,
    then paths.cache_dir.
    """
    if config['paths'].get('cache_dir_flag'):
        return Path(config['paths']['cache_dir_flag'])
    env_dir = os.environ.get(CACHE_ENV_VAR)
    if env_dir:
        return Path(env_dir)
    return Path(config['paths']['cache_dir'])


def get_output_dir(config: Dict[str, Any]) -> Path:
    """Directory that receives CSV/SVG/XLSX outputs."""
    return Path(config['paths']['output_dir'])


def get_afe_settings(config: Dict[str, Any]) -> Dict[str, float]:
    """Return the AFE constants as floats."""
    return {key: float(value) for key, value in config['afe'].items()}


def get_family_settings(config: Dict[str, Any]) -> Dict[str, Any]:
    """Residue, modulus and dyadic blocks of the discriminant family."""
    family = config['family']
    return {
        'residue': int(family['residue']),
        'modulus': int(family['modulus']),
        'blocks': [int(D) for D in family.get('blocks', [])],
        'normalisation': family.get('normalisation', 'D'),
    }


def get_database_settings(config: Dict[str, Any]) -> Dict[str, Any]:
    """Database client settings, with the offline flag folded in."""
    settings = dict(config['database'])
    settings['offline'] = bool(config['runtime'].get('offline', False))
    return settings


def apply_overrides(config: Dict[str, Any], args) -> Dict[str, Any]:
    """
    Apply command-line flag overrides onto a loaded configuration.

    Args:
        config: Configuration dictionary (modified in place)
        args: argparse namespace; attributes left at None are ignored

    Returns:
        The same configuration dictionary, re-validated
    """
    if getattr(args, 'cache_dir', None):
        config['paths']['cache_dir_flag'] = args.cache_dir
    if getattr(args, 'offline', False):
        config['runtime']['offline'] = True
    if getattr(args, 'threads', None) is not None:
        config['runtime']['workers'] = args.threads
    if getattr(args, 'terms', None) is not None:
        config['experiment']['terms'] = args.terms
    if getattr(args, 'residue', None) is not None:
        config['family']['residue'] = args.residue
    if getattr(args, 'modulus', None) is not None:
        config['family']['modulus'] = args.modulus
    if getattr(args, 'ell', None):
        config['experiment']['ells'] = [float(v) for v in args.ell.split(',')]
    if getattr(args, 'form', None):
        weight = getattr(args, 'weight', None)
        if weight is None:
            matches = [f for f in config['forms'] if f['label'] == args.form]
            if not matches:
                raise ConfigurationError(f"--form {args.form} needs --weight (not in config)")
            weight = matches[0]['weight']
        config['forms'] = [{'label': args.form, 'weight': int(weight)}]
    dmin = getattr(args, 'dmin', None)
    dmax = getattr(args, 'dmax', None)
    if dmin is not None:
        # dyadic blocks [D, 2D], [2D, 4D], ... whose upper ends 2D stay <= dmax
        upper = dmax if dmax is not None else 2 * dmin
        if dmin < 3 or upper < 2 * dmin:
            raise ConfigurationError("--dmin must be >= 3 and --dmax >= 2 * --dmin")
        blocks = []
        D = dmin
        while 2 * D <= upper:
            blocks.append(D)
            D *= 2
        config['family']['blocks'] = blocks
        config['grh']['D'] = dmin

    validate_config(config)
    return config


if __name__ == "__main__":
    # Test configuration loading
    try:
        config = load_config()
        print("✓ Configuration loaded successfully")
        print(f"✓ Version: {config['metadata']['version']}")
        print(f"✓ Forms configured: {[f['label'] for f in config['forms']]}")
        print(f"✓ Cache directory: {get_cache_dir(config)}")

    except Exception as e:
        print(f"✗ Error loading configuration: {e}")

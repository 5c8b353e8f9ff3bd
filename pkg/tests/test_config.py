"""
Tests for configuration loading and command-line overrides.
"""

import copy
import sys
from pathlib import Path
from types import SimpleNamespace

import pytest
import yaml

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from src import config_loader
from src.errors import ConfigurationError
from src.lvalue import AfeSettings
from src.moments import ExperimentConfig, sweep_terms

CONFIG_PATH = Path(__file__).parent.parent / "config" / "symcube_config.yaml"


def overrides(**kwargs):
    defaults = dict(cache_dir=None, offline=False, threads=None, terms=None, residue=None,
                    modulus=None, ell=None, form=None, weight=None, dmin=None, dmax=None)
    defaults.update(kwargs)
    return SimpleNamespace(**defaults)


@pytest.fixture
def config():
    return config_loader.load_config(str(CONFIG_PATH))


def test_default_config(config):
    """Test the shipped configuration."""
    assert [f['label'] for f in config['forms']] == ['1.12.a.a', '1.16.a.a']
    family = config_loader.get_family_settings(config)
    assert family['residue'] == 1 and family['modulus'] == 8
    assert family['blocks'] == [25, 50, 100]
    afe = config_loader.get_afe_settings(config)
    assert afe['A'] == 3.0 and afe['B'] == 10.0


def test_experiment_config_from_file(config):
    """Test the typed experiment view of the configuration."""
    cfg = ExperimentConfig.from_config(config)
    assert cfg.labels == ('1.12.a.a', '1.16.a.a')
    assert cfg.ells == (0.5, 0.5)
    assert cfg.blocks == (25, 50, 100)
    assert cfg.afe == AfeSettings.from_config(config['afe'])
    assert cfg.workers == 4


def test_default_sweep_fits_term_budget(config):
    """Test that the shipped blocks run without raising --terms."""
    cfg = ExperimentConfig.from_config(config)
    budget = int(config['experiment']['terms'])
    needed = sweep_terms(cfg, budget)
    assert 0 < needed <= budget
    assert needed <= config['runtime']['max_terms']


def test_missing_file():
    """Test that a missing file is reported."""
    with pytest.raises(FileNotFoundError):
        config_loader.load_config("does/not/exist.yaml")


def test_missing_section(tmp_path, config):
    """Test required sections."""
    del config['grh']
    path = tmp_path / "broken.yaml"
    path.write_text(yaml.safe_dump(config))
    with pytest.raises(ConfigurationError):
        config_loader.load_config(str(path))


def test_invalid_residue(config):
    """Test residues and moduli that would admit non-fundamental discriminants."""
    for bad in (dict(residue=2), dict(residue=3), dict(residue=7), dict(modulus=6), dict(modulus=2)):
        with pytest.raises(ConfigurationError):
            config_loader.apply_overrides(copy.deepcopy(config), overrides(**bad))
    config_loader.apply_overrides(config, overrides(residue=5, modulus=8))
    assert config['family']['residue'] == 5


def test_invalid_weight(config):
    """Test odd and small weights."""
    with pytest.raises(ConfigurationError):
        config_loader.apply_overrides(config, overrides(form="1.13.a.a", weight=13))


def test_dyadic_overrides(config):
    """Test --dmin/--dmax block generation."""
    config_loader.apply_overrides(config, overrides(dmin=100, dmax=1600))
    assert config['family']['blocks'] == [100, 200, 400, 800]
    assert config['grh']['D'] == 100
    config_loader.apply_overrides(config, overrides(dmin=100, dmax=1599))
    assert config['family']['blocks'] == [100, 200, 400]
    config_loader.apply_overrides(config, overrides(dmin=100))
    assert config['family']['blocks'] == [100]
    with pytest.raises(ConfigurationError):
        config_loader.apply_overrides(config, overrides(dmin=100, dmax=150))


def test_form_and_weight_overrides(config):
    """Test --form, --ell and --threads."""
    config_loader.apply_overrides(config, overrides(form="1.16.a.a", ell="1.5", threads=2, terms=500))
    assert config['forms'] == [{'label': '1.16.a.a', 'weight': 16}]
    assert config['runtime']['workers'] == 2
    assert config['experiment']['terms'] == 500
    cfg = ExperimentConfig.from_config(config)
    assert cfg.ells == (1.5,)
    with pytest.raises(ConfigurationError):
        config_loader.apply_overrides(config, overrides(form="1.18.a.a"))


def test_cache_dir_environment(config, monkeypatch, tmp_path):
    """Test SYMCUBE_CACHE over the configured directory."""
    monkeypatch.delenv(config_loader.CACHE_ENV_VAR, raising=False)
    assert config_loader.get_cache_dir(config) == Path("data/cache")
    monkeypatch.setenv(config_loader.CACHE_ENV_VAR, str(tmp_path))
    assert config_loader.get_cache_dir(config) == tmp_path


def test_offline_flag(config):
    """Test that --offline reaches the database settings."""
    assert not config_loader.get_database_settings(config)['offline']
    config_loader.apply_overrides(config, overrides(offline=True))
    assert config_loader.get_database_settings(config)['offline']


def test_cache_dir_flag_wins(config, monkeypatch, tmp_path):
    """Test --cache-dir over SYMCUBE_CACHE."""
    monkeypatch.setenv(config_loader.CACHE_ENV_VAR, str(tmp_path / "env"))
    config_loader.apply_overrides(config, overrides(cache_dir=str(tmp_path / "flag")))
    assert config_loader.get_cache_dir(config) == tmp_path / "flag"

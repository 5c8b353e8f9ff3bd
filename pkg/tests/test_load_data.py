"""
Tests for the coefficient cache and the database client.
"""

import sys
from pathlib import Path

import pytest
import requests

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

from src import load_data
from src.errors import (CacheMissError, InsufficientCoefficientsError, IntegrityError,
                        NetworkError)
from src.hecke import EigenformSpec, delta_coefficients


SETTINGS = {
    'base_url': 'https://example.invalid/api',
    'endpoint': 'mf_newforms',
    'params': {'_format': 'json'},
    'label_param': 'label',
    'data_field': 'data',
    'coeff_field': 'traces',
    'offset': 1,
    'timeout': 5,
    'offline': False,
}


class FakeResponse:
    def __init__(self, payload, status=200):
        self.payload = payload
        self.status = status

    def raise_for_status(self):
        if self.status >= 400:
            raise requests.HTTPError(f"status {self.status}")

    def json(self):
        return self.payload


def fake_get_factory(values, calls):
    def fake_get(url, params=None, timeout=None):
        calls.append((url, dict(params or {})))
        return FakeResponse({'data': [{'traces': [0] + list(values)}]})
    return fake_get


def failing_get(*args, **kwargs):
    raise AssertionError("network must not be touched")


def test_parse_label():
    """Test newform label parsing."""
    assert load_data.parse_label("1.12.a.a") == (1, 12)
    assert load_data.parse_label("1.16.a.a") == (1, 16)
    with pytest.raises(ValueError):
        load_data.parse_label("Delta")


def test_cache_file_roundtrip(tmp_path):
    """Test that a written cache reads back identically."""
    table = delta_coefficients(50)
    path = load_data.cache_path(tmp_path, table.spec.label)
    load_data.write_cache_file(path, table)
    assert path.read_text().splitlines()[0] == "SYMCUBE-COEFF v1 1.12.a.a 12 1 50"
    assert load_data.read_cache_file(path) == table


def test_corrupted_cache_is_rejected(tmp_path):
    """Test header, body and recursion corruption."""
    table = delta_coefficients(50)
    path = load_data.cache_path(tmp_path, table.spec.label)
    load_data.write_cache_file(path, table)

    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(IntegrityError):
        load_data.read_cache_file(path)

    lines[5] = "not-a-number"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(IntegrityError):
        load_data.read_cache_file(path)

    lines = [lines[0]] + [str(c) for c in table.a[1:]]
    lines[4] = str(table[4] + 1)  # a(4)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(IntegrityError):
        load_data.load_coefficients(EigenformSpec(12), 50, tmp_path, SETTINGS)


def test_load_coefficients_uses_cache(tmp_path, monkeypatch):
    """Test cache-first resolution and prefix extension."""
    monkeypatch.setattr(load_data.requests, 'get', failing_get)
    first = load_data.load_coefficients(EigenformSpec(12), 40, tmp_path, SETTINGS)
    again = load_data.load_coefficients(EigenformSpec(12), 30, tmp_path, SETTINGS)
    assert again.a == first.a[:31]
    extended = load_data.load_coefficients(EigenformSpec(12), 80, tmp_path, SETTINGS)
    assert extended.a[:41] == first.a
    assert load_data.read_cache_file(load_data.cache_path(tmp_path, "1.12.a.a")).N_max == 80


def test_ingest_newform_fetches_once(tmp_path, monkeypatch):
    """Test that a fetched table is validated, cached, and reused without network."""
    tau = delta_coefficients(60).a[1:]
    calls = []
    monkeypatch.setattr(load_data.requests, 'get', fake_get_factory(tau, calls))
    table = load_data.ingest_newform("1.12.a.a", 60, tmp_path, SETTINGS)
    assert table[2] == -24
    assert len(calls) == 1
    assert calls[0][1]['label'] == "1.12.a.a"

    monkeypatch.setattr(load_data.requests, 'get', failing_get)
    again = load_data.ingest_newform("1.12.a.a", 60, tmp_path, dict(SETTINGS, offline=True))
    assert again == table


def test_ingest_rejects_bad_data(tmp_path, monkeypatch):
    """Test short and inconsistent database answers."""
    tau = list(delta_coefficients(60).a[1:])
    monkeypatch.setattr(load_data.requests, 'get', fake_get_factory(tau[:20], []))
    with pytest.raises(InsufficientCoefficientsError):
        load_data.ingest_newform("1.12.a.a", 60, tmp_path, SETTINGS)

    tau[8] += 1  # a(9)
    monkeypatch.setattr(load_data.requests, 'get', fake_get_factory(tau, []))
    with pytest.raises(IntegrityError):
        load_data.ingest_newform("1.12.a.a", 60, tmp_path, SETTINGS)
    assert not load_data.cache_path(tmp_path, "1.12.a.a").exists()


def test_offline_miss(tmp_path, monkeypatch):
    """Test offline mode without cache."""
    monkeypatch.setattr(load_data.requests, 'get', failing_get)
    offline = dict(SETTINGS, offline=True)
    with pytest.raises(CacheMissError):
        load_data.ingest_newform("1.30.a.a", 10, tmp_path, offline)
    with pytest.raises(NetworkError):
        load_data.fetch_newform_coefficients("1.30.a.a", offline)


def test_network_failure(monkeypatch):
    """Test that transport errors become NetworkError."""
    def broken(*args, **kwargs):
        raise requests.ConnectionError("unreachable")
    monkeypatch.setattr(load_data.requests, 'get', broken)
    with pytest.raises(NetworkError):
        load_data.fetch_newform_coefficients("1.12.a.a", SETTINGS)

import copy
import json
import os

import pytest

from cdn_energy_sim.config import Settings, load_settings, validate_config
from cdn_energy_sim.errors import ConfigurationError
from cdn_energy_sim.scenario import EquipmentProfile, WirelessDeviceProfile

# Scenario files shipped with the repository
SCENARIO_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "scenarios")
MINIMAL_SCENARIO = os.path.join(SCENARIO_DIR, "minimal.json")
REFERENCE_SCENARIO = os.path.join(SCENARIO_DIR, "reference.json")

# Equipment with every P/C ratio equal to 1 W per bit/s and no storage power
UNIT_EQUIPMENT = {
    "es_power_w": 1.0,
    "es_capacity_bps": 1.0,
    "g_power_w": 1.0,
    "g_capacity_bps": 1.0,
    "pe_power_w": 1.0,
    "pe_capacity_bps": 1.0,
    "c_power_w": 1.0,
    "c_capacity_bps": 1.0,
    "wdm_power_w": 1.0,
    "wdm_capacity_bps": 1.0,
    "sr_power_w": 1.0,
    "sr_capacity_bps": 1.0,
    "sd_power_w": 0.0,
    "sd_capacity_bits": 1.0,
}

# Commodity network equipment
EQUIPMENT = {
    "es_power_w": 3800.0,
    "es_capacity_bps": 256e9,
    "g_power_w": 1000.0,
    "g_capacity_bps": 10e9,
    "pe_power_w": 4210.0,
    "pe_capacity_bps": 160e9,
    "c_power_w": 10900.0,
    "c_capacity_bps": 640e9,
    "wdm_power_w": 136.0,
    "wdm_capacity_bps": 40e9,
    "sr_power_w": 238.0,
    "sr_capacity_bps": 1.8e9,
    "sd_power_w": 4900.0,
    "sd_capacity_bits": 691.2e12,
}

HANDSET = {
    "rho_idle_w": 0.8,
    "rho_tx_w": 1.9,
    "rho_rx_w": 1.4,
    "gamma_xg_j": 1e-4,
    "gamma_xr_j": 5e-5,
    "phy_rate_bps": 54e6,
    "frame_payload_bits": 12000.0,
}

BITRATE_BPS = 2e6
CONTENT_BITS = 1.8e9

SETTINGS_ENV = (
    "CDN_ENERGY_LOG_LEVEL",
    "CDN_ENERGY_LOG_FORMAT",
    "CDN_ENERGY_JOBS",
    "CDN_ENERGY_TOP_K",
)


def equipment_profile(values=None, **overrides):
    """EquipmentProfile from a field dictionary."""
    fields = dict(values or EQUIPMENT)
    fields.update(overrides)
    return EquipmentProfile(**fields)


def handset_profile(**overrides):
    fields = dict(HANDSET)
    fields.update(overrides)
    return WirelessDeviceProfile(**fields)


def eq1_oracle(size_bits, hops, replicas, downloads_per_hr, eq):
    """Single-expression transport and storage energy in Wh."""
    return 4 * size_bits / 3600 * (
        3 * eq["es_power_w"] / eq["es_capacity_bps"]
        + eq["g_power_w"] / eq["g_capacity_bps"]
        + 2 * eq["pe_power_w"] / eq["pe_capacity_bps"]
        + (hops + 1) * eq["c_power_w"] / eq["c_capacity_bps"]
        + hops * eq["wdm_power_w"] / eq["wdm_capacity_bps"]
        + eq["sr_power_w"] / eq["sr_capacity_bps"]
    ) + 2 * size_bits * replicas / downloads_per_hr * eq["sd_power_w"] / eq["sd_capacity_bits"]


def eq2_oracle(p, u):
    """Single-expression 802.11 device power in W."""
    return (
        p["rho_idle_w"]
        + p["rho_tx_w"] * u["tau_tx"]
        + p["rho_rx_w"] * u["tau_rx"]
        + p["gamma_xg_j"] * u["lambda_g_fps"]
        + p["gamma_xr_j"] * u["lambda_r_fps"]
    )


def scenario_document(
    catalog_size=20,
    horizon_s=1800.0,
    seed=7,
    user_count=20,
    rate_per_user_per_hr=6.0,
    edge_capacity_bits=1e10,
    regional_capacity_bits=4e10,
    wireless=True,
    arrival_process="poisson",
):
    """
    A small valid scenario: origin, one regional node, two edge nodes and one
    cluster per edge node. The first cluster is wireless when ``wireless``.
    """
    clusters = [
        {
            "id": "north",
            "edge_node": "edge-1",
            "user_count": user_count,
            "request_rate_per_user_per_hr": rate_per_user_per_hr,
            "arrival_process": arrival_process,
        },
        {
            "id": "south",
            "edge_node": "edge-2",
            "user_count": user_count,
            "request_rate_per_user_per_hr": rate_per_user_per_hr,
            "arrival_process": arrival_process,
            "access_hop_contribution": 1,
        },
    ]
    if wireless:
        clusters[0]["device_profile"] = "handset"
    return {
        "topology": {
            "nodes": [
                {"id": "origin", "tier": "origin"},
                {
                    "id": "regional",
                    "tier": "regional",
                    "parent": "origin",
                    "hop_contribution": 3,
                    "cache_capacity_bits": regional_capacity_bits,
                    "cache_policy": "LFU",
                },
                {
                    "id": "edge-1",
                    "tier": "edge",
                    "parent": "regional",
                    "hop_contribution": 1,
                    "cache_capacity_bits": edge_capacity_bits,
                },
                {
                    "id": "edge-2",
                    "tier": "edge",
                    "parent": "regional",
                    "hop_contribution": 1,
                    "cache_capacity_bits": edge_capacity_bits,
                },
            ]
        },
        "equipment": dict(EQUIPMENT),
        "content_space": {
            "catalog_size": catalog_size,
            "zipf_exponent": 1.0,
            "size_bits_distribution": {"kind": "constant", "value": CONTENT_BITS},
            "bitrate_bps": BITRATE_BPS,
            "lifetime_distribution": {"kind": "constant", "value": 86400.0},
            "decode_params": {"alpha_j": 1.0, "beta_j_per_bit": 1e-9},
        },
        "user_space": {
            "device_profiles": {"handset": dict(HANDSET)},
            "clusters": clusters,
        },
        "simulation": {"horizon_s": horizon_s, "seed": seed, "report_interval_s": 300.0},
    }


def reference_document():
    with open(REFERENCE_SCENARIO, encoding="utf-8") as handle:
        return json.load(handle)


def with_changes(document, **paths):
    """Deep copy of ``document`` with ``a__b__c=value`` keyword paths replaced."""
    changed = copy.deepcopy(document)
    for path, value in paths.items():
        node = changed
        parts = path.split("__")
        for part in parts[:-1]:
            node = node[int(part)] if isinstance(node, list) else node.setdefault(part, {})
        node[parts[-1]] = value
    return changed


@pytest.fixture
def clean_settings_env(monkeypatch):
    """Remove runtime settings from the environment"""
    for key in SETTINGS_ENV:
        monkeypatch.delenv(key, raising=False)
    yield monkeypatch
    # load_dotenv writes straight into os.environ
    for key in SETTINGS_ENV:
        os.environ.pop(key, None)


def test_load_settings_defaults(clean_settings_env):
    """Test loading settings with nothing configured"""
    settings = load_settings(env_file=os.devnull)
    assert settings.log_level == "INFO"
    assert settings.log_format == "text"
    assert settings.top_k == 10
    assert settings.jobs >= 1
    assert not settings.debug


def test_load_settings_from_environment(clean_settings_env):
    """Test loading settings from environment variables"""
    clean_settings_env.setenv("CDN_ENERGY_LOG_LEVEL", "debug")
    clean_settings_env.setenv("CDN_ENERGY_LOG_FORMAT", "JSON")
    clean_settings_env.setenv("CDN_ENERGY_JOBS", "3")
    clean_settings_env.setenv("CDN_ENERGY_TOP_K", "5")
    settings = load_settings(env_file=os.devnull)
    assert settings == Settings(log_level="DEBUG", log_format="json", jobs=3, top_k=5)
    assert settings.debug


def test_load_settings_from_env_file(clean_settings_env, tmp_path):
    """Test loading settings from a .env file"""
    env_file = tmp_path / ".env"
    env_file.write_text("CDN_ENERGY_JOBS=2\nCDN_ENERGY_TOP_K=4\n")
    settings = load_settings(env_file=str(env_file))
    assert settings.jobs == 2
    assert settings.top_k == 4


def test_load_settings_invalid_jobs(clean_settings_env):
    """Test settings validation rejects a non-positive job count"""
    clean_settings_env.setenv("CDN_ENERGY_JOBS", "0")
    with pytest.raises(ConfigurationError) as exc_info:
        load_settings(env_file=os.devnull)
    assert exc_info.value.invalid_keys == ["jobs"]


def test_validate_config_collects_every_key():
    """Test validation reports all invalid keys at once"""
    with pytest.raises(ConfigurationError) as exc_info:
        validate_config(
            {"log_level": "LOUD", "log_format": "xml", "jobs": "two", "top_k": "-1"}
        )
    assert exc_info.value.invalid_keys == ["log_level", "log_format", "jobs", "top_k"]


def test_validate_config_success():
    """Test validation of a valid settings dictionary"""
    validate_config({"log_level": "WARNING", "log_format": "text", "jobs": "8", "top_k": "1"})

import random
from dataclasses import fields

import pytest

from cdn_energy_sim.energy import (
    ENERGY_CLASSES,
    TRANSPORT_CLASSES,
    DecodeModel,
    EnergyClass,
    EnergyLedger,
    TransportContext,
    decode_energy,
    device_download_energy,
    device_power,
    download_usage,
    ledger_differences,
    merge_ledgers,
    transport_storage_energy,
)
from cdn_energy_sim.errors import (
    EnergyModelError,
    NegativeEnergyError,
    RateExceedsPhyError,
    ScenarioValidationError,
)
from cdn_energy_sim.scenario import AirtimeUsage
from tests.test_config import (
    EQUIPMENT,
    UNIT_EQUIPMENT,
    eq1_oracle,
    eq2_oracle,
    equipment_profile,
    handset_profile,
)

POWER_CAPACITY_PAIRS = (
    ("es_power_w", "es_capacity_bps"),
    ("g_power_w", "g_capacity_bps"),
    ("pe_power_w", "pe_capacity_bps"),
    ("c_power_w", "c_capacity_bps"),
    ("wdm_power_w", "wdm_capacity_bps"),
    ("sr_power_w", "sr_capacity_bps"),
)


def _random_equipment(rng):
    values = {}
    for power, capacity in POWER_CAPACITY_PAIRS:
        values[power] = rng.uniform(0.0, 20000.0)
        values[capacity] = 10 ** rng.uniform(8, 12)
    values["sd_power_w"] = rng.uniform(0.0, 10000.0)
    values["sd_capacity_bits"] = 10 ** rng.uniform(12, 16)
    return values


def _context(size_bits=3600.0, hops=1, replicas=1, downloads_per_hr=1.0, equipment=None):
    return TransportContext(
        size_bits=size_bits,
        hops=hops,
        replicas=replicas,
        downloads_per_hr=downloads_per_hr,
        equipment=equipment_profile(equipment or UNIT_EQUIPMENT),
    )


def test_transport_unit_ratios_example():
    """Test all-unit P/C ratios give exactly 40 Wh"""
    total, breakdown = transport_storage_energy(_context())
    assert total == 40.0
    assert breakdown[EnergyClass.SWITCHING] == 12.0
    assert breakdown[EnergyClass.CORE] == 8.0
    assert breakdown[EnergyClass.WDM] == 4.0
    assert breakdown[EnergyClass.STORAGE] == 0.0


def test_transport_small_ratios_example():
    """Test the uniform 1e-8 ratio example gives 0.2002 Wh"""
    equipment = {}
    for power, capacity in POWER_CAPACITY_PAIRS:
        equipment[power] = 1.0
        equipment[capacity] = 1e8
    equipment["sd_power_w"] = 1000.0
    equipment["sd_capacity_bits"] = 1e15
    total, breakdown = transport_storage_energy(
        _context(1e9, hops=5, replicas=100, downloads_per_hr=1000.0, equipment=equipment)
    )
    assert total == pytest.approx(0.2002, rel=1e-6)
    assert breakdown[EnergyClass.STORAGE] == pytest.approx(0.0002, rel=1e-9)


def test_transport_zero_size():
    """Test an empty content costs nothing"""
    total, breakdown = transport_storage_energy(_context(0.0, hops=7, equipment=EQUIPMENT))
    assert total == 0.0
    assert all(value == 0.0 for value in breakdown.values())


def test_transport_matches_oracle():
    """Test transport energy against the single-expression oracle"""
    rng = random.Random(1)
    for _ in range(1000):
        equipment = _random_equipment(rng)
        args = (
            10 ** rng.uniform(3, 11),
            rng.randint(0, 20),
            rng.randint(1, 10),
            rng.uniform(1.0, 5000.0),
        )
        total, breakdown = transport_storage_energy(_context(*args, equipment=equipment))
        assert total == pytest.approx(eq1_oracle(*args, equipment), rel=1e-12)
        assert set(breakdown) == set(TRANSPORT_CLASSES)


def test_breakdown_sums_to_total_exactly():
    """Test the breakdown sums to the total in class order"""
    rng = random.Random(2)
    for _ in range(200):
        total, breakdown = transport_storage_energy(
            _context(rng.uniform(1e6, 1e10), rng.randint(0, 9), equipment=_random_equipment(rng))
        )
        running = 0.0
        for energy_class in TRANSPORT_CLASSES:
            running += breakdown[energy_class]
        assert running == total


def test_transport_strictly_increasing_in_hops():
    """Test energy grows with every extra core hop"""
    rng = random.Random(3)
    for _ in range(100):
        equipment = _random_equipment(rng)
        equipment["c_power_w"] = rng.uniform(1.0, 20000.0)
        size = 10 ** rng.uniform(6, 10)
        energies = [
            transport_storage_energy(_context(size, hops=h, equipment=equipment))[0]
            for h in range(12)
        ]
        assert all(later > earlier for earlier, later in zip(energies, energies[1:]))


def test_transport_linear_in_size():
    """Test doubling the size doubles the energy exactly"""
    rng = random.Random(4)
    for _ in range(100):
        equipment = _random_equipment(rng)
        size = 10 ** rng.uniform(3, 10)
        hops = rng.randint(0, 10)
        single = transport_storage_energy(_context(size, hops, 3, 12.5, equipment))[0]
        double = transport_storage_energy(_context(2 * size, hops, 3, 12.5, equipment))[0]
        assert double - 2 * single == 0.0


@pytest.mark.parametrize(
    "kwargs",
    [
        {"size_bits": -1.0},
        {"hops": -1},
        {"replicas": 0},
        {"downloads_per_hr": 0.0},
    ],
)
def test_transport_context_preconditions(kwargs):
    """Test invalid transport contexts are rejected at construction"""
    with pytest.raises(EnergyModelError):
        _context(**kwargs)


def test_device_power_idle():
    """Test zero usage returns exactly the idle power"""
    profile = handset_profile()
    assert device_power(profile, AirtimeUsage()) == profile.rho_idle_w


def test_device_power_example():
    """Test the worked device power example gives 1.29 W"""
    profile = handset_profile()
    usage = AirtimeUsage(tau_tx=0.1, tau_rx=0.2, lambda_g_fps=100.0, lambda_r_fps=200.0)
    assert device_power(profile, usage) == pytest.approx(1.29, rel=1e-12)


def test_device_power_matches_oracle():
    """Test device power against the affine oracle"""
    rng = random.Random(5)
    for _ in range(1000):
        p = {
            "rho_idle_w": rng.uniform(0, 2),
            "rho_tx_w": rng.uniform(0, 3),
            "rho_rx_w": rng.uniform(0, 3),
            "gamma_xg_j": rng.uniform(0, 1e-3),
            "gamma_xr_j": rng.uniform(0, 1e-3),
        }
        tau_tx = rng.uniform(0, 1)
        u = {
            "tau_tx": tau_tx,
            "tau_rx": rng.uniform(0, 0.999 * (1 - tau_tx)),
            "lambda_g_fps": rng.uniform(0, 2000),
            "lambda_r_fps": rng.uniform(0, 2000),
        }
        profile = handset_profile(**p)
        assert device_power(profile, AirtimeUsage(**u)) == pytest.approx(
            eq2_oracle(p, u), rel=1e-12
        )


def test_device_power_linear_in_tau_rx():
    """Test doubling tau_rx adds rho_rx * tau_rx"""
    profile = handset_profile()
    base = device_power(profile, AirtimeUsage(tau_rx=0.2))
    doubled = device_power(profile, AirtimeUsage(tau_rx=0.4))
    assert doubled - base == pytest.approx(profile.rho_rx_w * 0.2, rel=1e-12)


def test_airtime_usage_bounds():
    """Test airtime fractions above one are rejected"""
    with pytest.raises(ScenarioValidationError):
        AirtimeUsage(tau_tx=0.7, tau_rx=0.4)


def test_download_usage():
    """Test airtime derived from a receive-only stream"""
    profile = handset_profile(phy_rate_bps=8e6, frame_payload_bits=8000.0)
    usage = download_usage(profile, 2e6)
    assert usage.tau_rx == 0.25
    assert usage.tau_tx == 0.0
    assert usage.lambda_r_fps == 250.0
    assert usage.lambda_g_fps == 0.0


def test_device_download_round_example():
    """Test half the PHY rate for an hour costs 0.5 Wh"""
    bitrate = 1e6
    profile = handset_profile(
        rho_idle_w=0.0, rho_rx_w=1.0, gamma_xr_j=0.0, phy_rate_bps=2 * bitrate
    )
    wh, duration = device_download_energy(profile, 3600 * bitrate, bitrate)
    assert duration == 3600.0
    assert wh == 0.5


def test_device_download_zero_size():
    """Test an empty download"""
    assert device_download_energy(handset_profile(), 0.0, 2e6) == (0.0, 0.0)


def test_device_download_incremental():
    """Test incremental mode drops the idle share"""
    profile = handset_profile()
    full, duration = device_download_energy(profile, 1.8e9, 2e6)
    increment, _ = device_download_energy(profile, 1.8e9, 2e6, incremental=True)
    assert full - increment == pytest.approx(profile.rho_idle_w * duration / 3600, rel=1e-12)


def test_device_download_rate_exceeds_phy():
    """Test streams faster than the PHY rate"""
    profile = handset_profile(phy_rate_bps=1e6)
    with pytest.raises(RateExceedsPhyError) as exc_info:
        device_download_energy(profile, 1e6, 2e6)
    assert exc_info.value.phy_rate_bps == 1e6


def test_decode_energy_examples():
    """Test the decoding stand-in"""
    assert decode_energy(DecodeModel(), 1e9) == 0.0
    assert decode_energy(DecodeModel(alpha_j=3600.0), 12345.0) == 1.0
    assert decode_energy(DecodeModel(beta_j_per_bit=1e-6), 3.6e9) == pytest.approx(1.0)


def test_decode_model_rejects_negative():
    """Test negative decode coefficients"""
    with pytest.raises(ScenarioValidationError):
        DecodeModel(alpha_j=-1.0)


def test_ledger_add_and_conservation():
    """Test ledger posting keeps the total equal to the class sum"""
    rng = random.Random(6)
    ledger = EnergyLedger()
    ledger.add(EnergyClass.CORE, 0.0)
    assert ledger == EnergyLedger()
    for _ in range(1000):
        ledger.add(rng.choice(ENERGY_CLASSES), rng.uniform(0, 10))
        assert ledger.is_conserved()


def test_ledger_rejects_negative():
    """Test negative postings raise"""
    ledger = EnergyLedger()
    with pytest.raises(NegativeEnergyError):
        ledger.add(EnergyClass.WDM, -1e-9)
    assert ledger.total_wh == 0.0


def _random_ledger(rng):
    ledger = EnergyLedger()
    for energy_class in ENERGY_CLASSES:
        ledger.add(energy_class, rng.uniform(0, 100))
    ledger.request_count = rng.randint(0, 50)
    return ledger


def test_ledger_merge_fieldwise():
    """Test merge against a naive field loop"""
    rng = random.Random(7)
    for _ in range(50):
        a, b = _random_ledger(rng), _random_ledger(rng)
        merged = a.merge(b)
        for item in fields(EnergyLedger):
            assert getattr(merged, item.name) == getattr(a, item.name) + getattr(b, item.name)


def test_ledger_merge_identity_and_order():
    """Test merge identity, commutativity and associativity"""
    rng = random.Random(8)
    a, b, c = (_random_ledger(rng) for _ in range(3))
    assert a.merge(EnergyLedger()) == a
    assert ledger_differences(a.merge(b), b.merge(a)) == []
    assert ledger_differences(a.merge(b).merge(c), a.merge(b.merge(c))) == []
    assert ledger_differences(merge_ledgers([a, b, c]), a.merge(b).merge(c)) == []


def test_ledger_differences_names_fields():
    """Test differing fields are named"""
    a = EnergyLedger()
    b = EnergyLedger()
    b.add(EnergyClass.DECODING, 1.0)
    assert ledger_differences(a, b) == ["decoding", "total_wh"]


def test_ledger_to_dict_keys():
    """Test ledger serialisation keys"""
    data = EnergyLedger().to_dict()
    assert list(data) == [f"{cls.value}_wh" for cls in ENERGY_CLASSES] + [
        "total_wh",
        "request_count",
    ]


def test_ledger_transport_excludes_terminal_classes():
    """Test transport_wh covers the seven network classes only"""
    ledger = EnergyLedger()
    ledger.post(
        {EnergyClass.CORE: 2.0, EnergyClass.WIRELESS_DEVICE: 5.0, EnergyClass.DECODING: 1.0}
    )
    assert ledger.transport_wh == 2.0
    assert ledger.total_wh == 8.0

"""Radio and MAC parameter sets with their default values."""

from dataclasses import asdict, dataclass, fields

import numpy as np

#: Thermal noise density of -174 dBm/Hz, in W/Hz.
THERMAL_NOISE_W_PER_HZ = 10.0 ** (-174.0 / 10.0) / 1000.0

#: Default aggregate-interference cap at a TV receiver (-140 dB, linear W).
DEFAULT_IMAX_W = 1e-14

#: Default buffer between service and protection contours, km.
DEFAULT_PROTECTION_BUFFER_KM = 11.1

#: TV channels usable by personal/portable devices.
DEFAULT_CHANNELS = tuple(c for c in range(21, 52) if c != 37)


def _check_positive(obj, names):
    for name in names:
        value = getattr(obj, name)
        if not np.isfinite(value) or value <= 0:
            raise ValueError(f"{type(obj).__name__}.{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class RadioParams:
    """Propagation and PHY constants shared by every link.

    The path-loss law is ``K * (d0 / d) ** exponent`` with the gain clamped
    at ``K`` for distances below ``d0``.
    """

    bandwidth_hz: float = 6e6
    noise_density_w_per_hz: float = THERMAL_NOISE_W_PER_HZ
    pathloss_exponent: float = 3.0
    pathloss_ref_gain: float = 1e-9
    pathloss_ref_km: float = 1.0
    adjacency_distance_km: float = 2.59

    def __post_init__(self):
        _check_positive(self, [f.name for f in fields(self)])

    @property
    def noise_w(self) -> float:
        """Receiver noise power ``B * N0`` in Watts."""
        return self.bandwidth_hz * self.noise_density_w_per_hz

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class MacParams:
    """DCF timing and frame sizes for a 6 MHz channel.

    Defaults are 20 MHz 802.11 values scaled by about 3 (idle slot 28 us,
    RTS/CTS/ACK plus headers 1186 bits, RTS 352 bits).
    """

    sigma_s: float = 28e-6
    o_sec_s: float = 320e-6
    o_bits: float = 1186.0
    payload_bits: float = 8184.0
    l_col_bits: float = 352.0
    l_colsec_s: float = 150e-6
    power_budget_w: float = 0.1

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"MacParams.{f.name} must be non-negative, got {value!r}")
        if self.payload_bits <= 0:
            raise ValueError("MacParams.payload_bits must be positive")

    def to_dict(self):
        return asdict(self)

"""
utils/units.py
--------------
Unit conversions used at the configuration and output boundaries.

Features:
- Celsius -> Kelvin (configuration speaks °C, the physics speaks K)
- Soil sensor counts <-> moisture percent (the fixed 10-bit mapping)
- Significant-digit rendering for CSV output
- Strict validation with DomainError on nonsense input
"""

import math
from typing import Union

from logic.errors import DomainError

Number = Union[int, float]


# ---------- Constants ----------
KELVIN_OFFSET: float = 273.15
STC_TEMPERATURE_K: float = 298.15  # 25 °C
ADC_FULL_SCALE: float = 1023.0  # 10-bit sensor counts


# ---------- Temperature ----------
def celsius_to_kelvin(temp_c: Number) -> float:
    """
    Convert a temperature from degrees Celsius to Kelvin.

    Raises:
        DomainError: If the result would be at or below absolute zero.
    """
    value = float(temp_c) + KELVIN_OFFSET
    if not math.isfinite(value) or value <= 0:
        raise DomainError(f"Invalid temperature: {temp_c!r} °C")
    return value


# ---------- Soil sensor ----------
def soil_raw_to_pct(raw: Number) -> float:
    """Moisture percent for a soil sensor reading (dry soil reads high)."""
    return 100.0 * (1.0 - float(raw) / ADC_FULL_SCALE)


def soil_pct_to_raw(pct: Number) -> float:
    """Inverse of soil_raw_to_pct."""
    return ADC_FULL_SCALE * (1.0 - float(pct) / 100.0)


# ---------- Formatting ----------
def format_sig(value: Number, digits: int = 9) -> str:
    """
    Render a number with `digits` significant digits.

    Integers and booleans are rendered as plain integers so relay flags stay 0/1.
    """
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    text = f"{float(value):.{digits}g}"
    return "0" if text == "-0" else text

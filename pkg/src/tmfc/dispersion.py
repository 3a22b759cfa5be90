"""Propagation constants k(omega) per band and the four-field phase mismatch.

Band numbering: 1 and 2 are the two strong pumps, 3 and 4 are the two
single-photon signal bands. Every band carries a mandatory validity window;
evaluating outside the window raises :class:`~tmfc.errors.DomainWindowError`
rather than silently extrapolating.

Two model kinds are supported:

* ``sellmeier-effective``: n(omega) from a Sellmeier fit (wavelength in um),
  k = n(omega) * omega / c. The default coefficient file shipped with the
  package is bulk Si3N4 (see ``data/si3n4.sellmeier`` for provenance).
* ``polynomial-expansion``: per-band Taylor series around a reference
  frequency, k = sum_m beta_m (omega - omega_ref)^m / m!, for analytically
  checkable test cases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Literal, Mapping, Union

import numpy as np

from . import constants
from .errors import ConfigError, DomainWindowError

BANDS = (1, 2, 3, 4)

ArrayLike = Union[float, np.ndarray]

Kind = Literal["sellmeier-effective", "polynomial-expansion"]


@dataclass(frozen=True)
class SellmeierCoefficients:
    """One Sellmeier fit: n^2 = 1 + sum_i b_i x^2 / (x^2 - c_i^2), x in um."""

    b: tuple[float, ...]
    c_um: tuple[float, ...]
    valid_um: tuple[float, float]
    label: str = ""

    def __post_init__(self) -> None:
        if len(self.b) != len(self.c_um) or not self.b:
            raise ConfigError("Sellmeier b and c coefficient lists must match and be non-empty")
        lo, hi = self.valid_um
        if not (0.0 < lo < hi):
            raise ConfigError(f"Sellmeier validity range must satisfy 0 < min < max, got {self.valid_um}")

    def index_squared(self, lambda_um: ArrayLike) -> ArrayLike:
        lam2 = np.asarray(lambda_um, dtype=float) ** 2
        n2 = np.ones_like(lam2)
        for b_i, c_i in zip(self.b, self.c_um):
            n2 = n2 + b_i * lam2 / (lam2 - c_i**2)
        return n2

    def valid_angular_window(self) -> tuple[float, float]:
        """Validity range of the fit as an angular-frequency interval, rad/s."""
        lo_um, hi_um = self.valid_um
        return (
            constants.wavelength_to_angular(hi_um * 1e-6),
            constants.wavelength_to_angular(lo_um * 1e-6),
        )

    @classmethod
    def from_file(cls, path) -> "SellmeierCoefficients":
        """Parse a plain-text key=value coefficient file (see data/si3n4.sellmeier)."""
        entries: dict[str, str] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}: malformed line {raw.strip()!r}, expected key = value")
                key, value = (part.strip() for part in line.split("=", 1))
                if key in entries:
                    raise ConfigError(f"{path}: duplicate key {key!r}")
                entries[key] = value
        required = {"label", "valid_um_min", "valid_um_max", "b", "c"}
        missing = required - entries.keys()
        if missing:
            raise ConfigError(f"{path}: missing keys {sorted(missing)}")
        unknown = entries.keys() - required
        if unknown:
            raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
        try:
            b = tuple(float(x) for x in entries["b"].split(","))
            c = tuple(float(x) for x in entries["c"].split(","))
            valid = (float(entries["valid_um_min"]), float(entries["valid_um_max"]))
        except ValueError as exc:
            raise ConfigError(f"{path}: non-numeric coefficient: {exc}") from exc
        return cls(b=b, c_um=c, valid_um=valid, label=entries["label"])


def builtin_sellmeier(name: str = "si3n4") -> SellmeierCoefficients:
    """Load one of the coefficient files shipped with the package."""
    ref = resources.files("tmfc.data").joinpath(f"{name}.sellmeier")
    with resources.as_file(ref) as path:
        if not path.exists():
            raise ConfigError(f"no builtin Sellmeier data named {name!r}")
        return SellmeierCoefficients.from_file(path)


@dataclass(frozen=True)
class BandDispersion:
    """Per-band parameters: a validity window plus the model coefficients.

    For the polynomial kind, ``taylor[m]`` is beta_m in s^m/m and
    ``omega_ref`` is the expansion point in rad/s. For the Sellmeier kind,
    ``sellmeier`` holds the fit.
    """

    window: tuple[float, float]
    omega_ref: float | None = None
    taylor: tuple[float, ...] | None = None
    sellmeier: SellmeierCoefficients | None = None

    def __post_init__(self) -> None:
        lo, hi = self.window
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ConfigError(f"band window must be a finite ordered interval, got {self.window}")

    def token(self) -> tuple:
        sell = None
        if self.sellmeier is not None:
            sell = (self.sellmeier.b, self.sellmeier.c_um, self.sellmeier.valid_um)
        return (self.window, self.omega_ref, self.taylor, sell)


@dataclass(frozen=True)
class DispersionModel:
    kind: Kind
    bands: Mapping[int, BandDispersion]
    label: str = ""

    def __post_init__(self) -> None:
        if self.kind not in ("sellmeier-effective", "polynomial-expansion"):
            raise ConfigError(f"unknown dispersion kind {self.kind!r}")
        missing = [b for b in BANDS if b not in self.bands]
        if missing:
            raise ConfigError(f"dispersion model missing bands {missing}")
        for band, params in self.bands.items():
            if self.kind == "polynomial-expansion":
                if params.omega_ref is None or params.taylor is None:
                    raise ConfigError(f"band {band}: polynomial kind needs omega_ref and taylor coefficients")
            else:
                if params.sellmeier is None:
                    raise ConfigError(f"band {band}: sellmeier kind needs a coefficient set")
                fit_lo, fit_hi = params.sellmeier.valid_angular_window()
                lo, hi = params.window
                if lo < fit_lo or hi > fit_hi:
                    raise ConfigError(
                        f"band {band}: window [{lo:.6e}, {hi:.6e}] rad/s escapes the Sellmeier "
                        f"fit validity [{fit_lo:.6e}, {fit_hi:.6e}] rad/s"
                    )

    def token(self) -> tuple:
        return (self.kind, tuple(sorted((b, p.token()) for b, p in self.bands.items())))


def _check_window(band: int, params: BandDispersion, omega: np.ndarray) -> None:
    lo, hi = params.window
    flat = np.atleast_1d(omega)
    if flat.size and (flat.min() < lo or flat.max() > hi):
        bad = flat[(flat < lo) | (flat > hi)]
        raise DomainWindowError(band, params.window, float(bad[0]))


def propagation_constant(model: DispersionModel, band: int, omega: ArrayLike) -> ArrayLike:
    """k(omega) in rad/m for one band; errors outside the band's window."""
    params = model.bands[band]
    w = np.asarray(omega, dtype=float)
    _check_window(band, params, w)
    if model.kind == "polynomial-expansion":
        dw = w - params.omega_ref
        k = np.zeros_like(w)
        # Horner on the Taylor coefficients beta_m / m!
        for m in range(len(params.taylor) - 1, -1, -1):
            k = k * dw + params.taylor[m] / math.factorial(m)
        result = k
    else:
        lam_um = (constants.TWO_PI * constants.C / w) * 1e6
        n2 = params.sellmeier.index_squared(lam_um)
        if np.any(n2 <= 0.0):
            raise DomainWindowError(band, params.window, float(w.flat[int(np.argmax(n2 <= 0.0))]))
        result = np.sqrt(n2) * w / constants.C
    if np.isscalar(omega):
        return float(result)
    return result


def refractive_index(model: DispersionModel, band: int, omega: ArrayLike) -> ArrayLike:
    """n(omega) = c k(omega) / omega for one band."""
    k = propagation_constant(model, band, omega)
    if np.isscalar(omega):
        return k * constants.C / omega
    return np.asarray(k) * constants.C / np.asarray(omega, dtype=float)


@dataclass(frozen=True)
class PhaseMismatchSpec:
    """Sign convention for the phase mismatch.

    ``"k1+k3-k2-k4"`` (default) means dk = k1(w1) + k3(w3) - k2(w2) - k4(w4)
    with w1 = w2 - w3 + w4; ``"k2+k4-k1-k3"`` is its exact negation. The
    magnitude of the sinc factor is even in dk but the complex propagation
    phase is not, so the convention is observable and therefore explicit.
    """

    sign_convention: str = "k1+k3-k2-k4"
    _SIGNS = {"k1+k3-k2-k4": 1.0, "k2+k4-k1-k3": -1.0}

    def __post_init__(self) -> None:
        if self.sign_convention not in self._SIGNS:
            raise ConfigError(
                f"unknown sign convention {self.sign_convention!r}; "
                f"expected one of {sorted(self._SIGNS)}"
            )

    @property
    def sign(self) -> float:
        return self._SIGNS[self.sign_convention]

    def flipped(self) -> "PhaseMismatchSpec":
        other = next(k for k in self._SIGNS if k != self.sign_convention)
        return PhaseMismatchSpec(other)


def phase_mismatch(
    model: DispersionModel,
    spec: PhaseMismatchSpec,
    omega2: ArrayLike,
    omega3: ArrayLike,
    omega4: ArrayLike,
) -> ArrayLike:
    """Signed phase mismatch in rad/m with w1 fixed by w1 + w3 = w2 + w4."""
    w2 = np.asarray(omega2, dtype=float)
    w3 = np.asarray(omega3, dtype=float)
    w4 = np.asarray(omega4, dtype=float)
    w1 = w2 - w3 + w4
    dk = (
        propagation_constant(model, 1, w1)
        + propagation_constant(model, 3, w3)
        - propagation_constant(model, 2, w2)
        - propagation_constant(model, 4, w4)
    )
    dk = spec.sign * dk
    if all(np.isscalar(x) for x in (omega2, omega3, omega4)):
        return float(dk)
    return dk


def vacuum_line_model(window: tuple[float, float] = (-1e18, 1e18)) -> DispersionModel:
    """Dispersionless model k = omega/c on every band. Handy for exact tests."""
    band = BandDispersion(window=window, omega_ref=0.0, taylor=(0.0, 1.0 / constants.C))
    return DispersionModel(
        kind="polynomial-expansion",
        bands={b: band for b in BANDS},
        label="vacuum-line",
    )

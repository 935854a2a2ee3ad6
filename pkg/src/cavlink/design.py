"""Design-space exploration: detuning sweeps, target inversion, presets.

This is the planning layer: given a candidate cavity geometry (expressed as
coupled-mode parameters), sweep one knob and check each point against the
design targets (effective coupling band, resolved-sideband margin, dissipation
budget). Sweep values and targets are plain Hz, matching config files and
reports; the underlying physics stays in rad/s via :mod:`cavlink.coupled_modes`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from scipy.optimize import brentq

from .coupled_modes import (
    DerivedRates,
    SystemParams,
    dressed_modes,
    effective_rates,
    resolved_sideband_ratio,
    DEFAULT_SIDEBAND_THRESHOLD,
)
from .errors import BranchAssignmentError, InvalidInputError, NoSolutionError
from .units import angular_to_hz, hz_to_angular

# Knobs that run_sweep can scan. All but delta_eff are SystemParams fields;
# delta_eff bypasses the dressed-mode solve and fixes the detuning directly.
SWEEPABLE_FIELDS = ("omega_cav", "kappa_cav_1", "kappa_cav_2", "g", "delta_eff")


@dataclass(frozen=True)
class SweepTargets:
    """Pass/fail thresholds applied to every sweep row (all in Hz)."""

    coupling_band_hz: tuple = (1.5e6, 2.0e6)
    omega_m_hz: float = 1.5e6
    sideband_threshold: float = DEFAULT_SIDEBAND_THRESHOLD
    max_dissipation_fraction: float = 0.30

    def __post_init__(self):
        lo, hi = self.coupling_band_hz
        if not (lo < hi):
            raise InvalidInputError("coupling_band_hz must satisfy lo < hi")
        if lo < 0.0:
            raise InvalidInputError("coupling_band_hz must be nonnegative")
        if self.omega_m_hz <= 0.0:
            raise InvalidInputError("omega_m_hz must be positive")
        if self.sideband_threshold <= 0.0:
            raise InvalidInputError("sideband_threshold must be positive")
        if not 0.0 <= self.max_dissipation_fraction <= 1.0:
            raise InvalidInputError("max_dissipation_fraction must be in [0, 1]")


@dataclass(frozen=True)
class SweepSpec:
    """One-knob sweep: which field to scan, over which Hz values."""

    base_params: SystemParams
    swept_field: str
    values_hz: tuple
    targets: SweepTargets = field(default_factory=SweepTargets)

    def __post_init__(self):
        if self.swept_field not in SWEEPABLE_FIELDS:
            raise InvalidInputError(
                f"swept_field must be one of {SWEEPABLE_FIELDS}, "
                f"got {self.swept_field!r}"
            )
        values = tuple(float(v) for v in self.values_hz)
        if not values:
            raise InvalidInputError("values_hz must be non-empty")
        object.__setattr__(self, "values_hz", values)


@dataclass(frozen=True)
class SweepRow:
    """One sweep point: derived rates plus target verdicts.

    Invalid parameter combinations are retained with valid=False and an empty
    rates slot, so the output row count always matches the input values.
    """

    value_hz: float
    valid: bool
    rates: DerivedRates | None
    in_coupling_band: bool
    sideband_resolved: bool
    dissipation_ok: bool
    message: str = ""


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple

    def __len__(self):
        return len(self.rows)


def _evaluate_point(base, swept_field, value_hz, targets):
    # pure function of (base, value): rows are order-independent
    value = hz_to_angular(value_hz)
    try:
        if swept_field == "delta_eff":
            rates = effective_rates(base, delta_eff=value)
        else:
            rates = effective_rates(base.replace(**{swept_field: value}))
    except (InvalidInputError, BranchAssignmentError) as exc:
        return SweepRow(
            value_hz=value_hz,
            valid=False,
            rates=None,
            in_coupling_band=False,
            sideband_resolved=False,
            dissipation_ok=False,
            message=str(exc),
        )
    keff1_hz = angular_to_hz(rates.kappa_eff_1)
    lo, hi = targets.coupling_band_hz
    ratio = resolved_sideband_ratio(
        rates.kappa_lc_tot, hz_to_angular(targets.omega_m_hz)
    )
    return SweepRow(
        value_hz=value_hz,
        valid=True,
        rates=rates,
        in_coupling_band=lo <= keff1_hz <= hi,
        sideband_resolved=ratio < targets.sideband_threshold,
        dissipation_ok=rates.dissipation_fraction <= targets.max_dissipation_fraction,
    )


def run_sweep(spec: SweepSpec) -> SweepResult:
    """Evaluate the derived rates and target verdicts at every sweep value.

    Values that violate parameter invariants (for example a negative rate)
    produce a flagged invalid row instead of aborting the sweep.
    """
    rows = tuple(
        _evaluate_point(spec.base_params, spec.swept_field, v, spec.targets)
        for v in spec.values_hz
    )
    return SweepResult(spec=spec, rows=rows)


def find_target_detuning(base: SystemParams, target_keff1_hz: float) -> float:
    """Invert the effective-coupling formula for the detuning (both in Hz).

    Solves kappa_eff_1(delta) = target for the positive detuning root:

        delta = sqrt(kappa_cav_1 g^2 / kappa_eff_1 - (kappa_cav_tot / 2)^2)

    Raises NoSolutionError when the target exceeds the zero-detuning maximum.
    """
    if not target_keff1_hz > 0.0:
        raise InvalidInputError("target_keff1_hz must be positive")
    target = hz_to_angular(target_keff1_hz)
    k1 = base.kappa_cav_1
    ktot = base.kappa_cav_tot
    g = base.g
    if k1 == 0.0 or g == 0.0:
        raise NoSolutionError(
            "kappa_cav_1 and g must be nonzero for any effective coupling"
        )
    peak = k1 * g**2 / (0.5 * ktot) ** 2 if ktot > 0.0 else float("inf")
    if target > peak:
        raise NoSolutionError(
            f"target kappa_eff_1 of {target_keff1_hz} Hz exceeds the "
            f"zero-detuning maximum of {angular_to_hz(peak)} Hz"
        )
    arg = k1 * g**2 / target - (0.5 * ktot) ** 2
    # target == peak gives arg == 0 up to rounding; clamp the negative dust
    return angular_to_hz(max(arg, 0.0) ** 0.5)


def with_dressed_detuning(base: SystemParams, delta_eff_hz: float) -> SystemParams:
    """Return a copy of ``base`` with omega_cav set so the dressed detuning
    (cavity minus LC dressed frequency) equals ``delta_eff_hz``.

    The dressed detuning exceeds the bare one by the repulsion of the two
    modes, so targets below the minimum splitting are unreachable and raise
    NoSolutionError.
    """
    if not delta_eff_hz > 0.0:
        raise InvalidInputError("delta_eff_hz must be positive")
    target = hz_to_angular(delta_eff_hz)

    def gap(delta_bare):
        p = base.replace(omega_cav=base.omega_lc + delta_bare)
        return dressed_modes(p).delta_eff - target

    lo = max(target * 1e-3, 1.0)
    try:
        if gap(lo) > 0.0:
            raise NoSolutionError(
                f"dressed detuning of {delta_eff_hz} Hz is below the minimum "
                "mode splitting for these parameters"
            )
    except BranchAssignmentError:
        lo = 2.0 * lo
        if gap(lo) > 0.0:
            raise NoSolutionError(
                f"dressed detuning of {delta_eff_hz} Hz is below the minimum "
                "mode splitting for these parameters"
            ) from None
    hi = max(2.0 * target, lo * 4.0)
    while gap(hi) < 0.0:
        hi *= 2.0
        if hi > 1e3 * max(target, base.omega_lc):
            raise NoSolutionError("dressed detuning target is unreachable")
    delta_bare = brentq(gap, lo, hi, xtol=1e-6, rtol=1e-15)
    return base.replace(omega_cav=base.omega_lc + delta_bare)


def bare_loss_for_dissipation_fraction(rates: DerivedRates, fraction: float) -> float:
    """Bare LC loss rate (rad/s) that makes dissipation_fraction equal
    ``fraction`` while keeping the cavity-mediated rates of ``rates`` fixed.

    Raises NoSolutionError when the external rates already dissipate a larger
    fraction than requested (the bare loss cannot be negative).
    """
    if not 0.0 <= fraction < 1.0:
        raise InvalidInputError("fraction must be in [0, 1)")
    external = rates.kappa_eff_1 + rates.kappa_eff_2 + rates.kappa_eff_loss
    bare = (fraction * external - rates.kappa_eff_loss) / (1.0 - fraction)
    if bare < 0.0:
        raise NoSolutionError(
            "cavity-mediated loss alone exceeds the requested dissipation "
            "fraction; no nonnegative bare loss achieves it"
        )
    return bare


def _hat(offset_hz):
    return SystemParams.from_hz(
        omega_cav=7.0e9 + offset_hz,
        omega_lc=7.0e9,
        kappa_cav_1=150e6,
        kappa_cav_2=5e6,
        kappa_cav_loss=10e6,
        kappa_lc_bare=0.48e6,
        g=57e6,
    )


# Four interchangeable cavity lids ("hats"): same couplers, different cavity
# frequency, hence different effective detuning from the fixed LC. The
# detunings are representative values spanning the order-of-magnitude
# coupling range; they are inputs, not derived quantities.
HAT_PRESETS = {
    "hat238": _hat(250e6),
    "hat270": _hat(520e6),
    "hat300": _hat(900e6),
    "hat316": _hat(1250e6),
}

# Idealized single-port design-study point: round numbers, no parasitic
# cavity ports, slightly smaller bare LC loss.
DESIGN_PRESET = SystemParams.from_hz(
    omega_cav=7.6e9,
    omega_lc=7.0e9,
    kappa_cav_1=150e6,
    kappa_cav_2=0.0,
    kappa_cav_loss=0.0,
    kappa_lc_bare=0.37e6,
    g=60e6,
)

ALL_PRESETS = dict(HAT_PRESETS, design=DESIGN_PRESET)

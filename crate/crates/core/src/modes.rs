//! Normal modes of a linear three-ion crystal and the trilinear coupling
//! rate between the axial zigzag mode and the two x-radial modes.
//!
//! All frequencies are angular (rad/s) unless a name says otherwise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// CODATA 2018 values, SI units.
pub mod constants {
    /// Reduced Planck constant, J·s.
    pub const HBAR: f64 = 1.054_571_817e-34;
    /// Vacuum permittivity, F/m.
    pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
    /// Atomic mass unit, kg.
    pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
    /// Elementary charge, C.
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
}

/// Converts an ordinary frequency in kHz to an angular frequency in rad/s.
pub fn khz_to_rad(khz: f64) -> f64 {
    2.0 * PI * khz * 1e3
}

/// Converts an angular frequency in rad/s to an ordinary frequency in kHz.
pub fn rad_to_khz(rad: f64) -> f64 {
    rad / (2.0 * PI * 1e3)
}

/// Single-ion trap parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapConfig {
    /// Ion mass, kg.
    pub mass: f64,
    /// Ion charge, C.
    pub charge: f64,
    pub omega_x: f64,
    pub omega_y: f64,
    pub omega_z: f64,
}

impl TrapConfig {
    pub fn new(mass: f64, charge: f64, omega_x: f64, omega_y: f64, omega_z: f64) -> Result<Self> {
        let trap = Self {
            mass,
            charge,
            omega_x,
            omega_y,
            omega_z,
        };
        trap.validate()?;
        Ok(trap)
    }

    /// Three ¹⁷¹Yb⁺ ions at (ω_x, ω_y, ω_z) = 2π × (1056, 976, 587) kHz.
    pub fn ytterbium_reference() -> Self {
        Self {
            mass: 171.0 * constants::ATOMIC_MASS_UNIT,
            charge: constants::ELEMENTARY_CHARGE,
            omega_x: khz_to_rad(1056.0),
            omega_y: khz_to_rad(976.0),
            omega_z: khz_to_rad(587.0),
        }
    }

    /// Checks the sign and finiteness conditions. Linear stability of the
    /// radial modes is reported separately by [`normal_modes`] as
    /// [`Error::ComplexFrequency`].
    pub fn validate(&self) -> Result<()> {
        let finite = [self.mass, self.charge, self.omega_x, self.omega_y, self.omega_z]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidTrap("non-finite parameter".into()));
        }
        if self.mass <= 0.0 {
            return Err(Error::InvalidTrap(format!("mass must be positive, got {}", self.mass)));
        }
        if self.charge == 0.0 {
            return Err(Error::InvalidTrap("charge must be non-zero".into()));
        }
        if self.omega_x <= 0.0 || self.omega_y <= 0.0 || self.omega_z <= 0.0 {
            return Err(Error::InvalidTrap("trap frequencies must be positive".into()));
        }
        if self.omega_x <= self.omega_z {
            return Err(Error::InvalidTrap(format!(
                "omega_x ({:.6e}) must exceed omega_z ({:.6e}) for an axial crystal",
                self.omega_x, self.omega_z
            )));
        }
        Ok(())
    }
}

/// Frequencies and eigenvectors of the three normal modes along one axis,
/// ordered center-of-mass, tilt, zigzag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisModes {
    pub frequencies: [f64; 3],
    pub vectors: [[f64; 3]; 3],
}

/// Normal modes along x, y and z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeTable {
    pub x: AxisModes,
    pub y: AxisModes,
    pub z: AxisModes,
}

impl ModeTable {
    /// Axial zigzag.
    pub fn omega_a(&self) -> f64 {
        self.z.frequencies[ZIGZAG]
    }

    /// x-radial tilt.
    pub fn omega_b(&self) -> f64 {
        self.x.frequencies[TILT]
    }

    /// x-radial zigzag.
    pub fn omega_c(&self) -> f64 {
        self.x.frequencies[ZIGZAG]
    }
}

pub const CENTER_OF_MASS: usize = 0;
pub const TILT: usize = 1;
pub const ZIGZAG: usize = 2;

fn mode_vectors() -> [[f64; 3]; 3] {
    let s3 = 3f64.sqrt();
    let s2 = 2f64.sqrt();
    let s6 = 6f64.sqrt();
    [
        [1.0 / s3, 1.0 / s3, 1.0 / s3],
        [-1.0 / s2, 0.0, 1.0 / s2],
        [-1.0 / s6, 2.0 / s6, -1.0 / s6],
    ]
}

/// Neighboring-ion spacing `z₀ = (5e²/16πε₀mω_z²)^{1/3}` in meters.
pub fn ion_spacing(trap: &TrapConfig) -> f64 {
    let e2 = trap.charge * trap.charge;
    (5.0 * e2 / (16.0 * PI * constants::EPSILON_0 * trap.mass * trap.omega_z * trap.omega_z)).cbrt()
}

fn radial_axis(omega_r: f64, omega_z: f64, axis: &'static str) -> Result<AxisModes> {
    let wr2 = omega_r * omega_r;
    let wz2 = omega_z * omega_z;
    let limit = 12.0 / 5.0 * wz2;
    if wr2 < limit {
        return Err(Error::ComplexFrequency {
            mode: if axis == "x" { "x-radial zigzag" } else { "y-radial zigzag" },
            omega_r_sq: wr2,
            limit,
        });
    }
    Ok(AxisModes {
        frequencies: [omega_r, (wr2 - wz2).sqrt(), (wr2 - limit).sqrt()],
        vectors: mode_vectors(),
    })
}

/// Closed-form normal modes of the three-ion linear crystal.
pub fn normal_modes(trap: &TrapConfig) -> Result<ModeTable> {
    trap.validate()?;
    let wz = trap.omega_z;
    let z = AxisModes {
        frequencies: [wz, 3f64.sqrt() * wz, (29.0f64 / 5.0).sqrt() * wz],
        vectors: mode_vectors(),
    };
    Ok(ModeTable {
        x: radial_axis(trap.omega_x, wz, "x")?,
        y: radial_axis(trap.omega_y, wz, "y")?,
        z,
    })
}

fn resonance_residual(r: f64) -> f64 {
    (29.0f64 / 5.0).sqrt() * r - (1.0 - r * r).sqrt() - (1.0 - 12.0 / 5.0 * r * r).sqrt()
}

fn resonance_slope(r: f64) -> f64 {
    (29.0f64 / 5.0).sqrt() + r / (1.0 - r * r).sqrt() + 12.0 / 5.0 * r / (1.0 - 12.0 / 5.0 * r * r).sqrt()
}

/// The ratio `ω_z/ω_x` at which the axial zigzag frequency equals the sum of
/// the two x-radial frequencies.
///
/// Bisection on `(0, √(5/12))` down to a bracket of width 1e-12, followed by
/// one Newton step from the midpoint.
pub fn resonance_ratio() -> f64 {
    let mut lo = 0.0;
    let mut hi = (5.0f64 / 12.0).sqrt();
    let f_lo = resonance_residual(lo);
    let f_hi = resonance_residual(hi);
    assert!(f_lo < 0.0 && f_hi > 0.0, "resonance bracket lost its sign change");
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if resonance_residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let polished = mid - resonance_residual(mid) / resonance_slope(mid);
    if polished > lo - 1e-12 && polished < hi + 1e-12 {
        polished
    } else {
        mid
    }
}

/// Trilinear coupling rate `ξ = 9ω_z²√(ħ/mω_aω_bω_c) / 5z₀` in rad/s for
/// explicit mode frequencies.
pub fn coupling_rate_for(trap: &TrapConfig, omega_a: f64, omega_b: f64, omega_c: f64) -> f64 {
    let z0 = ion_spacing(trap);
    let wz2 = trap.omega_z * trap.omega_z;
    9.0 * wz2 * (constants::HBAR / (trap.mass * omega_a * omega_b * omega_c)).sqrt() / (5.0 * z0)
}

/// Trilinear coupling rate for the modes in `modes`.
pub fn coupling_rate(trap: &TrapConfig, modes: &ModeTable) -> f64 {
    coupling_rate_for(trap, modes.omega_a(), modes.omega_b(), modes.omega_c())
}

/// The three coupled modes together with their detuning, coupling rate and
/// ion spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSystem {
    omega_a: f64,
    omega_b: f64,
    omega_c: f64,
    delta: f64,
    xi: f64,
    z0: f64,
}

impl ModeSystem {
    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }

    pub fn omega_b(&self) -> f64 {
        self.omega_b
    }

    pub fn omega_c(&self) -> f64 {
        self.omega_c
    }

    /// `δ = ω_a − ω_b − ω_c`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn z0(&self) -> f64 {
        self.z0
    }
}

/// Bundles the mode frequencies, detuning and coupling for `trap`.
///
/// With `delta_override`, the radial tilt frequency ω_b is moved so that the
/// detuning equals the override; this stands in for the bias voltage on the
/// trap electrodes. The coupling rate is evaluated at the moved frequency.
pub fn build_mode_system(trap: &TrapConfig, delta_override: Option<f64>) -> Result<ModeSystem> {
    let table = normal_modes(trap)?;
    let omega_a = table.omega_a();
    let omega_c = table.omega_c();
    let (omega_b, delta) = match delta_override {
        None => {
            let wb = table.omega_b();
            (wb, omega_a - wb - omega_c)
        }
        Some(d) => {
            if !d.is_finite() {
                return Err(Error::InvalidTrap("detuning override must be finite".into()));
            }
            let wb = omega_a - omega_c - d;
            if wb <= 0.0 {
                return Err(Error::InvalidTrap(format!(
                    "detuning override {d:.6e} rad/s pushes the radial tilt frequency non-positive"
                )));
            }
            (wb, d)
        }
    };
    Ok(ModeSystem {
        omega_a,
        omega_b,
        omega_c,
        delta,
        xi: coupling_rate_for(trap, omega_a, omega_b, omega_c),
        z0: ion_spacing(trap),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn spacing_for_ytterbium() {
        let trap = TrapConfig::ytterbium_reference();
        // 40-digit evaluation with the same constants.
        assert!(rel(ion_spacing(&trap), 4.210_791_004_680_27e-6) < 1e-12);
    }

    #[test]
    fn spacing_power_law() {
        let trap = TrapConfig::ytterbium_reference();
        let z0 = ion_spacing(&trap);
        let quad = TrapConfig { omega_z: 4.0 * trap.omega_z, omega_x: 40.0 * trap.omega_x, ..trap };
        assert!(rel(ion_spacing(&quad), z0 / 4f64.powf(2.0 / 3.0)) < 1e-12);
        let kilo = TrapConfig { omega_z: 1e3 * trap.omega_z, ..trap };
        assert!(rel(ion_spacing(&kilo), z0 / 100.0) < 1e-12);
    }

    #[test]
    fn reference_mode_frequencies() {
        let table = normal_modes(&TrapConfig::ytterbium_reference()).unwrap();
        assert!(rel(rad_to_khz(table.omega_a()), 1414.0) < 2e-3);
        assert!(rel(rad_to_khz(table.omega_b()), 878.0) < 2e-3);
        assert!(rel(rad_to_khz(table.omega_c()), 536.0) < 2e-3);
        assert!(rel(table.z.frequencies[ZIGZAG] / table.z.frequencies[CENTER_OF_MASS], (29.0f64 / 5.0).sqrt()) < 1e-15);
    }

    #[test]
    fn mode_ordering() {
        let table = normal_modes(&TrapConfig::ytterbium_reference()).unwrap();
        let z = table.z.frequencies;
        assert!(z[0] < z[1] && z[1] < z[2]);
        for axis in [table.x, table.y] {
            let f = axis.frequencies;
            assert!(f[2] < f[1] && f[1] < f[0]);
        }
    }

    #[test]
    fn radial_modes_degenerate_without_axial_confinement() {
        let trap = TrapConfig { omega_z: 1e-9, ..TrapConfig::ytterbium_reference() };
        let table = normal_modes(&trap).unwrap();
        for f in table.x.frequencies {
            assert!(rel(f, trap.omega_x) < 1e-15);
        }
    }

    #[test]
    fn eigenvectors_are_orthonormal() {
        let table = normal_modes(&TrapConfig::ytterbium_reference()).unwrap();
        let v = table.x.vectors;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| v[i][k] * v[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unstable_zigzag_is_reported() {
        let trap = TrapConfig {
            omega_x: khz_to_rad(587.0) * (12.0f64 / 5.0).sqrt() * 0.99,
            ..TrapConfig::ytterbium_reference()
        };
        match normal_modes(&trap) {
            Err(Error::ComplexFrequency { mode, .. }) => assert_eq!(mode, "x-radial zigzag"),
            other => panic!("expected ComplexFrequency, got {other:?}"),
        }
    }

    #[test]
    fn invalid_traps_rejected() {
        let base = TrapConfig::ytterbium_reference();
        assert!(TrapConfig { mass: 0.0, ..base }.validate().is_err());
        assert!(TrapConfig { charge: 0.0, ..base }.validate().is_err());
        assert!(TrapConfig { omega_y: -1.0, ..base }.validate().is_err());
        assert!(TrapConfig { omega_x: base.omega_z * 0.5, ..base }.validate().is_err());
    }

    #[test]
    fn resonance_ratio_root() {
        let r = resonance_ratio();
        assert!((r - 0.556).abs() < 5e-4);
        assert!((r - 0.556_029_175_041_024).abs() < 1e-12);
        assert!(resonance_residual(r).abs() <= 1e-10);
        assert!(r < (5.0f64 / 12.0).sqrt());
    }

    #[test]
    fn coupling_rate_reference() {
        let trap = TrapConfig::ytterbium_reference();
        let table = normal_modes(&trap).unwrap();
        let xi = coupling_rate(&trap, &table);
        assert!(rel(xi / PI, 2_774.914_243_678_08) < 1e-10);
        assert!(rel(xi / PI, 2_767.0) < 0.01);
    }

    #[test]
    fn coupling_rate_frequency_scaling() {
        let trap = TrapConfig::ytterbium_reference();
        let t = normal_modes(&trap).unwrap();
        let xi = coupling_rate_for(&trap, t.omega_a(), t.omega_b(), t.omega_c());
        let doubled = coupling_rate_for(&trap, 2.0 * t.omega_a(), 2.0 * t.omega_b(), 2.0 * t.omega_c());
        assert!(rel(doubled, xi * 2f64.powf(-1.5)) < 1e-14);
    }

    #[test]
    fn mode_system_detuning() {
        let trap = TrapConfig::ytterbium_reference();
        let free = build_mode_system(&trap, None).unwrap();
        // Published integers: 1414 − 878 − 536 = 0; the unrounded values give −0.95 kHz.
        assert!(rad_to_khz(free.delta()).abs() < 1.5);
        assert!(rel(free.delta(), khz_to_rad(-0.951_305_919_306)) < 1e-9);

        let parked = build_mode_system(&trap, Some(khz_to_rad(-44.0))).unwrap();
        assert_eq!(parked.delta(), khz_to_rad(-44.0));
        let recomputed = parked.omega_a() - parked.omega_b() - parked.omega_c();
        assert!((recomputed - parked.delta()).abs() < 1e-9 * parked.omega_a());

        let tuned = build_mode_system(&trap, Some(0.0)).unwrap();
        assert_eq!(tuned.delta(), 0.0);
        assert!((tuned.omega_a() - tuned.omega_b() - tuned.omega_c()).abs() < 1e-9 * tuned.omega_a());
        assert!(tuned.xi() > 0.0 && tuned.z0() > 0.0);
    }
}

//! Angular conventions and uniform square arrays.
//!
//! Both arrays lie in the y–z plane with their normal along +x. Azimuth is
//! measured in the x–y plane from +x, elevation from the x–y plane, so the
//! reflective half-space (x > 0) is `az ∈ (-π/2, π/2)` and the transmissive
//! half-space is `az ∈ (π/2, 3π/2)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side of the STAR-RIS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HalfSpace {
    Transmissive,
    Reflective,
}

impl HalfSpace {
    pub const BOTH: [HalfSpace; 2] = [HalfSpace::Transmissive, HalfSpace::Reflective];

    pub fn as_str(self) -> &'static str {
        match self {
            HalfSpace::Transmissive => "transmissive",
            HalfSpace::Reflective => "reflective",
        }
    }

    pub fn other(self) -> HalfSpace {
        match self {
            HalfSpace::Transmissive => HalfSpace::Reflective,
            HalfSpace::Reflective => HalfSpace::Transmissive,
        }
    }
}

impl fmt::Display for HalfSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Far-field direction, azimuth and elevation in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularDirection {
    az: f64,
    el: f64,
}

impl AngularDirection {
    pub fn new(az: f64, el: f64) -> Result<Self> {
        let az_ok = az > -FRAC_PI_2 && az < 3.0 * FRAC_PI_2;
        let el_ok = el > -FRAC_PI_2 && el < FRAC_PI_2;
        // the half-space boundary az = π/2 belongs to neither side
        if !az_ok || !el_ok || az == FRAC_PI_2 {
            return Err(Error::InvalidDirection {
                az_deg: az.to_degrees(),
                el_deg: el.to_degrees(),
            });
        }
        Ok(Self { az, el })
    }

    pub fn from_degrees(az_deg: f64, el_deg: f64) -> Result<Self> {
        Self::new(az_deg.to_radians(), el_deg.to_radians())
    }

    pub fn az(&self) -> f64 {
        self.az
    }

    pub fn el(&self) -> f64 {
        self.el
    }

    pub fn to_degrees(&self) -> [f64; 2] {
        [self.az.to_degrees(), self.el.to_degrees()]
    }

    pub fn half_space(&self) -> HalfSpace {
        half_space_of(self)
    }

    pub fn mirror(&self) -> AngularDirection {
        mirror_direction(self)
    }
}

pub fn half_space_of(dir: &AngularDirection) -> HalfSpace {
    if dir.az > FRAC_PI_2 {
        HalfSpace::Transmissive
    } else {
        HalfSpace::Reflective
    }
}

/// Reflection through the array plane: `[π − az; el]`.
pub fn mirror_direction(dir: &AngularDirection) -> AngularDirection {
    // π − az maps (−π/2, 3π/2) onto itself, so no revalidation is needed
    AngularDirection {
        az: PI - dir.az,
        el: dir.el,
    }
}

/// Power gain of a single STAR-RIS or PESA element, `(π/4)·cos²(az)·cos²(el)`.
pub fn element_gain(dir: &AngularDirection) -> f64 {
    let (ca, ce) = (dir.az.cos(), dir.el.cos());
    FRAC_PI_4 * ca * ca * ce * ce
}

/// Uniform square array with half-wavelength spacing in the y–z plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayGeometry {
    side: usize,
}

impl ArrayGeometry {
    pub fn square(n_elements: usize) -> Result<Self> {
        let side = (n_elements as f64).sqrt().round() as usize;
        if n_elements == 0 || side * side != n_elements {
            return Err(Error::InvalidParameter(format!(
                "array element count {n_elements} is not a positive perfect square"
            )));
        }
        Ok(Self { side })
    }

    pub fn n_elements(&self) -> usize {
        self.side * self.side
    }

    /// Elements along each axis.
    pub fn side(&self) -> usize {
        self.side
    }
}

/// Steering vector with entry `m·√N + n` equal to
/// `exp(iπ(m·cos(el)·sin(az) + n·sin(el)))`.
///
/// The element spacing is fixed at half a wavelength, so the carrier only
/// enters through that ratio and no wavelength argument is needed.
pub fn steering_vector(geom: &ArrayGeometry, dir: &AngularDirection) -> Vec<Complex64> {
    let ky = PI * dir.el.cos() * dir.az.sin();
    let kz = PI * dir.el.sin();
    let side = geom.side;
    let mut out = Vec::with_capacity(side * side);
    for m in 0..side {
        for n in 0..side {
            out.push(Complex64::from_polar(1.0, ky * m as f64 + kz * n as f64));
        }
    }
    out
}

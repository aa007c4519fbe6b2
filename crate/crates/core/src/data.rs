//! Space-time scalar data evaluated at quadrature points.

use alloc::sync::Arc;

use crate::math::sin;

/// `f(x, t)` on the domain.
pub type VolumeFn = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;
/// `f(x, n, t)` on the boundary, with `n` the outward unit normal.
pub type BoundaryFn = Arc<dyn Fn([f64; 2], [f64; 2], f64) -> f64 + Send + Sync>;

/// Built-in analytic families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DataFamily {
    Zero,
    Constant(f64),
    /// `rate · t`
    Ramp(f64),
    /// `A sin(kx x + px) sin(ky y + py) sin(ω t + pt)`
    Sinusoid {
        amplitude: f64,
        kx: f64,
        ky: f64,
        omega: f64,
        phase_x: f64,
        phase_y: f64,
        phase_t: f64,
    },
}

impl DataFamily {
    pub fn eval(&self, p: [f64; 2], t: f64) -> f64 {
        match *self {
            DataFamily::Zero => 0.0,
            DataFamily::Constant(c) => c,
            DataFamily::Ramp(r) => r * t,
            DataFamily::Sinusoid {
                amplitude,
                kx,
                ky,
                omega,
                phase_x,
                phase_y,
                phase_t,
            } => amplitude * sin(kx * p[0] + phase_x) * sin(ky * p[1] + phase_y) * sin(omega * t + phase_t),
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            DataFamily::Zero => true,
            DataFamily::Constant(c) | DataFamily::Ramp(c) => c == 0.0,
            DataFamily::Sinusoid { amplitude, .. } => amplitude == 0.0,
        }
    }

    pub fn volume(self) -> VolumeFn {
        Arc::new(move |p, t| self.eval(p, t))
    }

    pub fn boundary(self) -> BoundaryFn {
        Arc::new(move |p, _n, t| self.eval(p, t))
    }
}

pub fn zero_volume() -> VolumeFn {
    DataFamily::Zero.volume()
}

pub fn zero_boundary() -> BoundaryFn {
    DataFamily::Zero.boundary()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    #[test]
    fn families() {
        assert_eq!(DataFamily::Constant(2.5).eval([0.3, 0.1], 7.0), 2.5);
        assert_eq!(DataFamily::Ramp(2.0).eval([0.0, 0.0], 1.5), 3.0);
        let s = DataFamily::Sinusoid {
            amplitude: 2.0,
            kx: 0.0,
            ky: 0.0,
            omega: 1.0,
            phase_x: FRAC_PI_2,
            phase_y: FRAC_PI_2,
            phase_t: 0.0,
        };
        assert!((s.eval([0.4, 0.9], FRAC_PI_2) - 2.0).abs() < 1e-15);
        assert!(DataFamily::Ramp(0.0).is_zero());
        assert!(!DataFamily::Constant(1.0).is_zero());
    }
}

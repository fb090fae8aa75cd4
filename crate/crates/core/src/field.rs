//! Pointwise fields used for forcing, initial data and exact solutions.

/// Value and spatial derivatives up to second order at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Jet {
    #[inline]
    pub fn laplacian(&self) -> f64 {
        self.dxx + self.dyy
    }
}

impl std::ops::Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet {
            v: self.v - o.v,
            dx: self.dx - o.dx,
            dy: self.dy - o.dy,
            dxx: self.dxx - o.dxx,
            dxy: self.dxy - o.dxy,
            dyy: self.dyy - o.dyy,
        }
    }
}

/// A scalar field `f(x, y, t)` that only needs point values (forcing).
pub trait PointField: Sync {
    fn value(&self, x: f64, y: f64, t: f64) -> f64;
}

impl<F> PointField for F
where
    F: Fn(f64, f64, f64) -> f64 + Sync,
{
    fn value(&self, x: f64, y: f64, t: f64) -> f64 {
        self(x, y, t)
    }
}

/// A field with analytic derivatives through second order.
pub trait SmoothField: Sync {
    fn jet(&self, x: f64, y: f64, t: f64) -> Jet;
}

/// The identically zero field.
#[derive(Clone, Copy, Debug, Default)]
pub struct Zero;

impl PointField for Zero {
    fn value(&self, _: f64, _: f64, _: f64) -> f64 {
        0.0
    }
}

impl SmoothField for Zero {
    fn jet(&self, _: f64, _: f64, _: f64) -> Jet {
        Jet::default()
    }
}

/// `sin²(π(x−x0)/Lx) · sin²(π(y−y0)/Ly)`, the bump used for initial data
/// and manufactured solutions. With unit periods it is `sin²(πx) sin²(πy)`.
#[derive(Clone, Copy, Debug)]
pub struct SinSquaredBump {
    pub amplitude: f64,
}

impl Default for SinSquaredBump {
    fn default() -> Self {
        Self { amplitude: 1.0 }
    }
}

/// Derivatives 0..=4 of `s(z) = sin²(πz)`.
#[inline]
pub fn sin_squared_derivs(z: f64) -> [f64; 5] {
    use std::f64::consts::PI;
    let (s2, c2) = (2.0 * PI * z).sin_cos();
    let s = (PI * z).sin();
    [
        s * s,
        PI * s2,
        2.0 * PI * PI * c2,
        -4.0 * PI.powi(3) * s2,
        -8.0 * PI.powi(4) * c2,
    ]
}

impl SmoothField for SinSquaredBump {
    fn jet(&self, x: f64, y: f64, _t: f64) -> Jet {
        let a = sin_squared_derivs(x);
        let b = sin_squared_derivs(y);
        let k = self.amplitude;
        Jet {
            v: k * a[0] * b[0],
            dx: k * a[1] * b[0],
            dy: k * a[0] * b[1],
            dxx: k * a[2] * b[0],
            dxy: k * a[1] * b[1],
            dyy: k * a[0] * b[2],
        }
    }
}

//! Wave-shaped terrain profile (Eq. 16) and its slope.

#[derive(Debug, Clone, Copy)]
pub struct TerrainProfile {
    /// Peak height, m.
    pub h0: f64,
    /// Envelope half-width, m.
    pub a: f64,
    /// Wavelength, m.
    pub lambda: f64,
}

impl TerrainProfile {
    pub fn new(h0: f64) -> TerrainProfile {
        TerrainProfile {
            h0,
            a: 25_000.0,
            lambda: 8_000.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        std::f64::consts::PI / self.lambda
    }

    pub fn beta(&self) -> f64 {
        std::f64::consts::PI / (2.0 * self.a)
    }

    /// h(x) = h0 cos^2(beta x) cos^2(alpha x) inside the envelope, 0 outside.
    pub fn height(&self, x: f64) -> f64 {
        if x.abs() >= self.a {
            return 0.0;
        }
        let envelope = self.h0 * (self.beta() * x).cos().powi(2);
        envelope * (self.alpha() * x).cos().powi(2)
    }

    /// dh/dx = -h0 [beta cos^2(ax) sin(2bx) + alpha cos^2(bx) sin(2ax)].
    pub fn slope(&self, x: f64) -> f64 {
        if x.abs() >= self.a {
            return 0.0;
        }
        let (al, be) = (self.alpha(), self.beta());
        -self.h0
            * (be * (al * x).cos().powi(2) * (2.0 * be * x).sin()
                + al * (be * x).cos().powi(2) * (2.0 * al * x).sin())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn peak_and_zeros() {
        let p = TerrainProfile::new(6000.0);
        assert_eq!(p.height(0.0), 6000.0);
        assert_eq!(p.height(25_000.0), 0.0);
        assert_eq!(p.height(-30_000.0), 0.0);
        assert!(p.height(4000.0).abs() < 1e-9); // x = lambda/2
    }

    #[test]
    fn slope_oddness_and_origin() {
        let p = TerrainProfile::new(5000.0);
        assert_eq!(p.slope(0.0), 0.0);
        for &x in &[1234.0, 6000.0, 20_000.0] {
            assert_relative_eq!(p.slope(-x), -p.slope(x), max_relative = 1e-12);
        }
    }

    #[test]
    fn slope_matches_finite_difference() {
        let p = TerrainProfile::new(5000.0);
        let x = 2000.0;
        let d = 0.01;
        let fd = (p.height(x + d) - p.height(x - d)) / (2.0 * d);
        assert_relative_eq!(p.slope(x), fd, max_relative = 1e-6);
    }
}

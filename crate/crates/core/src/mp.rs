//! Marchenko–Pastur law for aspect ratio `y = p/n ∈ (0, 1]`.

use std::f64::consts::PI;
use std::io::Write;

use faer::c64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad;

/// Absolute tolerance of the CDF quadrature.
pub const CDF_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MpModel {
    pub y: f64,
    pub a: f64,
    pub b: f64,
}

impl MpModel {
    pub fn new(y: f64) -> Result<Self> {
        let (a, b) = mp_edges(y)?;
        Ok(MpModel { y, a, b })
    }

    /// Model with `y = p/n` taken exactly from the dimensions.
    pub fn from_dims(p: usize, n: usize) -> Result<Self> {
        if p == 0 || p > n {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= p <= n, got p = {p}, n = {n}"
            )));
        }
        Self::new(p as f64 / n as f64)
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= self.a || x >= self.b || x <= 0.0 {
            return 0.0;
        }
        ((self.b - x) * (x - self.a)).sqrt() / (2.0 * PI * x * self.y)
    }

    fn center(&self) -> f64 {
        1.0 + self.y
    }

    fn half_width(&self) -> f64 {
        2.0 * self.y.sqrt()
    }

    /// Density in the angle variable `x = m - r cos φ`, times `dx/dφ`.
    /// Smooth on `[0, π]` even at `y = 1`.
    fn angular_integrand(&self, phi: f64) -> f64 {
        let r = self.half_width();
        let sy = self.y.sqrt();
        let half = (0.5 * phi).sin();
        let x = (1.0 - sy).powi(2) + 4.0 * sy * half * half;
        let s = phi.sin();
        r * r * s * s / (2.0 * PI * self.y * x)
    }

    fn angle_of(&self, x: f64) -> f64 {
        ((self.center() - x) / self.half_width()).clamp(-1.0, 1.0).acos()
    }

    fn x_of(&self, phi: f64) -> f64 {
        let sy = self.y.sqrt();
        let half = (0.5 * phi).sin();
        (1.0 - sy).powi(2) + 4.0 * sy * half * half
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.a {
            return 0.0;
        }
        if x >= self.b {
            return 1.0;
        }
        self.cdf_angle(self.angle_of(x))
    }

    fn cdf_angle(&self, phi: f64) -> f64 {
        let (v, _) = quad::integrate(|t| self.angular_integrand(t), 0.0, phi, CDF_TOL);
        v.clamp(0.0, 1.0)
    }

    /// Inverse CDF: bisection in the angle variable, then Newton polish in `x`.
    pub fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return self.a;
        }
        if q >= 1.0 {
            return self.b;
        }
        let (mut lo, mut hi) = (0.0, PI);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if self.cdf_angle(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut x = self.x_of(0.5 * (lo + hi));
        let (xlo, xhi) = (self.x_of(lo), self.x_of(hi));
        for _ in 0..4 {
            let d = self.density(x);
            if d <= 0.0 {
                break;
            }
            let next = x - (self.cdf(x) - q) / d;
            if !(next > xlo && next < xhi) {
                break;
            }
            x = next;
        }
        x
    }

    /// Classical locations `quantile(i/(p+1))`, `i = 1..=p`.
    pub fn classical_locations(&self, p: usize) -> Vec<f64> {
        (1..=p)
            .map(|i| self.quantile(i as f64 / (p + 1) as f64))
            .collect()
    }

    /// Both roots of `y z s² + (y + z - 1) s + 1 = 0`, computed without cancellation.
    pub fn stieltjes_roots(&self, z: c64) -> (c64, c64) {
        let y = self.y;
        let qa = z * y;
        let qb = z + (y - 1.0);
        let disc = (qb * qb - qa * 4.0).sqrt();
        // Choose the sign that avoids cancellation in qb ± disc.
        let sign = if (qb.conj() * disc).re >= 0.0 { 1.0 } else { -1.0 };
        let q = (qb + disc * sign) * -0.5;
        (q / qa, c64::new(1.0, 0.0) / q)
    }

    /// The MP Stieltjes transform `∫ ρ(x)/(x - z) dx` for `Im z > 0`.
    pub fn stieltjes(&self, z: c64) -> Result<c64> {
        if !(z.im > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Stieltjes transform needs Im z > 0, got {z}"
            )));
        }
        let (r1, r2) = self.stieltjes_roots(z);
        Ok(if r1.im >= r2.im { r1 } else { r2 })
    }

    /// The root of the quadratic not returned by [`MpModel::stieltjes`].
    pub fn alternative_root(&self, z: c64, s: c64) -> c64 {
        -(z + (self.y - 1.0)) / (z * self.y) - s
    }

    /// `|s + 1/(y + z - 1 + y z s)|`.
    pub fn fixed_point_residual(&self, z: c64, s: c64) -> f64 {
        (s + c64::new(1.0, 0.0) / (z + (self.y - 1.0) + z * s * self.y)).norm()
    }

    /// `(x, pdf, cdf)` rows on an even grid of `points` over `[a, b]`.
    pub fn table(&self, points: usize) -> Vec<(f64, f64, f64)> {
        let points = points.max(2);
        (0..points)
            .map(|i| {
                let x = self.a + (self.b - self.a) * i as f64 / (points - 1) as f64;
                (x, self.density(x), self.cdf(x))
            })
            .collect()
    }

    pub fn write_table_csv<W: Write>(&self, out: W, points: usize) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "pdf", "cdf"])?;
        for (x, pdf, cdf) in self.table(points) {
            w.write_record([x.to_string(), pdf.to_string(), cdf.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_y(y: f64) -> Result<()> {
    if !(y > 0.0 && y <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "aspect ratio y must lie in (0, 1], got {y}"
        )));
    }
    Ok(())
}

/// Spectral edges `((1-√y)², (1+√y)²)`.
pub fn mp_edges(y: f64) -> Result<(f64, f64)> {
    check_y(y)?;
    let s = y.sqrt();
    Ok(((1.0 - s).powi(2), (1.0 + s).powi(2)))
}

/// MP density; `NaN` for `y` outside `(0, 1]`.
pub fn mp_density(x: f64, y: f64) -> f64 {
    MpModel::new(y).map_or(f64::NAN, |m| m.density(x))
}

/// MP CDF; `NaN` for `y` outside `(0, 1]`.
pub fn mp_cdf(x: f64, y: f64) -> f64 {
    MpModel::new(y).map_or(f64::NAN, |m| m.cdf(x))
}

/// MP quantile; `NaN` for `y` outside `(0, 1]`.
pub fn mp_quantile(q: f64, y: f64) -> f64 {
    MpModel::new(y).map_or(f64::NAN, |m| m.quantile(q))
}

pub fn mp_stieltjes(z: c64, y: f64) -> Result<c64> {
    MpModel::new(y)?.stieltjes(z)
}

/// Kolmogorov–Smirnov distance between the empirical spectral distribution
/// of an ascending spectrum and the MP CDF.
pub fn esd_distance(spectrum: &[f64], y: f64) -> Result<f64> {
    let model = MpModel::new(y)?;
    if spectrum.is_empty() {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    if spectrum.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("spectrum is not sorted ascending".into()));
    }
    let p = spectrum.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in spectrum.iter().enumerate() {
        let f = model.cdf(x);
        d = d.max((f - i as f64 / p).abs()).max(((i + 1) as f64 / p - f).abs());
    }
    Ok(d)
}

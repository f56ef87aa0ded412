//! Laguerre-Gaussian field synthesis and intensity rendering.
//!
//! Grids are square with `n` pixels per side covering `[-extent, extent]·w₀`.
//! Pixel centers sit at half-integer offsets so the origin falls between the
//! four central pixels. Row 0 is the top (+y) row; φ is measured from +x
//! towards +y.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{DensityMatrix, OamIndex};

pub const ANGULAR_BINS: usize = 360;
const SUBSAMPLES_PER_BIN: usize = 4;
const SMOOTHING_WINDOW: usize = 5;
const LOBE_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    n: usize,
    extent: f64,
    waist: f64,
}

impl GridSpec {
    /// `extent` is the half-width in units of the waist.
    pub fn new(n: usize, extent: f64, waist: f64) -> Result<Self> {
        if n < 64 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n = {n} must be even and at least 64")));
        }
        if !(extent > 0.0 && extent.is_finite()) {
            return Err(Error::InvalidGrid(format!("extent {extent} must be positive")));
        }
        if !(waist > 0.0 && waist.is_finite()) {
            return Err(Error::InvalidGrid(format!("waist {waist} must be positive")));
        }
        Ok(GridSpec { n, extent, waist })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    /// Physical half-width of the grid.
    pub fn half_width(&self) -> f64 {
        self.extent * self.waist
    }

    pub fn pixel_size(&self) -> f64 {
        2.0 * self.half_width() / self.n as f64
    }

    pub fn pixel_area(&self) -> f64 {
        self.pixel_size().powi(2)
    }

    /// Physical `(x, y)` of a pixel center.
    pub fn coords(&self, row: usize, col: usize) -> (f64, f64) {
        let dx = self.pixel_size();
        let half = self.n as f64 / 2.0;
        ((col as f64 + 0.5 - half) * dx, (half - row as f64 - 0.5) * dx)
    }

    /// Fractional `(row, col)` for a physical point.
    fn fractional_index(&self, x: f64, y: f64) -> (f64, f64) {
        let dx = self.pixel_size();
        let half = self.n as f64 / 2.0;
        (half - 0.5 - y / dx, x / dx + half - 0.5)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n: 512,
            extent: 8.0,
            waist: 1.0,
        }
    }
}

/// Complex field on a grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

impl GridField {
    /// `Σ conj(self)·other · dA`.
    pub fn overlap(&self, other: &GridField) -> Complex64 {
        let n = self.grid.n;
        let rows: Vec<Complex64> = self
            .values
            .par_chunks(n)
            .zip(other.values.par_chunks(n))
            .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u.conj() * v).sum())
            .collect();
        rows.iter().sum::<Complex64>() * self.grid.pixel_area()
    }
}

/// LG mode with p = 0: `(r√2/w₀)^|ℓ| e^{−r²/w₀²} e^{iℓφ}`, normalized on the grid.
pub fn lg_mode(ell: impl Into<OamIndex>, grid: &GridSpec) -> GridField {
    let ell = ell.into().0;
    let n = grid.n;
    let scale = std::f64::consts::SQRT_2 / grid.waist;
    let w2 = grid.waist * grid.waist;
    let order = ell.unsigned_abs() as u32;
    let mut values = vec![Complex64::new(0.0, 0.0); n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(row, out)| {
        for (col, v) in out.iter_mut().enumerate() {
            let (x, y) = grid.coords(row, col);
            // r^|ℓ| e^{iℓφ} = (x ± iy)^|ℓ|
            let z = if ell >= 0 {
                Complex64::new(x * scale, y * scale)
            } else {
                Complex64::new(x * scale, -y * scale)
            };
            *v = z.powu(order) * (-(x * x + y * y) / w2).exp();
        }
    });
    let row_norms: Vec<f64> = values
        .par_chunks(n)
        .map(|r| r.iter().map(|v| v.norm_sqr()).sum())
        .collect();
    let norm = (row_norms.iter().sum::<f64>() * grid.pixel_area()).sqrt();
    values.par_iter_mut().for_each(|v| *v /= norm);
    GridField { grid: *grid, values }
}

/// Real intensity image on a grid, row-major from the top row.
#[derive(Debug, Clone, PartialEq)]
pub struct Intensity {
    pub grid: GridSpec,
    pub values: Vec<f64>,
}

impl Intensity {
    pub fn zeros(grid: GridSpec) -> Self {
        Intensity {
            values: vec![0.0; grid.n * grid.n],
            grid,
        }
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.grid.n + col]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Bilinear sample at a physical point; zero outside the pixel centers.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let n = self.grid.n;
        let (rf, cf) = self.grid.fractional_index(x, y);
        if rf < 0.0 || cf < 0.0 || rf > (n - 1) as f64 || cf > (n - 1) as f64 {
            return 0.0;
        }
        let r0 = (rf.floor() as usize).min(n - 2);
        let c0 = (cf.floor() as usize).min(n - 2);
        let (tr, tc) = (rf - r0 as f64, cf - c0 as f64);
        let top = self.at(r0, c0) * (1.0 - tc) + self.at(r0, c0 + 1) * tc;
        let bottom = self.at(r0 + 1, c0) * (1.0 - tc) + self.at(r0 + 1, c0 + 1) * tc;
        top * (1.0 - tr) + bottom * tr
    }
}

/// `I(r) = Σᵢⱼ ρᵢⱼ uᵢ(r) conj(uⱼ(r))`, clipped at zero.
pub fn render_state(rho: &DensityMatrix, grid: &GridSpec) -> Intensity {
    let modes: Vec<GridField> = rho.basis().indices().iter().map(|&ell| lg_mode(ell, grid)).collect();
    render_with_modes(rho, &modes, grid)
}

/// Same as [`render_state`] with precomputed modes in basis order.
pub fn render_with_modes(rho: &DensityMatrix, modes: &[GridField], grid: &GridSpec) -> Intensity {
    let n = grid.n;
    let d = rho.dim();
    assert_eq!(modes.len(), d, "one mode per basis entry");
    let m = rho.matrix();
    let mut values = vec![0.0; n * n];
    values.par_chunks_mut(n).enumerate().for_each(|(row, out)| {
        let mut u = vec![Complex64::new(0.0, 0.0); d];
        for (col, v) in out.iter_mut().enumerate() {
            let idx = row * n + col;
            for (k, mode) in modes.iter().enumerate() {
                u[k] = mode.values[idx];
            }
            let mut acc = 0.0;
            for i in 0..d {
                acc += m[(i, i)].re * u[i].norm_sqr();
                for j in (i + 1)..d {
                    acc += 2.0 * (m[(i, j)] * u[i] * u[j].conj()).re;
                }
            }
            *v = acc.max(0.0);
        }
    });
    Intensity { grid: *grid, values }
}

/// Pixel-area-weighted sum of an intensity image.
pub fn port_power(intensity: &Intensity) -> f64 {
    let n = intensity.grid.n;
    let rows: Vec<f64> = intensity.values.chunks(n).map(|r| r.iter().sum()).collect();
    rows.iter().sum::<f64>() * intensity.grid.pixel_area()
}

/// Azimuthal profile `∫ I(r, φ) r dr` over the band, in 360 one-degree bins
/// centered on whole degrees.
pub fn angular_profile(intensity: &Intensity, radius_band: (f64, f64)) -> Result<Vec<f64>> {
    let (r_lo, r_hi) = radius_band;
    if !(r_lo >= 0.0 && r_hi > r_lo && r_hi <= intensity.grid.half_width()) {
        return Err(Error::EmptyBand(r_lo, r_hi));
    }
    let dr = intensity.grid.pixel_size() / 2.0;
    let steps = ((r_hi - r_lo) / dr).ceil().max(1.0) as usize;
    let dr = (r_hi - r_lo) / steps as f64;
    let bin = std::f64::consts::TAU / ANGULAR_BINS as f64;
    let profile = (0..ANGULAR_BINS)
        .into_par_iter()
        .map(|k| {
            let mut acc = 0.0;
            for s in 0..SUBSAMPLES_PER_BIN {
                let offset = (s as f64 + 0.5) / SUBSAMPLES_PER_BIN as f64 - 0.5;
                let phi = (k as f64 + offset) * bin;
                let (sin, cos) = phi.sin_cos();
                for step in 0..steps {
                    let r = r_lo + (step as f64 + 0.5) * dr;
                    acc += intensity.sample(r * cos, r * sin) * r * dr;
                }
            }
            acc / SUBSAMPLES_PER_BIN as f64
        })
        .collect();
    Ok(profile)
}

/// Number of petals in the band.
///
/// The azimuthal profile is smoothed with a 5-bin circular moving average;
/// local maxima (flat tops count once) rising less than 5% of the profile
/// peak above the profile minimum are ignored.
pub fn angular_lobe_count(intensity: &Intensity, radius_band: (f64, f64)) -> Result<usize> {
    let profile = angular_profile(intensity, radius_band)?;
    Ok(count_circular_maxima(&smooth_circular(&profile, SMOOTHING_WINDOW)))
}

fn smooth_circular(profile: &[f64], window: usize) -> Vec<f64> {
    let len = profile.len();
    let half = window / 2;
    (0..len)
        .map(|i| (0..window).map(|k| profile[(i + len + k - half) % len]).sum::<f64>() / window as f64)
        .collect()
}

fn count_circular_maxima(profile: &[f64]) -> usize {
    let peak = profile.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = profile.iter().copied().fold(f64::INFINITY, f64::min);
    if !(peak > 0.0) {
        return 0;
    }
    let tie = 1e-12 * peak;
    let threshold = LOBE_THRESHOLD * peak;
    // Collapse runs of (numerically) equal values into plateaus.
    let mut plateaus: Vec<f64> = Vec::new();
    for &v in profile {
        match plateaus.last() {
            Some(&last) if (v - last).abs() <= tie => {}
            _ => plateaus.push(v),
        }
    }
    if plateaus.len() > 1 && (plateaus[0] - plateaus[plateaus.len() - 1]).abs() <= tie {
        plateaus.pop();
    }
    let m = plateaus.len();
    if m < 3 {
        return 0;
    }
    (0..m)
        .filter(|&i| {
            let v = plateaus[i];
            v > plateaus[(i + m - 1) % m] && v > plateaus[(i + 1) % m] && v - floor >= threshold
        })
        .count()
}

/// Binary PGM (`P5`), each pixel `round(255·I/I_max)`; all-zero when `I_max = 0`.
pub fn to_pgm(intensity: &Intensity) -> Vec<u8> {
    let n = intensity.grid.n;
    let max = intensity.max();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.reserve(n * n);
    out.extend(intensity.values.iter().map(|&v| {
        if max > 0.0 {
            (255.0 * v / max).round().clamp(0.0, 255.0) as u8
        } else {
            0
        }
    }));
    out
}

/// Parses a square 8-bit `P5` image written by [`to_pgm`] back into an
/// intensity scaled to `[0, 1]`.
pub fn from_pgm(bytes: &[u8], grid: &GridSpec) -> Result<Intensity> {
    let bad = |m: &str| Error::MalformedImage(m.to_string());
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header is not ASCII"))?);
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(bad("magic is not P5"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (w, h, maxval) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
    if w != grid.n || h != grid.n {
        return Err(bad("image size does not match grid"));
    }
    if maxval != 255 {
        return Err(bad("only 8-bit images are supported"));
    }
    let data = bytes.get(pos..pos + w * h).ok_or_else(|| bad("truncated pixel data"))?;
    Ok(Intensity {
        grid: *grid,
        values: data.iter().map(|&b| b as f64 / 255.0).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{incoherent_mix, make_superposition, pure_density, BasisSpec, Superposition};
    use approx::assert_abs_diff_eq;

    fn small() -> GridSpec {
        GridSpec::new(128, 6.0, 1.0).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn petal(ell: i64) -> DensityMatrix {
        let s = make_superposition(&[(-ell, c(1.0)), (ell, c(1.0))]).unwrap();
        pure_density(&s, &BasisSpec::new([-ell, ell]).unwrap()).unwrap()
    }

    #[test]
    fn grid_validation_and_centering() {
        assert!(GridSpec::new(63, 8.0, 1.0).is_err());
        assert!(GridSpec::new(32, 8.0, 1.0).is_err());
        assert!(GridSpec::new(64, 0.0, 1.0).is_err());
        let g = GridSpec::new(64, 4.0, 1.0).unwrap();
        let (x, y) = g.coords(31, 31);
        let (x2, y2) = g.coords(32, 32);
        assert_abs_diff_eq!(x + x2, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(y + y2, 0.0, epsilon = 1e-15);
        assert!(y > 0.0 && x < 0.0);
    }

    #[test]
    fn gaussian_peaks_at_center() {
        let g = small();
        let rho = pure_density(&Superposition::basis_state(0), &BasisSpec::new([0]).unwrap()).unwrap();
        let img = render_state(&rho, &g);
        let (imax, _) = img
            .values
            .iter()
            .enumerate()
            .fold((0, 0.0), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
        let (row, col) = (imax / g.n(), imax % g.n());
        assert!([63, 64].contains(&row) && [63, 64].contains(&col));
    }

    #[test]
    fn ring_peak_radius_matches_waist() {
        // Maximum of r^{2|ℓ|} e^{-2r²/w²} sits at r = w·sqrt(|ℓ|/2).
        let g = GridSpec::default();
        let field = lg_mode(2, &g);
        let (imax, _) = field.values.iter().enumerate().fold((0, 0.0), |(bi, bv), (i, v)| {
            if v.norm_sqr() > bv {
                (i, v.norm_sqr())
            } else {
                (bi, bv)
            }
        });
        let (x, y) = g.coords(imax / g.n(), imax % g.n());
        assert!(((x * x + y * y).sqrt() - 1.0).abs() <= g.pixel_size());
    }

    #[test]
    fn modes_are_normalized() {
        let g = small();
        for ell in [-3, 0, 4] {
            let f = lg_mode(ell, &g);
            assert_abs_diff_eq!(f.overlap(&f).re, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn render_integrates_to_trace() {
        let g = small();
        let img = render_state(&petal(2), &g);
        assert_abs_diff_eq!(port_power(&img), 1.0, epsilon = 1e-6);
        assert_eq!(port_power(&Intensity::zeros(g)), 0.0);
    }

    #[test]
    fn coherent_petals_versus_incoherent_ring() {
        let g = GridSpec::new(256, 6.0, 1.0).unwrap();
        let band = (0.3, 2.5);
        assert_eq!(angular_lobe_count(&render_state(&petal(2), &g), band).unwrap(), 4);
        assert_eq!(angular_lobe_count(&render_state(&petal(1), &g), band).unwrap(), 2);

        let basis = BasisSpec::new([-2, 2]).unwrap();
        let lo = pure_density(&Superposition::basis_state(-2), &basis).unwrap();
        let hi = pure_density(&Superposition::basis_state(2), &basis).unwrap();
        let mix = incoherent_mix(&[(0.5, &lo), (0.5, &hi)]).unwrap();
        assert_eq!(angular_lobe_count(&render_state(&mix, &g), band).unwrap(), 0);

        let single = pure_density(&Superposition::basis_state(3), &BasisSpec::new([3]).unwrap()).unwrap();
        assert_eq!(angular_lobe_count(&render_state(&single, &g), band).unwrap(), 0);
    }

    #[test]
    fn empty_band_is_rejected() {
        let img = Intensity::zeros(small());
        assert!(matches!(
            angular_lobe_count(&img, (1.0, 1.0)),
            Err(Error::EmptyBand(..))
        ));
        assert!(matches!(
            angular_lobe_count(&img, (-1.0, 1.0)),
            Err(Error::EmptyBand(..))
        ));
        assert!(matches!(
            angular_lobe_count(&img, (1.0, 7.0)),
            Err(Error::EmptyBand(..))
        ));
        assert_eq!(angular_lobe_count(&img, (1.0, 2.0)).unwrap(), 0);
    }

    #[test]
    fn plateau_maxima_count_once() {
        let mut p = vec![0.0; 12];
        p[3] = 1.0;
        p[4] = 1.0;
        p[9] = 1.0;
        assert_eq!(count_circular_maxima(&p), 2);
        p[11] = 1.0;
        p[0] = 1.0;
        assert_eq!(count_circular_maxima(&p), 3);
    }

    #[test]
    fn pgm_header_and_scaling() {
        let g = GridSpec::new(64, 4.0, 1.0).unwrap();
        let mut img = Intensity::zeros(g);
        img.values[0] = 2.0;
        img.values[1] = 1.0;
        let bytes = to_pgm(&img);
        let header = b"P5\n64 64\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        assert_eq!(bytes.len(), header.len() + 64 * 64);
        assert_eq!(bytes[header.len()], 255);
        assert_eq!(bytes[header.len() + 1], 128);
        let back = from_pgm(&bytes, &g).unwrap();
        assert_eq!(back.values[0], 1.0);

        let zero = to_pgm(&Intensity::zeros(g));
        assert!(zero[header.len()..].iter().all(|&b| b == 0));
        assert!(from_pgm(b"P6\n64 64\n255\n", &g).is_err());
    }
}

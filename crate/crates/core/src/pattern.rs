//! Scalar summaries of spatial heterogeneity in a field.

use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::grid::Field;

/// Population coefficient of variation `std / mean`. Returns 0 for a field with zero mean.
pub fn coefficient_of_variation(z: &Field) -> f64 {
    let mean = z.mean();
    if mean == 0.0 {
        return 0.0;
    }
    let var = z
        .values()
        .iter()
        .map(|&s| (s - mean) * (s - mean))
        .sum::<f64>()
        / z.values().len() as f64;
    var.sqrt() / mean.abs()
}

/// Radially averaged power spectrum of the mean-removed field.
///
/// Bin `b` collects wavenumbers with `|k| / dk` rounded to `b`, where
/// `dk = 2π / max(lx, ly)`. Returns `(wavenumber, mean power)` per nonempty bin,
/// starting at bin 1 so the zero mode is excluded.
pub fn radial_power_spectrum(z: &Field) -> Vec<(f64, f64)> {
    let g = z.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mean = z.mean();
    let mut buf: Vec<Complex<f64>> = z
        .values()
        .iter()
        .map(|&s| Complex::new(s - mean, 0.0))
        .collect();

    let mut planner = FftPlanner::new();
    let row = planner.plan_fft_forward(nx);
    for r in buf.chunks_exact_mut(nx) {
        row.process(r);
    }
    let col = planner.plan_fft_forward(ny);
    let mut column = vec![Complex::new(0.0, 0.0); ny];
    for i in 0..nx {
        for j in 0..ny {
            column[j] = buf[j * nx + i];
        }
        col.process(&mut column);
        for j in 0..ny {
            buf[j * nx + i] = column[j];
        }
    }

    let dkx = 2.0 * PI / g.lx();
    let dky = 2.0 * PI / g.ly();
    let dk = dkx.min(dky);
    let signed = |m: usize, len: usize| {
        if m <= len / 2 {
            m as f64
        } else {
            m as f64 - len as f64
        }
    };
    let nbins = ((dkx * (nx / 2) as f64).hypot(dky * (ny / 2) as f64) / dk).round() as usize + 1;
    let mut power = vec![0.0; nbins];
    let mut count = vec![0usize; nbins];
    for j in 0..ny {
        let ky = dky * signed(j, ny);
        for i in 0..nx {
            let kx = dkx * signed(i, nx);
            let bin = (kx.hypot(ky) / dk).round() as usize;
            power[bin] += buf[j * nx + i].norm_sqr();
            count[bin] += 1;
        }
    }
    (1..nbins)
        .filter(|&b| count[b] > 0)
        .map(|b| (b as f64 * dk, power[b] / count[b] as f64))
        .collect()
}

/// Wavelength `2π / k` of the strongest nonzero radial mode, or `None` for a
/// spatially uniform field.
pub fn dominant_wavelength(z: &Field) -> Option<f64> {
    let spectrum = radial_power_spectrum(z);
    let (k, p) = spectrum.into_iter().fold(
        (0.0, 0.0),
        |best, (k, p)| if p > best.1 { (k, p) } else { best },
    );
    (p > 0.0).then(|| 2.0 * PI / k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cv_of_constant_and_two_level_fields() {
        let g = make_grid(4.0, 4.0, 4, 4).unwrap();
        assert_eq!(coefficient_of_variation(&Field::constant(g, 3.0)), 0.0);
        let z = Field::from_index_fn(g, |i, _| if i % 2 == 0 { 1.0 } else { 3.0 });
        assert_abs_diff_eq!(coefficient_of_variation(&z), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn uniform_field_has_no_wavelength() {
        let g = make_grid(10.0, 10.0, 32, 32).unwrap();
        assert_eq!(dominant_wavelength(&Field::constant(g, 2.0)), None);
    }

    #[test]
    fn recovers_plane_wave_wavelength() {
        let g = make_grid(20.0, 20.0, 64, 64).unwrap();
        for (mx, my) in [(4usize, 0usize), (0, 2), (3, 4)] {
            let z = Field::from_index_fn(g, |i, j| {
                let phase = 2.0 * PI * (mx as f64 * i as f64 / 64.0 + my as f64 * j as f64 / 64.0);
                1.0 + phase.cos()
            });
            let expected = 20.0 / ((mx * mx + my * my) as f64).sqrt();
            assert_abs_diff_eq!(dominant_wavelength(&z).unwrap(), expected, epsilon = 1e-9);
        }
    }

    #[test]
    fn longer_waves_give_longer_wavelengths() {
        let g = make_grid(20.0, 20.0, 60, 60).unwrap();
        let short = Field::from_fn(g, |x, _| (2.0 * PI * x / 2.5).sin());
        let long = Field::from_fn(g, |x, _| (2.0 * PI * x / 10.0).sin());
        assert!(dominant_wavelength(&long).unwrap() > dominant_wavelength(&short).unwrap());
    }
}

//! Uplink pilot schedule: DFT reflection patterns, channel stacking and noisy
//! pilot reception at the BS.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{CMatrix, CVector, ChannelRealization};
use crate::config::SystemConfig;
use crate::error::{dim_check, Error, Result};
use crate::estimation::linear_snr;

/// T x (N+1) reflection schedule. Row t is `[1, φ_t^T]`; column 0 carries the
/// direct channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotMatrix {
    phi: CMatrix,
}

impl PilotMatrix {
    pub fn t(&self) -> usize {
        self.phi.nrows()
    }

    /// IRS element count (one less than the column count).
    pub fn n(&self) -> usize {
        self.phi.ncols() - 1
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.phi
    }

    /// IRS pattern of slot `t` (0-based), without the leading 1.
    pub fn irs_pattern(&self, t: usize) -> CVector {
        self.phi.row(t).columns(1, self.n()).transpose()
    }

    /// Writes the matrix as `row,col,re,im` lines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "row,col,re,im")?;
        for t in 0..self.t() {
            for n in 0..=self.n() {
                let z = self.phi[(t, n)];
                writeln!(w, "{t},{n},{:?},{:?}", z.re, z.im)?;
            }
        }
        Ok(())
    }
}

/// `[Φ]_{t,n} = exp(-j 2π t n / (N+1))` (0-based), the first `t_len` rows of the
/// (N+1)-point DFT.
pub fn dft_phase_matrix(t_len: usize, n: usize) -> Result<PilotMatrix> {
    if t_len == 0 {
        return Err(Error::Precondition("pilot length must be >= 1".into()));
    }
    let size = (n + 1) as u64;
    let phi = CMatrix::from_fn(t_len, n + 1, |t, k| {
        // Reduce the exponent mod N+1 first so the phase set is exactly the N+1 roots.
        let e = (t as u64 * k as u64) % size;
        Complex64::from_polar(1.0, -2.0 * PI * e as f64 / size as f64)
    });
    Ok(PilotMatrix { phi })
}

/// Received pilots stacked over all T slots.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    /// Length T*M, slot-major.
    pub y_p: CVector,
    pub pilot_amplitude: f64,
    pub realization_id: u64,
}

/// `h = [h_d; v_1; ...; v_N]`.
pub fn stack_channels(ch: &ChannelRealization) -> CVector {
    stack_parts(&ch.h_d, &ch.v)
}

pub fn stack_parts(h_d: &CVector, v: &CMatrix) -> CVector {
    let m = h_d.len();
    CVector::from_fn(m * (v.ncols() + 1), |i, _| {
        let (block, row) = (i / m, i % m);
        if block == 0 {
            h_d[row]
        } else {
            v[(row, block - 1)]
        }
    })
}

/// Inverse of [`stack_parts`].
pub fn unstack_channels(h: &CVector, m: usize, n: usize) -> Result<(CVector, CMatrix)> {
    dim_check("stacked channel length", (n + 1) * m, h.len())?;
    let h_d = h.rows(0, m).into_owned();
    let v = CMatrix::from_fn(m, n, |row, col| h[(col + 1) * m + row]);
    Ok((h_d, v))
}

/// `P = X (Φ ⊗ I_M)` with the constant pilot `x_t = amplitude`.
pub fn observation_matrix(phi: &PilotMatrix, m: usize, amplitude: f64) -> CMatrix {
    let (t_len, cols) = (phi.t(), phi.n() + 1);
    let mut p = CMatrix::zeros(t_len * m, cols * m);
    for t in 0..t_len {
        for k in 0..cols {
            let g = phi.phi[(t, k)] * amplitude;
            for i in 0..m {
                p[(t * m + i, k * m + i)] = g;
            }
        }
    }
    p
}

/// `sqrt(P_pilot / P_noise)` in linear units.
pub fn pilot_amplitude(cfg: &SystemConfig) -> f64 {
    linear_snr(cfg.pilot_dbm, cfg.noise_dbm).sqrt()
}

/// Noise-free pilots, computed slot by slot without forming `P`.
pub fn noiseless_pilots(ch: &ChannelRealization, phi: &PilotMatrix, amplitude: f64) -> Result<CVector> {
    dim_check("pilot matrix IRS size", ch.n(), phi.n())?;
    let m = ch.m();
    let mut y = CVector::zeros(phi.t() * m);
    for t in 0..phi.t() {
        let rx = (&ch.h_d * phi.phi[(t, 0)] + &ch.v * phi.irs_pattern(t)) * Complex64::from(amplitude);
        y.rows_mut(t * m, m).copy_from(&rx);
    }
    Ok(y)
}

/// One CN(0, 1) sample.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn simulate_pilot_rx<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    phi: &PilotMatrix,
    cfg: &SystemConfig,
    realization_id: u64,
    rng: &mut R,
) -> Result<PilotObservation> {
    dim_check("pilot matrix IRS size vs config", cfg.n(), phi.n())?;
    let amplitude = pilot_amplitude(cfg);
    let mut y_p = noiseless_pilots(ch, phi, amplitude)?;
    for y in y_p.iter_mut() {
        *y += complex_normal(rng);
    }
    Ok(PilotObservation { y_p, pilot_amplitude: amplitude, realization_id })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_channel;
    use crate::config::Profile;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn desk() -> SystemConfig {
        SystemConfig::for_profile(Profile::Desk)
    }

    #[test]
    fn two_point_dft() {
        let p = dft_phase_matrix(2, 1).unwrap();
        let expected = [[1.0, 1.0], [1.0, -1.0]];
        for t in 0..2 {
            for n in 0..2 {
                assert!((p.matrix()[(t, n)] - Complex64::from(expected[t][n])).norm() < 1e-15);
            }
        }
        assert!(dft_phase_matrix(0, 3).is_err());
    }

    #[test]
    fn square_dft_is_orthogonal() {
        let p = dft_phase_matrix(101, 100).unwrap();
        let gram = p.matrix().adjoint() * p.matrix();
        let target = CMatrix::identity(101, 101) * Complex64::from(101.0);
        assert!((gram - &target).norm() < 1e-9 * target.norm());
    }

    #[test]
    fn truncated_dft_rank() {
        let p = dft_phase_matrix(64, 100).unwrap();
        assert_eq!((p.t(), p.n()), (64, 100));
        assert_eq!(p.matrix().clone().rank(1e-8), 64);
    }

    #[test]
    fn at_most_n_plus_one_distinct_values() {
        let p = dft_phase_matrix(40, 16).unwrap();
        let distinct: HashSet<(i64, i64)> = p
            .matrix()
            .iter()
            .map(|z| ((z.re * 1e9).round() as i64, (z.im * 1e9).round() as i64))
            .collect();
        assert!(distinct.len() <= 17);
        assert!(p.matrix().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert!(p.matrix().column(0).iter().all(|z| (z - Complex64::from(1.0)).norm() < 1e-15));
    }

    #[test]
    fn stacking_layout() {
        let h_d = CVector::from_element(1, Complex64::from(2.0));
        let v = CMatrix::from_element(1, 1, Complex64::from(3.0));
        let h = stack_parts(&h_d, &v);
        assert_eq!(h.as_slice(), &[Complex64::from(2.0), Complex64::from(3.0)]);
        let (hd2, v2) = unstack_channels(&h, 1, 1).unwrap();
        assert_eq!((hd2, v2), (h_d, v));
        assert!(unstack_channels(&h, 2, 1).is_err());

        let paper = SystemConfig::for_profile(Profile::Paper);
        let ch = draw_channel(&paper, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(stack_channels(&ch).len(), 1010);
    }

    #[test]
    fn observation_matrix_structure() {
        let p = dft_phase_matrix(1, 0).unwrap();
        assert_eq!(observation_matrix(&p, 2, 1.0), CMatrix::identity(2, 2));

        let p = dft_phase_matrix(17, 16).unwrap();
        let obs = observation_matrix(&p, 4, 3.0);
        let gram = obs.adjoint() * &obs;
        let target = CMatrix::identity(68, 68) * Complex64::from(9.0 * 17.0);
        assert!((gram - &target).norm() < 1e-9 * target.norm());
        for t in 0..17 {
            for k in 0..17 {
                for i in 0..4 {
                    assert!((obs[(t * 4 + i, k * 4 + i)].norm() - 3.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_channel_gives_unit_variance_noise() {
        let cfg = desk();
        let mut ch = draw_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        ch.h_d.fill(Complex64::from(0.0));
        ch.v.fill(Complex64::from(0.0));
        let p = dft_phase_matrix(cfg.pilot_len, cfg.n()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut acc = 0.0;
        let mut count = 0;
        for _ in 0..300 {
            let obs = simulate_pilot_rx(&ch, &p, &cfg, 0, &mut rng).unwrap();
            acc += obs.y_p.norm_squared();
            count += obs.y_p.len();
        }
        let var = acc / count as f64;
        assert!((var - 1.0).abs() < 0.03, "variance {var}");
    }

    #[test]
    fn slotwise_matches_kronecker_form() {
        let cfg = desk();
        let ch = draw_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        for t_len in [cfg.pilot_len, 10] {
            let p = dft_phase_matrix(t_len, cfg.n()).unwrap();
            let amp = pilot_amplitude(&cfg);
            let y = noiseless_pilots(&ch, &p, amp).unwrap();
            let y_ref = observation_matrix(&p, cfg.m, amp) * stack_channels(&ch);
            assert_eq!(y.len(), t_len * cfg.m);
            assert!((&y - &y_ref).norm() <= 1e-12 * y_ref.norm());
        }
    }

    #[test]
    fn paper_dimensions_and_reproducibility() {
        let cfg = SystemConfig::for_profile(Profile::Paper);
        let ch = draw_channel(&cfg, &mut ChaCha8Rng::seed_from_u64(6)).unwrap();
        let p = dft_phase_matrix(101, 100).unwrap();
        let a = simulate_pilot_rx(&ch, &p, &cfg, 6, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        let b = simulate_pilot_rx(&ch, &p, &cfg, 6, &mut ChaCha8Rng::seed_from_u64(77)).unwrap();
        assert_eq!(a.y_p.len(), 1010);
        assert_eq!(a, b);
        let wrong = dft_phase_matrix(17, 16).unwrap();
        assert!(simulate_pilot_rx(&ch, &wrong, &cfg, 6, &mut ChaCha8Rng::seed_from_u64(77)).is_err());
    }

    #[test]
    fn csv_export() {
        let mut buf = Vec::new();
        dft_phase_matrix(2, 1).unwrap().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "row,col,re,im");
        assert!(lines[1].starts_with("0,0,1.0,"));
    }

    proptest! {
        #[test]
        fn stack_round_trip(m in 1usize..5, n in 0usize..6, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = CVector::from_fn((n + 1) * m, |_, _| complex_normal(&mut rng));
            let (h_d, v) = unstack_channels(&h, m, n).unwrap();
            prop_assert_eq!(stack_parts(&h_d, &v), h);
        }
    }
}

//! Disk-window samplers for Poisson, Ginibre and α-Ginibre fields.
//!
//! Ginibre realizations are drawn through the radial (Kostlan) decomposition:
//! the squared moduli are independent `Gamma(k, 1) / (π·density)` variables,
//! `k = 1, 2, …`. Angles are drawn uniformly, so joint angular correlations
//! are not reproduced; every functional used downstream depends on distances
//! to the window center only.
//!
//! An α-Ginibre field with α = −1/κ is the superposition of κ independent
//! determinantal fields with kernel `G/κ`, where `G` is the Ginibre kernel of
//! the full density. Each such copy keeps every radial mode independently with
//! probability 1/κ, so the sampler draws a `Binomial(κ, 1/κ)` multiplicity per
//! mode and one Gamma modulus per retained copy.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Poisson};
use statrs::function::gamma::gamma_lr;

use crate::params::Repulsion;

/// Tail mass of `Gamma(K_max, 1)` left inside the window.
pub const MODE_TRUNCATION: f64 = 1e-7;

/// A finite realization inside a disk window centered at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub radii: Vec<f64>,
    pub angles: Vec<f64>,
    pub active: Vec<bool>,
    /// Superposition copy each point belongs to (0 for single-copy fields).
    pub copy_index: Vec<u32>,
    pub window_radius: f64,
    pub density: f64,
}

impl PointSet {
    pub fn empty(window_radius: f64, density: f64) -> Self {
        PointSet {
            radii: Vec::new(),
            angles: Vec::new(),
            active: Vec::new(),
            copy_index: Vec::new(),
            window_radius,
            density,
        }
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    fn push(&mut self, radius: f64, angle: f64, copy: u32) {
        self.radii.push(radius);
        self.angles.push(angle);
        self.active.push(true);
        self.copy_index.push(copy);
    }

    /// True when all radii lie in the window and the columns agree in length.
    pub fn is_consistent(&self) -> bool {
        let n = self.radii.len();
        self.angles.len() == n
            && self.active.len() == n
            && self.copy_index.len() == n
            && self
                .radii
                .iter()
                .all(|&r| (0.0..=self.window_radius).contains(&r))
            && self.angles.iter().all(|&a| (0.0..2.0 * PI).contains(&a))
    }

    /// Writes `copy_index,radius_m,angle_rad,active` rows.
    pub fn write_csv(&self, mut out: impl Write, header: bool) -> io::Result<()> {
        if header {
            writeln!(out, "copy_index,radius_m,angle_rad,active")?;
        }
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{:e},{:e},{}",
                self.copy_index[i], self.radii[i], self.angles[i], self.active[i]
            )?;
        }
        Ok(())
    }
}

/// Reusable sampler for one (repulsion, density, window) triple.
#[derive(Debug, Clone)]
pub struct FieldSampler {
    kind: Kind,
    density: f64,
    window_radius: f64,
}

#[derive(Debug, Clone)]
enum Kind {
    Empty,
    Poisson(Poisson<f64>),
    Ginibre {
        kappa: u32,
        moduli: Vec<Gamma<f64>>,
        multiplicity: Option<Binomial>,
    },
}

impl FieldSampler {
    pub fn new(repulsion: Repulsion, density: f64, window_radius: f64) -> Self {
        assert!(density >= 0.0 && window_radius > 0.0);
        let mean = PI * density * window_radius * window_radius;
        let kind = if density == 0.0 {
            Kind::Empty
        } else {
            match repulsion {
                Repulsion::Poisson => Kind::Poisson(Poisson::new(mean).expect("positive mean")),
                Repulsion::Ginibre { kappa } => {
                    assert!(kappa >= 1);
                    let k_max = mode_count(mean);
                    Kind::Ginibre {
                        kappa,
                        moduli: (1..=k_max)
                            .map(|k| Gamma::new(k as f64, 1.0).expect("valid shape"))
                            .collect(),
                        multiplicity: (kappa > 1).then(|| {
                            Binomial::new(u64::from(kappa), 1.0 / f64::from(kappa))
                                .expect("valid binomial")
                        }),
                    }
                }
            }
        };
        FieldSampler {
            kind,
            density,
            window_radius,
        }
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    /// Appends the radii of one realization to `out` without drawing angles.
    pub fn sample_radii<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        self.sample_with(rng, |r, _| out.push(r));
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PointSet {
        let mut set = PointSet::empty(self.window_radius, self.density);
        let mut raw = Vec::new();
        self.sample_with(rng, |r, c| raw.push((r, c)));
        for (r, c) in raw {
            let angle = rng.random::<f64>() * 2.0 * PI;
            set.push(r, angle, c);
        }
        set
    }

    fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, mut emit: impl FnMut(f64, u32)) {
        let r2 = self.window_radius * self.window_radius;
        match &self.kind {
            Kind::Empty => {}
            Kind::Poisson(count) => {
                let n = count.sample(rng) as u64;
                for _ in 0..n {
                    emit(self.window_radius * (1.0 - rng.random::<f64>()).sqrt(), 0);
                }
            }
            Kind::Ginibre {
                kappa,
                moduli,
                multiplicity,
            } => {
                let scale = 1.0 / (PI * self.density);
                let mut copies: Vec<u32> = Vec::new();
                for gamma in moduli {
                    let b = match multiplicity {
                        None => 1,
                        Some(binomial) => binomial.sample(rng) as usize,
                    };
                    if b == 0 {
                        continue;
                    }
                    if *kappa > 1 {
                        choose_copies(rng, *kappa, b, &mut copies);
                    }
                    for j in 0..b {
                        let sq = gamma.sample(rng) * scale;
                        if sq <= r2 {
                            let copy = if *kappa > 1 { copies[j] } else { 0 };
                            emit(sq.sqrt(), copy);
                        }
                    }
                }
            }
        }
    }
}

/// Number of radial modes `K` with `P[Gamma(K, 1) ≤ mean] < MODE_TRUNCATION`.
pub fn mode_count(mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let mut k = mean.ceil().max(1.0) as usize;
    while gamma_lr(k as f64, mean) >= MODE_TRUNCATION {
        k += 1 + k / 16;
    }
    k
}

/// Draws `b` distinct copy labels out of `kappa` by rejection.
fn choose_copies<R: Rng + ?Sized>(rng: &mut R, kappa: u32, b: usize, out: &mut Vec<u32>) {
    out.clear();
    while out.len() < b {
        let c = rng.random_range(0..kappa);
        if !out.contains(&c) {
            out.push(c);
        }
    }
}

pub fn sample_ppp_disk<R: Rng + ?Sized>(density: f64, window_radius: f64, rng: &mut R) -> PointSet {
    FieldSampler::new(Repulsion::Poisson, density, window_radius).sample(rng)
}

pub fn sample_ginibre_disk<R: Rng + ?Sized>(
    density: f64,
    window_radius: f64,
    rng: &mut R,
) -> PointSet {
    FieldSampler::new(Repulsion::GINIBRE, density, window_radius).sample(rng)
}

pub fn sample_alpha_gpp<R: Rng + ?Sized>(
    density: f64,
    kappa: u32,
    window_radius: f64,
    rng: &mut R,
) -> PointSet {
    FieldSampler::new(Repulsion::Ginibre { kappa }, density, window_radius).sample(rng)
}

/// Independent thinning: keeps each point with probability `load`.
pub fn thin_by_load<R: Rng + ?Sized>(points: PointSet, load: f64, rng: &mut R) -> PointSet {
    assert!((0.0..=1.0).contains(&load));
    let mut out = PointSet::empty(points.window_radius, points.density * load);
    for i in 0..points.len() {
        if rng.random_bool(load) {
            out.push(points.radii[i], points.angles[i], points.copy_index[i]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_density_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_ppp_disk(0.0, 30.0, &mut rng).is_empty());
        assert!(sample_ginibre_disk(0.0, 30.0, &mut rng).is_empty());
    }

    #[test]
    fn kappa_one_reproduces_ginibre_path() {
        let a = sample_alpha_gpp(0.02, 1, 30.0, &mut ChaCha8Rng::seed_from_u64(9));
        let b = sample_ginibre_disk(0.02, 30.0, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn thinning_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let set = sample_ppp_disk(0.02, 30.0, &mut rng);
        let kept = thin_by_load(set.clone(), 1.0, &mut rng);
        assert_eq!(kept.radii, set.radii);
        assert!(thin_by_load(set, 0.0, &mut rng).is_empty());
    }

    #[test]
    fn mode_count_covers_window() {
        let mean = PI * 0.02 * 900.0;
        let k = mode_count(mean);
        assert!(gamma_lr(k as f64, mean) < MODE_TRUNCATION);
        assert!(k > mean as usize);
    }

    #[test]
    fn csv_dump_has_one_row_per_point() {
        let set = sample_alpha_gpp(0.02, 2, 10.0, &mut ChaCha8Rng::seed_from_u64(5));
        let mut buf = Vec::new();
        set.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), set.len() + 1);
        assert!(set.is_consistent());
    }
}

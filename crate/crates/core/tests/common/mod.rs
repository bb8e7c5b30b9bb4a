#![allow(dead_code)]

use micone_core::cones::Cone;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Strictly interior point of the cone.
pub fn interior_primal(c: &Cone, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match *c {
        Cone::NonNeg(n) => (0..n).map(|_| rng.gen_range(0.1..3.0)).collect(),
        Cone::Soc(n) => {
            let x: Vec<f64> = (1..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut v = vec![dot(&x, &x).sqrt() + rng.gen_range(0.1..1.0)];
            v.extend(x);
            v
        }
        Cone::Rsoc(n) => {
            let x: f64 = rng.gen_range(0.2..3.0);
            let y: f64 = rng.gen_range(0.2..3.0);
            let mut z: Vec<f64> = (2..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nz = dot(&z, &z).sqrt().max(1e-12);
            let target = (2.0 * x * y).sqrt() * rng.gen_range(0.0..0.9);
            z.iter_mut().for_each(|v| *v *= target / nz);
            let mut v = vec![x, y];
            v.extend(z);
            v
        }
        Cone::Exp => {
            let y: f64 = rng.gen_range(0.2..2.0);
            let x: f64 = rng.gen_range(-2.0..1.0);
            vec![x, y, y * (x / y).exp() + rng.gen_range(0.1..1.0)]
        }
        Cone::Pow(a) => {
            let x: f64 = rng.gen_range(0.2..3.0);
            let y: f64 = rng.gen_range(0.2..3.0);
            vec![x, y, x.powf(a) * y.powf(1.0 - a) * rng.gen_range(-0.9..0.9)]
        }
    }
}

/// Strictly interior point of the dual cone.
pub fn interior_dual(c: &Cone, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match *c {
        Cone::NonNeg(_) | Cone::Soc(_) | Cone::Rsoc(_) => interior_primal(c, rng),
        Cone::Exp => {
            let u: f64 = -rng.gen_range(0.2..2.0);
            let v: f64 = rng.gen_range(-1.0..2.0);
            vec![u, v, -u * (v / u).exp() / std::f64::consts::E + rng.gen_range(0.1..1.0)]
        }
        Cone::Pow(a) => {
            let u: f64 = rng.gen_range(0.2..3.0);
            let v: f64 = rng.gen_range(0.2..3.0);
            let w = (u / a).powf(a) * (v / (1.0 - a)).powf(1.0 - a) * rng.gen_range(-0.9..0.9);
            vec![u, v, w]
        }
    }
}

pub fn random_cones(rng: &mut ChaCha8Rng, families: &[u8]) -> Vec<Cone> {
    let k = rng.gen_range(1..=3);
    (0..k)
        .map(|_| match families[rng.gen_range(0..families.len())] {
            0 => Cone::NonNeg(rng.gen_range(1..=3)),
            1 => Cone::Soc(rng.gen_range(2..=4)),
            2 => Cone::Rsoc(rng.gen_range(3..=4)),
            3 => Cone::Exp,
            _ => Cone::Pow(rng.gen_range(0.2..0.8)),
        })
        .collect()
}

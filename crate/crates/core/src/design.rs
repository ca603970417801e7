//! Space-filling and random designs on axis-aligned boxes.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{invalid, Result};

/// Per-dimension `(min, max)` intervals.
pub type Domain = [(f64, f64)];

fn check_domain(domain: &Domain) -> Result<()> {
    if domain.is_empty() {
        return Err(invalid("domain needs at least one dimension"));
    }
    if domain
        .iter()
        .any(|(a, b)| !(a.is_finite() && b.is_finite() && a < b))
    {
        return Err(invalid("every domain interval must satisfy min < max"));
    }
    Ok(())
}

/// Latin hypercube sample of `n` points: each dimension's values fall in
/// distinct equal-width bins, jittered uniformly within their bin, with
/// independent permutations per dimension.
pub fn lhs_sample<R: Rng + ?Sized>(
    n: usize,
    domain: &Domain,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    check_domain(domain)?;
    if n == 0 {
        return Err(invalid("LHS needs n >= 1"));
    }
    let mut points = vec![vec![0.0; domain.len()]; n];
    let mut perm: Vec<usize> = (0..n).collect();
    for (j, &(a, b)) in domain.iter().enumerate() {
        perm.shuffle(rng);
        let width = (b - a) / n as f64;
        for (i, p) in points.iter_mut().enumerate() {
            let u: f64 = rng.random();
            p[j] = (a + (perm[i] as f64 + u) * width).min(b);
        }
    }
    Ok(points)
}

/// `n` independent uniform points in the box.
pub fn uniform_sample<R: Rng + ?Sized>(
    n: usize,
    domain: &Domain,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    check_domain(domain)?;
    Ok((0..n)
        .map(|_| {
            domain
                .iter()
                .map(|&(a, b)| a + (b - a) * rng.random::<f64>())
                .collect()
        })
        .collect())
}

/// `n` equally spaced points covering `[a, b]` including both ends.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5 * (a + b)],
        _ => (0..n)
            .map(|i| {
                if i + 1 == n {
                    b
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Regular `res × res` grid over a 2-D box, row-major in the second coordinate.
pub fn grid_2d(domain: &Domain, res: usize) -> Result<Vec<Vec<f64>>> {
    check_domain(domain)?;
    if domain.len() != 2 {
        return Err(invalid("grid_2d needs a 2-D domain"));
    }
    let xs = linspace(domain[0].0, domain[0].1, res);
    let ys = linspace(domain[1].0, domain[1].1, res);
    Ok(xs
        .iter()
        .flat_map(|&x| ys.iter().map(move |&y| vec![x, y]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn single_point_lies_in_domain() {
        let mut r = rng::seeded(1);
        let p = lhs_sample(1, &[(2.0, 3.0), (-1.0, 0.0)], &mut r).unwrap();
        assert!(p[0][0] >= 2.0 && p[0][0] <= 3.0 && p[0][1] >= -1.0 && p[0][1] <= 0.0);
    }

    #[test]
    fn one_per_bin() {
        let mut r = rng::seeded(2);
        let mut xs: Vec<f64> = lhs_sample(10, &[(0.0, 10.0)], &mut r)
            .unwrap()
            .into_iter()
            .map(|p| p[0])
            .collect();
        xs.sort_by(f64::total_cmp);
        for (i, x) in xs.iter().enumerate() {
            assert!(*x >= i as f64 && *x < i as f64 + 1.0, "{x} not in bin {i}");
        }
    }

    #[test]
    fn linspace_ends() {
        let v = linspace(-1.0, 1.0, 5);
        assert_eq!(v, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(grid_2d(&[(0.0, 1.0), (0.0, 1.0)], 3).unwrap().len(), 9);
    }

    #[test]
    fn bad_domain() {
        let mut r = rng::seeded(0);
        assert!(lhs_sample(3, &[(1.0, 1.0)], &mut r).is_err());
        assert!(uniform_sample(3, &[], &mut r).is_err());
    }
}

use approx::assert_relative_eq;
use proptest::prelude::*;

use loghold::fields::{Cellular, LinearStrain, Shear, VelocityField};
use loghold::flow::{advect, bilipschitz_check, inverse_trajectory, lipschitz_budget, TimeGrid};
use loghold::modcont::{geometric_radii, sandwich_bounds};
use loghold::Point;

/// Largest singular value of a finite-difference Jacobian, maximized over a lattice.
fn brute_force_grad_sup(u: &dyn VelocityField, half_width: f64, n: usize) -> f64 {
    let h = 1e-6;
    let mut best: f64 = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            let x = Point::new(
                -half_width + 2.0 * half_width * i as f64 / n as f64,
                -half_width + 2.0 * half_width * j as f64 / n as f64,
            );
            let d1 = (u.velocity(&(x + Point::new(h, 0.0)), 0.0).unwrap()
                - u.velocity(&(x - Point::new(h, 0.0)), 0.0).unwrap())
                / (2.0 * h);
            let d2 = (u.velocity(&(x + Point::new(0.0, h)), 0.0).unwrap()
                - u.velocity(&(x - Point::new(0.0, h)), 0.0).unwrap())
                / (2.0 * h);
            let (a, b, c, d) = (d1.x, d2.x, d1.y, d2.y);
            let q = a * a + b * b + c * c + d * d;
            let det = a * d - b * c;
            let s = ((q + (q * q - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt();
            best = best.max(s);
        }
    }
    best
}

#[test]
fn grad_sup_matches_brute_force() {
    let cellular = Cellular { amplitude: 1.3 };
    let brute = brute_force_grad_sup(&cellular, std::f64::consts::PI, 200);
    let reported = cellular.grad_sup(0.0).unwrap().value;
    assert_relative_eq!(reported, brute, max_relative = 1e-6);
    assert_relative_eq!(reported, 1.3, max_relative = 1e-12);

    let shear = Shear { lambda: 0.7 };
    assert_relative_eq!(shear.grad_sup(0.0).unwrap().value, brute_force_grad_sup(&shear, 1.0, 20), max_relative = 1e-6);
    let strain = LinearStrain { lambda: 2.0 };
    assert_relative_eq!(strain.grad_sup(0.0).unwrap().value, brute_force_grad_sup(&strain, 1.0, 20), max_relative = 1e-6);
}

#[test]
fn mu_of_linear_strain_is_exponential() {
    let tg = TimeGrid::new(2.0, 0.01).unwrap();
    let b = lipschitz_budget(&LinearStrain { lambda: 0.5 }, &tg, None).unwrap();
    for (t, mu) in b.times.iter().zip(&b.mu) {
        assert_relative_eq!(*mu, (0.5 * t).exp(), max_relative = 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn strain_pairs_respect_exponential_bounds(
        lambda in 0.1f64..2.0,
        x1 in -1.0f64..1.0,
        x2 in -1.0f64..1.0,
        sep in 1e-3f64..0.5,
        angle in 0.0f64..std::f64::consts::TAU,
    ) {
        let u = LinearStrain { lambda };
        let tg = TimeGrid::new(1.0, 0.01).unwrap();
        let a = Point::new(x1, x2);
        let b = a + Point::new(angle.cos(), angle.sin()) * sep;
        let report = bilipschitz_check(&u, &[(a, b)], &tg, 1e-9).unwrap();
        prop_assert!(report.passed());
        let end = (advect(&u, &a, 0.0, 1.0, 100).unwrap() - advect(&u, &b, 0.0, 1.0, 100).unwrap()).norm();
        let ratio = end / sep;
        prop_assert!(ratio >= (-lambda).exp() * (1.0 - 1e-9) && ratio <= lambda.exp() * (1.0 + 1e-9));
    }

    #[test]
    fn inverse_undoes_forward(x1 in -3.0f64..3.0, x2 in -3.0f64..3.0, amplitude in 0.2f64..2.0) {
        let u = Cellular { amplitude };
        let tg = TimeGrid::new(1.0, 0.005).unwrap();
        let x = Point::new(x1, x2);
        let y = advect(&u, &x, 0.0, 1.0, tg.steps()).unwrap();
        let back = inverse_trajectory(&u, &y, 1.0, &tg).unwrap();
        let d = back - x;
        let l = 2.0 * std::f64::consts::PI;
        let wrapped = Point::new(d.x - l * (d.x / l).round(), d.y - l * (d.y / l).round());
        prop_assert!(wrapped.norm() < 1e-8, "{}", wrapped.norm());
    }

    #[test]
    fn sandwich_is_geometric(c in 0.0f64..10.0, beta in 1e-3f64..1.0, budget in 0.0f64..5.0) {
        let (lo, hi) = sandwich_bounds(c, beta, budget).unwrap();
        prop_assert!(lo <= c && c <= hi);
        prop_assert!((lo * hi - c * c).abs() <= 1e-12 * (1.0 + c * c));
    }

    #[test]
    fn ladder_is_decreasing(r_max in 1e-3f64..0.3, span in 1.0f64..1e4, q in 0.05f64..0.95) {
        let r_min = r_max / span;
        let radii = geometric_radii(r_max, r_min, q).unwrap();
        prop_assert_eq!(radii[0], r_max);
        prop_assert!(radii.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(*radii.last().unwrap() >= r_min * (1.0 - 1e-9));
        prop_assert!(radii.last().unwrap() * q < r_min);
    }
}

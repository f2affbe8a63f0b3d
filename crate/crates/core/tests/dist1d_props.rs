use nfe_core::dist1d::{kl_normal, kl_quadrature, w2_closed, w2_quadrature, Dist1D};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal, Uniform};
use statrs::statistics::Distribution;

fn loc() -> impl Strategy<Value = f64> {
    -5.0..5.0f64
}

fn scale() -> impl Strategy<Value = f64> {
    0.05..4.0f64
}

fn family_pair() -> impl Strategy<Value = (Dist1D, Dist1D)> {
    (0..4usize, (loc(), scale(), scale()), (loc(), scale(), scale())).prop_map(|(f, a, b)| {
        let make = |(m, s1, s2): (f64, f64, f64)| match f {
            0 => Dist1D::uniform(m, m + s1),
            1 => Dist1D::normal(m, s1),
            2 => Dist1D::two_piece_uniform(m - s1, m, m + s2),
            _ => Dist1D::two_piece_normal(m, s1, s2),
        };
        (make(a).unwrap(), make(b).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_form_matches_quadrature((p, q) in family_pair()) {
        let c = w2_closed(&p, &q).unwrap();
        let n = w2_quadrature(&p, &q, 8192).unwrap();
        prop_assert!((c - n).abs() <= 1e-6 * n.max(1e-9), "{p:?} {q:?}: {c} vs {n}");
    }

    #[test]
    fn w2_is_symmetric_and_zero_on_the_diagonal((p, q) in family_pair()) {
        let pq = w2_closed(&p, &q).unwrap();
        let qp = w2_closed(&q, &p).unwrap();
        prop_assert!((pq - qp).abs() <= 1e-12 * (1.0 + pq));
        prop_assert!(pq >= 0.0);
        prop_assert!(w2_closed(&p, &p).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn translation_adds_the_squared_shift(m in loc(), s in scale(), d in loc()) {
        let p = Dist1D::normal(m, s).unwrap();
        let q = Dist1D::normal(m + d, s).unwrap();
        prop_assert!((w2_closed(&p, &q).unwrap() - d * d).abs() <= 1e-9 * (1.0 + d * d));
    }

    #[test]
    fn normal_matches_statrs(m in loc(), s in scale(), z in 0.001..0.999f64, x in -10.0..10.0f64) {
        let ours = Dist1D::normal(m, s).unwrap();
        let theirs = Normal::new(m, s).unwrap();
        prop_assert!((ours.quantile(z).unwrap() - theirs.inverse_cdf(z)).abs() <= 1e-9 * (1.0 + m.abs() + s));
        // statrs' erfc is good to about 1e-11 in the tails
        prop_assert!((ours.cdf(x) - theirs.cdf(x)).abs() <= 1e-10);
        prop_assert!((ours.entropy().unwrap() - theirs.entropy().unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn uniform_matches_statrs(lo in loc(), w in scale(), x in -10.0..10.0f64) {
        let ours = Dist1D::uniform(lo, lo + w).unwrap();
        let theirs = Uniform::new(lo, lo + w).unwrap();
        prop_assert!((ours.cdf(x) - theirs.cdf(x)).abs() <= 1e-12);
        prop_assert!((ours.mean() - theirs.mean().unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn quantile_inverts_cdf((p, _q) in family_pair(), z in 0.0005..0.9995f64) {
        let x = p.quantile(z).unwrap();
        prop_assert!((p.cdf(x) - z).abs() <= 1e-10, "{p:?} at {z}");
    }

    #[test]
    fn kl_closed_matches_quadrature(m1 in loc(), s1 in 0.3..3.0f64, m2 in loc(), s2 in 0.3..3.0f64) {
        let p = Dist1D::normal(m1, s1).unwrap();
        let q = Dist1D::normal(m2, s2).unwrap();
        let c = kl_normal(&p, &q).unwrap();
        let n = kl_quadrature(&p, &q, 8192).unwrap();
        prop_assert!((c - n).abs() <= 1e-6 * (1.0 + c), "{c} vs {n}");
        prop_assert!(c >= 0.0);
    }
}

#[test]
fn uniform_anchor_is_four() {
    let p = Dist1D::uniform(0.0, 1.0).unwrap();
    let q = Dist1D::uniform(2.0, 3.0).unwrap();
    assert_eq!(w2_closed(&p, &q).unwrap(), 4.0);
}

#[test]
fn normal_cdf_tail_value() {
    // high-precision reference value
    let d = Dist1D::normal(0.0, 3.812634941836259).unwrap();
    let want = 0.041_026_104_978_981_280_130_665_7;
    assert!((d.cdf(-6.629794027122927) - want).abs() <= 1e-16);
}

#[test]
fn mixed_families_are_rejected() {
    let p = Dist1D::uniform(0.0, 1.0).unwrap();
    let q = Dist1D::normal(0.0, 1.0).unwrap();
    assert!(w2_closed(&p, &q).is_err());
}

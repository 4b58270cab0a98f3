use pcnn::autodiff::gradcheck::{self, NormCase, PConvCase};

const EPS: f64 = 1e-5;

#[test]
fn pconv_matches_finite_differences() {
    for seed in 0..3 {
        let r = gradcheck::pconv(seed, PConvCase::default(), EPS).unwrap();
        assert!(r.worst() < 1e-6, "{r:?}");
    }
}

#[test]
fn normalized_pconv_matches_finite_differences() {
    for norm in [NormCase::Scale, NormCase::Density] {
        let case = PConvCase {
            norm,
            ..PConvCase::default()
        };
        let r = gradcheck::pconv(7, case, EPS).unwrap();
        assert!(r.worst() < 1e-6, "{r:?}");
    }
}

#[test]
fn small_pconv_variants() {
    // With a single tap the density-normalized output does not depend on the
    // weight at all, so s = 0 is checked unnormalized.
    let cases = [
        (1, 0, 1, NormCase::None),
        (1, 2, 1, NormCase::Density),
        (2, 1, 3, NormCase::Density),
        (4, 1, 1, NormCase::Density),
    ];
    for (d, s, c, norm) in cases {
        let case = PConvCase {
            points: 20,
            d,
            s,
            channels: c,
            norm,
        };
        let r = gradcheck::pconv(11, case, EPS).unwrap();
        assert!(r.worst() < 1e-6, "{r:?}");
    }
}

#[test]
fn conv2d_matches_finite_differences() {
    let r = gradcheck::conv2d(3, 5, 6, 6, 2, EPS).unwrap();
    assert!(r.worst() < 1e-6, "{r:?}");
    let r = gradcheck::conv2d(4, 3, 5, 7, 1, EPS).unwrap();
    assert!(r.worst() < 1e-6, "{r:?}");
}

#[test]
fn sum_and_loss_match_finite_differences() {
    assert!(gradcheck::sum(1, 10, EPS).unwrap().worst() < 1e-6);
    assert!(gradcheck::loss(1, 10, EPS).unwrap().worst() < 1e-9);
}

#[test]
fn delta_kernel_gradients_are_exact() {
    let r = gradcheck::pconv_delta(2, EPS).unwrap();
    assert!(r.worst() < 1e-9, "{r:?}");
}

#[test]
fn doubling_eps_quadruples_truncation_error() {
    let ratio = gradcheck::truncation_ratio(5, 1e-2).unwrap();
    assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
}

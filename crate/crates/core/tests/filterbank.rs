use pcnn::filterbank::dense_oracle;
use pcnn::imaging::{add_gaussian_noise, bilateral_features, psnr};
use pcnn::lattice::feature_from_elevated;
use pcnn::rng::Rng;
use pcnn::{build_frame, gaussian_kernel, FeatureSet, GrayImage, Kernel, SignalMatrix};

fn random_features(rng: &mut Rng, n: usize, d: usize, range: f64) -> FeatureSet {
    let data = (0..n * d).map(|_| rng.uniform_in(0.0, range)).collect();
    FeatureSet::new(d, data).unwrap()
}

fn random_signal(rng: &mut Rng, rows: usize, cols: usize) -> SignalMatrix {
    let data = (0..rows * cols)
        .map(|_| rng.uniform_in(-1.0, 1.0))
        .collect();
    SignalMatrix::new(rows, cols, data).unwrap()
}

fn random_kernel(rng: &mut Rng, d: usize, s: usize, c_out: usize, c_in: usize) -> Kernel {
    let mut k = Kernel::zeros(d, s, c_out, c_in).unwrap();
    k.weights_mut()
        .iter_mut()
        .for_each(|w| *w = rng.uniform_in(-1.0, 1.0));
    k
}

fn dot(a: &SignalMatrix, b: &SignalMatrix) -> f64 {
    a.dot(b).unwrap()
}

#[test]
fn pipeline_matches_dense_oracle() {
    let mut rng = Rng::new(2024);
    for _ in 0..20 {
        let d = 1 + rng.below(3);
        let s = rng.below(3);
        let c_in = 1 + rng.below(2);
        let c_out = 1 + rng.below(2);
        let n_in = 5 + rng.below(56);
        let n_out = 5 + rng.below(56);
        let fin = random_features(&mut rng, n_in, d, 3.0);
        let fout = random_features(&mut rng, n_out, d, 3.0);
        let frame = build_frame(&fin, &fout, s).unwrap();
        let kernel = random_kernel(&mut rng, d, s, c_out, c_in);
        let x = random_signal(&mut rng, n_in, c_in);

        let fast = frame.filter(&x, &kernel).unwrap();
        let dense = dense_oracle(&frame, &fin, &fout, &kernel)
            .unwrap()
            .matvec(x.as_slice());
        let err = fast
            .as_slice()
            .iter()
            .zip(&dense)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "d={d} s={s} c={c_out}x{c_in}: {err}");
    }
}

#[test]
fn slice_is_the_transpose_of_splat() {
    let mut rng = Rng::new(5);
    for probe in 0..100 {
        let d = 1 + probe % 4;
        let c = 1 + probe % 2;
        let f = random_features(&mut rng, 40, d, 4.0);
        let frame = build_frame(&f, &f, 1).unwrap();
        let v = random_signal(&mut rng, 40, c);
        let l = random_signal(&mut rng, frame.node_count(), c);
        let lhs = dot(&frame.splat(&v).unwrap(), &l);
        let rhs = dot(&v, &frame.slice(&l).unwrap());
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()), "{lhs} {rhs}");
    }
}

#[test]
fn convolution_adjoint_is_the_transposed_kernel() {
    let mut rng = Rng::new(6);
    for probe in 0..100 {
        let d = 1 + probe % 3;
        let s = probe % 3;
        let (c_out, c_in) = (1 + probe % 2, 1 + (probe / 2) % 2);
        let fin = random_features(&mut rng, 30, d, 4.0);
        let fout = random_features(&mut rng, 20, d, 4.0);
        let frame = build_frame(&fin, &fout, s).unwrap();
        let kernel = random_kernel(&mut rng, d, s, c_out, c_in);
        let t = kernel.transposed(frame.offsets()).unwrap();
        let a = random_signal(&mut rng, frame.node_count(), c_in);
        let b = random_signal(&mut rng, frame.node_count(), c_out);
        let lhs = dot(&frame.convolve(&a, &kernel).unwrap(), &b);
        let rhs = dot(&a, &frame.convolve(&b, &t).unwrap());
        assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()), "{lhs} {rhs}");
    }
}

#[test]
fn pipeline_is_linear() {
    let mut rng = Rng::new(8);
    for _ in 0..20 {
        let d = 1 + rng.below(4);
        let fin = random_features(&mut rng, 50, d, 3.0);
        let fout = random_features(&mut rng, 30, d, 3.0);
        let frame = build_frame(&fin, &fout, 2).unwrap();
        let kernel = random_kernel(&mut rng, d, 2, 2, 2);
        let x = random_signal(&mut rng, 50, 2);
        let y = random_signal(&mut rng, 50, 2);
        let (a, b) = (rng.uniform_in(-3.0, 3.0), rng.uniform_in(-3.0, 3.0));
        let combined = x.scale(a).add(&y.scale(b)).unwrap();
        let lhs = frame.filter(&combined, &kernel).unwrap();
        let rhs = frame
            .filter(&x, &kernel)
            .unwrap()
            .scale(a)
            .add(&frame.filter(&y, &kernel).unwrap().scale(b))
            .unwrap();
        let scale = lhs.as_slice().iter().fold(1.0f64, |m, v| m.max(v.abs()));
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-9 * scale);
    }
}

#[test]
fn delta_kernel_on_lattice_points_is_the_identity() {
    let mut rng = Rng::new(9);
    for d in 1..=4 {
        let n = d + 1;
        let mut rows = Vec::new();
        for i in 0..25 {
            // Distinct remainder-0 points: first coordinate encodes i.
            let mut key: Vec<f64> = vec![0.0; n];
            key[0] = (n * i) as f64;
            for c in key.iter_mut().take(d).skip(1) {
                *c = (n * rng.below(5)) as f64;
            }
            key[d] = -key[..d].iter().sum::<f64>();
            rows.push(feature_from_elevated(&key));
        }
        let f = FeatureSet::from_rows(&rows).unwrap();
        for s in 0..=2 {
            let frame = build_frame(&f, &f, s).unwrap();
            let x = random_signal(&mut rng, 25, 2);
            let y = frame.filter(&x, &Kernel::delta(d, s, 2).unwrap()).unwrap();
            assert!(y.max_abs_diff(&x).unwrap() < 1e-12, "d={d} s={s}");
        }
    }
}

#[test]
fn gaussian_bilateral_filter_denoises_a_step_edge() {
    let (h, w) = (32, 32);
    let pixels = (0..h * w)
        .map(|i| if i % w < w / 2 { 0.2 } else { 0.8 })
        .collect();
    let clean = GrayImage::new(h, w, pixels).unwrap();
    let noisy = add_gaussian_noise(&clean, 0.1, 4);
    let samples = bilateral_features(&noisy, 3.0, 0.2).unwrap();
    let frame = build_frame(&samples.features, &samples.features, 1).unwrap();
    let kernel = gaussian_kernel(3, 1, 1.0).unwrap();
    let out = frame.filter_normalized(&samples.values, &kernel).unwrap();
    let denoised = GrayImage::from_signal(h, w, &out).unwrap();
    let before = psnr(&noisy, &clean).unwrap();
    let after = psnr(&denoised, &clean).unwrap();
    assert!(after > before + 3.0, "{before} -> {after}");

    // The edge survives: columns either side keep their side's level.
    let left = denoised.get(h / 2, w / 2 - 1);
    let right = denoised.get(h / 2, w / 2);
    assert!(left < 0.4 && right > 0.6, "{left} {right}");
}

#[test]
fn kernel_file_round_trip() {
    let mut rng = Rng::new(10);
    let kernel = random_kernel(&mut rng, 3, 2, 2, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.pcnv");
    kernel.save(&path).unwrap();
    assert_eq!(Kernel::load(&path).unwrap(), kernel);
}

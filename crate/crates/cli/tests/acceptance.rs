//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported but only make the process exit non-zero
//! when `ACCEPTANCE_STRICT=1` is set.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use common::*;
use nalgebra::{DMatrix, DVector};
use quasi_cli::qvol::{decode, encode};
use quasi_core::diff::{grad_spatial, grad_spatial_transpose, grad_temporal, grad_temporal_transpose, Axis, GradientField};
use quasi_core::metrics::{cnr, msr, psnr, ssim};
use quasi_core::noise::{make_sequence, NoiseSpec};
use quasi_core::phantom::{make_phantom, PhantomKind, PhantomSpec};
use quasi_core::quantile::{build_quantile_map, quantile_filter, quasi_residual, KernelSpec};
use quasi_core::robust::{huber_phi, huber_phi_prime, irls_weight, mad_sigma, HuberSpec, WeightField};
use quasi_core::solver::{cg_solve, mimo_solve, miso_solve, MimoState, MisoState, Mode, Preset, SolverConfig};
use quasi_core::{Dims, Region, Volume, VolumeSequence};
use rand::Rng;
use rand_distr_free::standard_normal;

/// Frozen from the first reference run (gain 15.27 dB on this scenario).
const EFFICACY_MARGIN_DB: f64 = 15.0;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

mod rand_distr_free {
    use rand::Rng;

    /// Box-Muller; keeps the suite free of the distribution crate.
    pub fn standard_normal(rng: &mut impl Rng) -> f64 {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

const QUANTILE_PS: [f64; 4] = [0.0, 0.25, 0.5, 1.0];

fn quantile_suite() -> Vec<Volume> {
    let mut rng = rng(1001);
    (0..200)
        .map(|k| {
            let dims = random_dims(&mut rng, 16);
            if k % 2 == 0 {
                quantized_volume(&mut rng, dims, 5)
            } else {
                random_volume(&mut rng, dims)
            }
        })
        .collect()
}

fn c1_quantile_oracle() -> Outcome {
    let suite = quantile_suite();
    let start = Instant::now();
    let mut compared = 0usize;
    for (k, vol) in suite.iter().enumerate() {
        for p in QUANTILE_PS {
            let (values, _) = quantile_oracle(vol, 3, p);
            let got = quantile_filter(vol, &KernelSpec::new(3, p).unwrap());
            ensure(got.as_slice() == &values[..], format!("volume {k} ({}) p={p} differs from sort oracle", vol.dims()))?;
            compared += values.len();
        }
    }
    let filter_time = start.elapsed();
    ensure(filter_time < Duration::from_secs(10), format!("runtime {filter_time:?} >= 10 s"))?;
    Ok(format!("200 volumes x 4 quantiles, {compared} voxels exact, {filter_time:.2?}"))
}

fn c2_linearization() -> Outcome {
    for (k, vol) in quantile_suite().iter().enumerate() {
        for p in QUANTILE_PS {
            let kernel = KernelSpec::new(3, p).unwrap();
            let filtered = quantile_filter(vol, &kernel);
            let gathered = build_quantile_map(vol, &kernel).apply(vol).unwrap();
            let same = filtered.as_slice().iter().zip(gathered.as_slice()).all(|(a, b)| a.to_bits() == b.to_bits());
            ensure(same, format!("volume {k} p={p}: Q(f) f != quantile_filter(f) bitwise"))?;
        }
    }
    let mut rng = rng(1002);
    let kernel = KernelSpec::median(3).unwrap();
    let mut worst = 0.0f64;
    let mut grids = 0;
    for nz in 1..=6 {
        for ny in 1..=6 {
            for nx in 1..=6 {
                let dims = Dims::new(nx, ny, nz).unwrap();
                let f = quantized_volume(&mut rng, dims, 4);
                let map = build_quantile_map(&f, &kernel);
                let (_, sources) = quantile_oracle(&f, 3, 0.5);
                let q = dense_gather(&sources);
                let x = random_volume(&mut rng, dims);
                let qx = &q * vec_of(&x);
                let qtx = q.transpose() * vec_of(&x);
                worst = worst.max(max_abs_diff(map.apply(&x).unwrap().as_slice(), qx.as_slice()));
                worst = worst.max(max_abs_diff(map.apply_transpose(&x).unwrap().as_slice(), qtx.as_slice()));
                grids += 1;
            }
        }
    }
    ensure(worst <= 1e-12, format!("dense Q/Q^T mismatch {worst:e}"))?;
    Ok(format!("bitwise on 800 filters; dense Q, Q^T on {grids} grids, max |d| = {worst:e}"))
}

fn c3_adjoints() -> Outcome {
    let mut rng = rng(1003);
    let mut worst = [0.0f64; 5];
    for _ in 0..100 {
        let dims = random_dims(&mut rng, 7);
        for (slot, axis) in [Axis::X, Axis::Y, Axis::Z].into_iter().enumerate() {
            let x = random_volume(&mut rng, dims);
            let y = random_volume(&mut rng, dims);
            let lhs = grad_spatial(&x, &[axis]).components()[0].dot(&y).unwrap();
            let rhs = x.dot(&grad_spatial_transpose(&GradientField::new(vec![axis], vec![y]).unwrap())).unwrap();
            worst[slot] = worst[slot].max((lhs - rhs).abs());
        }
        let t = rng.random_range(1..=5);
        let xs = VolumeSequence::new((0..t).map(|_| random_volume(&mut rng, dims)).collect()).unwrap();
        let ys = VolumeSequence::new((0..t).map(|_| random_volume(&mut rng, dims)).collect()).unwrap();
        let lhs = grad_temporal(&xs).dot(&ys).unwrap();
        let rhs = xs.dot(&grad_temporal_transpose(&ys)).unwrap();
        worst[3] = worst[3].max((lhs - rhs).abs());
        let map = build_quantile_map(&quantized_volume(&mut rng, dims, 4), &KernelSpec::median(3).unwrap());
        let x = random_volume(&mut rng, dims);
        let y = random_volume(&mut rng, dims);
        let lhs = map.apply(&x).unwrap().dot(&y).unwrap();
        let rhs = x.dot(&map.apply_transpose(&y).unwrap()).unwrap();
        worst[4] = worst[4].max((lhs - rhs).abs());
    }
    let names = ["grad_x", "grad_y", "grad_z", "grad_t", "Q"];
    for (n, w) in names.iter().zip(worst) {
        ensure(w <= 1e-10, format!("{n}: |<Ax,y> - <x,A^T y>| = {w:e}"))?;
    }
    Ok(format!("100 pairs each, max gap {:e}", worst.iter().cloned().fold(0.0, f64::max)))
}

fn unit_weights(rng: &mut rand::rngs::StdRng, dims: Dims, t: usize) -> WeightField {
    WeightField {
        frames: (0..t).map(|_| Volume::from_fn(dims, |_, _, _| rng.random_range(0.1..1.0))).collect(),
        epsilons: vec![0.1; t],
    }
}

fn c4_normal_operators() -> Outcome {
    let mut rng = rng(1004);
    let dims = Dims::new(5, 4, 1).unwrap();
    let n = dims.len();
    let t = 2;
    let cfg = SolverConfig {
        alpha: 3.0,
        beta: 1.7,
        gamma: 2.3,
        mode: Mode::VolumetricTemporal,
        kernel: KernelSpec::median(3).unwrap(),
        ..SolverConfig::default()
    };
    let inputs = VolumeSequence::new((0..t).map(|_| quantized_volume(&mut rng, dims, 6)).collect()).unwrap();

    let mut miso = MisoState::new(&inputs, &cfg);
    miso.set_weights(unit_weights(&mut rng, dims, t));
    let mut wsum = DVector::zeros(n);
    for w in &miso.weights.frames {
        wsum += vec_of(w);
    }
    let m = DMatrix::identity(n, n) - dense_gather(miso.map.sources());
    let a_miso = DMatrix::from_diagonal(&wsum) + dense_laplacian(dims, cfg.beta) + m.transpose() * &m * cfg.alpha;
    let mut worst_op = 0.0f64;
    for _ in 0..10 {
        let x = random_volume(&mut rng, dims);
        worst_op = worst_op.max(max_abs_diff(miso.apply_normal(&cfg, &x).unwrap().as_slice(), (&a_miso * vec_of(&x)).as_slice()));
    }

    let mut mimo = MimoState::new(&inputs, &cfg);
    mimo.weights = unit_weights(&mut rng, dims, t);
    let mut a_mimo = DMatrix::zeros(n * t, n * t);
    for f in 0..t {
        let m = DMatrix::identity(n, n) - dense_gather(mimo.maps[f].sources());
        let block = DMatrix::from_diagonal(&vec_of(&mimo.weights.frames[f])) + dense_laplacian(dims, cfg.beta) + m.transpose() * &m * cfg.alpha;
        a_mimo.view_mut((f * n, f * n), (n, n)).copy_from(&block);
    }
    let dt = dense_temporal_diff(n, t);
    a_mimo += dt.transpose() * dt * cfg.gamma;
    for _ in 0..10 {
        let xs = VolumeSequence::new((0..t).map(|_| random_volume(&mut rng, dims)).collect()).unwrap();
        let stacked = DVector::from_iterator(n * t, xs.frames().iter().flat_map(|f| f.as_slice().to_vec()));
        let got = mimo.apply_normal(&cfg, &xs).unwrap();
        let got: Vec<f64> = got.frames().iter().flat_map(|f| f.as_slice().to_vec()).collect();
        worst_op = worst_op.max(max_abs_diff(&got, (&a_mimo * stacked).as_slice()));
    }
    ensure(worst_op <= 1e-10, format!("apply_A vs dense: {worst_op:e}"))?;

    let b = DVector::from_fn(n, |_, _| rng.random::<f64>());
    let direct = a_miso.clone().lu().solve(&b).unwrap();
    let mut x = vec![0.0; n];
    cg_solve(
        |p, out| out.copy_from_slice(miso.apply_normal(&cfg, &Volume::from_vec(dims, p.to_vec()).unwrap()).unwrap().as_slice()),
        b.as_slice(),
        &mut x,
        500,
        1e-15,
    );
    let cg_gap = max_abs_diff(&x, direct.as_slice());
    ensure(cg_gap <= 1e-8, format!("CG vs dense solve: {cg_gap:e}"))?;
    Ok(format!("apply_A max |d| = {worst_op:e}; CG vs LU {cg_gap:e}"))
}

fn c5_robust() -> Outcome {
    let mut rng = rng(1005);
    let mut worst_ulps = 0.0f64;
    for _ in 0..100_000 {
        let eps: f64 = rng.random_range(1e-4..2.0);
        let l: f64 = rng.random_range(-50.0..50.0);
        let d = (irls_weight(l, eps) * l - huber_phi_prime(l, eps)).abs();
        worst_ulps = worst_ulps.max(d / (f64::EPSILON * eps.max(l.abs().min(eps))));
    }
    // product vs closed form differ by at most the rounding of eps/|l|
    ensure(worst_ulps <= 2.0, format!("w(l) l vs phi'(l): {worst_ulps} ulp"))?;
    // each branch formula continued across +-eps agrees with the implementation
    let mut jump = 0.0f64;
    for eps in [1e-3f64, 0.1, 0.7, 1.345, 5.0] {
        for s in [-1.0f64, 1.0] {
            let at = s * eps;
            jump = jump.max((huber_phi(at, eps) - 0.5 * eps * eps).abs());
            let outside = s * eps.next_up();
            jump = jump.max((huber_phi(outside, eps) - 0.5 * outside * outside).abs());
            let inside = s * eps.next_down();
            jump = jump.max((huber_phi(inside, eps) - (eps * inside.abs() - 0.5 * eps * eps)).abs());
        }
    }
    ensure(jump <= 1e-12, format!("phi discontinuity {jump:e}"))?;
    let mut nrng = common::rng(1006);
    let sigma = 0.37;
    let samples: Vec<f64> = (0..100_000).map(|_| sigma * standard_normal(&mut nrng)).collect();
    let est = mad_sigma(&samples).map_err(|e| e.to_string())?;
    let rel = (est - sigma).abs() / sigma;
    ensure(rel <= 0.1, format!("mad_sigma {est} vs {sigma}"))?;
    Ok(format!("max {worst_ulps:.1} ulp over 1e5 points; continuity gap {jump:e}; MAD {est:.6} vs {sigma} (rel {rel:.2e})"))
}

fn layered_case(seed: u64, noise_seed: u64, size: usize, frames: usize) -> (Volume, VolumeSequence) {
    let truth = make_phantom(&PhantomSpec::layered(Dims::new(size, size, 1).unwrap(), seed)).unwrap();
    let seq = make_sequence(&truth, frames, &NoiseSpec::awgn(0.1, noise_seed)).unwrap();
    (truth, seq)
}

fn c6_sparsity() -> Outcome {
    let (truth, seq) = layered_case(11, 7, 128, 1);
    let kernel = KernelSpec::median(3).unwrap();
    let frac = |v: &Volume| {
        let r = quasi_residual(v, &kernel);
        r.as_slice().iter().filter(|x| x.abs() < 1e-6).count() as f64 / r.len() as f64
    };
    let clean = frac(&truth);
    let noisy = frac(seq.frame(0));
    ensure(clean >= 0.95, format!("clean sparsity {clean}"))?;
    ensure(clean - noisy >= 0.15, format!("gap {}", clean - noisy))?;
    Ok(format!("zero-residual fraction clean {clean:.4}, noisy {noisy:.4}"))
}

fn c7_efficacy() -> Outcome {
    let (truth, seq) = layered_case(11, 7, 128, 5);
    let mean = seq.mean_of();
    let base = psnr(&truth, &mean, 1.0).unwrap();
    let start = Instant::now();
    let cfg = Preset::Bscan.config(5);
    let out = miso_solve(&seq, &cfg).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let quasi_psnr = psnr(&truth, &out.result, 1.0).unwrap();
    let quasi_ssim = ssim(&truth, &out.result, 1.0).unwrap();
    let tv = miso_solve(&seq, &SolverConfig { lambda: 0.0, ..cfg }).map_err(|e| e.to_string())?;
    let tv_psnr = psnr(&truth, &tv.result, 1.0).unwrap();
    let tv_ssim = ssim(&truth, &tv.result, 1.0).unwrap();
    let gain = quasi_psnr - base;
    ensure(gain >= EFFICACY_MARGIN_DB, format!("gain {gain:.2} dB < {EFFICACY_MARGIN_DB} dB"))?;
    ensure(elapsed < Duration::from_secs(60), format!("runtime {elapsed:?}"))?;
    ensure(tv_psnr < quasi_psnr && tv_ssim < quasi_ssim, format!("TV-only not below: PSNR {tv_psnr:.3} vs {quasi_psnr:.3}, SSIM {tv_ssim:.5} vs {quasi_ssim:.5}"))?;
    Ok(format!(
        "mean-of-5 {base:.2} dB -> {quasi_psnr:.2} dB (+{gain:.2}, {elapsed:.2?}); TV-only {tv_psnr:.2} dB / SSIM {tv_ssim:.4} < {quasi_ssim:.4}"
    ))
}

fn phantom_suite() -> Vec<(Volume, VolumeSequence)> {
    let dims = Dims::new(96, 96, 1).unwrap();
    let mut specs: Vec<PhantomSpec> = (1..=3).map(|s| PhantomSpec::layered(dims, s)).collect();
    specs.push(PhantomSpec {
        kind: PhantomKind::NestedEllipsoids,
        dims,
        intensities: vec![0.1, 0.5, 0.8, 0.3],
        seed: 4,
    });
    specs
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let truth = make_phantom(spec).unwrap();
            let seq = make_sequence(&truth, 5, &NoiseSpec::awgn(0.1, 1000 + i as u64)).unwrap();
            (truth, seq)
        })
        .collect()
}

/// Relative increases beyond 1e-6 between consecutive entries.
fn increases(energies: &[f64]) -> Vec<(usize, f64)> {
    energies
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1] > w[0] * (1.0 + 1e-6))
        .map(|(i, w)| (i + 1, w[1] / w[0] - 1.0))
        .collect()
}

fn c8_convergence() -> Outcome {
    let conv = Preset::Convergence.config(5);
    let single = SolverConfig { k_inner: 1, ..conv };
    let mut problems = Vec::new();
    for (case, (_, seq)) in phantom_suite().iter().enumerate() {
        let out = miso_solve(seq, &conv).map_err(|e| e.to_string())?;
        // boundaries from outer iteration 2 on
        let boundary: Vec<f64> = out.trace.iter().filter(|r| r.inner == conv.k_inner && r.outer >= 2).map(|r| r.energy).collect();
        for (i, rel) in increases(&boundary) {
            problems.push(format!("case {case} K_inner=10 outer {}: +{rel:.1e}", i + 2));
        }
        let out = miso_solve(seq, &single).map_err(|e| e.to_string())?;
        let full: Vec<f64> = out.trace.iter().filter(|r| r.outer >= 2).map(|r| r.energy).collect();
        for (i, rel) in increases(&full) {
            problems.push(format!("case {case} K_inner=1 outer {}: +{rel:.1e}", i + 2));
        }
    }
    ensure(problems.is_empty(), format!("{} energy increases: {}", problems.len(), problems.join("; ")))?;
    Ok("energy non-increasing on all 4 phantoms".into())
}

fn c9_degeneracies() -> Outcome {
    let (_, seq) = layered_case(3, 33, 24, 1);
    let cfg = SolverConfig { omega: 0.8, gamma: 2.0, k_outer: 5, ..Preset::Bscan.config(1) };
    let a = miso_solve(&seq, &cfg).map_err(|e| e.to_string())?;
    let b = mimo_solve(&seq, &SolverConfig { mode: Mode::VolumetricTemporal, ..cfg }).map_err(|e| e.to_string())?;
    let t1 = max_abs_diff(a.result.as_slice(), b.result.frame(0).as_slice());
    ensure(t1 <= 1e-8, format!("mimo(T=1) vs miso {t1:e}"))?;

    let g = seq.frame(0).clone();
    let off = SolverConfig {
        lambda: 0.0,
        mu: 0.0,
        alpha: 0.01,
        beta: 0.01,
        k_outer: 5,
        k_inner: 4,
        k_cg: 10,
        cg_tol: 1e-14,
        huber: HuberSpec::Fixed(10.0),
        ..SolverConfig::default()
    };
    let out = miso_solve(&VolumeSequence::single(g.clone()), &off).map_err(|e| e.to_string())?;
    let ident = max_abs_diff(out.result.as_slice(), g.as_slice());
    ensure(ident <= 1e-6, format!("lambda = mu = 0 output differs from input by {ident:e}"))?;

    let mut fixed = 0.0f64;
    for dims in [Dims::new(9, 8, 1).unwrap(), Dims::new(6, 5, 4).unwrap()] {
        let c = Volume::filled(dims, 0.37);
        let cs = VolumeSequence::new(vec![c; 3]).unwrap();
        let out = miso_solve(&cs, &Preset::Bscan.config(3)).map_err(|e| e.to_string())?;
        fixed = fixed.max(out.result.as_slice().iter().map(|v| (v - 0.37).abs()).fold(0.0, f64::max));
        let out = mimo_solve(&cs, &SolverConfig { k_outer: 3, ..Preset::Ct.config(3) }).map_err(|e| e.to_string())?;
        for f in out.result.frames() {
            fixed = fixed.max(f.as_slice().iter().map(|v| (v - 0.37).abs()).fold(0.0, f64::max));
        }
    }
    ensure(fixed <= 1e-10, format!("constant input drifted by {fixed:e}"))?;
    Ok(format!("T=1 gap {t1:e}; identity gap {ident:e}; constant drift {fixed:e}"))
}

fn c10_metrics() -> Outcome {
    let mut rng = rng(1010);
    let mut worst_psnr = 0.0f64;
    let mut worst_ssim = 0.0f64;
    for dims in [Dims::new(11, 11, 1).unwrap(), Dims::new(24, 17, 1).unwrap(), Dims::new(16, 13, 3).unwrap()] {
        let a = random_volume(&mut rng, dims);
        let noise = random_volume(&mut rng, dims);
        let b = a.zip_map(&noise, |x, n| 0.8 * x + 0.2 * n).unwrap();
        worst_psnr = worst_psnr.max((psnr(&a, &b, 1.0).unwrap() - psnr_oracle(&a, &b, 1.0)).abs());
        worst_ssim = worst_ssim.max((ssim(&a, &b, 1.0).unwrap() - ssim_oracle(&a, &b, 1.0)).abs());
    }
    ensure(worst_psnr <= 1e-9, format!("PSNR gap {worst_psnr:e} dB"))?;
    ensure(worst_ssim <= 1e-6, format!("SSIM gap {worst_ssim:e}"))?;
    let a = Volume::filled(Dims::new(16, 16, 1).unwrap(), 0.5);
    ensure(psnr(&a, &a, 1.0).unwrap() == 300.0, "identical PSNR is not the cap")?;
    ensure((psnr(&a, &a.map(|v| v + 0.1), 1.0).unwrap() - 20.0).abs() < 1e-9, "0.1 offset is not 20 dB")?;
    ensure((ssim(&a, &a, 1.0).unwrap() - 1.0).abs() < 1e-12, "identical SSIM is not 1")?;

    // fg {2, 6, 2, 6}: mean 4, std 2
    let dims = Dims::new(4, 2, 1).unwrap();
    let v = Volume::from_vec(dims, vec![2.0, 6.0, 1.0, 1.0, 2.0, 6.0, 1.0, 1.0]).unwrap();
    let fg = Region::new([0, 0, 0], [2, 2, 1]);
    let bg = Region::new([2, 0, 0], [2, 2, 1]);
    ensure(msr(&v, &fg).unwrap() == 2.0, "MSR of {2,6,2,6} is not 2")?;
    // fg {3, 5} mean 4 std 1, bg {1, 3} mean 2 std 1: 2 / (0.5 sqrt 2)
    let w = Volume::from_vec(dims, vec![3.0, 5.0, 1.0, 3.0, 3.0, 5.0, 1.0, 3.0]).unwrap();
    let c = cnr(&w, &fg, &bg).unwrap();
    ensure((c - 2.0 * std::f64::consts::SQRT_2).abs() <= 1e-12, format!("CNR {c}"))?;
    Ok(format!("PSNR gap {worst_psnr:e} dB, SSIM gap {worst_ssim:e}, MSR/CNR hand cases exact"))
}

fn quasi(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_quasi")).args(args).output().expect("run quasi")
}

fn c11_cli_io() -> Outcome {
    let mut rng = rng(1011);
    let dims = Dims::new(7, 5, 3).unwrap();
    let seq = VolumeSequence::new((0..4).map(|_| Volume::from_fn(dims, |_, _, _| f64::from(rng.random::<f32>() * 4.0 - 2.0))).collect()).unwrap();
    let bytes = encode(&seq).map_err(|e| e.to_string())?;
    ensure(decode(&bytes).map_err(|e| e.to_string())? == seq, "QVOL round trip is not float32 exact")?;

    let dir = tempfile::TempDir::new().map_err(|e| e.to_string())?;
    let path = |n: &str| dir.path().join(n).to_str().unwrap().to_owned();
    for run in ["a", "b"] {
        let out = quasi(&["simulate", "--truth", &path(&format!("t{run}.qvol")), "--out", &path(&format!("n{run}.qvol")), "--nx", "40", "--ny", "30", "--frames", "3", "--seed", "9"]);
        ensure(out.status.success(), format!("simulate failed: {}", String::from_utf8_lossy(&out.stderr)))?;
    }
    let read = |n: &str| std::fs::read(path(n)).unwrap();
    ensure(read("ta.qvol") == read("tb.qvol") && read("na.qvol") == read("nb.qvol"), "simulate output differs between runs")?;

    std::fs::write(path("ok.cfg"), "k_outer = 2\n").unwrap();
    std::fs::write(path("bad.cfg"), "lamda = 1\n").unwrap();
    std::fs::write(path("boom.cfg"), "lambda = 1e308\nk_outer = 1\n").unwrap();
    let code = |args: &[&str]| quasi(args).status.code();
    let noisy = path("na.qvol");
    let out = path("o.qvol");
    let (ok_cfg, bad_cfg, boom_cfg, missing) = (path("ok.cfg"), path("bad.cfg"), path("boom.cfg"), path("none.qvol"));
    let cases: [(&str, Vec<&str>, i32); 4] = [
        ("success", vec!["denoise", "--in", &noisy, "--out", &out, "--config", &ok_cfg], 0),
        ("config violation", vec!["denoise", "--in", &noisy, "--out", &out, "--config", &bad_cfg], 2),
        ("missing input", vec!["denoise", "--in", &missing, "--out", &out], 2),
        ("numeric failure", vec!["denoise", "--in", &noisy, "--out", &out, "--config", &boom_cfg], 3),
    ];
    for (name, args, want) in &cases {
        let got = code(args);
        ensure(got == Some(*want), format!("{name}: exit {got:?}, want {want}"))?;
    }

    let b = Preset::Bscan.config(4);
    let v = Preset::Volumetric.config(4);
    let c = Preset::Convergence.config(4);
    let ct = Preset::Ct.config(4);
    let close = |a: f64, e: f64| (a - e).abs() <= 1e-12 * e.abs().max(1.0);
    let table = [
        close(b.mu, 0.3) && close(b.lambda, 20.0) && close(b.alpha, 400.0) && close(b.beta, 6.0),
        (b.k_outer, b.k_inner, b.k_cg, b.kernel.width()) == (20, 2, 3, 3) && b.kernel.p() == 0.5,
        close(v.mu, 0.0028) && close(v.lambda, 4.0) && close(v.alpha, 480.0) && close(v.beta, 0.2),
        (v.k_outer, v.k_inner) == (20, 2) && Preset::Volumetric.z_count() == Some(6),
        (c.k_outer, c.k_inner, c.k_cg) == (30, 10, 3) && close(c.lambda, 20.0),
        close(ct.alpha, 0.1) && close(ct.lambda, 0.0005) && close(ct.beta, 0.1) && close(ct.mu, 0.005),
        close(ct.gamma, 90.0) && close(ct.omega, 0.8),
    ];
    ensure(table.iter().all(|&ok| ok), format!("preset table mismatch: {table:?}"))?;
    Ok("QVOL exact, simulate byte-identical, exit codes 0/2/2/3, presets frozen".into())
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("quantile oracle", c1_quantile_oracle),
        ("linearization", c2_linearization),
        ("adjoint identities", c3_adjoints),
        ("normal-operator fidelity", c4_normal_operators),
        ("robust-fidelity identities", c5_robust),
        ("prior sparsity", c6_sparsity),
        ("denoising efficacy", c7_efficacy),
        ("convergence protocol", c8_convergence),
        ("degeneracies", c9_degeneracies),
        ("metrics", c10_metrics),
        ("cli/io", c11_cli_io),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail})", k + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}

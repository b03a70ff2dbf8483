mod common;

use common::*;
use proxsdca::losses::Certificate;
use proxsdca::{Error, Loss, LossParam, Regularizer};
use rand::Rng;

const NONE: LossParam<'static> = LossParam::None;

fn close(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b}");
}

#[test]
fn loss_value_examples() {
    let sh = Loss::SmoothHinge { gamma: 1.0 };
    assert_eq!(sh.value(&[2.0], NONE), 0.0);
    close(sh.value(&[-1.0], NONE), 1.5, 1e-15);
    close(sh.value(&[0.5], NONE), 0.125, 1e-15);
    let sm = Loss::SoftMaxOfHinge { gamma: 1.0 };
    close(sm.value(&[0.0], LossParam::Cost(&[0.0])), 2f64.ln(), 1e-15);
}

#[test]
fn loss_grad_examples() {
    close(Loss::Logistic.grad(&[0.0], NONE).unwrap()[0], 0.5, 1e-15);
    let sh = Loss::SmoothHinge { gamma: 1.0 };
    let g = sh.grad(&[0.5], NONE).unwrap()[0];
    let h = 1e-6;
    let fd = (sh.value(&[0.5 + h], NONE) - sh.value(&[0.5 - h], NONE)) / (2.0 * h);
    close(g, -0.5, 1e-15);
    close(fd, g, 1e-8);
    assert!(matches!(Loss::Hinge.grad(&[0.0], NONE), Err(Error::Unsupported(_))));
    assert!(matches!(Loss::MaxOfHinge.grad(&[0.0], LossParam::Cost(&[1.0])), Err(Error::Unsupported(_))));
}

#[test]
fn loss_conj_examples() {
    close(Loss::Hinge.conj(&[-0.5], NONE), -0.5, 1e-15);
    close(Loss::Logistic.conj(&[0.5], NONE), 0.5f64.ln(), 1e-15);
    close(grid_conj(Loss::Logistic, NONE, 0.5), 0.5f64.ln(), 1e-6);
    assert_eq!(Loss::SmoothHinge { gamma: 1.0 }.conj(&[0.5], NONE), f64::INFINITY);
    close(Loss::MaxOfHinge.conj(&[0.5, 0.25], LossParam::Cost(&[1.0, 1.0])), -0.75, 1e-15);
    assert_eq!(Loss::Logistic.conj(&[0.0], NONE), 0.0);
    assert_eq!(Loss::Logistic.conj(&[1.0], NONE), 0.0);
    assert_eq!(Loss::Logistic.conj(&[1.0 + 1e-9], NONE), f64::INFINITY);
}

#[test]
fn smoothing_examples() {
    let sh = Loss::Hinge.smooth(1.0).unwrap();
    assert_eq!(sh, Loss::SmoothHinge { gamma: 1.0 });
    // Both branches meet at a = 1 - gamma.
    let a: f64 = 0.0;
    close(1.0 - a - 0.5, 0.5, 0.0);
    close((1.0 - a).powi(2) / 2.0, 0.5, 0.0);
    close(sh.value(&[a], NONE), 0.5, 1e-15);
    close(sh.value(&[a - 1e-9], NONE), sh.value(&[a + 1e-9], NONE), 1e-8);

    let smh = Loss::MaxOfHinge.smooth(0.1).unwrap();
    assert_eq!(smh, Loss::SmoothMaxOfHinge { gamma: 0.1 });
    assert_eq!(smh.value(&[-2.0, -0.5], LossParam::Cost(&[1.0, 0.5])), 0.0);

    let v = Loss::Hinge.smooth(0.5).unwrap().value(&[-2.0], NONE);
    close(v, 2.75, 1e-15);
    assert!((2.75..=3.0).contains(&v));

    assert!(matches!(Loss::Logistic.smooth(1.0), Err(Error::Unsupported(_))));
    assert!(matches!(Loss::SmoothHinge { gamma: 1.0 }.smooth(1.0), Err(Error::Unsupported(_))));
}

fn random_cost(r: &mut impl Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| r.random_range(0.0..2.0)).collect()
}

/// A point of `{b >= 0, sum b <= 1}`.
fn random_simplex_point(r: &mut impl Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..=k).map(|_| -r.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw[..k].iter().map(|x| x / s).collect()
}

#[test]
fn fenchel_young_scalar() {
    let families = [Loss::Squared, Loss::Logistic, Loss::SmoothHinge { gamma: 0.7 }, Loss::Hinge];
    for loss in families {
        for t in 0..=200 {
            let a = -10.0 + t as f64 * 0.1;
            let p = if loss == Loss::Squared { LossParam::Label(0.3) } else { NONE };
            for s in 0..=100 {
                let b = match loss {
                    Loss::Squared => -5.0 + s as f64 * 0.1,
                    Loss::Logistic => s as f64 * 0.01,
                    _ => -(s as f64) * 0.01,
                };
                let lhs = loss.value(&[a], p) + loss.conj(&[b], p);
                assert!(lhs >= a * b - 1e-9, "{loss:?} a={a} b={b}");
            }
            if loss.is_smooth() {
                let b = loss.grad(&[a], p).unwrap()[0];
                close(loss.value(&[a], p) + loss.conj(&[b], p), a * b, 1e-6);
            }
        }
    }
}

#[test]
fn fenchel_young_vector() {
    let mut r = rng(11);
    for loss in [Loss::SmoothMaxOfHinge { gamma: 0.5 }, Loss::SoftMaxOfHinge { gamma: 0.5 }, Loss::MaxOfHinge] {
        for _ in 0..500 {
            let k = r.random_range(1..=5);
            let c = random_cost(&mut r, k);
            let p = LossParam::Cost(&c);
            let a: Vec<f64> = (0..k).map(|_| r.random_range(-3.0..3.0)).collect();
            let b = random_simplex_point(&mut r, k);
            let ab: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
            assert!(loss.value(&a, p) + loss.conj(&b, p) >= ab - 1e-9);
            if loss.is_smooth() {
                let g = loss.grad(&a, p).unwrap();
                let ag: f64 = a.iter().zip(&g).map(|(x, y)| x * y).sum();
                close(loss.value(&a, p) + loss.conj(&g, p), ag, 1e-6);
            }
        }
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mut r = rng(12);
    let h = 1e-6;
    let families = [
        Loss::Squared,
        Loss::Logistic,
        Loss::SmoothHinge { gamma: 1.0 },
        Loss::SmoothMaxOfHinge { gamma: 1.0 },
        Loss::SoftMaxOfHinge { gamma: 1.0 },
    ];
    for loss in families {
        for _ in 0..100 {
            let k = if loss.is_vector() { 3 } else { 1 };
            let c = random_cost(&mut r, k);
            let p = match loss {
                Loss::Squared => LossParam::Label(0.4),
                l if l.is_vector() => LossParam::Cost(&c),
                _ => NONE,
            };
            let a: Vec<f64> = (0..k).map(|_| r.random_range(-3.0..3.0)).collect();
            let g = loss.grad(&a, p).unwrap();
            for j in 0..k {
                let mut hi = a.clone();
                let mut lo = a.clone();
                hi[j] += h;
                lo[j] -= h;
                let fd = (loss.value(&hi, p) - loss.value(&lo, p)) / (2.0 * h);
                assert!((fd - g[j]).abs() <= 1e-5 * g[j].abs().max(1.0), "{loss:?} {a:?} {j}");
            }
        }
    }
}

#[test]
fn smoothing_sandwich() {
    let mut r = rng(13);
    for _ in 0..1000 {
        let gamma = r.random_range(0.01..2.0);
        let a = r.random_range(-4.0..4.0);
        let gap = Loss::Hinge.value(&[a], NONE) - Loss::Hinge.smooth(gamma).unwrap().value(&[a], NONE);
        assert!((-1e-12..=gamma / 2.0 + 1e-12).contains(&gap));

        let k = r.random_range(1..=4);
        let c = random_cost(&mut r, k);
        let p = LossParam::Cost(&c);
        let av: Vec<f64> = (0..k).map(|_| r.random_range(-4.0..4.0)).collect();
        let gap = Loss::MaxOfHinge.value(&av, p) - Loss::MaxOfHinge.smooth(gamma).unwrap().value(&av, p);
        assert!((-1e-12..=gamma / 2.0 + 1e-12).contains(&gap), "{gap}");
    }
}

#[test]
fn soft_max_bounds() {
    let mut r = rng(14);
    for _ in 0..1000 {
        let gamma = r.random_range(0.01..2.0);
        let k = r.random_range(1..=5);
        let c = random_cost(&mut r, k);
        let p = LossParam::Cost(&c);
        let a: Vec<f64> = (0..k).map(|_| r.random_range(-4.0..4.0)).collect();
        let hard = Loss::MaxOfHinge.value(&a, p);
        let soft = Loss::SoftMaxOfHinge { gamma }.value(&a, p);
        assert!(hard <= soft + 1e-12);
        assert!(soft <= hard + gamma * ((k + 1) as f64).ln() + 1e-12);
    }
}

#[test]
fn lipschitz_conjugate_domain() {
    let mut r = rng(15);
    assert_eq!(Loss::Hinge.certificate(), Certificate::Lipschitz { l: 1.0 });
    for _ in 0..200 {
        let b = r.random_range(1.0 + 1e-9..5.0);
        assert_eq!(Loss::Hinge.conj(&[-b], NONE), f64::INFINITY);
        assert_eq!(Loss::Hinge.conj(&[b - 1.0 + 1e-9], NONE), f64::INFINITY);
        let k = r.random_range(1..=4);
        let c = random_cost(&mut r, k);
        // l1 mass above 1, or a negative entry.
        let mut v = random_simplex_point(&mut r, k);
        v[0] += b;
        assert_eq!(Loss::MaxOfHinge.conj(&v, LossParam::Cost(&c)), f64::INFINITY);
        v[0] = -1e-9;
        assert_eq!(Loss::MaxOfHinge.conj(&v, LossParam::Cost(&c)), f64::INFINITY);
    }
}

#[test]
fn regularizer_examples() {
    assert_eq!(Regularizer::L2.value(&[0.0, 0.0]), 0.0);
    close(Regularizer::Elastic { sigma: 2.0 }.value(&[1.0, -1.0]), 5.0, 1e-15);
    close(Regularizer::L2Shift { z: vec![1.0, 0.0] }.value(&[1.0, 0.0]), -0.5, 1e-15);

    close(Regularizer::L2.conj(&[3.0, 4.0]), 12.5, 1e-15);
    close(Regularizer::Elastic { sigma: 1.0 }.conj(&[2.0, 0.5]), 0.5, 1e-15);
    close(Regularizer::ElasticShift { sigma: 1.0, z: vec![1.0, 0.0] }.conj(&[1.0, 0.5]), 0.5, 1e-15);

    assert_eq!(Regularizer::L2.conj_grad(&[1.0, -0.2]), vec![1.0, -0.2]);
    let g = Regularizer::Elastic { sigma: 0.5 }.conj_grad(&[1.0, -0.2]);
    assert_eq!(g, vec![0.5, 0.0]);
    let g = Regularizer::ElasticShift { sigma: 0.5, z: vec![0.0, 1.0] }.conj_grad(&[1.0, -0.2]);
    close(g[0], 0.5, 1e-15);
    close(g[1], 0.3, 1e-15);
}

fn random_regs(r: &mut impl Rng, d: usize) -> Vec<Regularizer> {
    let z: Vec<f64> = (0..d).map(|_| r.random_range(-1.0..1.0)).collect();
    let sigma = r.random_range(0.0..1.5);
    vec![
        Regularizer::L2,
        Regularizer::L2Shift { z: z.clone() },
        Regularizer::Elastic { sigma },
        Regularizer::ElasticShift { sigma, z },
    ]
}

#[test]
fn regularizer_fenchel_young_at_gradient() {
    let mut r = rng(16);
    for _ in 0..200 {
        let d = r.random_range(1..=6);
        let v: Vec<f64> = (0..d).map(|_| r.random_range(-3.0..3.0)).collect();
        for reg in random_regs(&mut r, d) {
            let w = reg.conj_grad(&v);
            let vw: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            close(reg.value(&w) + reg.conj(&v), vw, 1e-9);
        }
    }
}

#[test]
fn regularizer_conj_matches_coordinate_maximization() {
    let mut r = rng(17);
    for _ in 0..100 {
        let d = 3;
        let v: Vec<f64> = (0..d).map(|_| r.random_range(-3.0..3.0)).collect();
        for reg in random_regs(&mut r, d) {
            let mut total = 0.0;
            for j in 0..d {
                let gj = |w: f64| 0.5 * w * w + reg.l1_weight() * w.abs() - reg.shift(j) * w;
                let best = argmax_1d(|w| w * v[j] - gj(w), -10.0, 10.0);
                total += best * v[j] - gj(best);
            }
            close(reg.conj(&v), total, 1e-6);
        }
    }
}

#[test]
fn shrinkage_zero_set_is_exact() {
    let mut r = rng(18);
    for _ in 0..500 {
        let sigma = r.random_range(0.1..2.0);
        let z = vec![r.random_range(-1.0..1.0)];
        let reg = Regularizer::ElasticShift { sigma, z: z.clone() };
        let v = r.random_range(-1.0..=1.0) * sigma - z[0];
        let w = reg.conj_grad(&[v])[0];
        assert_eq!(w.to_bits(), 0.0f64.to_bits(), "v={v} sigma={sigma}");
    }
    let tie = Regularizer::Elastic { sigma: 0.5 }.conj_grad(&[0.5, -0.5]);
    assert!(tie.iter().all(|w| w.to_bits() == 0));
}

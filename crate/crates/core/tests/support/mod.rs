//! Independent oracles shared by the integration tests and the acceptance
//! suite. Nothing here calls into the code paths it checks, except to read
//! model parameters and evaluate the library's total loss for finite
//! differences.

#![allow(dead_code)]

use rand::distributions::{Distribution, Uniform};
use rand::Rng;
use sgad_core::model::{Architecture, SgLossConfig, SgaeModel, Variant};
use sgad_core::numerics::{Activation, DataMatrix, MlpNetwork};

// ---------------------------------------------------------------- metrics

/// Mann-Whitney by explicit pair enumeration.
pub fn brute_auc_roc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn step_ap(order: &[usize], labels: &[u8]) -> f64 {
    let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    let mut hits = 0.0;
    let mut ap = 0.0;
    for (rank, &k) in order.iter().enumerate() {
        if labels[k] == 1 {
            hits += 1.0;
            ap += hits / (rank + 1) as f64;
        }
    }
    ap / pos
}

fn permutations(n: usize, visit: &mut impl FnMut(&[usize])) {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], visit: &mut impl FnMut(&[usize])) {
        if prefix.len() == used.len() {
            visit(prefix);
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, visit);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], visit);
}

/// Step-wise average precision minimised over every ordering that ranks
/// scores in non-increasing order, i.e. the worst case over tie breaks.
pub fn brute_auc_pr(scores: &[f64], labels: &[u8]) -> f64 {
    let mut best = f64::INFINITY;
    permutations(scores.len(), &mut |order| {
        if order.windows(2).all(|w| scores[w[0]] >= scores[w[1]]) {
            best = best.min(step_ap(order, labels));
        }
    });
    best
}

/// `max_t |F_a(t) - F_b(t)|` over every sample point `t`.
pub fn brute_ks(a: &[f64], b: &[f64]) -> f64 {
    let ecdf = |xs: &[f64], t: f64| xs.iter().filter(|&&x| x <= t).count() as f64 / xs.len() as f64;
    a.iter()
        .chain(b)
        .map(|&t| (ecdf(a, t) - ecdf(b, t)).abs())
        .fold(0.0, f64::max)
}

/// A labeled score vector of length 2..=8 drawn from a coarse grid so ties
/// are common. Both classes are present.
pub fn small_case<R: Rng>(rng: &mut R) -> (Vec<f64>, Vec<u8>) {
    loop {
        let n = rng.gen_range(2..=8);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64 * 0.25).collect();
        let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.4))).collect();
        if labels.contains(&0) && labels.contains(&1) {
            return (scores, labels);
        }
    }
}

// --------------------------------------------------------------- gradients

/// Layer-by-layer forward in plain loops, returning the output and every
/// relu pre-activation seen.
pub fn oracle_mlp(net: &MlpNetwork, x: &[f64], relu_pre: &mut Vec<f64>) -> Vec<f64> {
    let mut cur = x.to_vec();
    for layer in net.layers() {
        let w = layer.weights();
        let mut next = layer.bias().to_vec();
        for (j, out) in next.iter_mut().enumerate() {
            for (k, xk) in cur.iter().enumerate() {
                *out += xk * w.get(k, j);
            }
        }
        if layer.activation() == Activation::Relu {
            relu_pre.extend_from_slice(&next);
            next.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        cur = next;
    }
    cur
}

/// Samples lying closer than the margin to a non-differentiable point.
pub struct KinkReport {
    pub adjacent: Vec<usize>,
}

/// Flags samples within `margin` of a relu kink, a branch boundary, a
/// zero reconstruction error, or a kink of the score terms.
pub fn kink_adjacent(model: &SgaeModel, batch: &DataMatrix, margin: f64) -> KinkReport {
    let cfg = *model.config();
    let n = batch.rows();
    let mut pre = Vec::new();
    let mut errors = Vec::with_capacity(n);
    let mut scores = Vec::with_capacity(n);
    let mut near_relu = vec![false; n];
    for i in 0..n {
        pre.clear();
        let x = batch.row(i);
        let z = oracle_mlp(model.encoder(), x, &mut pre);
        let xt = oracle_mlp(model.decoder(), &z, &mut pre);
        let e = x.iter().zip(&xt).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let s = match model.scorer() {
            Some(sc) => oracle_mlp(sc, &z, &mut pre)[0],
            None => e,
        };
        near_relu[i] = pre.iter().any(|p| p.abs() < margin);
        errors.push(e);
        scores.push(s);
    }
    let mut sorted = errors.clone();
    sorted.sort_by(f64::total_cmp);
    let k = ((cfg.eps_p * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    let eps = sorted[k - 1];
    // Neighbouring order statistics around the threshold rank.
    let below = if k >= 2 { sorted[k - 2] } else { f64::NEG_INFINITY };
    let above = if k < n { sorted[k] } else { f64::INFINITY };
    let threshold_gap = (eps - below).min(above - eps);

    let uses_branch = cfg.variant != Variant::PlainAe;
    let adjacent = (0..n)
        .filter(|&i| {
            let e = errors[i];
            let s = scores[i];
            let on_threshold = e == eps;
            let branch_close = uses_branch
                && ((on_threshold && threshold_gap < margin) || (!on_threshold && (e - eps).abs() < margin));
            let score_close = match cfg.variant {
                Variant::PlainAe => false,
                Variant::Normal | Variant::Lognormal => (s - cfg.a).abs() < margin,
                _ => (s - cfg.mu0).abs() < margin || (s - cfg.a).abs() < margin,
            };
            near_relu[i] || e < margin || branch_close || score_close
        })
        .collect();
    KinkReport { adjacent }
}

/// A small random model, batch and loss configuration.
pub struct GradCase {
    pub model: SgaeModel,
    pub batch: DataMatrix,
}

pub fn random_grad_case<R: Rng>(rng: &mut R, variant: Variant, seed: u64) -> GradCase {
    let d = rng.gen_range(2..=4);
    let hidden = rng.gen_range(3..=5);
    let latent = rng.gen_range(2..=3);
    let arch = Architecture {
        encoder: vec![hidden, latent],
        scorer: vec![rng.gen_range(2..=4)],
    };
    let cfg = SgLossConfig {
        lambda_se: if rng.gen_bool(0.5) { 0.01 } else { 1.0 },
        lambda_a: if rng.gen_bool(0.5) { 18.0 } else { 2.0 },
        a: rng.gen_range(0.2..3.0),
        mu0: if rng.gen_bool(0.5) { 0.01 } else { 0.3 },
        eps_p: rng.gen_range(0.5..0.95),
        variant,
    };
    let model = SgaeModel::new(d, &arch, cfg, seed).expect("valid tiny model");
    let n = rng.gen_range(6..=16);
    let dist = Uniform::new(-2.0, 2.0);
    let values = (0..n * d).map(|_| dist.sample(rng)).collect();
    GradCase {
        model,
        batch: DataMatrix::from_vec(n, d, values).unwrap(),
    }
}

pub struct GradCheck {
    pub checked: usize,
    pub within: usize,
    pub worst: f64,
}

impl GradCheck {
    pub fn fraction(&self) -> f64 {
        self.within as f64 / self.checked.max(1) as f64
    }
}

/// Relative error with a floor on the denominator so that two exact zeros
/// (dead units) compare equal.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Central differences of the library's per-batch total loss against its
/// analytic gradient. Kink-adjacent samples are removed from the batch first.
pub fn gradient_check(case: &GradCase, h: f64, tol: f64) -> GradCheck {
    let mut batch = case.batch.clone();
    loop {
        let report = kink_adjacent(&case.model, &batch, 50.0 * h);
        if report.adjacent.is_empty() {
            break;
        }
        let keep: Vec<usize> = (0..batch.rows()).filter(|i| !report.adjacent.contains(i)).collect();
        assert!(keep.len() >= 2, "too many kink-adjacent samples");
        batch = batch.select_rows(&keep);
    }

    let (_, grads) = case.model.loss_and_grads(&batch, None).unwrap();
    let analytic: Vec<f64> = grads.slices().iter().flat_map(|s| s.iter().copied()).collect();

    let mut probe = case.model.clone();
    let mut out = GradCheck {
        checked: 0,
        within: 0,
        worst: 0.0,
    };
    let shapes = probe.param_shapes();
    let mut flat = 0;
    for (slice, &len) in shapes.iter().enumerate() {
        for j in 0..len {
            let orig = probe.param_slices()[slice][j];
            probe.param_slices_mut()[slice][j] = orig + h;
            let up = probe.total_loss(&batch).unwrap();
            probe.param_slices_mut()[slice][j] = orig - h;
            let down = probe.total_loss(&batch).unwrap();
            probe.param_slices_mut()[slice][j] = orig;
            let numeric = (up - down) / (2.0 * h);
            let err = relative_error(analytic[flat], numeric);
            out.checked += 1;
            if err <= tol {
                out.within += 1;
            }
            out.worst = out.worst.max(err);
            flat += 1;
        }
    }
    out
}

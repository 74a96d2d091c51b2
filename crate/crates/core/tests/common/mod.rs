//! Test-only oracles shared by the integration suites.
#![allow(dead_code)]

use febaa::evaluation::LogisticRegression;
use febaa::gcl::{self, EncoderParams, ViewInput};
use febaa::graph::NormalizedAdjacency;
use febaa::seed::{self, Rng};
use febaa::Matrix;
use rand::Rng as _;

pub fn random_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

pub fn random_edges(n: usize, p: f64, rng: &mut Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// Dense `D̃^{-1/2}(A+I)D̃^{-1/2}` computed without the sparse path.
pub fn dense_normalized_adjacency(n: usize, edges: &[(usize, usize)]) -> Matrix {
    let mut a = Matrix::identity(n);
    for &(i, j) in edges {
        a[(i, j)] += 1.0;
        if i != j {
            a[(j, i)] += 1.0;
        }
    }
    let deg: Vec<f64> = (0..n).map(|i| a.row(i).iter().sum()).collect();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = a[(i, j)] / (deg[i] * deg[j]).sqrt();
        }
    }
    out
}

/// Dense triple-loop products, independent of `Matrix::matmul`.
pub fn dense_matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut s = 0.0;
            for k in 0..a.cols() {
                s += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

pub fn dense_encode(w1: &Matrix, w2: &Matrix, adj: &Matrix, x: &Matrix) -> Matrix {
    let z = dense_matmul(&dense_matmul(adj, x), w1).map(|v| v.max(0.0));
    dense_matmul(&dense_matmul(adj, &z), w2)
}

/// Pairwise-summation contrastive loss straight from the definition.
pub fn brute_force_loss(h1: &Matrix, h2: &Matrix, tau: f64) -> f64 {
    let n = h1.rows();
    let cos = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        d / (na * nb)
    };
    let mut total = 0.0;
    for (a, b) in [(h1, h2), (h2, h1)] {
        for i in 0..n {
            let pos = (cos(a.row(i), b.row(i)) / tau).exp();
            let mut denom = 0.0;
            for k in 0..n {
                denom += (cos(a.row(i), b.row(k)) / tau).exp();
                if k != i {
                    denom += (cos(a.row(i), a.row(k)) / tau).exp();
                }
            }
            total -= (pos / denom).ln();
        }
    }
    total / (2 * n) as f64
}

/// Elementwise relative error with a floor on the denominator so entries that
/// are zero in both routes do not divide by zero.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Central differences of `f` at every entry of `m`.
pub fn central_differences(m: &Matrix, h: f64, mut f: impl FnMut(&Matrix) -> f64) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    let mut probe = m.clone();
    for idx in 0..m.as_slice().len() {
        let orig = probe.as_slice()[idx];
        probe.as_mut_slice()[idx] = orig + h;
        let plus = f(&probe);
        probe.as_mut_slice()[idx] = orig - h;
        let minus = f(&probe);
        probe.as_mut_slice()[idx] = orig;
        out.as_mut_slice()[idx] = (plus - minus) / (2.0 * h);
    }
    out
}

pub struct GradInstance {
    pub params: EncoderParams,
    pub view1: ViewInput,
    pub view2: ViewInput,
    pub temperature: f64,
    pub weight_decay: f64,
}

/// Random encoder-gradient instance with `n` nodes.
pub fn grad_instance(seed_value: u64, n: usize, f: usize, d: usize, out: usize) -> GradInstance {
    let mut rng = seed::rng(seed_value);
    let params = EncoderParams {
        w1: random_matrix(f, d, &mut rng),
        w2: random_matrix(d, out, &mut rng),
    };
    let view = |rng: &mut Rng| {
        let edges = febaa::graph::symmetrize(&random_edges(n, 0.3, rng));
        ViewInput::new(
            NormalizedAdjacency::from_edges(n, &edges),
            random_matrix(n, f, rng),
        )
    };
    let view1 = view(&mut rng);
    let view2 = view(&mut rng);
    GradInstance {
        params,
        view1,
        view2,
        temperature: rng.gen_range(0.3..1.0),
        weight_decay: rng.gen_range(0.0..1e-2),
    }
}

/// Max elementwise relative error of analytic vs central-difference gradients.
pub fn encoder_gradient_error(inst: &GradInstance, h: f64) -> f64 {
    let g = gcl::gradients(
        &inst.params,
        &inst.view1,
        &inst.view2,
        inst.temperature,
        inst.weight_decay,
    )
    .unwrap();
    let objective = |p: &EncoderParams| {
        gcl::objective(
            p,
            &inst.view1,
            &inst.view2,
            inst.temperature,
            inst.weight_decay,
        )
        .unwrap()
    };
    let num_w1 = central_differences(&inst.params.w1, h, |w1| {
        objective(&EncoderParams {
            w1: w1.clone(),
            w2: inst.params.w2.clone(),
        })
    });
    let num_w2 = central_differences(&inst.params.w2, h, |w2| {
        objective(&EncoderParams {
            w1: inst.params.w1.clone(),
            w2: w2.clone(),
        })
    });
    let mut worst: f64 = 0.0;
    for (a, n) in [(&g.w1, &num_w1), (&g.w2, &num_w2)] {
        for (&x, &y) in a.as_slice().iter().zip(n.as_slice()) {
            worst = worst.max(relative_error(x, y));
        }
    }
    worst
}

/// Worst relative error of the logistic-regression gradient on a random
/// 5-sample, 3-class instance.
pub fn logreg_gradient_error(seed_value: u64) -> f64 {
    let mut rng = seed::rng(seed_value);
    let x = random_matrix(5, 3, &mut rng);
    let y = [0, 2, 1, 2, 0];
    let model = LogisticRegression {
        weights: random_matrix(3, 3, &mut rng),
        bias: (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect(),
    };
    let l2 = 0.05;
    let (d_w, d_b) = model.gradient(&x, &y, l2).unwrap();
    let num_w = central_differences(&model.weights, 1e-5, |w| {
        LogisticRegression {
            weights: w.clone(),
            bias: model.bias.clone(),
        }
        .objective(&x, &y, l2)
        .unwrap()
    });
    let bias = Matrix::from_vec(1, 3, model.bias.clone()).unwrap();
    let num_b = central_differences(&bias, 1e-5, |b| {
        LogisticRegression {
            weights: model.weights.clone(),
            bias: b.as_slice().to_vec(),
        }
        .objective(&x, &y, l2)
        .unwrap()
    });
    d_w.as_slice()
        .iter()
        .chain(&d_b)
        .zip(num_w.as_slice().iter().chain(num_b.as_slice()))
        .map(|(a, n)| relative_error(*a, *n))
        .fold(0.0, f64::max)
}

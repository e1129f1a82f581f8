use ndarray::{Array1, ArrayView1};

/// `log Σ exp(z_j)`, computed after subtracting the maximum.
pub fn logsumexp(z: ArrayView1<'_, f64>) -> f64 {
    let m = z.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if m.is_infinite() {
        return m;
    }
    m + z.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

pub fn softmax(z: ArrayView1<'_, f64>) -> Array1<f64> {
    let m = z.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let e = z.mapv(|x| (x - m).exp());
    let total = e.sum();
    e / total
}

/// NOTA detection score: the negative free energy of the logits.
pub fn nota_score(logits: ArrayView1<'_, f64>) -> f64 {
    logsumexp(logits)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log σ(x)` without overflow: `-softplus(-x)`.
pub fn log_sigmoid(x: f64) -> f64 {
    -softplus(-x)
}

pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(v: ArrayView1<'_, f64>) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Relation(usize),
    Nota,
}

/// NOTA when `s(x) ≤ alpha`, otherwise the most probable known relation.
pub fn decide(logits: ArrayView1<'_, f64>, alpha: f64) -> Decision {
    if nota_score(logits) <= alpha {
        Decision::Nota
    } else {
        Decision::Relation(argmax(logits))
    }
}

use ndarray::Array1;

use crate::encoder::{
    class_logits, forward, head_backward, nota_score, sigmoid, softmax, softplus, EncoderParams,
    MarkedInstance,
};
use crate::error::{Error, Result};
use crate::synthesis::NegativeInstance;

/// A known training instance and its relation index.
#[derive(Debug, Clone, Copy)]
pub struct Known<'a> {
    pub marked: &'a MarkedInstance,
    pub label: usize,
}

/// Mean of `−log p(y_i)` over the batch.
pub fn cls_loss(probs: &[Array1<f64>], labels: &[usize]) -> Result<f64> {
    if probs.len() != labels.len() || probs.is_empty() {
        return Err(Error::Shape(format!(
            "{} probability vectors for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let total: f64 = probs.iter().zip(labels).map(|(p, &y)| -p[y].ln()).sum();
    Ok(total / probs.len() as f64)
}

/// Binary sigmoid loss pushing known scores up and negative scores down.
/// Each half is averaged over its own batch; an empty `s_neg` leaves only
/// the known half.
pub fn nota_loss(s_known: &[f64], s_neg: &[f64]) -> f64 {
    // −log σ(s) = softplus(−s),  −log(1 − σ(s)) = softplus(s)
    let known = mean(s_known.iter().map(|&s| softplus(-s)));
    let neg = mean(s_neg.iter().map(|&s| softplus(s)));
    known + neg
}

pub fn total_loss(l_cls: f64, l_nota: f64, beta: f64) -> f64 {
    l_cls + beta * l_nota
}

/// Mean known score minus mean negative score.
pub fn delta_s(s_known: &[f64], s_neg: &[f64]) -> f64 {
    mean(s_known.iter().copied()) - mean(s_neg.iter().copied())
}

fn mean(xs: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = xs.len();
    if n == 0 {
        0.0
    } else {
        xs.sum::<f64>() / n as f64
    }
}

/// `s(x')` of a synthesized negative.
pub fn negative_score(params: &EncoderParams, neg: &NegativeInstance) -> Result<f64> {
    Ok(match neg {
        NegativeInstance::Tokens(t) => forward(params, &t.marked)?.score(),
        NegativeInstance::Representation(h) => nota_score(class_logits(params, h.view()).view()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchLoss {
    pub l_cls: f64,
    pub l_nota: f64,
    pub total: f64,
    /// `None` when the batch had no negatives.
    pub delta_s: Option<f64>,
}

/// Loss of one batch and, when `grads` is given, its gradient accumulated
/// into `grads`. Representation-level negatives only reach the head.
pub fn batch_loss(
    params: &EncoderParams,
    knowns: &[Known<'_>],
    negatives: &[NegativeInstance],
    beta: f64,
    mut grads: Option<&mut EncoderParams>,
) -> Result<BatchLoss> {
    if knowns.is_empty() {
        return Err(Error::Invalid("empty batch".into()));
    }
    let n = params.config.num_relations;
    let bk = knowns.len() as f64;
    let mut l_cls = 0.0;
    let mut s_known = Vec::with_capacity(knowns.len());
    for k in knowns {
        if k.label >= n {
            return Err(Error::Invalid(format!("label {} out of range for {n} relations", k.label)));
        }
        let fwd = forward(params, k.marked)?;
        let s = fwd.score();
        l_cls += s - fwd.logits[k.label];
        s_known.push(s);
        if let Some(g) = grads.as_deref_mut() {
            let p = fwd.probs();
            let mut dz = &p * ((1.0 + beta * (sigmoid(s) - 1.0)) / bk);
            dz[k.label] -= 1.0 / bk;
            fwd.backward(params, dz.view(), Some(g));
        }
    }

    let bn = negatives.len() as f64;
    let mut s_neg = Vec::with_capacity(negatives.len());
    for neg in negatives {
        match neg {
            NegativeInstance::Tokens(t) => {
                let fwd = forward(params, &t.marked)?;
                let s = fwd.score();
                s_neg.push(s);
                if let Some(g) = grads.as_deref_mut() {
                    let dz = fwd.probs() * (beta * sigmoid(s) / bn);
                    fwd.backward(params, dz.view(), Some(g));
                }
            }
            NegativeInstance::Representation(h) => {
                let logits = class_logits(params, h.view());
                let s = nota_score(logits.view());
                s_neg.push(s);
                if let Some(g) = grads.as_deref_mut() {
                    let dz = softmax(logits.view()) * (beta * sigmoid(s) / bn);
                    head_backward(params, h, dz.view(), Some(g));
                }
            }
        }
    }

    let l_cls = l_cls / bk;
    let l_nota = nota_loss(&s_known, &s_neg);
    Ok(BatchLoss {
        l_cls,
        l_nota,
        total: total_loss(l_cls, l_nota, beta),
        delta_s: (!negatives.is_empty()).then(|| delta_s(&s_known, &s_neg)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn cls_loss_examples() {
        let u = array![0.25, 0.25, 0.25, 0.25];
        assert!((cls_loss(&[u], &[2]).unwrap() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(cls_loss(&[array![0.0, 1.0]], &[1]).unwrap(), 0.0);
        let got = cls_loss(&[array![0.5, 0.5], array![0.75, 0.25]], &[0, 1]).unwrap();
        assert!((got - (2f64.ln() + 4f64.ln()) / 2.0).abs() < 1e-15);
        assert!((got - 1.0397).abs() < 1e-4);
        assert!(cls_loss(&[], &[]).is_err());
    }

    #[test]
    fn nota_loss_examples() {
        let z = [0.0; 4];
        assert!((nota_loss(&z, &z) - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert!(nota_loss(&[800.0], &[-800.0]) < 1e-300);
        let c = 1.7;
        // arguments swapped, each side holding the symmetric pair {+c, −c}
        let a = nota_loss(&[c, -c], &[-c, c]);
        let b = nota_loss(&[-c, c], &[c, -c]);
        assert!((a - b).abs() < 1e-15);
        assert!(nota_loss(&[1e6], &[]).is_finite());
    }

    #[test]
    fn total_loss_examples() {
        assert_eq!(total_loss(0.7, 9.0, 0.0), 0.7);
        assert!((total_loss(1.0, 2.0, 0.05) - 1.1).abs() < 1e-15);
        let part = |b: f64| total_loss(1.0, 2.0, b) - 1.0;
        assert!((part(0.1) - 2.0 * part(0.05)).abs() < 1e-15);
    }

    #[test]
    fn delta_s_examples() {
        assert_eq!(delta_s(&[2.0, 4.0], &[1.0, 1.0]), 2.0);
        assert_eq!(delta_s(&[1.5, -3.0], &[1.5, -3.0]), 0.0);
    }

    proptest! {
        #[test]
        fn nota_loss_monotone(
            known in prop::collection::vec(-20.0..20.0f64, 1..6),
            neg in prop::collection::vec(-20.0..20.0f64, 1..6),
            i in 0usize..6,
            bump in 0.01..2.0f64,
        ) {
            let base = nota_loss(&known, &neg);
            let mut k2 = known.clone();
            let ki = i % k2.len();
            k2[ki] += bump;
            prop_assert!(nota_loss(&k2, &neg) < base);
            let mut n2 = neg.clone();
            let ni = i % n2.len();
            n2[ni] += bump;
            prop_assert!(nota_loss(&known, &n2) > base);
        }

        #[test]
        fn delta_s_shift_cancels(
            known in prop::collection::vec(-5.0..5.0f64, 1..6),
            neg in prop::collection::vec(-5.0..5.0f64, 1..6),
            c in -10.0..10.0f64,
        ) {
            let k2: Vec<f64> = known.iter().map(|s| s + c).collect();
            let n2: Vec<f64> = neg.iter().map(|s| s + c).collect();
            prop_assert!((delta_s(&known, &neg) - delta_s(&k2, &n2)).abs() < 1e-9);
        }
    }
}

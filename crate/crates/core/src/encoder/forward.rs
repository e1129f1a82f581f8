use ndarray::{s, Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};

use super::params::{EncoderParams, MixerBlock, Readout};
use super::scores::{nota_score, softmax};
use super::MarkedInstance;

struct BlockCache {
    x: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    attn: Array2<f64>,
    ctx: Array2<f64>,
    h1: Array2<f64>,
    t: Array2<f64>,
}

/// Cached activations of one forward pass, ready for [`Forward::backward`].
pub struct Forward {
    ids: Option<Vec<usize>>,
    e1: usize,
    e2: usize,
    blocks: Vec<BlockCache>,
    hidden: Array2<f64>,
    /// Relation representation `h`, length `2·d`.
    pub repr: Array1<f64>,
    /// `W_cls · h + b`.
    pub logits: Array1<f64>,
}

impl Forward {
    pub fn score(&self) -> f64 {
        nota_score(self.logits.view())
    }

    pub fn probs(&self) -> Array1<f64> {
        softmax(self.logits.view())
    }

    pub fn len(&self) -> usize {
        self.hidden.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Back-propagates `∂L/∂logits`. Parameter gradients are accumulated into
    /// `grads` when given; the return value holds `∂L/∂w_i` for the input token
    /// embedding at every position (`len × d`).
    pub fn backward(
        &self,
        params: &EncoderParams,
        dlogits: ArrayView1<'_, f64>,
        mut grads: Option<&mut EncoderParams>,
    ) -> Array2<f64> {
        let cfg = &params.config;
        let d = cfg.d_model;
        let len = self.len();
        let drepr = head_backward(params, &self.repr, dlogits, grads.as_deref_mut());

        let mut dh = Array2::<f64>::zeros((len, d));
        match cfg.readout {
            Readout::Markers => {
                dh.row_mut(self.e1).scaled_add(1.0, &drepr.slice(s![..d]));
                dh.row_mut(self.e2).scaled_add(1.0, &drepr.slice(s![d..]));
            }
            Readout::Mean | Readout::Sum => {
                let mut pooled = drepr.slice(s![..d]).to_owned() + drepr.slice(s![d..]);
                if cfg.readout == Readout::Mean {
                    pooled /= len as f64;
                }
                for mut row in dh.rows_mut() {
                    row.assign(&pooled);
                }
            }
        }

        for (i, cache) in self.blocks.iter().enumerate().rev() {
            let g = grads.as_deref_mut().map(|g| &mut g.blocks[i]);
            dh = block_backward(&params.blocks[i], cache, dh, g);
        }

        if let Some(g) = grads {
            if let Some(ids) = &self.ids {
                for (pos, &id) in ids.iter().enumerate() {
                    g.embeddings.row_mut(id).scaled_add(1.0, &dh.row(pos));
                }
            }
            if cfg.use_positions {
                g.positions.slice_mut(s![..len, ..]).scaled_add(1.0, &dh);
            }
        }
        dh
    }
}

/// Linear head backward: accumulates `W_cls`/`b` gradients, returns `∂L/∂h`.
pub fn head_backward(
    params: &EncoderParams,
    repr: &Array1<f64>,
    dlogits: ArrayView1<'_, f64>,
    grads: Option<&mut EncoderParams>,
) -> Array1<f64> {
    if let Some(g) = grads {
        let outer = dlogits
            .to_owned()
            .insert_axis(Axis(1))
            .dot(&repr.view().insert_axis(Axis(0)));
        g.w_cls += &outer;
        g.b_cls += &dlogits;
    }
    params.w_cls.t().dot(&dlogits)
}

/// `η(h) = W_cls · h + b`.
pub fn class_logits(params: &EncoderParams, repr: ArrayView1<'_, f64>) -> Array1<f64> {
    params.w_cls.dot(&repr) + &params.b_cls
}

/// Full forward pass over a marked instance.
pub fn forward(params: &EncoderParams, inst: &MarkedInstance) -> Result<Forward> {
    let inputs = params.embeddings.select(Axis(0), &inst.ids);
    let mut fwd = forward_inputs(params, inputs, inst.e1, inst.e2)?;
    fwd.ids = Some(inst.ids.clone());
    Ok(fwd)
}

/// Forward pass from explicit input token embeddings (`len × d`). Position
/// embeddings are still added when enabled. Embedding-table gradients are
/// not produced for passes built this way.
pub fn forward_inputs(
    params: &EncoderParams,
    inputs: Array2<f64>,
    e1: usize,
    e2: usize,
) -> Result<Forward> {
    let cfg = &params.config;
    let len = inputs.nrows();
    if len > cfg.max_len {
        return Err(Error::Length {
            len,
            max: cfg.max_len,
        });
    }
    if len == 0 || e1 >= len || e2 >= len {
        return Err(Error::Shape(format!(
            "marker positions ({e1}, {e2}) invalid for length {len}"
        )));
    }
    if inputs.ncols() != cfg.d_model {
        return Err(Error::Shape(format!(
            "input width {} != d_model {}",
            inputs.ncols(),
            cfg.d_model
        )));
    }
    let mut x = inputs;
    if cfg.use_positions {
        x += &params.positions.slice(s![..len, ..]);
    }
    let mut blocks = Vec::with_capacity(params.blocks.len());
    for b in &params.blocks {
        let (out, cache) = block_forward(b, x);
        blocks.push(cache);
        x = out;
    }
    let d = cfg.d_model;
    let mut repr = Array1::<f64>::zeros(2 * d);
    match cfg.readout {
        Readout::Markers => {
            repr.slice_mut(s![..d]).assign(&x.row(e1));
            repr.slice_mut(s![d..]).assign(&x.row(e2));
        }
        Readout::Mean | Readout::Sum => {
            let mut pooled = x.sum_axis(Axis(0));
            if cfg.readout == Readout::Mean {
                pooled /= len as f64;
            }
            repr.slice_mut(s![..d]).assign(&pooled);
            repr.slice_mut(s![d..]).assign(&pooled);
        }
    }
    let logits = class_logits(params, repr.view());
    Ok(Forward {
        ids: None,
        e1,
        e2,
        blocks,
        hidden: x,
        repr,
        logits,
    })
}

/// Relation representation `h` of a marked instance.
pub fn encode(params: &EncoderParams, inst: &MarkedInstance) -> Result<Array1<f64>> {
    Ok(forward(params, inst)?.repr)
}

/// Scalar objectives whose input-embedding gradient can be requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// The NOTA score `s(x)`.
    NotaScore,
    /// Cross-entropy `-log p(y|x)` for the given relation index.
    CrossEntropy(usize),
}

/// `∇_{w_i} objective` for every position, from one forward-backward pass.
pub fn grad_embeddings(
    params: &EncoderParams,
    inst: &MarkedInstance,
    objective: Objective,
) -> Result<Array2<f64>> {
    let fwd = forward(params, inst)?;
    let dlogits = objective_grad(&fwd, objective);
    Ok(fwd.backward(params, dlogits.view(), None))
}

pub(crate) fn objective_grad(fwd: &Forward, objective: Objective) -> Array1<f64> {
    let mut p = fwd.probs();
    match objective {
        Objective::NotaScore => p,
        Objective::CrossEntropy(y) => {
            p[y] -= 1.0;
            p
        }
    }
}

fn block_forward(b: &MixerBlock, x: Array2<f64>) -> (Array2<f64>, BlockCache) {
    let scale = 1.0 / (x.ncols() as f64).sqrt();
    let q = x.dot(&b.wq);
    let k = x.dot(&b.wk);
    let v = x.dot(&b.wv);
    let mut attn = q.dot(&k.t()) * scale;
    for mut row in attn.rows_mut() {
        let sm = softmax(row.view());
        row.assign(&sm);
    }
    let ctx = attn.dot(&v);
    let h1 = &x + &ctx.dot(&b.wo);
    let t = (h1.dot(&b.w1) + &b.b1).mapv(f64::tanh);
    let out = &h1 + &(t.dot(&b.w2) + &b.b2);
    (
        out,
        BlockCache {
            x,
            q,
            k,
            v,
            attn,
            ctx,
            h1,
            t,
        },
    )
}

fn block_backward(
    b: &MixerBlock,
    c: &BlockCache,
    dout: Array2<f64>,
    grads: Option<&mut MixerBlock>,
) -> Array2<f64> {
    let scale = 1.0 / (c.x.ncols() as f64).sqrt();

    // feed-forward: out = h1 + tanh(h1 W1 + b1) W2 + b2
    let dt = dout.dot(&b.w2.t());
    let du = dt * &c.t.mapv(|t| 1.0 - t * t);
    let dh1 = &dout + &du.dot(&b.w1.t());

    // attention: h1 = x + softmax(q kᵀ · scale) v Wo
    let dctx = dh1.dot(&b.wo.t());
    let dattn = dctx.dot(&c.v.t());
    let dv = c.attn.t().dot(&dctx);
    let mut dscores = &dattn * &c.attn;
    for (mut row, a) in dscores.rows_mut().into_iter().zip(c.attn.rows()) {
        let dot = row.sum();
        row.scaled_add(-dot, &a);
    }
    dscores *= scale;
    let dq = dscores.dot(&c.k);
    let dk = dscores.t().dot(&c.q);

    if let Some(g) = grads {
        g.w2 += &c.t.t().dot(&dout);
        g.b2 += &dout.sum_axis(Axis(0));
        g.w1 += &c.h1.t().dot(&du);
        g.b1 += &du.sum_axis(Axis(0));
        g.wo += &c.ctx.t().dot(&dh1);
        g.wq += &c.x.t().dot(&dq);
        g.wk += &c.x.t().dot(&dk);
        g.wv += &c.x.t().dot(&dv);
    }
    dh1 + dq.dot(&b.wq.t()) + dk.dot(&b.wk.t()) + dv.dot(&b.wv.t())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EncoderConfig;
    use ndarray::array;

    fn linear_config(vocab: usize, n: usize, d: usize) -> EncoderConfig {
        EncoderConfig {
            d_model: d,
            depth: 0,
            readout: Readout::Sum,
            use_positions: false,
            ..EncoderConfig::new(vocab, n)
        }
    }

    fn marked(ids: Vec<usize>, e1: usize, e2: usize) -> MarkedInstance {
        let source = ids.iter().enumerate().map(|(i, _)| Some(i)).collect();
        MarkedInstance {
            ids,
            e1,
            e2,
            source,
        }
    }

    #[test]
    fn zero_embeddings_give_zero_repr() {
        let p = EncoderParams::zeros(EncoderConfig {
            depth: 0,
            use_positions: false,
            ..EncoderConfig::new(10, 2)
        });
        let h = encode(&p, &marked(vec![3, 7, 4, 5, 6], 0, 3)).unwrap();
        assert_eq!(h.len(), 64);
        assert!(h.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn repr_dim_is_twice_d_model() {
        for readout in [Readout::Markers, Readout::Mean, Readout::Sum] {
            let cfg = EncoderConfig {
                d_model: 5,
                readout,
                depth: 2,
                ..EncoderConfig::new(10, 2)
            };
            let p = EncoderParams::init(cfg, 3).unwrap();
            let h = encode(&p, &marked(vec![3, 8, 4, 5, 9, 6], 0, 3)).unwrap();
            assert_eq!(h.len(), 10);
        }
    }

    #[test]
    fn sum_readout_is_sum_of_embeddings() {
        let mut p = EncoderParams::zeros(linear_config(4, 1, 2));
        p.embeddings.row_mut(2).assign(&array![1.0, 2.0]);
        p.embeddings.row_mut(3).assign(&array![-0.5, 4.0]);
        let h = encode(&p, &marked(vec![2, 3], 0, 1)).unwrap();
        assert_eq!(h, array![0.5, 6.0, 0.5, 6.0]);
    }

    #[test]
    fn logits_examples() {
        let mut p = EncoderParams::zeros(linear_config(4, 2, 1));
        p.b_cls.assign(&array![1.0, 2.0]);
        assert_eq!(class_logits(&p, array![3.0, -1.0].view()), array![1.0, 2.0]);
        assert_eq!(class_logits(&p, array![0.0, 0.0].view()), array![1.0, 2.0]);

        let mut p = EncoderParams::zeros(linear_config(4, 1, 1));
        p.w_cls.assign(&array![[1.0, 1.0]]);
        assert_eq!(class_logits(&p, array![2.0, 3.0].view()), array![5.0]);
    }

    #[test]
    fn too_long_is_length_error() {
        let p = EncoderParams::zeros(EncoderConfig {
            max_len: 3,
            ..EncoderConfig::new(10, 2)
        });
        let err = forward(&p, &marked(vec![3, 4, 5, 6], 0, 2)).err().unwrap();
        assert!(matches!(err, Error::Length { len: 4, max: 3 }));
    }

    #[test]
    fn linear_gradient_is_head_row() {
        let p = EncoderParams::init(linear_config(12, 1, 4), 5).unwrap();
        let inst = marked(vec![3, 9, 4, 5, 10, 11, 6], 0, 3);
        let g = grad_embeddings(&p, &inst, Objective::NotaScore).unwrap();
        assert_eq!(g.dim(), (7, 4));
        let w = p.w_cls.row(0);
        let expected = w.slice(s![..4]).to_owned() + w.slice(s![4..]);
        for row in g.rows() {
            for (a, b) in row.iter().zip(expected.iter()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }
}

use rand::Rng;

use super::mlp::{Mlp, MlpCache, MlpSpec};
use super::{Gradients, Matrix, ParameterStore};
use crate::error::{Error, Result};

/// Marks an aggregate entry that received no message.
const NO_SOURCE: usize = usize::MAX;

/// Elementwise max over each receiver's incoming message rows, with the winning message per entry.
#[derive(Clone, Debug)]
pub struct MaxAggregate {
    pub values: Matrix,
    /// Row-major `n × d` message index that produced each value; ties go to the smallest index.
    argmax: Vec<usize>,
}

/// Per-receiver elementwise max; receivers without messages get zero rows.
pub fn max_aggregate(messages: &Matrix, receivers: &[usize], n: usize) -> Result<Matrix> {
    Ok(max_aggregate_traced(messages, receivers, n)?.values)
}

pub fn max_aggregate_traced(messages: &Matrix, receivers: &[usize], n: usize) -> Result<MaxAggregate> {
    if receivers.len() != messages.rows() {
        return Err(Error::Shape(format!(
            "{} receivers for {} messages",
            receivers.len(),
            messages.rows()
        )));
    }
    if let Some(&r) = receivers.iter().find(|&&r| r >= n) {
        return Err(Error::Shape(format!("receiver {r} out of range for {n} nodes")));
    }
    let d = messages.cols();
    let mut values = Matrix::zeros(n, d);
    let mut argmax = vec![NO_SOURCE; n * d];
    for (m, &r) in receivers.iter().enumerate() {
        let msg = messages.row(m);
        let out = values.row_mut(r);
        let src = &mut argmax[r * d..(r + 1) * d];
        for j in 0..d {
            if src[j] == NO_SOURCE || msg[j] > out[j] {
                out[j] = msg[j];
                src[j] = m;
            }
        }
    }
    Ok(MaxAggregate { values, argmax })
}

impl MaxAggregate {
    /// Routes the aggregate gradient back to the winning messages.
    pub fn backward(&self, d_values: &Matrix, n_messages: usize) -> Result<Matrix> {
        if d_values.shape() != self.values.shape() {
            return Err(Error::Shape("max aggregate gradient shape".into()));
        }
        let d = self.values.cols();
        let mut d_messages = Matrix::zeros(n_messages, d);
        for (k, &m) in self.argmax.iter().enumerate() {
            if m != NO_SOURCE {
                let j = k % d;
                let cur = d_messages.get(m, j);
                d_messages.set(m, j, cur + d_values.data()[k]);
            }
        }
        Ok(d_messages)
    }
}

/// Generalized message-passing layer:
/// `h'_v = ζ(h_v, max_{u→v} ξ(h_v, h_u, e_{v,u}))`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpnnLayer {
    message: Mlp,
    update: Mlp,
    node_width: usize,
    edge_width: usize,
}

#[derive(Clone, Debug)]
pub struct MpnnCache {
    message: MlpCache,
    aggregate: MaxAggregate,
    update: MlpCache,
}

impl MpnnLayer {
    pub fn new(
        name: &str,
        node_width: usize,
        edge_width: usize,
        message: MlpSpec,
        update: MlpSpec,
    ) -> Result<Self> {
        let message = Mlp::new(format!("{name}.message"), 2 * node_width + edge_width, message)?;
        let update = Mlp::new(
            format!("{name}.update"),
            node_width + message.output_width(),
            update,
        )?;
        Ok(Self {
            message,
            update,
            node_width,
            edge_width,
        })
    }

    pub fn output_width(&self) -> usize {
        self.update.output_width()
    }

    pub fn init<R: Rng>(&self, store: &mut ParameterStore, rng: &mut R) -> Result<()> {
        self.message.init(store, rng)?;
        self.update.init(store, rng)
    }

    pub fn init_zeros(&self, store: &mut ParameterStore) -> Result<()> {
        self.message.init_zeros(store)?;
        self.update.init_zeros(store)
    }

    fn check(&self, h: &Matrix, e: &Matrix, senders: &[usize], receivers: &[usize]) -> Result<()> {
        if h.cols() != self.node_width || e.cols() != self.edge_width {
            return Err(Error::Shape(format!(
                "mpnn layer expects widths ({}, {}), got ({}, {})",
                self.node_width,
                self.edge_width,
                h.cols(),
                e.cols()
            )));
        }
        if senders.len() != receivers.len() || e.rows() != senders.len() {
            return Err(Error::Shape("edge list and edge features disagree".into()));
        }
        if senders.iter().chain(receivers).any(|&i| i >= h.rows()) {
            return Err(Error::Shape("edge endpoint out of range".into()));
        }
        Ok(())
    }

    pub fn forward(
        &self,
        params: &ParameterStore,
        h: &Matrix,
        e: &Matrix,
        senders: &[usize],
        receivers: &[usize],
    ) -> Result<(Matrix, MpnnCache)> {
        self.check(h, e, senders, receivers)?;
        let msg_in = Matrix::hconcat(&[&h.gather_rows(receivers), &h.gather_rows(senders), e])?;
        let (messages, message) = self.message.forward(params, &msg_in)?;
        let aggregate = max_aggregate_traced(&messages, receivers, h.rows())?;
        let upd_in = Matrix::hconcat(&[h, &aggregate.values])?;
        let (out, update) = self.update.forward(params, &upd_in)?;
        Ok((
            out,
            MpnnCache {
                message,
                aggregate,
                update,
            },
        ))
    }

    /// Returns gradients w.r.t. node features and edge features.
    pub fn backward(
        &self,
        params: &ParameterStore,
        cache: &MpnnCache,
        d_out: &Matrix,
        senders: &[usize],
        receivers: &[usize],
        grads: &mut Gradients,
    ) -> Result<(Matrix, Matrix)> {
        let d_upd_in = self.update.backward(params, &cache.update, d_out, grads)?;
        let agg_width = self.message.output_width();
        let mut parts = d_upd_in.split_columns(&[self.node_width, agg_width])?.into_iter();
        let mut d_h = parts.next().expect("two parts");
        let d_agg = parts.next().expect("two parts");
        let d_messages = cache.aggregate.backward(&d_agg, senders.len())?;
        let d_msg_in = self.message.backward(params, &cache.message, &d_messages, grads)?;
        let mut parts = d_msg_in
            .split_columns(&[self.node_width, self.node_width, self.edge_width])?
            .into_iter();
        let d_recv = parts.next().expect("three parts");
        let d_send = parts.next().expect("three parts");
        let d_e = parts.next().expect("three parts");
        d_h.scatter_add_rows(receivers, &d_recv)?;
        d_h.scatter_add_rows(senders, &d_send)?;
        Ok((d_h, d_e))
    }
}

/// Residual graph-convolution layer on relative positions:
/// `h'_v = ζ(h_v, max_{u→v} ξ(x_v − x_u, h_u)) + h_v`. Cannot change the feature width.
#[derive(Clone, Debug, PartialEq)]
pub struct GcLayer {
    message: Mlp,
    update: Mlp,
    width: usize,
}

#[derive(Clone, Debug)]
pub struct GcCache {
    message: MlpCache,
    aggregate: MaxAggregate,
    update: MlpCache,
}

impl GcLayer {
    pub fn new(name: &str, width: usize, message: MlpSpec, update: MlpSpec) -> Result<Self> {
        let message = Mlp::new(format!("{name}.message"), 2 + width, message)?;
        let update = Mlp::new(format!("{name}.update"), width + message.output_width(), update)?;
        if update.output_width() != width {
            return Err(Error::Shape(format!(
                "graph convolution keeps the feature width: update produces {} but input has {width}",
                update.output_width()
            )));
        }
        Ok(Self {
            message,
            update,
            width,
        })
    }

    pub fn init<R: Rng>(&self, store: &mut ParameterStore, rng: &mut R) -> Result<()> {
        self.message.init(store, rng)?;
        self.update.init(store, rng)
    }

    pub fn init_zeros(&self, store: &mut ParameterStore) -> Result<()> {
        self.message.init_zeros(store)?;
        self.update.init_zeros(store)
    }

    /// `positions` is `n × 2`.
    pub fn forward(
        &self,
        params: &ParameterStore,
        h: &Matrix,
        positions: &Matrix,
        senders: &[usize],
        receivers: &[usize],
    ) -> Result<(Matrix, GcCache)> {
        if h.cols() != self.width || positions.cols() != 2 || positions.rows() != h.rows() {
            return Err(Error::Shape("graph convolution input shapes".into()));
        }
        let mut rel = positions.gather_rows(receivers);
        rel.axpy(-1.0, &positions.gather_rows(senders))?;
        let msg_in = Matrix::hconcat(&[&rel, &h.gather_rows(senders)])?;
        let (messages, message) = self.message.forward(params, &msg_in)?;
        let aggregate = max_aggregate_traced(&messages, receivers, h.rows())?;
        let upd_in = Matrix::hconcat(&[h, &aggregate.values])?;
        let (mut out, update) = self.update.forward(params, &upd_in)?;
        out.add_assign(h)?;
        Ok((
            out,
            GcCache {
                message,
                aggregate,
                update,
            },
        ))
    }

    pub fn backward(
        &self,
        params: &ParameterStore,
        cache: &GcCache,
        d_out: &Matrix,
        senders: &[usize],
        grads: &mut Gradients,
    ) -> Result<Matrix> {
        let d_upd_in = self.update.backward(params, &cache.update, d_out, grads)?;
        let mut parts = d_upd_in
            .split_columns(&[self.width, self.message.output_width()])?
            .into_iter();
        let mut d_h = parts.next().expect("two parts");
        d_h.add_assign(d_out)?;
        let d_agg = parts.next().expect("two parts");
        let d_messages = cache.aggregate.backward(&d_agg, senders.len())?;
        let d_msg_in = self.message.backward(params, &cache.message, &d_messages, grads)?;
        let d_send = d_msg_in.split_columns(&[2, self.width])?.pop().expect("two parts");
        d_h.scatter_add_rows(senders, &d_send)?;
        Ok(d_h)
    }
}

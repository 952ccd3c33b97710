//! Minimal reverse-mode differentiation over dense matrices and the fixed
//! normalized graph operator.

mod train;

pub use train::{
    accuracy, loss_and_grad, train, trained_energy_profile, EpochMetrics, Forward, GcnModel,
    Masks, Optimizer, TrainConfig, TrainOutcome,
};

use crate::error::{Error, Result};
use crate::graph::NormalizedOperator;
use crate::matrix::Matrix;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// `P · a`
    Spmm(Var),
    /// `a + 1 bᵀ` with `b` a `1 × m` row.
    AddBias(Var, Var),
    Relu(Var),
    SoftmaxRows(Var),
    /// Mean of `−log softmax(zᵢ)[labels[i]]` over the rows in `mask`.
    CrossEntropy {
        logits: Var,
        labels: Vec<usize>,
        mask: Vec<usize>,
    },
}

#[derive(Clone, Debug)]
struct Record {
    op: Op,
    value: Matrix,
}

/// A topologically ordered record of primitive operations.
#[derive(Clone, Debug)]
pub struct Tape<'g> {
    operator: &'g NormalizedOperator,
    records: Vec<Record>,
}

fn softmax_row(z: &[f64], out: &mut [f64]) {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, &v) in out.iter_mut().zip(z) {
        *o = (v - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
}

fn softmax_rows(z: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(z.rows(), z.cols());
    for i in 0..z.rows() {
        softmax_row(z.row(i), out.row_mut(i));
    }
    out
}

impl<'g> Tape<'g> {
    pub fn new(operator: &'g NormalizedOperator) -> Self {
        Self {
            operator,
            records: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.records[v.0].value
    }

    fn push(&mut self, op: Op, value: Matrix) -> Var {
        self.records.push(Record { op, value });
        Var(self.records.len() - 1)
    }

    fn eval(&self, op: &Op) -> Result<Matrix> {
        let val = |v: &Var| &self.records[v.0].value;
        match op {
            Op::Leaf => unreachable!("leaves are not evaluated"),
            Op::MatMul(a, b) => val(a).matmul(val(b)),
            Op::Spmm(a) => self.operator.apply(val(a)),
            Op::AddBias(a, b) => {
                let b = val(b);
                if b.rows() != 1 {
                    return Err(Error::shape(format!("bias must be a single row, got {} rows", b.rows())));
                }
                val(a).add_row_vector(b.row(0))
            }
            Op::Relu(a) => Ok(val(a).map(|x| x.max(0.0))),
            Op::SoftmaxRows(a) => Ok(softmax_rows(val(a))),
            Op::CrossEntropy { logits, labels, mask } => {
                let z = val(logits);
                if mask.is_empty() {
                    return Err(Error::EmptyMask);
                }
                if labels.len() != z.rows() {
                    return Err(Error::shape(format!(
                        "{} labels for {} rows",
                        labels.len(),
                        z.rows()
                    )));
                }
                let mut total = 0.0;
                for &i in mask {
                    let row = z.row(i);
                    let c = labels[i];
                    if c >= z.cols() {
                        return Err(Error::invalid(format!("label {c} for {} classes", z.cols())));
                    }
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                    total += lse - row[c];
                }
                Matrix::new(1, 1, vec![total / mask.len() as f64])
            }
        }
    }

    fn record(&mut self, op: Op) -> Result<Var> {
        let value = self.eval(&op)?;
        Ok(self.push(op, value))
    }

    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(Op::Leaf, value)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.record(Op::MatMul(a, b))
    }

    pub fn spmm(&mut self, a: Var) -> Result<Var> {
        self.record(Op::Spmm(a))
    }

    pub fn add_bias(&mut self, a: Var, bias: Var) -> Result<Var> {
        self.record(Op::AddBias(a, bias))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.record(Op::Relu(a)).expect("relu is total")
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        self.record(Op::SoftmaxRows(a)).expect("softmax is total")
    }

    /// Mean softmax cross-entropy of `logits` over the rows in `mask`.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize], mask: &[usize]) -> Result<Var> {
        if let Some(&i) = mask.iter().find(|&&i| i >= labels.len()) {
            return Err(Error::invalid(format!("mask row {i} out of range")));
        }
        self.record(Op::CrossEntropy {
            logits,
            labels: labels.to_vec(),
            mask: mask.to_vec(),
        })
    }

    /// Recomputes every derived value after replacing the given leaves.
    pub fn replay(&mut self, leaves: &[(Var, Matrix)]) -> Result<()> {
        for (v, m) in leaves {
            let rec = &mut self.records[v.0];
            if !matches!(rec.op, Op::Leaf) {
                return Err(Error::invalid("replay can only replace leaves"));
            }
            if rec.value.shape() != m.shape() {
                return Err(Error::shape("replacement leaf has a different shape"));
            }
            rec.value = m.clone();
        }
        for k in 0..self.records.len() {
            if !matches!(self.records[k].op, Op::Leaf) {
                self.records[k].value = self.eval(&self.records[k].op)?;
            }
        }
        Ok(())
    }

    /// Gradients of the scalar `out` with respect to every recorded value.
    pub fn backward(&self, out: Var) -> Result<Gradients> {
        if self.value(out).shape() != (1, 1) {
            return Err(Error::shape("backward needs a scalar output"));
        }
        self.backward_with(out, Matrix::filled(1, 1, 1.0))
    }

    /// Vector-Jacobian products of `⟨cotangent, out⟩` for every recorded value.
    pub fn backward_with(&self, out: Var, cotangent: Matrix) -> Result<Gradients> {
        if self.value(out).shape() != cotangent.shape() {
            return Err(Error::shape("cotangent shape differs from the output"));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; out.0 + 1];
        grads[out.0] = Some(cotangent);
        let accumulate = |grads: &mut Vec<Option<Matrix>>, v: Var, g: Matrix| -> Result<()> {
            match &mut grads[v.0] {
                Some(acc) => acc.axpy(1.0, &g),
                slot => {
                    *slot = Some(g);
                    Ok(())
                }
            }
        };
        for k in (0..=out.0).rev() {
            let Some(g) = grads[k].clone() else {
                continue;
            };
            let val = |v: &Var| &self.records[v.0].value;
            match &self.records[k].op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    accumulate(&mut grads, *a, g.matmul_transpose(val(b))?)?;
                    accumulate(&mut grads, *b, val(a).transpose_matmul(&g)?)?;
                }
                Op::Spmm(a) => {
                    // P is symmetric.
                    accumulate(&mut grads, *a, self.operator.apply(&g)?)?;
                }
                Op::AddBias(a, b) => {
                    let db = Matrix::new(1, g.cols(), g.column_sums())?;
                    accumulate(&mut grads, *a, g)?;
                    accumulate(&mut grads, *b, db)?;
                }
                Op::Relu(a) => {
                    let x = val(a);
                    let mut d = g;
                    for (dv, &xv) in d.as_mut_slice().iter_mut().zip(x.as_slice()) {
                        if xv <= 0.0 {
                            *dv = 0.0;
                        }
                    }
                    accumulate(&mut grads, *a, d)?;
                }
                Op::SoftmaxRows(a) => {
                    let y = &self.records[k].value;
                    let mut d = Matrix::zeros(y.rows(), y.cols());
                    for i in 0..y.rows() {
                        let (yi, gi) = (y.row(i), g.row(i));
                        let dot: f64 = yi.iter().zip(gi).map(|(p, q)| p * q).sum();
                        for ((o, &p), &q) in d.row_mut(i).iter_mut().zip(yi).zip(gi) {
                            *o = p * (q - dot);
                        }
                    }
                    accumulate(&mut grads, *a, d)?;
                }
                Op::CrossEntropy { logits, labels, mask } => {
                    let z = val(logits);
                    let scale = g[(0, 0)] / mask.len() as f64;
                    let mut d = Matrix::zeros(z.rows(), z.cols());
                    for &i in mask {
                        let row = d.row_mut(i);
                        let mut p = vec![0.0; z.cols()];
                        softmax_row(z.row(i), &mut p);
                        p[labels[i]] -= 1.0;
                        for (o, pv) in row.iter_mut().zip(p) {
                            *o += scale * pv;
                        }
                    }
                    accumulate(&mut grads, *logits, d)?;
                }
            }
        }
        Ok(Gradients(grads))
    }
}

/// Gradients indexed by [`Var`].
#[derive(Clone, Debug)]
pub struct Gradients(Vec<Option<Matrix>>);

impl Gradients {
    /// `None` when `v` does not influence the output.
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.0.get(v.0).and_then(|g| g.as_ref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, GraphKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    const H: f64 = 1e-5;

    fn normal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
    }

    fn inner(a: &Matrix, b: &Matrix) -> f64 {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
    }

    /// Norm-wise relative error between analytic and central-difference
    /// gradients of `⟨R, f(inputs)⟩` for every input.
    fn fd_check(
        g: &Graph,
        inputs: Vec<Matrix>,
        build: &dyn Fn(&mut Tape<'_>, &[Var]) -> Result<Var>,
        rng: &mut ChaCha8Rng,
    ) -> f64 {
        let op = g.normalized_operator();
        let eval = |inputs: &[Matrix]| -> (Tape<'_>, Vec<Var>, Var) {
            let mut tape = Tape::new(op);
            let vars: Vec<Var> = inputs.iter().map(|m| tape.leaf(m.clone())).collect();
            let out = build(&mut tape, &vars).unwrap();
            (tape, vars, out)
        };
        let (tape, vars, out) = eval(&inputs);
        let r = normal(tape.value(out).rows(), tape.value(out).cols(), rng);
        let grads = tape.backward_with(out, r.clone()).unwrap();
        let mut worst: f64 = 0.0;
        for (k, input) in inputs.iter().enumerate() {
            let analytic = grads
                .get(vars[k])
                .cloned()
                .unwrap_or_else(|| Matrix::zeros(input.rows(), input.cols()));
            let mut numeric = Matrix::zeros(input.rows(), input.cols());
            for e in 0..input.as_slice().len() {
                let mut shifted = inputs.clone();
                shifted[k].as_mut_slice()[e] += H;
                let (t, _, o) = eval(&shifted);
                let plus = inner(&r, t.value(o));
                shifted[k].as_mut_slice()[e] -= 2.0 * H;
                let (t, _, o) = eval(&shifted);
                let minus = inner(&r, t.value(o));
                numeric.as_mut_slice()[e] = (plus - minus) / (2.0 * H);
            }
            let scale = numeric.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-12);
            worst = worst.max(analytic.max_abs_diff(&numeric) / scale);
        }
        worst
    }

    fn random_graph(rng: &mut ChaCha8Rng, v: usize) -> Graph {
        let edges: Vec<(usize, usize)> = (0..v)
            .flat_map(|i| (i + 1..v).map(move |j| (i, j)))
            .filter(|_| rng.random_bool(0.3))
            .collect();
        Graph::from_edges(v, &edges).unwrap()
    }

    #[test]
    fn primitives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let v = rng.random_range(3..9);
            let (m, k) = (rng.random_range(1..5), rng.random_range(1..5));
            let g = random_graph(&mut rng, v);
            let a = normal(v, m, &mut rng);
            let b = normal(m, k, &mut rng);
            let bias = normal(1, m, &mut rng);
            let labels: Vec<usize> = (0..v).map(|_| rng.random_range(0..m)).collect();
            let mask: Vec<usize> = (0..v).filter(|_| rng.random_bool(0.6)).chain([0]).collect();

            let checks: Vec<(&str, Vec<Matrix>, Box<dyn Fn(&mut Tape<'_>, &[Var]) -> Result<Var>>)> = vec![
                ("matmul", vec![a.clone(), b.clone()], Box::new(|t, x| t.matmul(x[0], x[1]))),
                ("spmm", vec![a.clone()], Box::new(|t, x| t.spmm(x[0]))),
                ("add_bias", vec![a.clone(), bias.clone()], Box::new(|t, x| t.add_bias(x[0], x[1]))),
                ("relu", vec![a.clone()], Box::new(|t, x| Ok(t.relu(x[0])))),
                ("softmax_rows", vec![a.clone()], Box::new(|t, x| Ok(t.softmax_rows(x[0])))),
                (
                    "cross_entropy",
                    vec![a.clone()],
                    Box::new(move |t, x| t.cross_entropy(x[0], &labels, &mask)),
                ),
            ];
            for (name, inputs, build) in checks {
                let err = fd_check(&g, inputs, build.as_ref(), &mut rng);
                assert!(err < 1e-4, "{name}: relative error {err}");
            }
        }
    }

    #[test]
    fn replay_is_bit_identical() {
        let g = Graph::generate(GraphKind::Ring(6)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, w) = (normal(6, 3, &mut rng), normal(3, 3, &mut rng));
        let mut tape = Tape::new(g.normalized_operator());
        let (xv, wv) = (tape.leaf(x.clone()), tape.leaf(w.clone()));
        let z = tape.matmul(xv, wv).unwrap();
        let z = tape.spmm(z).unwrap();
        let out = tape.softmax_rows(z);
        let before = tape.value(out).clone();
        tape.replay(&[(xv, x.clone()), (wv, w)]).unwrap();
        assert_eq!(tape.value(out).as_slice(), before.as_slice());

        tape.replay(&[(xv, x.scale(2.0))]).unwrap();
        assert_ne!(tape.value(out).as_slice(), before.as_slice());
        assert!(tape.replay(&[(out, before)]).is_err());
    }

    #[test]
    fn backward_requires_scalar() {
        let g = Graph::generate(GraphKind::Ring(3)).unwrap();
        let mut tape = Tape::new(g.normalized_operator());
        let x = tape.leaf(Matrix::filled(3, 2, 1.0));
        let y = tape.relu(x);
        assert!(tape.backward(y).is_err());
        assert!(tape.cross_entropy(y, &[0, 1, 0], &[]).is_err());
    }
}

//! Standard four-gate LSTM without peepholes:
//!
//! ```text
//! i = σ(W_i x + U_i h' + b_i)      f = σ(W_f x + U_f h' + b_f)
//! o = σ(W_o x + U_o h' + b_o)      g = tanh(W_g x + U_g h' + b_g)
//! c = f ⊙ c' + i ⊙ g               h = o ⊙ tanh(c)
//! ```
//!
//! Gate arrays are always stored in `i, f, o, g` order.

use super::activation::sigmoid_scalar;
use super::matrix::Matrix;
use super::{check_len, Real, ShapeError};

/// Gate names in storage order.
pub const GATES: [&str; 4] = ["i", "f", "o", "g"];

pub const INPUT: usize = 0;
pub const FORGET: usize = 1;
pub const OUTPUT: usize = 2;
pub const CANDIDATE: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmWeights<T> {
    /// Input-to-gate matrices, `hidden × embed`.
    pub w: [Matrix<T>; 4],
    /// Recurrent matrices, `hidden × hidden`.
    pub u: [Matrix<T>; 4],
    pub b: [Vec<T>; 4],
}

impl<T: Real> LstmWeights<T> {
    pub fn zeros(embed: usize, hidden: usize) -> Self {
        Self {
            w: std::array::from_fn(|_| Matrix::zeros(hidden, embed)),
            u: std::array::from_fn(|_| Matrix::zeros(hidden, hidden)),
            b: std::array::from_fn(|_| vec![T::zero(); hidden]),
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.w[0].cols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.b[0].len()
    }

    pub fn param_count(&self) -> usize {
        let (e, h) = (self.embed_dim(), self.hidden_dim());
        4 * (h * e + h * h + h)
    }

    /// Flat views in serialization order: W_i..W_g, U_i..U_g, b_i..b_g.
    pub fn arrays(&self) -> [&[T]; 12] {
        let [w0, w1, w2, w3] = &self.w;
        let [u0, u1, u2, u3] = &self.u;
        let [b0, b1, b2, b3] = &self.b;
        [
            w0.data(),
            w1.data(),
            w2.data(),
            w3.data(),
            u0.data(),
            u1.data(),
            u2.data(),
            u3.data(),
            b0,
            b1,
            b2,
            b3,
        ]
    }

    pub fn arrays_mut(&mut self) -> [&mut [T]; 12] {
        let [w0, w1, w2, w3] = &mut self.w;
        let [u0, u1, u2, u3] = &mut self.u;
        let [b0, b1, b2, b3] = &mut self.b;
        [
            w0.data_mut(),
            w1.data_mut(),
            w2.data_mut(),
            w3.data_mut(),
            u0.data_mut(),
            u1.data_mut(),
            u2.data_mut(),
            u3.data_mut(),
            b0,
            b1,
            b2,
            b3,
        ]
    }

    pub fn cast<U: Real>(&self) -> LstmWeights<U> {
        LstmWeights {
            w: std::array::from_fn(|k| self.w[k].cast()),
            u: std::array::from_fn(|k| self.u[k].cast()),
            b: std::array::from_fn(|k| {
                self.b[k]
                    .iter()
                    .map(|v| U::from_f64_lossy(v.to_f64_lossy()))
                    .collect()
            }),
        }
    }

    fn check(&self) -> Result<(), ShapeError> {
        let (e, h) = (self.embed_dim(), self.hidden_dim());
        for k in 0..4 {
            check_len("W rows", h, self.w[k].rows())?;
            check_len("W cols", e, self.w[k].cols())?;
            check_len("U rows", h, self.u[k].rows())?;
            check_len("U cols", h, self.u[k].cols())?;
            check_len("bias", h, self.b[k].len())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellState<T> {
    pub h: Vec<T>,
    pub c: Vec<T>,
}

impl<T: Real> CellState<T> {
    pub fn zeros(hidden: usize) -> Self {
        Self {
            h: vec![T::zero(); hidden],
            c: vec![T::zero(); hidden],
        }
    }
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone, PartialEq)]
pub struct TapeEntry<T> {
    pub x: Vec<T>,
    pub h_prev: Vec<T>,
    pub c_prev: Vec<T>,
    /// Post-activation gate values in `i, f, o, g` order.
    pub gates: [Vec<T>; 4],
    pub c: Vec<T>,
    pub tanh_c: Vec<T>,
}

/// Gradients of one cell step with respect to its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct CellGrads<T> {
    pub x: Vec<T>,
    pub h_prev: Vec<T>,
    pub c_prev: Vec<T>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

pub fn lstm_cell_forward<T: Real>(
    x: &[T],
    prev: &CellState<T>,
    w: &LstmWeights<T>,
) -> Result<(CellState<T>, TapeEntry<T>), ShapeError> {
    w.check()?;
    let h = w.hidden_dim();
    check_len("x", w.embed_dim(), x.len())?;
    check_len("h_prev", h, prev.h.len())?;
    check_len("c_prev", h, prev.c.len())?;
    Ok(cell_forward(x, prev, w))
}

fn cell_forward<T: Real>(
    x: &[T],
    prev: &CellState<T>,
    w: &LstmWeights<T>,
) -> (CellState<T>, TapeEntry<T>) {
    let gates: [Vec<T>; 4] = std::array::from_fn(|k| {
        let mut a = w.b[k].clone();
        w.w[k].matvec_acc(x, &mut a);
        w.u[k].matvec_acc(&prev.h, &mut a);
        if k == CANDIDATE {
            a.iter_mut().for_each(|v| *v = v.tanh());
        } else {
            a.iter_mut().for_each(|v| *v = sigmoid_scalar(*v));
        }
        a
    });
    let hidden = prev.c.len();
    let mut c = Vec::with_capacity(hidden);
    let mut tanh_c = Vec::with_capacity(hidden);
    let mut h = Vec::with_capacity(hidden);
    for (j, &c_prev) in prev.c.iter().enumerate() {
        let cj = gates[FORGET][j] * c_prev + gates[INPUT][j] * gates[CANDIDATE][j];
        let tj = cj.tanh();
        c.push(cj);
        tanh_c.push(tj);
        h.push(gates[OUTPUT][j] * tj);
    }
    let tape = TapeEntry {
        x: x.to_vec(),
        h_prev: prev.h.clone(),
        c_prev: prev.c.clone(),
        gates,
        c: c.clone(),
        tanh_c,
    };
    (CellState { h, c }, tape)
}

/// Backward through one cell; returns fresh weight gradients.
pub fn lstm_cell_backward<T: Real>(
    grad_h: &[T],
    grad_c: &[T],
    tape: &TapeEntry<T>,
    w: &LstmWeights<T>,
) -> Result<(CellGrads<T>, LstmWeights<T>), ShapeError> {
    let mut grads = LstmWeights::zeros(w.embed_dim(), w.hidden_dim());
    let cell = lstm_cell_backward_into(grad_h, grad_c, tape, w, &mut grads)?;
    Ok((cell, grads))
}

/// Backward through one cell, adding weight gradients into `grads`.
pub fn lstm_cell_backward_into<T: Real>(
    grad_h: &[T],
    grad_c: &[T],
    tape: &TapeEntry<T>,
    w: &LstmWeights<T>,
    grads: &mut LstmWeights<T>,
) -> Result<CellGrads<T>, ShapeError> {
    w.check()?;
    grads.check()?;
    let h = w.hidden_dim();
    check_len("grad_h", h, grad_h.len())?;
    check_len("grad_c", h, grad_c.len())?;
    check_len("grads hidden", h, grads.hidden_dim())?;
    check_len("grads embed", w.embed_dim(), grads.embed_dim())?;
    check_len("tape x", w.embed_dim(), tape.x.len())?;
    check_len("tape c", h, tape.c.len())?;
    Ok(cell_backward(grad_h, grad_c, tape, w, grads))
}

fn cell_backward<T: Real>(
    grad_h: &[T],
    grad_c: &[T],
    tape: &TapeEntry<T>,
    w: &LstmWeights<T>,
    grads: &mut LstmWeights<T>,
) -> CellGrads<T> {
    let hidden = grad_h.len();
    let one = T::one();
    let [gi, gf, go, gg] = &tape.gates;
    // pre-activation gradients per gate
    let mut da: [Vec<T>; 4] = std::array::from_fn(|_| vec![T::zero(); hidden]);
    let mut grad_c_prev = vec![T::zero(); hidden];
    for j in 0..hidden {
        let t = tape.tanh_c[j];
        let dc = grad_c[j] + grad_h[j] * go[j] * (one - t * t);
        let d_o = grad_h[j] * t;
        let d_i = dc * gg[j];
        let d_g = dc * gi[j];
        let d_f = dc * tape.c_prev[j];
        grad_c_prev[j] = dc * gf[j];
        da[INPUT][j] = d_i * gi[j] * (one - gi[j]);
        da[FORGET][j] = d_f * gf[j] * (one - gf[j]);
        da[OUTPUT][j] = d_o * go[j] * (one - go[j]);
        da[CANDIDATE][j] = d_g * (one - gg[j] * gg[j]);
    }
    let mut grad_x = vec![T::zero(); tape.x.len()];
    let mut grad_h_prev = vec![T::zero(); hidden];
    for (k, da) in da.iter().enumerate() {
        grads.w[k].outer_acc(da, &tape.x);
        grads.u[k].outer_acc(da, &tape.h_prev);
        for (b, &d) in grads.b[k].iter_mut().zip(da) {
            *b += d;
        }
        w.w[k].matvec_t_acc(da, &mut grad_x);
        w.u[k].matvec_t_acc(da, &mut grad_h_prev);
    }
    CellGrads {
        x: grad_x,
        h_prev: grad_h_prev,
        c_prev: grad_c_prev,
    }
}

/// Runs the cell over `seq` from a zero state.
///
/// Tapes are returned in processing order, so for [`Direction::Backward`]
/// `tapes[0]` belongs to the last element of `seq`.
pub fn lstm_sequence<T: Real, S: AsRef<[T]>>(
    seq: &[S],
    w: &LstmWeights<T>,
    direction: Direction,
) -> Result<(CellState<T>, Vec<TapeEntry<T>>), ShapeError> {
    if seq.is_empty() {
        return Err(ShapeError::EmptySequence);
    }
    w.check()?;
    for x in seq {
        check_len("x", w.embed_dim(), x.as_ref().len())?;
    }
    let mut state = CellState::zeros(w.hidden_dim());
    let mut tapes = Vec::with_capacity(seq.len());
    let mut step = |x: &S| {
        let (next, tape) = cell_forward(x.as_ref(), &state, w);
        state = next;
        tapes.push(tape);
    };
    match direction {
        Direction::Forward => seq.iter().for_each(&mut step),
        Direction::Backward => seq.iter().rev().for_each(&mut step),
    }
    Ok((state, tapes))
}

/// Backpropagation through time from a gradient on the final hidden state.
///
/// Adds weight gradients into `grads` and returns the input gradients in
/// the same (processing) order as `tapes`.
pub fn lstm_sequence_backward<T: Real>(
    tapes: &[TapeEntry<T>],
    grad_h_final: &[T],
    w: &LstmWeights<T>,
    grads: &mut LstmWeights<T>,
) -> Result<Vec<Vec<T>>, ShapeError> {
    if tapes.is_empty() {
        return Err(ShapeError::EmptySequence);
    }
    w.check()?;
    grads.check()?;
    check_len("grad_h_final", w.hidden_dim(), grad_h_final.len())?;
    let mut grad_h = grad_h_final.to_vec();
    let mut grad_c = vec![T::zero(); w.hidden_dim()];
    let mut grad_x = vec![Vec::new(); tapes.len()];
    for (slot, tape) in grad_x.iter_mut().zip(tapes).rev() {
        let cell = cell_backward(&grad_h, &grad_c, tape, w, grads);
        *slot = cell.x;
        grad_h = cell.h_prev;
        grad_c = cell.c_prev;
    }
    Ok(grad_x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_weights(embed: usize, hidden: usize, seed: u64) -> LstmWeights<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = LstmWeights::zeros(embed, hidden);
        for arr in w.arrays_mut() {
            arr.iter_mut()
                .for_each(|v| *v = rng.random_range(-0.8..0.8));
        }
        w
    }

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    /// Straight-line re-statement of the cell equations using plain index
    /// loops and no shared helpers.
    fn reference_cell(
        x: &[f64],
        h_prev: &[f64],
        c_prev: &[f64],
        w: &LstmWeights<f64>,
    ) -> (Vec<f64>, Vec<f64>) {
        let hidden = h_prev.len();
        let pre = |k: usize, j: usize| {
            let mut s = w.b[k][j];
            for (e, xe) in x.iter().enumerate() {
                s += w.w[k].get(j, e) * xe;
            }
            for (m, hm) in h_prev.iter().enumerate() {
                s += w.u[k].get(j, m) * hm;
            }
            s
        };
        let mut h = vec![0.0; hidden];
        let mut c = vec![0.0; hidden];
        for j in 0..hidden {
            let i = sig(pre(0, j));
            let f = sig(pre(1, j));
            let o = sig(pre(2, j));
            let g = pre(3, j).tanh();
            c[j] = f * c_prev[j] + i * g;
            h[j] = o * c[j].tanh();
        }
        (h, c)
    }

    #[test]
    fn zero_weights_give_zero_state() {
        let w = LstmWeights::<f64>::zeros(3, 2);
        let (next, tape) = lstm_cell_forward(&[1.0, -2.0, 0.5], &CellState::zeros(2), &w).unwrap();
        assert_eq!(next.h, vec![0.0, 0.0]);
        assert_eq!(next.c, vec![0.0, 0.0]);
        assert_eq!(tape.gates[INPUT], vec![0.5, 0.5]);
        assert_eq!(tape.gates[CANDIDATE], vec![0.0, 0.0]);
    }

    #[test]
    fn forget_bias_scalar_case() {
        let mut w = LstmWeights::<f64>::zeros(1, 1);
        w.b[FORGET][0] = 1.0;
        let prev = CellState {
            h: vec![0.0],
            c: vec![1.0],
        };
        let (next, _) = lstm_cell_forward(&[0.3], &prev, &w).unwrap();
        // f = σ(1), i = o = 0.5, g = 0  →  c = σ(1), h = 0.5·tanh(σ(1))
        let f = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((f - 0.7310585786).abs() < 1e-9);
        assert!((next.c[0] - f).abs() < 1e-15);
        assert!((next.h[0] - 0.5 * f.tanh()).abs() < 1e-15);
    }

    #[test]
    fn matches_reference_cell() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..10 {
            let w = random_weights(3, 2, seed);
            let x = random_vec(3, &mut rng);
            let prev = CellState {
                h: random_vec(2, &mut rng),
                c: random_vec(2, &mut rng),
            };
            let (next, _) = lstm_cell_forward(&x, &prev, &w).unwrap();
            let (h, c) = reference_cell(&x, &prev.h, &prev.c, &w);
            for j in 0..2 {
                assert!((next.h[j] - h[j]).abs() < 1e-14);
                assert!((next.c[j] - c[j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let w = LstmWeights::<f64>::zeros(3, 2);
        assert!(lstm_cell_forward(&[1.0, 2.0], &CellState::zeros(2), &w).is_err());
        assert!(lstm_cell_forward(&[1.0, 2.0, 3.0], &CellState::zeros(3), &w).is_err());
        let (_, tape) = lstm_cell_forward(&[1.0, 2.0, 3.0], &CellState::zeros(2), &w).unwrap();
        assert!(lstm_cell_backward(&[1.0], &[0.0, 0.0], &tape, &w).is_err());
    }

    #[test]
    fn zero_upstream_gradient() {
        let w = random_weights(3, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let prev = CellState {
            h: random_vec(2, &mut rng),
            c: random_vec(2, &mut rng),
        };
        let (_, tape) = lstm_cell_forward(&random_vec(3, &mut rng), &prev, &w).unwrap();
        let (g, gw) = lstm_cell_backward(&[0.0; 2], &[0.0; 2], &tape, &w).unwrap();
        assert!(g
            .x
            .iter()
            .chain(&g.h_prev)
            .chain(&g.c_prev)
            .all(|v| *v == 0.0));
        assert!(gw.arrays().iter().all(|a| a.iter().all(|v| *v == 0.0)));
    }

    /// Scalar cell (embed = hidden = 1) differentiated by hand with respect
    /// to each parameter, for loss L = a·h + b·c.
    #[test]
    fn scalar_symbolic_derivative() {
        let (wi, wf, wo, wg) = (0.3, -0.2, 0.5, 0.7);
        let (ui, uf, uo, ug) = (0.1, 0.4, -0.3, 0.2);
        let (bi, bf, bo, bg) = (0.05, 1.0, -0.1, 0.0);
        let (x, hp, cp) = (0.9, -0.4, 0.6);
        let (a, b) = (1.3, -0.7);

        let mut w = LstmWeights::<f64>::zeros(1, 1);
        for (k, (wv, uv, bv)) in [(wi, ui, bi), (wf, uf, bf), (wo, uo, bo), (wg, ug, bg)]
            .into_iter()
            .enumerate()
        {
            w.w[k].set(0, 0, wv);
            w.u[k].set(0, 0, uv);
            w.b[k][0] = bv;
        }
        let prev = CellState {
            h: vec![hp],
            c: vec![cp],
        };
        let (_, tape) = lstm_cell_forward(&[x], &prev, &w).unwrap();
        let (g, gw) = lstm_cell_backward(&[a], &[b], &tape, &w).unwrap();

        let i = sig(wi * x + ui * hp + bi);
        let f = sig(wf * x + uf * hp + bf);
        let o = sig(wo * x + uo * hp + bo);
        let gc = (wg * x + ug * hp + bg).tanh();
        let c = f * cp + i * gc;
        let th = c.tanh();
        // dL/dc through both paths
        let dc = b + a * o * (1.0 - th * th);
        let dai = dc * gc * i * (1.0 - i);
        let daf = dc * cp * f * (1.0 - f);
        let dao = a * th * o * (1.0 - o);
        let dag = dc * i * (1.0 - gc * gc);

        let close = |got: f64, want: f64| assert!((got - want).abs() < 1e-14, "{got} vs {want}");
        close(gw.w[INPUT].get(0, 0), dai * x);
        close(gw.w[FORGET].get(0, 0), daf * x);
        close(gw.w[OUTPUT].get(0, 0), dao * x);
        close(gw.w[CANDIDATE].get(0, 0), dag * x);
        close(gw.u[FORGET].get(0, 0), daf * hp);
        close(gw.b[OUTPUT][0], dao);
        close(g.c_prev[0], dc * f);
        close(g.x[0], wi * dai + wf * daf + wo * dao + wg * dag);
        close(g.h_prev[0], ui * dai + uf * daf + uo * dao + ug * dag);
    }

    /// Finite differences on every input, state and weight of one cell.
    #[test]
    fn cell_backward_matches_finite_differences() {
        let (embed, hidden) = (3, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let w = random_weights(embed, hidden, 7);
        let x = random_vec(embed, &mut rng);
        let prev = CellState {
            h: random_vec(hidden, &mut rng),
            c: random_vec(hidden, &mut rng),
        };
        let a = random_vec(hidden, &mut rng);
        let b = random_vec(hidden, &mut rng);
        let loss = |x: &[f64], prev: &CellState<f64>, w: &LstmWeights<f64>| {
            let (n, _) = lstm_cell_forward(x, prev, w).unwrap();
            n.h.iter().zip(&a).map(|(h, a)| h * a).sum::<f64>()
                + n.c.iter().zip(&b).map(|(c, b)| c * b).sum::<f64>()
        };
        let (_, tape) = lstm_cell_forward(&x, &prev, &w).unwrap();
        let (g, gw) = lstm_cell_backward(&a, &b, &tape, &w).unwrap();
        let eps = 1e-5;
        let rel = |an: f64, nu: f64| (an - nu).abs() / (an.abs() + nu.abs()).max(1e-8);

        for k in 0..embed {
            let (mut p, mut m) = (x.clone(), x.clone());
            p[k] += eps;
            m[k] -= eps;
            let nu = (loss(&p, &prev, &w) - loss(&m, &prev, &w)) / (2.0 * eps);
            assert!(rel(g.x[k], nu) < 1e-6);
        }
        for k in 0..hidden {
            let (mut p, mut m) = (prev.clone(), prev.clone());
            p.h[k] += eps;
            m.h[k] -= eps;
            let nu = (loss(&x, &p, &w) - loss(&x, &m, &w)) / (2.0 * eps);
            assert!(rel(g.h_prev[k], nu) < 1e-6);
            let (mut p, mut m) = (prev.clone(), prev.clone());
            p.c[k] += eps;
            m.c[k] -= eps;
            let nu = (loss(&x, &p, &w) - loss(&x, &m, &w)) / (2.0 * eps);
            assert!(rel(g.c_prev[k], nu) < 1e-6);
        }
        let analytic: Vec<f64> = gw.arrays().iter().flat_map(|a| a.iter().copied()).collect();
        let mut idx = 0;
        for arr in 0..12 {
            let len = w.arrays()[arr].len();
            for e in 0..len {
                let (mut p, mut m) = (w.clone(), w.clone());
                p.arrays_mut()[arr][e] += eps;
                m.arrays_mut()[arr][e] -= eps;
                let nu = (loss(&x, &prev, &p) - loss(&x, &prev, &m)) / (2.0 * eps);
                assert!(rel(analytic[idx], nu) < 1e-6, "array {arr} elem {e}");
                idx += 1;
            }
        }
    }

    #[test]
    fn single_step_directions_agree() {
        let w = random_weights(3, 2, 3);
        let seq = [vec![0.1, 0.2, -0.3]];
        let (f, _) = lstm_sequence(&seq, &w, Direction::Forward).unwrap();
        let (b, _) = lstm_sequence(&seq, &w, Direction::Backward).unwrap();
        assert_eq!(f, b);
    }

    #[test]
    fn reversed_forward_equals_backward() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let w = random_weights(3, 4, 4);
        let seq: Vec<Vec<f64>> = (0..6).map(|_| random_vec(3, &mut rng)).collect();
        let rev: Vec<Vec<f64>> = seq.iter().rev().cloned().collect();
        let (a, _) = lstm_sequence(&rev, &w, Direction::Forward).unwrap();
        let (b, _) = lstm_sequence(&seq, &w, Direction::Backward).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sequence_is_chained_cells() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let w = random_weights(3, 2, 9);
        let seq: Vec<Vec<f64>> = (0..3).map(|_| random_vec(3, &mut rng)).collect();
        let (fin, tapes) = lstm_sequence(&seq, &w, Direction::Forward).unwrap();
        let mut s = CellState::zeros(2);
        for x in &seq {
            s = lstm_cell_forward(x, &s, &w).unwrap().0;
        }
        assert_eq!(fin, s);
        assert_eq!(tapes.len(), 3);
        assert_eq!(tapes[0].x, seq[0]);

        let (_, tapes) = lstm_sequence(&seq, &w, Direction::Backward).unwrap();
        assert_eq!(tapes[0].x, seq[2]);
    }

    #[test]
    fn empty_sequence_rejected() {
        let w = LstmWeights::<f64>::zeros(2, 2);
        let empty: [Vec<f64>; 0] = [];
        assert_eq!(
            lstm_sequence(&empty, &w, Direction::Forward).unwrap_err(),
            ShapeError::EmptySequence
        );
    }

    #[test]
    fn finite_for_large_inputs() {
        let w = random_weights(3, 2, 2);
        let seq = vec![vec![1e3, -1e3, 1e3]; 5];
        let (s, _) = lstm_sequence(&seq, &w, Direction::Forward).unwrap();
        assert!(s.h.iter().chain(&s.c).all(|v| v.is_finite()));
        let w32 = w.cast::<f32>();
        let seq32 = vec![vec![1e3f32, -1e3, 1e3]; 5];
        let (s, _) = lstm_sequence(&seq32, &w32, Direction::Backward).unwrap();
        assert!(s.h.iter().chain(&s.c).all(|v| v.is_finite()));
    }
}

use ndarray::{s, Array2, Array3, ArrayView2, ArrayView3, Axis, Zip};

use super::weights::LstmParams;
use super::NnError;
use crate::Scalar;

pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

/// Activations of one step, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct StepCache<T> {
    pub x: Array2<T>,
    pub h_prev: Array2<T>,
    pub c_prev: Array2<T>,
    pub i: Array2<T>,
    pub f: Array2<T>,
    pub g: Array2<T>,
    pub o: Array2<T>,
    pub tanh_c: Array2<T>,
}

/// One LSTM step on a batch. Returns (h, c, cache).
pub fn cell_forward<T: Scalar>(
    p: &LstmParams<T>,
    x: ArrayView2<T>,
    h_prev: ArrayView2<T>,
    c_prev: ArrayView2<T>,
) -> (Array2<T>, Array2<T>, StepCache<T>) {
    let u = p.units();
    let mut z = x.dot(&p.w);
    z += &h_prev.dot(&p.u);
    z += &p.b;
    let i = z.slice(s![.., 0..u]).mapv(sigmoid);
    let f = z.slice(s![.., u..2 * u]).mapv(sigmoid);
    let g = z.slice(s![.., 2 * u..3 * u]).mapv(|v| v.tanh());
    let o = z.slice(s![.., 3 * u..4 * u]).mapv(sigmoid);
    let mut c = &f * &c_prev;
    Zip::from(&mut c).and(&i).and(&g).for_each(|c, &i, &g| *c += i * g);
    let tanh_c = c.mapv(|v| v.tanh());
    let h = &o * &tanh_c;
    let cache = StepCache {
        x: x.to_owned(),
        h_prev: h_prev.to_owned(),
        c_prev: c_prev.to_owned(),
        i,
        f,
        g,
        o,
        tanh_c,
    };
    (h, c, cache)
}

/// Reverse of [`cell_forward`]. `dh`, `dc` are the total gradients reaching
/// this step's outputs; parameter gradients accumulate into `grad`. Returns
/// (dx, dh_prev, dc_prev); dx is skipped when `need_dx` is false.
pub fn cell_backward<T: Scalar>(
    p: &LstmParams<T>,
    cache: &StepCache<T>,
    dh: &Array2<T>,
    dc: &Array2<T>,
    grad: &mut LstmParams<T>,
    need_dx: bool,
) -> (Option<Array2<T>>, Array2<T>, Array2<T>) {
    let u = p.units();
    let one = T::one();
    let (b, _) = dh.dim();
    let mut dz = Array2::<T>::zeros((b, 4 * u));
    let mut dc_total = dc.clone();
    // dc += dh * o * (1 - tanh(c)^2)
    Zip::from(&mut dc_total).and(dh).and(&cache.o).and(&cache.tanh_c).for_each(|dct, &dh, &o, &tc| {
        *dct += dh * o * (one - tc * tc);
    });
    {
        let (mut di, rest) = dz.view_mut().split_at(Axis(1), u);
        let (mut df, rest) = rest.split_at(Axis(1), u);
        let (mut dg, mut do_) = rest.split_at(Axis(1), u);
        Zip::from(&mut di).and(&dc_total).and(&cache.i).and(&cache.g).for_each(|d, &dct, &i, &g| {
            *d = dct * g * i * (one - i);
        });
        Zip::from(&mut df).and(&dc_total).and(&cache.f).and(&cache.c_prev).for_each(|d, &dct, &f, &cp| {
            *d = dct * cp * f * (one - f);
        });
        Zip::from(&mut dg).and(&dc_total).and(&cache.i).and(&cache.g).for_each(|d, &dct, &i, &g| {
            *d = dct * i * (one - g * g);
        });
        Zip::from(&mut do_).and(dh).and(&cache.o).and(&cache.tanh_c).for_each(|d, &dh, &o, &tc| {
            *d = dh * tc * o * (one - o);
        });
    }
    grad.w += &cache.x.t().dot(&dz);
    grad.u += &cache.h_prev.t().dot(&dz);
    grad.b += &dz.sum_axis(Axis(0));
    let dx = need_dx.then(|| dz.dot(&p.w.t()));
    let dh_prev = dz.dot(&p.u.t());
    let dc_prev = dc_total * &cache.f;
    (dx, dh_prev, dc_prev)
}

/// Runs one LSTM layer over `x` of shape (batch, time, input). Returns the
/// hidden sequence (batch, time, units) and the final (h, c).
#[allow(clippy::type_complexity)]
pub fn lstm_forward<T: Scalar>(
    x: ArrayView3<T>,
    p: &LstmParams<T>,
    state0: Option<(ArrayView2<T>, ArrayView2<T>)>,
) -> Result<(Array3<T>, (Array2<T>, Array2<T>)), NnError> {
    let (b, t, inp) = x.dim();
    let u = p.units();
    if inp != p.input_dim() {
        return Err(NnError::ShapeMismatch(format!("input width {inp}, layer expects {}", p.input_dim())));
    }
    let (mut h, mut c) = match state0 {
        Some((h0, c0)) => {
            if h0.dim() != (b, u) || c0.dim() != (b, u) {
                return Err(NnError::ShapeMismatch("initial state shape".into()));
            }
            (h0.to_owned(), c0.to_owned())
        }
        None => (Array2::zeros((b, u)), Array2::zeros((b, u))),
    };
    let mut out = Array3::zeros((b, t, u));
    for step in 0..t {
        let (h2, c2, _) = cell_forward(p, x.slice(s![.., step, ..]), h.view(), c.view());
        out.slice_mut(s![.., step, ..]).assign(&h2);
        h = h2;
        c = c2;
    }
    Ok((out, (h, c)))
}

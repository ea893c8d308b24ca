//! Fixed-step classical Runge–Kutta on flat state arrays.

use crate::scalar::Real;

/// One classical RK4 step of `ẋ = f(t, x)` from `t` to `t + h`.
pub fn rk4_step<T: Real, const N: usize>(
    mut f: impl FnMut(T, &[T; N]) -> [T; N],
    t: T,
    x: &[T; N],
    h: T,
) -> [T; N] {
    let half = h * T::half();
    let k1 = f(t, x);
    let k2 = f(t + half, &axpy(x, half, &k1));
    let k3 = f(t + half, &axpy(x, half, &k2));
    let k4 = f(t + h, &axpy(x, h, &k3));
    let sixth = h / T::lit(6.0);
    std::array::from_fn(|i| x[i] + sixth * (k1[i] + T::two() * (k2[i] + k3[i]) + k4[i]))
}

#[inline]
fn axpy<T: Real, const N: usize>(x: &[T; N], a: T, d: &[T; N]) -> [T; N] {
    std::array::from_fn(|i| x[i] + a * d[i])
}

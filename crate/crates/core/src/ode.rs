//! Fixed-step classical Runge-Kutta integration for small real systems.

/// One RK4 step of `y' = f(x, y)` from `x` to `x + h`. `h` may be negative.
#[inline]
pub fn rk4_step<const N: usize, F>(f: &F, x: f64, y: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(x, y);
    let k2 = f(x + 0.5 * h, &axpy(y, 0.5 * h, &k1));
    let k3 = f(x + 0.5 * h, &axpy(y, 0.5 * h, &k2));
    let k4 = f(x + h, &axpy(y, h, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], a: f64, k: &[f64; N]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        out[i] += a * k[i];
    }
    out
}

/// Integrate from `x0` over `steps` equal steps of size `h`, calling
/// `visit(x, y)` at the start point and after every step. The visitor may
/// abort the integration by returning an error.
pub fn integrate<const N: usize, F, V, E>(
    f: F,
    x0: f64,
    y0: [f64; N],
    h: f64,
    steps: usize,
    mut visit: V,
) -> Result<[f64; N], E>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
    V: FnMut(f64, &[f64; N]) -> Result<(), E>,
{
    let mut y = y0;
    visit(x0, &y)?;
    for i in 0..steps {
        let x = x0 + i as f64 * h;
        y = rk4_step(&f, x, &y, h);
        visit(x0 + (i + 1) as f64 * h, &y)?;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oscillator(_x: f64, y: &[f64; 2]) -> [f64; 2] {
        [y[1], -y[0]]
    }

    #[test]
    fn harmonic_oscillator_is_fourth_order() {
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let y = integrate::<2, _, _, ()>(oscillator, 0.0, [1.0, 0.0], h, n, |_, _| Ok(())).unwrap();
            (y[0] - 1.0f64.cos()).abs()
        };
        let ratio = err(20) / err(40);
        assert!((ratio - 16.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn backward_steps_invert_forward() {
        let fwd = integrate::<2, _, _, ()>(oscillator, 0.0, [0.3, -0.7], 0.01, 200, |_, _| Ok(())).unwrap();
        let back = integrate::<2, _, _, ()>(oscillator, 2.0, fwd, -0.01, 200, |_, _| Ok(())).unwrap();
        assert!((back[0] - 0.3).abs() < 1e-9 && (back[1] + 0.7).abs() < 1e-9);
    }

    #[test]
    fn visitor_sees_every_node_and_can_abort() {
        let mut xs = Vec::new();
        let _ = integrate::<2, _, _, ()>(oscillator, 1.0, [1.0, 0.0], -0.25, 4, |x, _| {
            xs.push(x);
            Ok(())
        });
        assert_eq!(xs, vec![1.0, 0.75, 0.5, 0.25, 0.0]);
        let r = integrate::<2, _, _, &str>(oscillator, 0.0, [1.0, 0.0], 0.1, 10, |x, _| {
            if x > 0.35 { Err("stop") } else { Ok(()) }
        });
        assert_eq!(r, Err("stop"));
    }
}

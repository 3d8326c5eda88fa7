//! Small shared numeric routines.

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
///
/// Returns `(x, f(x))` at the best probe. The bracket shrinks by the golden
/// ratio each step, so `iters = 90` resolves ~1e-18 of the initial width,
/// enough for any tolerance this crate asks for.
pub fn golden_section_min<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    max_iters: usize,
) -> (f64, f64) {
    debug_assert!(lo <= hi);
    // 1/phi and 1/phi^2.
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    const INV_PHI2: f64 = 0.381_966_011_250_105_1;

    let mut a = lo;
    let mut b = hi;
    let mut x1 = a + INV_PHI2 * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);

    for _ in 0..max_iters {
        if (b - a).abs() <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = a + INV_PHI2 * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Clamp to [0, 1]; keeps probabilities inside their domain after roundoff.
pub fn clamp_unit(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

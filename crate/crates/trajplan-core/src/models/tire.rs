//! Lateral tire force models.

/// Pacejka shape factor C.
pub const PACEJKA_C: f64 = 1.3;
/// Pacejka curvature factor E (0 keeps the stiffness match exact at the origin).
pub const PACEJKA_E: f64 = 0.0;

/// Linear tire: force and its slip derivative.
#[inline]
pub fn linear(alpha: f64, stiffness: f64) -> (f64, f64) {
    (stiffness * alpha, stiffness)
}

/// Magic-formula lateral force with the peak scaled by `mu * fz`.
///
/// The stiffness factor B is chosen so that dF/dalpha at the origin equals
/// the linear cornering stiffness, which makes the two models agree in the
/// small-slip regime.
#[inline]
pub fn pacejka(alpha: f64, stiffness: f64, mu: f64, fz: f64) -> (f64, f64) {
    let d = (mu * fz).max(1e-6);
    let b = stiffness / (PACEJKA_C * d);
    let ba = b * alpha;
    let g = ba - PACEJKA_E * (ba - ba.atan());
    let inner = PACEJKA_C * g.atan();
    let force = d * inner.sin();
    // dg/dalpha = B (1 - E + E / (1 + (B a)^2))
    let dg = b * (1.0 - PACEJKA_E + PACEJKA_E / (1.0 + ba * ba));
    let dforce = d * inner.cos() * PACEJKA_C * dg / (1.0 + g * g);
    (force, dforce)
}

/// Slip angle at which the magic-formula force peaks.
pub fn pacejka_peak_slip(stiffness: f64, mu: f64, fz: f64) -> f64 {
    let d = (mu * fz).max(1e-6);
    let b = stiffness / (PACEJKA_C * d);
    // peak where C * atan(B a) = pi/2 (with E = 0)
    (std::f64::consts::FRAC_PI_2 / PACEJKA_C).tan() / b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pacejka_matches_linear_at_small_slip() {
        let (c, mu, fz) = (120_000.0, 1.0, 8_800.0);
        for i in -20..=20 {
            let a = i as f64 * 0.05_f64.to_radians();
            if a.abs() > 1.0_f64.to_radians() {
                continue;
            }
            let (fl, _) = linear(a, c);
            let (fp, _) = pacejka(a, c, mu, fz);
            if a != 0.0 {
                assert!(
                    ((fp - fl) / fl).abs() < 0.05,
                    "mismatch at alpha={a}: linear {fl}, pacejka {fp}"
                );
            }
        }
    }

    #[test]
    fn friction_circle_bound() {
        let (c, mu, fz) = (150_000.0, 0.7, 9_000.0);
        for i in -400..=400 {
            let a = i as f64 * 1e-3;
            let (f, _) = pacejka(a, c, mu, fz);
            assert!(f.abs() <= mu * fz + 1e-9);
        }
    }

    #[test]
    fn peak_slip_is_the_maximum() {
        let (c, mu, fz) = (110_000.0, 1.0, 8_800.0);
        let ap = pacejka_peak_slip(c, mu, fz);
        let (fp, _) = pacejka(ap, c, mu, fz);
        assert!((fp - mu * fz).abs() < 1e-6 * mu * fz);
        let (fm, _) = pacejka(ap * 0.9, c, mu, fz);
        let (fp2, _) = pacejka(ap * 1.1, c, mu, fz);
        assert!(fm < fp && fp2 < fp);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (c, mu, fz) = (90_000.0, 0.8, 7_500.0);
        for i in -10..=10 {
            let a = i as f64 * 0.01;
            let (_, d) = pacejka(a, c, mu, fz);
            let h = 1e-7;
            let (fp, _) = pacejka(a + h, c, mu, fz);
            let (fm, _) = pacejka(a - h, c, mu, fz);
            let fd = (fp - fm) / (2.0 * h);
            assert!((d - fd).abs() <= 1e-4 * d.abs().max(1.0));
        }
    }
}

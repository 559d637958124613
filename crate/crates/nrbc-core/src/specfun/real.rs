//! Modified Bessel functions of real order and positive real argument,
//! returned in logarithmic form so that large orders and arguments neither
//! overflow nor underflow.
//!
//! The method is Temme's: continued fraction CF1 for `I'_nu/I_nu`, downward
//! recurrence to the reduced order `mu` in [-1/2, 1/2), Temme's series (x < 2)
//! or Steed's CF2 (x >= 2) for `K_mu`, `K_{mu+1}`, the Wronskian for `I_mu`,
//! and upward recurrence for `K`.

use crate::error::{Error, Result};
use std::f64::consts::PI;

const EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;
const BIG: f64 = 1e250;
const MAXIT: usize = 200_000;

/// Taylor coefficients of 1/Gamma(z) about z = 0, c_1 .. c_26.
const RGAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_860_6,
    -0.655_878_071_520_253_881_1,
    -0.042_002_635_034_095_235_53,
    0.166_538_611_382_291_489_5,
    -0.042_197_734_555_544_336_75,
    -0.009_621_971_527_876_973_562,
    0.007_218_943_246_663_099_542,
    -0.001_165_167_591_859_065_112,
    -0.000_215_241_674_114_950_972_8,
    0.000_128_050_282_388_116_186_2,
    -0.000_020_134_854_780_788_238_66,
    -1.250_493_482_142_670_657e-6,
    1.133_027_231_981_695_882e-6,
    -2.056_338_416_977_607_104e-7,
    6.116_095_104_481_415_818e-9,
    5.002_007_644_469_222_930e-9,
    -1.181_274_570_487_020_145e-9,
    1.043_426_711_691_100_511e-10,
    7.782_263_439_905_071_254e-12,
    -3.696_805_618_642_205_708e-12,
    5.100_370_287_454_475_979e-13,
    -2.058_326_053_566_506_783e-14,
    -5.348_122_539_423_017_982e-15,
    1.226_778_628_238_260_790e-15,
    -1.181_259_301_697_458_770e-16,
];

/// Temme's auxiliary gamma quantities for |mu| <= 1/2:
/// (gamma1, gamma2, 1/Gamma(1+mu), 1/Gamma(1-mu)).
pub(crate) fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mut gampl = 0.0;
    let mut gammi = 0.0;
    for &c in RGAMMA.iter().rev() {
        gampl = gampl * mu + c;
        gammi = gammi * (-mu) + c;
    }
    // gamma1 collects the odd-index coefficients, gamma2 the even ones
    let mu2 = mu * mu;
    let mut gam1 = 0.0;
    let mut gam2 = 0.0;
    for (k, &c) in RGAMMA.iter().enumerate().rev() {
        if k % 2 == 1 {
            gam1 = gam1 * mu2 + c;
        } else {
            gam2 = gam2 * mu2 + c;
        }
    }
    (-gam1, gam2, gampl, gammi)
}

/// Logarithms of `I_nu(x)`, `K_nu(x)` together with logarithmic derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogIK {
    pub log_i: f64,
    pub log_k: f64,
    /// I'_nu(x) / I_nu(x)
    pub di: f64,
    /// K'_nu(x) / K_nu(x)
    pub dk: f64,
}

impl LogIK {
    /// I_{nu+1}(x) / I_nu(x)
    pub fn i_ratio(&self, nu: f64, x: f64) -> f64 {
        self.di - nu / x
    }

    /// K_{nu+1}(x) / K_nu(x)
    pub fn k_ratio(&self, nu: f64, x: f64) -> f64 {
        nu / x - self.dk
    }
}

/// `log I_nu(x)`, `log K_nu(x)` and their derivatives for `nu >= 0`, `x > 0`.
pub fn bessel_ik_log(nu: f64, x: f64) -> Result<LogIK> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("bessel_ik_log", format!("argument must be positive, got {x}")));
    }
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::domain("bessel_ik_log", format!("order must be non-negative, got {nu}")));
    }
    let nl = (nu + 0.5).floor() as usize;
    let xmu = nu - nl as f64;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;

    // CF1: I'_nu / I_nu
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    let mut converged = false;
    for _ in 0..MAXIT {
        b += xi2;
        d = 1.0 / (b + d);
        c = b + 1.0 / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::accuracy("bessel_ik_log", format!("CF1 did not converge (nu={nu}, x={x})")));
    }
    let di = h;

    // downward recurrence of (I, I') from nu to mu, rescaled to avoid overflow
    let mut ril = 1.0;
    let mut ripl = h * ril;
    let mut iscale = 0.0;
    let mut fact = nu * xi;
    for _ in 0..nl {
        let ritemp = fact * ril + ripl;
        fact -= xi;
        ripl = fact * ritemp + ril;
        ril = ritemp;
        if ril.abs() > BIG {
            ril /= BIG;
            ripl /= BIG;
            iscale += BIG.ln();
        }
    }
    let f = ripl / ril;

    // K_mu, K_{mu+1}, scaled by e^{x} when `shift` = x
    let (rkmu, rk1, shift) = if x < 2.0 {
        let (k0, k1) = temme_series(xmu, x);
        (k0, k1, 0.0)
    } else {
        let (k0, k1) = steed_cf2(xmu, x)?;
        (k0, k1, x)
    };
    let rkmup = xmu * xi * rkmu - rk1;
    let rimu = xi / (f * rkmu - rkmup);
    let log_i = rimu.ln() + shift - (ril.abs().ln() + iscale);

    // upward recurrence for K
    let (mut ka, mut kb) = (rkmu, rk1);
    let mut kscale = 0.0;
    for i in 1..=nl {
        let kt = (xmu + i as f64) * xi2 * kb + ka;
        ka = kb;
        kb = kt;
        if kb.abs() > BIG {
            ka /= BIG;
            kb /= BIG;
            kscale += BIG.ln();
        }
    }
    let log_k = ka.ln() + kscale - shift;
    let dk = nu * xi - kb / ka;
    if !(log_i.is_finite() && log_k.is_finite()) {
        return Err(Error::accuracy("bessel_ik_log", format!("non-finite result (nu={nu}, x={x})")));
    }
    Ok(LogIK { log_i, log_k, di, dk })
}

/// Temme's series for `K_mu(x)`, `K_{mu+1}(x)`, |mu| <= 1/2, small x.
fn temme_series(xmu: f64, x: f64) -> (f64, f64) {
    let xmu2 = xmu * xmu;
    let x2 = 0.5 * x;
    let pimu = PI * xmu;
    let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = xmu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = temme_gammas(xmu);
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let ee = e.exp();
    let mut p = 0.5 * ee / gampl;
    let mut q = 0.5 / (ee * gammi);
    let mut c = 1.0;
    let dd = x2 * x2;
    let mut sum1 = p;
    for i in 1..MAXIT {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - xmu2);
        c *= dd / fi;
        p /= fi - xmu;
        q /= fi + xmu;
        let del = c * ff;
        sum += del;
        let del1 = c * (p - fi * ff);
        sum1 += del1;
        if del.abs() < sum.abs() * EPS {
            break;
        }
    }
    (sum, sum1 * 2.0 / x)
}

/// Steed's CF2 for `e^{x} K_mu(x)`, `e^{x} K_{mu+1}(x)`, x >= 2.
fn steed_cf2(xmu: f64, x: f64) -> Result<(f64, f64)> {
    let a1 = 0.25 - xmu * xmu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    let mut converged = false;
    for i in 2..MAXIT {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::accuracy("steed_cf2", format!("CF2 did not converge at x={x}")));
    }
    let h = a1 * h;
    let k0 = (PI / (2.0 * x)).sqrt() / s;
    let k1 = k0 * (xmu + x + 0.5 - h) / x;
    Ok((k0, k1))
}

/// Natural logarithm of `I_nu(r)`.
pub fn log_bessel_i(nu: f64, r: f64) -> Result<f64> {
    Ok(bessel_ik_log(nu, r)?.log_i)
}

/// Natural logarithm of `K_nu(r)`.
pub fn log_bessel_k(nu: f64, r: f64) -> Result<f64> {
    Ok(bessel_ik_log(nu, r)?.log_k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_helpers() {
        let (g1, g2, gp, gm) = temme_gammas(0.0);
        assert!((g1 + 0.577_215_664_901_532_9).abs() < 1e-16);
        assert!((g2 - 1.0).abs() < 1e-16);
        assert_eq!((gp, gm), (1.0, 1.0));
        // 1/Gamma(1.5) = 2/sqrt(pi)
        let (_, _, gp, gm) = temme_gammas(0.5);
        assert!(rel(gp, 2.0 / PI.sqrt()) < 1e-15);
        assert!(rel(gm, 1.0 / PI.sqrt()) < 1e-15);
    }

    // frozen high-precision reference values
    #[test]
    fn against_reference_values() {
        let cases: [(f64, f64, f64, f64); 6] = [
            (7.0, 3.5, -4.232_789_988_504_673_9, f64::NAN),
            (0.0, 100.0, 96.779_732_689_942_583_7, f64::NAN),
            (40.0, 20.0, -15.844_173_874_859_163, 11.350_537_974_802_906_7),
            (2.5, 0.3, -5.937_349_577_827_662_1, 4.319_514_594_361_339_5),
            (100.0, 300.0, 279.685_910_778_783_72, -286.135_520_129_338_28),
            (100.0, 1.0, -433.051_618_394_065_89, 427.753_251_025_018_81),
        ];
        for (nu, x, li, lk) in cases {
            let r = bessel_ik_log(nu, x).unwrap();
            assert!((r.log_i - li).abs() < 1e-13 * li.abs().max(1.0), "I nu={nu} x={x}: {} vs {li}", r.log_i);
            if lk.is_finite() {
                assert!((r.log_k - lk).abs() < 1e-13 * lk.abs().max(1.0), "K nu={nu} x={x}: {} vs {lk}", r.log_k);
            }
        }
        let k0 = log_bessel_k(0.0, 0.01).unwrap();
        assert!((k0 - 1.552_072_478_848_215_8).abs() < 1e-14);
    }

    #[test]
    fn closed_form_half_order() {
        for x in [0.01, 0.5, 1.0, 1.999, 2.0, 7.0, 250.0] {
            let r = bessel_ik_log(0.5, x).unwrap();
            let lk = 0.5 * (PI / (2.0 * x)).ln() - x;
            assert!((r.log_k - lk).abs() < 1e-14 * lk.abs().max(1.0), "x={x}");
            let li = 0.5 * (2.0 / (PI * x)).ln() + x.sinh().ln();
            assert!((r.log_i - li).abs() < 1e-13 * li.abs().max(1.0), "x={x}: {} vs {li}", r.log_i);
        }
    }

    #[test]
    fn wronskian_identity_small_grid() {
        for n in [0usize, 1, 3, 10, 20] {
            for x in [0.1, 0.9, 2.0, 2.5, 13.0, 50.0] {
                let a = bessel_ik_log(n as f64, x).unwrap();
                let b = bessel_ik_log(n as f64 + 1.0, x).unwrap();
                let w = (a.log_i + b.log_k).exp() + (b.log_i + a.log_k).exp();
                assert!(rel(w, 1.0 / x) < 1e-13, "n={n} x={x} w*x={}", w * x);
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(log_bessel_i(0.0, 0.0), Err(Error::Domain { .. })));
        assert!(matches!(log_bessel_k(1.0, -1.0), Err(Error::Domain { .. })));
    }
}

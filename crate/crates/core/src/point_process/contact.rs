use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;

use super::ProcessSpec;
use crate::error::{Error, Result};
use crate::special::{integrate, QuadSpec};

/// Inradius of the hexagonal Voronoi cell of the lattice, where the TRI
/// contact law switches from the disc branch to the clipped branch.
pub fn tri_inradius(intensity: f64) -> f64 {
    (1.0 / (2.0 * 3f64.sqrt() * intensity)).sqrt()
}

/// Circumradius of the hexagonal cell: no contact distance exceeds it.
pub fn tri_circumradius(intensity: f64) -> f64 {
    (2.0 / (3.0 * 3f64.sqrt() * intensity)).sqrt()
}

/// Area of the lens between a disc of radius `r` and a disc of radius
/// `delta = 1/sqrt(pi lambda)` whose centers are `r` apart.
pub fn lens_area(r: f64, intensity: f64) -> f64 {
    let pl = PI * intensity;
    let breakpoint = 1.0 / (2.0 * pl.sqrt());
    if r < breakpoint {
        return PI * r * r;
    }
    // The three-term expression
    //   r^2 acos((2 pi l r^2 - 1)/(2 pi l r^2)) + acos(1/(2 sqrt(pi l) r))/(pi l)
    //     - sqrt(4 r^2 - 1/(pi l)) / (2 sqrt(pi l))
    // rewritten with theta = acos(delta / (2 r)). Identical algebraically, but
    // it stays accurate at the breakpoint where the acos arguments reach +-1.
    let theta = (breakpoint / r).min(1.0).acos();
    let two = 2.0 * theta;
    r * r * (PI + two * two.cos() - two.sin())
}

/// Beyond this `lambda pi r^2` the MHC CDF is 1 in double precision
/// (its exponent dominates the PPP one).
const MHC_TAIL_LOAD: f64 = 745.0;

fn mhc_xi(t: f64, intensity: f64) -> f64 {
    intensity / (1.0 - intensity * lens_area(t, intensity))
}

/// `2 pi * int_0^r t xi(t) dt`, the MHC contact exponent.
pub fn mhc_exponent(intensity: f64, r: f64, quad: &QuadSpec) -> Result<f64> {
    if r <= 0.0 {
        return Ok(0.0);
    }
    let f = |t: f64| t * mhc_xi(t, intensity);
    let kink = 1.0 / (2.0 * (PI * intensity).sqrt());
    let inner = if r <= kink {
        integrate(f, 0.0, r, quad)?
    } else {
        integrate(f, 0.0, kink, quad)? + integrate(f, kink, r, quad)?
    };
    Ok(2.0 * PI * inner)
}

fn check_r(r: f64) -> Result<()> {
    if !(r >= 0.0) {
        return Err(Error::Domain(format!(
            "contact distance must be >= 0, got {r}"
        )));
    }
    Ok(())
}

/// Contact-distance CDF `P(nearest gateway within r)`.
pub fn contact_cdf(spec: &ProcessSpec, r: f64) -> Result<f64> {
    check_r(r)?;
    let lambda = spec.intensity();
    let v = match spec {
        ProcessSpec::Ppp { .. } => -(-lambda * PI * r * r).exp_m1(),
        ProcessSpec::Mhc { .. } if lambda * PI * r * r > MHC_TAIL_LOAD => 1.0,
        ProcessSpec::Mhc { .. } => -(-mhc_exponent(lambda, r, &QuadSpec::default())?).exp_m1(),
        ProcessSpec::Tri { .. } => tri_cdf(lambda, r),
    };
    Ok(v.clamp(0.0, 1.0))
}

fn tri_cdf(lambda: f64, r: f64) -> f64 {
    let a = tri_inradius(lambda);
    let big_r = tri_circumradius(lambda);
    let r2 = r * r;
    if r <= a {
        PI * lambda * r2
    } else if r <= big_r {
        PI * lambda * r2 + (6.0 * 3f64.sqrt() * lambda * r2 - 3.0).max(0.0).sqrt()
            - 6.0 * lambda * r2 * (a / r).min(1.0).acos()
    } else {
        1.0
    }
}

fn tri_pdf(lambda: f64, r: f64) -> f64 {
    let a = tri_inradius(lambda);
    let big_r = tri_circumradius(lambda);
    if r <= a {
        2.0 * PI * lambda * r
    } else if r <= big_r {
        (2.0 * PI * lambda * r - 12.0 * lambda * r * (a / r).min(1.0).acos()).max(0.0)
    } else {
        0.0
    }
}

/// Contact-distance density.
pub fn contact_pdf(spec: &ProcessSpec, r: f64) -> Result<f64> {
    check_r(r)?;
    let lambda = spec.intensity();
    Ok(match spec {
        ProcessSpec::Ppp { .. } => 2.0 * lambda * PI * r * (-lambda * PI * r * r).exp(),
        ProcessSpec::Mhc { .. } if lambda * PI * r * r > MHC_TAIL_LOAD => 0.0,
        ProcessSpec::Mhc { .. } => {
            let e = mhc_exponent(lambda, r, &QuadSpec::default())?;
            2.0 * PI * r * mhc_xi(r, lambda) * (-e).exp()
        }
        ProcessSpec::Tri { .. } => tri_pdf(lambda, r),
    })
}

/// Inverse of [`contact_cdf`] for `u` in `[0, 1)`.
pub fn contact_quantile(spec: &ProcessSpec, u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::Domain(format!(
            "quantile level must be in [0, 1), got {u}"
        )));
    }
    let lambda = spec.intensity();
    match spec {
        ProcessSpec::Ppp { .. } => Ok((-(-u).ln_1p() / (lambda * PI)).sqrt()),
        ProcessSpec::Tri { .. } => {
            let a = tri_inradius(lambda);
            if u <= PI * lambda * a * a {
                return Ok((u / (PI * lambda)).sqrt());
            }
            Ok(newton_bisect(
                |r| tri_cdf(lambda, r) - u,
                |r| tri_pdf(lambda, r),
                a,
                tri_circumradius(lambda),
            ))
        }
        ProcessSpec::Mhc { .. } => {
            let mut hi = 1.0 / lambda.sqrt();
            while contact_cdf(spec, hi)? < u {
                hi *= 2.0;
            }
            let (mut lo, mut hi) = (0.0, hi);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if contact_cdf(spec, mid)? < u {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo <= 1e-14 * hi {
                    break;
                }
            }
            Ok(0.5 * (lo + hi))
        }
    }
}

/// Safeguarded Newton iteration for an increasing `f` with a sign change on
/// `[lo, hi]`.
fn newton_bisect<F: Fn(f64) -> f64, D: Fn(f64) -> f64>(f: F, df: D, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
            return next;
        }
        x = next;
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContactRow {
    pub r_m: f64,
    pub cdf: f64,
    pub pdf: f64,
}

/// CDF and PDF tabulated on `r_grid`.
pub fn contact_table(spec: &ProcessSpec, r_grid: &[f64]) -> Result<Vec<ContactRow>> {
    r_grid
        .iter()
        .map(|&r| {
            Ok(ContactRow {
                r_m: r,
                cdf: contact_cdf(spec, r)?,
                pdf: contact_pdf(spec, r)?,
            })
        })
        .collect()
}

/// Writes `r_m,cdf,pdf` rows.
pub fn write_contact_csv<W: Write>(rows: &[ContactRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::integrate_semi_infinite;

    const LAMBDAS: [f64; 3] = [0.5e-6, 1e-6, 2e-6];

    fn specs(lambda: f64) -> [ProcessSpec; 3] {
        [
            ProcessSpec::ppp(lambda).unwrap(),
            ProcessSpec::mhc(lambda).unwrap(),
            ProcessSpec::tri(lambda).unwrap(),
        ]
    }

    #[test]
    fn cdf_at_zero_is_zero() {
        for s in specs(1e-6) {
            assert_eq!(contact_cdf(&s, 0.0).unwrap(), 0.0);
        }
        assert!(contact_cdf(&specs(1.0)[0], -1.0).is_err());
    }

    #[test]
    fn ppp_median() {
        let lambda = 1e-6;
        let r = (2f64.ln() / (lambda * PI)).sqrt();
        let s = ProcessSpec::ppp(lambda).unwrap();
        assert!((contact_cdf(&s, r).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ppp_mode() {
        let lambda = 1e-6;
        let s = ProcessSpec::ppp(lambda).unwrap();
        let mode = 1.0 / (2.0 * PI * lambda).sqrt();
        let f0 = contact_pdf(&s, mode).unwrap();
        for k in [0.99, 1.01] {
            assert!(contact_pdf(&s, mode * k).unwrap() < f0);
        }
    }

    #[test]
    fn tri_support_ends_at_circumradius() {
        let lambda = 1e-6;
        let s = ProcessSpec::tri(lambda).unwrap();
        let big_r = tri_circumradius(lambda);
        assert_eq!(contact_cdf(&s, big_r * 1.0001).unwrap(), 1.0);
        assert_eq!(contact_pdf(&s, big_r * 1.0001).unwrap(), 0.0);
        assert!((contact_cdf(&s, big_r).unwrap() - 1.0).abs() < 1e-12);
        // continuity at the inradius
        let a = tri_inradius(lambda);
        let lo = tri_cdf(lambda, a * (1.0 - 1e-9));
        let hi = tri_cdf(lambda, a * (1.0 + 1e-9));
        assert!((lo - hi).abs() < 1e-8);
    }

    #[test]
    fn pdfs_integrate_to_one() {
        let q = QuadSpec::default();
        for &lambda in &LAMBDAS {
            let [ppp, mhc, tri] = specs(lambda);
            let p = integrate_semi_infinite(|r| contact_pdf(&ppp, r).unwrap(), 0.0, &q).unwrap();
            assert!((p - 1.0).abs() < 1e-6, "ppp {p}");
            let a = tri_inradius(lambda);
            let big_r = tri_circumradius(lambda);
            let t = integrate(|r| contact_pdf(&tri, r).unwrap(), 0.0, a, &q).unwrap()
                + integrate(|r| contact_pdf(&tri, r).unwrap(), a, big_r, &q).unwrap();
            assert!((t - 1.0).abs() < 1e-6, "tri {t}");
            let scale = 1.0 / lambda.sqrt();
            let kink = 1.0 / (2.0 * (PI * lambda).sqrt());
            let m = integrate(|r| contact_pdf(&mhc, r).unwrap(), 0.0, kink, &q).unwrap()
                + integrate_semi_infinite(
                    |x| contact_pdf(&mhc, kink + x * scale).unwrap() * scale,
                    0.0,
                    &QuadSpec::new(1e-10, 1e-9, 30).unwrap(),
                )
                .unwrap();
            assert!((m - 1.0).abs() < 1e-6, "mhc {m}");
        }
    }

    #[test]
    fn mhc_pdf_is_derivative_of_cdf() {
        let lambda = 1e-6;
        let s = ProcessSpec::mhc(lambda).unwrap();
        let scale = 1.0 / lambda.sqrt();
        let h = 1e-4 * scale;
        let mut sup: f64 = 0.0;
        for i in 1..200 {
            let r = i as f64 * 0.01 * scale;
            let fd =
                (contact_cdf(&s, r + h).unwrap() - contact_cdf(&s, r - h).unwrap()) / (2.0 * h);
            // compare in units of the natural scale so the tolerance is dimensionless
            sup = sup.max(((fd - contact_pdf(&s, r).unwrap()) * scale).abs());
        }
        assert!(sup < 1e-6, "sup error {sup}");
    }

    #[test]
    fn cdf_dominance_tri_mhc_ppp() {
        for &lambda in &LAMBDAS {
            let [ppp, mhc, tri] = specs(lambda);
            let scale = 1.0 / lambda.sqrt();
            for i in 0..=300 {
                let r = i as f64 * 0.01 * scale;
                let (fp, fm, ft) = (
                    contact_cdf(&ppp, r).unwrap(),
                    contact_cdf(&mhc, r).unwrap(),
                    contact_cdf(&tri, r).unwrap(),
                );
                assert!(
                    ft >= fm - 1e-12 && fm >= fp - 1e-12,
                    "r={r}: {ft} {fm} {fp}"
                );
            }
        }
    }

    #[test]
    fn lens_area_branches() {
        let lambda = 1e-6;
        let b = 1.0 / (2.0 * (PI * lambda).sqrt());
        assert_eq!(lens_area(0.5 * b, lambda), PI * 0.25 * b * b);
        // second branch evaluated exactly at the breakpoint
        let pl = PI * lambda;
        let r = b;
        let second = r * r * ((2.0 * pl * r * r - 1.0) / (2.0 * pl * r * r)).acos()
            + (1.0 / (2.0 * pl.sqrt() * r)).acos() / pl
            - (4.0 * r * r - 1.0 / pl).sqrt() / (2.0 * pl.sqrt());
        assert!((second - PI * b * b).abs() < 1e-7 * PI * b * b);
        // the stable form agrees with the three-term expression away from the breakpoint
        for k in [1.1, 1.5, 3.0, 10.0] {
            let r = k * b;
            let literal = r * r * ((2.0 * pl * r * r - 1.0) / (2.0 * pl * r * r)).acos()
                + (1.0 / (2.0 * pl.sqrt() * r)).acos() / pl
                - (4.0 * r * r - 1.0 / pl).sqrt() / (2.0 * pl.sqrt());
            assert!(((lens_area(r, lambda) - literal) / literal).abs() < 1e-12);
        }
        assert!((lens_area(b * (1.0 + 1e-12), lambda) - PI * b * b).abs() < 1e-6 * b * b);
        // vanishing intensity
        assert_eq!(lens_area(10.0, 1e-30), PI * 100.0);
    }

    #[test]
    fn lens_area_matches_circle_intersection() {
        // Oracle: integrate the vertical chord length of the intersection of
        // the disc |x - (r, 0)| <= r with the disc |x| <= delta.
        let lambda = 1e-6;
        let delta = 1.0 / (PI * lambda).sqrt();
        let q = QuadSpec::new(1e-9, 1e-12, 40).unwrap();
        for &k in &[0.1, 0.3, 0.5, 0.7, 1.0, 2.0, 5.0] {
            let r = k * delta;
            let chord = |x: f64| {
                let h1 = (r * r - (x - r) * (x - r)).max(0.0).sqrt();
                let h2 = (delta * delta - x * x).max(0.0).sqrt();
                2.0 * h1.min(h2)
            };
            let x_hi = delta.min(2.0 * r);
            // the two boundary circles cross at x = delta^2 / (2 r)
            let cross = (delta * delta / (2.0 * r)).clamp(0.0, x_hi);
            let oracle = integrate(chord, 0.0, cross, &q).unwrap()
                + integrate(chord, cross, x_hi, &q).unwrap();
            let v = lens_area(r, lambda);
            assert!(
                ((v - oracle) / oracle).abs() < 1e-10,
                "k={k}: {v} vs {oracle}"
            );
        }
    }

    #[test]
    fn quantiles_invert_cdf() {
        for s in specs(1e-6) {
            for &u in &[0.0, 0.01, 0.3, 0.5, 0.9, 0.95, 0.999] {
                let r = contact_quantile(&s, u).unwrap();
                assert!((contact_cdf(&s, r).unwrap() - u).abs() < 1e-9, "{s:?} {u}");
            }
            assert!(contact_quantile(&s, 1.0).is_err());
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn dominance_and_monotone(l_km2 in 0.1f64..10.0, u in 0.0f64..3.0, du in 0.0f64..0.2) {
                let lambda = l_km2 * 1e-6;
                let r = u / lambda.sqrt();
                let r2 = (u + du) / lambda.sqrt();
                let [ppp, mhc, tri] = specs(lambda);
                let f = |s: &ProcessSpec, r| contact_cdf(s, r).unwrap();
                prop_assert!(f(&tri, r) >= f(&mhc, r) - 1e-12);
                prop_assert!(f(&mhc, r) >= f(&ppp, r) - 1e-12);
                for s in [&ppp, &mhc, &tri] {
                    prop_assert!(f(s, r2) >= f(s, r) - 1e-12);
                    prop_assert!((0.0..=1.0).contains(&f(s, r)));
                }
            }
        }
    }
}

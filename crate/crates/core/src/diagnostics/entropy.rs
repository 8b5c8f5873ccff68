use crate::error::{Error, Result};
use crate::grid::{GridDensity, DENSITY_FLOOR};

/// `H(ν|μ) = ∫ ln(ν/μ) dν` by grid quadrature.
pub fn relative_entropy(nu: &GridDensity, mu: &GridDensity) -> Result<f64> {
    nu.require_same_grid(mu)?;
    let mut acc = 0.0;
    for (k, (&a, &b)) in nu.values().iter().zip(mu.values()).enumerate() {
        if a < DENSITY_FLOOR {
            continue;
        }
        if b < DENSITY_FLOOR {
            return Err(Error::SupportViolation { cell: k });
        }
        acc += a * (a / b).ln();
    }
    Ok(acc * nu.cell_volume())
}

/// `I(ν|μ) = ∫ |∇ln(ν/μ)|² dν` with centred differences, over cells whose
/// stencil lies inside the box and above the density floor.
pub fn fisher_information(nu: &GridDensity, mu: &GridDensity) -> Result<f64> {
    nu.require_same_grid(mu)?;
    let (dim, n, dx) = (nu.dim(), nu.n(), nu.dx());
    for (k, (&a, &b)) in nu.values().iter().zip(mu.values()).enumerate() {
        if a >= DENSITY_FLOOR && b < DENSITY_FLOOR {
            return Err(Error::SupportViolation { cell: k });
        }
    }
    let ratio = |k: usize| -> Option<f64> {
        let (a, b) = (nu.values()[k], mu.values()[k]);
        (a >= DENSITY_FLOOR && b >= DENSITY_FLOOR).then(|| (a / b).ln())
    };
    let strides: &[usize] = if dim == 1 { &[1] } else { &[n, 1] };
    let mut acc = 0.0;
    for k in 0..nu.len() {
        let a = nu.values()[k];
        if a < DENSITY_FLOOR {
            continue;
        }
        let mut g2 = 0.0;
        let mut ok = true;
        for (axis, &st) in strides.iter().enumerate() {
            let i = if dim == 1 { k } else if axis == 0 { k / n } else { k % n };
            if i == 0 || i + 1 == n {
                ok = false;
                break;
            }
            match (ratio(k + st), ratio(k - st)) {
                (Some(p), Some(q)) => g2 += ((p - q) / (2.0 * dx)).powi(2),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            acc += g2 * a;
        }
    }
    Ok(acc * nu.cell_volume())
}

use std::sync::Arc;

use annulus_core::{mat, LiftPoint, Mat2};
use mapkit::{AnnulusMap, Primitive};

use crate::context::RenormContext;
use crate::lift::LiftPower;
use crate::{RenormError, Result};

const J: Mat2 = [[-1.0, 0.0], [0.0, 1.0]];

/// `(HJ)⁻¹ F^{a,b} (HJ)`; commutes with `T`, so it is evaluated on `[0,1) × [0,1]` and shifted back.
///
/// Points where the conjugator cannot be evaluated map to NaN.
#[derive(Debug)]
struct Renormalized {
    ctx: Arc<RenormContext>,
    fab: LiftPower,
}

impl Renormalized {
    fn conjugate(&self, p: LiftPoint, inverse: bool) -> Result<LiftPoint> {
        let k = p.x.floor();
        let z = self.ctx.h_unbounded(-(p.x - k), p.y)?;
        let w = if inverse { self.fab.map().apply_inverse(z) } else { self.fab.apply(z) };
        let (u, v) = self.ctx.h_inverse_unbounded(w)?;
        Ok(LiftPoint::new(-u + k, v))
    }

    fn conjugate_with_jacobian(&self, p: LiftPoint) -> Result<Mat2> {
        let k = p.x.floor();
        let (z, dh) = self.ctx.h_unbounded_with_jacobian(-(p.x - k), p.y)?;
        let (w, df) = self.fab.map().apply_with_jacobian(z);
        let (u, v) = self.ctx.h_inverse_unbounded(w)?;
        let (_, dh_out) = self.ctx.h_unbounded_with_jacobian(u, v)?;
        let inner = mat::mul(&df, &mat::mul(&dh, &J));
        Ok(mat::mul(&J, &mat::mul(&mat::inv(&dh_out), &inner)))
    }
}

fn nan() -> LiftPoint {
    LiftPoint::new(f64::NAN, f64::NAN)
}

impl Primitive for Renormalized {
    fn tag(&self) -> &'static str {
        "renormalized"
    }

    fn apply(&self, p: LiftPoint) -> LiftPoint {
        self.conjugate(p, false).unwrap_or_else(|_| nan())
    }

    fn apply_inverse(&self, p: LiftPoint) -> LiftPoint {
        self.conjugate(p, true).unwrap_or_else(|_| nan())
    }

    fn jacobian(&self, p: LiftPoint) -> Mat2 {
        self.conjugate_with_jacobian(p).unwrap_or([[f64::NAN; 2]; 2])
    }

    fn closed_form(&self) -> bool {
        true
    }
}

/// The renormalization `f^{a,b}_H`, lifted to `(HJ)⁻¹ F^{a,b} (HJ)`.
pub fn renormalize(ctx: &RenormContext, a: i64, b: i64) -> Result<AnnulusMap> {
    let n = ctx.n();
    if a.checked_mul(ctx.floor_n_alpha()).zip(b.checked_mul(n)).map_or(true, |(x, y)| x.checked_add(y) == Some(0)) {
        return Err(RenormError::Degenerate { n, a, b });
    }
    let fab = ctx.lift().with_powers(a, b);
    Ok(AnnulusMap::from_prim(Renormalized { ctx: Arc::new(ctx.clone()), fab }))
}

use brouwer::Curve;
use mapkit::LiftPoint;

use crate::context::RenormContext;
use crate::Result;

/// `π(HJ(γ̃′))` for the lift of `γ′` starting in `[0,1)`.
///
/// Goodness for `f` is not implied here; check it with `brouwer::is_q_good`.
pub fn push_forward_good_curve(ctx: &RenormContext, gamma: &Curve) -> Result<Curve> {
    let samples = gamma.lift(0).samples().iter().map(|p| ctx.hj(p.x, p.y)).collect::<Result<Vec<LiftPoint>>>()?;
    Ok(Curve::new(samples)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{build_h_with, lift_power, RenormError};
    use brouwer::build_admissible_chart;
    use mapkit::AnnulusMap;

    #[test]
    fn vertical_lines_push_to_vertical_lines() {
        let alpha = 0.3;
        let l = lift_power(&AnnulusMap::rotation(alpha), 1, 0).unwrap();
        let chart = build_admissible_chart(l.f_n(3).unwrap().map(), &Curve::vertical(0.05, 9).lift(0)).unwrap();
        let ctx = build_h_with(&chart, &l, 3, 1).unwrap();
        let g = push_forward_good_curve(&ctx, &Curve::vertical(0.5, 9)).unwrap();
        // H(−0.5, y) = (0.05 − 0.9·0.5, y), back in [0, 1).
        let x = 0.05 - 0.45 + 1.0;
        assert!(g.samples().iter().all(|p| (p.x - x).abs() < 1e-14));
        let far = Curve::graph(|y| 0.5 + 1.8 * y, 9);
        assert!(matches!(push_forward_good_curve(&ctx, &far), Err(RenormError::WindowExceeded { .. })));
    }
}

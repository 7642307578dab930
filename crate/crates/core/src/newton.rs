//! Newton polygons and root counting in discs.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::rational::{int, Rat};
use crate::valuation::FieldContext;

/// A maximal edge of the lower convex hull of `{(i, v_p(c_i))}`.
///
/// `slope` is the slope of the hull edge, which equals `log_v |r|` for each of
/// the `length` roots `r` it accounts for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub slope: Rat,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewtonPolygon {
    pub segments: Vec<Segment>,
}

impl NewtonPolygon {
    pub fn total_length(&self) -> usize {
        self.segments.iter().map(|s| s.length).sum()
    }

    /// Number of nonzero roots `r` with `log_v |r| <= t` (or `< t` when `strict`).
    pub fn count_up_to(&self, t: &Rat, strict: bool) -> usize {
        self.segments.iter().filter(|s| if strict { &s.slope < t } else { &s.slope <= t }).map(|s| s.length).sum()
    }
}

pub fn newton_polygon(coeffs: &[Rat], ctx: &FieldContext) -> Result<NewtonPolygon> {
    let pts: Vec<(i64, Rat)> =
        coeffs.iter().enumerate().filter(|(_, c)| !c.is_zero()).map(|(i, c)| (i as i64, int(ctx.val(c)))).collect();
    if pts.is_empty() {
        return Err(Error::ZeroPolynomial);
    }
    // Lower hull by a monotone chain over increasing i.
    let mut hull: Vec<(i64, Rat)> = Vec::new();
    for pt in pts {
        while hull.len() >= 2 {
            let (x1, y1) = &hull[hull.len() - 2];
            let (x2, y2) = &hull[hull.len() - 1];
            // Drop the middle point unless it lies strictly below the chord.
            let lhs = (y2 - y1) * int(pt.0 - x1);
            let rhs = (&pt.1 - y1) * int(x2 - x1);
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(pt);
    }
    let segments = hull
        .windows(2)
        .map(|w| Segment { slope: (&w[1].1 - &w[0].1) / int(w[1].0 - w[0].0), length: (w[1].0 - w[0].0) as usize })
        .collect();
    Ok(NewtonPolygon { segments })
}

/// Number of roots (with multiplicity) of `poly` in the closed disc
/// `D(center, p^log_radius)`, or the open disc when `open` is set.
pub fn root_count_in_disc(
    poly: &Poly,
    center: &Rat,
    log_radius: &Rat,
    open: bool,
    ctx: &FieldContext,
) -> Result<usize> {
    if poly.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let shifted = poly.taylor_shift(center);
    let at_center = shifted.low_index().unwrap_or(0);
    let np = newton_polygon(shifted.coeffs(), ctx)?;
    Ok(at_center + np.count_up_to(log_radius, open))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::frac;

    fn ctx(p: u64) -> FieldContext {
        FieldContext::new(p, 20).unwrap()
    }

    #[test]
    fn polygons() {
        let np = newton_polygon(Poly::from_ints(&[-3, 0, 1]).coeffs(), &ctx(3)).unwrap();
        assert_eq!(np.segments, vec![Segment { slope: frac(-1, 2), length: 2 }]);

        let np = newton_polygon(Poly::from_ints(&[1, 1, 5]).coeffs(), &ctx(5)).unwrap();
        assert_eq!(np.segments, vec![Segment { slope: int(0), length: 1 }, Segment { slope: int(1), length: 1 }]);

        let np = newton_polygon(Poly::from_ints(&[-1, 1]).coeffs(), &ctx(7)).unwrap();
        assert_eq!(np.segments, vec![Segment { slope: int(0), length: 1 }]);

        assert_eq!(newton_polygon(&[int(0)], &ctx(2)), Err(Error::ZeroPolynomial));
    }

    #[test]
    fn collinear_points_merge() {
        // 1 + 2T + 4T^2 at p = 2: three collinear points, one segment.
        let np = newton_polygon(Poly::from_ints(&[1, 2, 4]).coeffs(), &ctx(2)).unwrap();
        assert_eq!(np.segments, vec![Segment { slope: int(1), length: 2 }]);
    }

    #[test]
    fn disc_counts() {
        let c = ctx(3);
        let f = Poly::from_ints(&[-3, 0, 1]);
        assert_eq!(root_count_in_disc(&f, &int(0), &frac(-1, 2), false, &c), Ok(2));
        assert_eq!(root_count_in_disc(&f, &int(0), &frac(-1, 2), true, &c), Ok(0));
        let g = &Poly::from_ints(&[-1, 1]) * &Poly::from_ints(&[-5, 1]);
        assert_eq!(root_count_in_disc(&g, &int(0), &int(0), false, &ctx(5)), Ok(2));
        assert_eq!(root_count_in_disc(&g, &int(0), &int(-1), true, &ctx(5)), Ok(0));
        assert_eq!(root_count_in_disc(&g, &int(5), &int(-1), false, &ctx(5)), Ok(1));
    }
}

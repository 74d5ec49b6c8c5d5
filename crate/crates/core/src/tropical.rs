//! Max-plus arithmetic on the tropical projective torus `R^d / R·1`.
//!
//! Points are stored in a canonical representative with the first
//! coordinate equal to zero, so equality in the torus is plain
//! componentwise equality. Sector indices in the public API are 1-based.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// Absolute tolerance used for ties and hyperplane membership unless a caller
/// supplies its own.
pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TropicalError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("a point of the tropical torus needs at least 2 coordinates, got {0}")]
    TooFewCoordinates(usize),
    #[error("coordinate {index} is not finite")]
    NonFinite { index: usize },
}

/// Tropical addition, `a ⊞ b = max(a, b)`. `-inf` is the identity.
#[inline]
pub fn trop_add(a: f64, b: f64) -> f64 {
    a.max(b)
}

/// Tropical multiplication, `a ⊙ b = a + b`. `0` is the identity and `-inf`
/// is absorbing.
#[inline]
pub fn trop_mul(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        a + b
    }
}

fn check_finite(coords: &[f64]) -> Result<(), TropicalError> {
    if coords.len() < 2 {
        return Err(TropicalError::TooFewCoordinates(coords.len()));
    }
    match coords.iter().position(|c| !c.is_finite()) {
        Some(i) => Err(TropicalError::NonFinite { index: i + 1 }),
        None => Ok(()),
    }
}

fn same_dim(left: usize, right: usize) -> Result<(), TropicalError> {
    if left != right {
        Err(TropicalError::DimensionMismatch { left, right })
    } else {
        Ok(())
    }
}

/// A point of `R^d / R·1` in canonical form (`coords[0] == 0`).
#[derive(Debug, Clone, PartialEq)]
pub struct TropPoint {
    coords: Vec<f64>,
}

impl TropPoint {
    /// Normalizes `raw` by subtracting its first coordinate.
    pub fn new(raw: Vec<f64>) -> Result<Self, TropicalError> {
        check_finite(&raw)?;
        let mut coords = raw;
        let base = coords[0];
        for c in coords.iter_mut().skip(1) {
            *c -= base;
        }
        coords[0] = 0.0;
        Ok(TropPoint { coords })
    }

    pub fn from_slice(raw: &[f64]) -> Result<Self, TropicalError> {
        Self::new(raw.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinate by 1-based index.
    pub fn get(&self, index: usize) -> f64 {
        self.coords[index - 1]
    }

    /// `self + c·1`, which is the same torus point.
    pub fn shifted(&self, c: f64) -> TropPoint {
        let raw = self.coords.iter().map(|x| x + c).collect();
        TropPoint::new(raw).expect("finite shift of a finite point")
    }

    /// Whether two points agree in the torus within `tol` per coordinate.
    pub fn approx_eq(&self, other: &TropPoint, tol: f64) -> bool {
        self.dim() == other.dim()
            && self
                .coords
                .iter()
                .zip(&other.coords)
                .all(|(a, b)| (a - b).abs() <= tol)
    }
}

impl fmt::Display for TropPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Tropical hyperplane `H_ω`: the points `x` where `max_i(ω_i + x_i)` is
/// attained at least twice. The normal vector is kept as given.
#[derive(Debug, Clone, PartialEq)]
pub struct TropHyperplane {
    omega: Vec<f64>,
}

impl TropHyperplane {
    pub fn new(omega: Vec<f64>) -> Result<Self, TropicalError> {
        check_finite(&omega)?;
        Ok(TropHyperplane { omega })
    }

    /// The hyperplane through the origin, `H_0`.
    pub fn zero(dim: usize) -> Self {
        TropHyperplane {
            omega: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// `ω + x`, coordinatewise.
    fn shifted_point(&self, x: &TropPoint) -> Result<Vec<f64>, TropicalError> {
        same_dim(x.dim(), self.dim())?;
        Ok(self
            .omega
            .iter()
            .zip(x.coords())
            .map(|(w, c)| w + c)
            .collect())
    }
}

/// Set of 1-based sector indices attaining the maximum of `ω + x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SectorSet(BTreeSet<usize>);

impl SectorSet {
    pub fn new(indices: impl IntoIterator<Item = usize>) -> Self {
        SectorSet(indices.into_iter().collect())
    }

    pub fn indices(&self) -> &BTreeSet<usize> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.0.contains(&index)
    }

    /// Smallest index of the tie set.
    pub fn first(&self) -> Option<usize> {
        self.0.iter().next().copied()
    }

    pub fn is_subset(&self, other: &SectorSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Intersection with an explicit index list.
    pub fn restrict(&self, keep: &[usize]) -> SectorSet {
        SectorSet(self.0.iter().copied().filter(|i| keep.contains(i)).collect())
    }
}

impl fmt::Display for SectorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// `a ⊙ v ⊞ b ⊙ w`, normalized. `b` may be `-inf`.
pub fn trop_combine(
    a: f64,
    v: &TropPoint,
    b: f64,
    w: &TropPoint,
) -> Result<TropPoint, TropicalError> {
    same_dim(v.dim(), w.dim())?;
    let raw = v
        .coords()
        .iter()
        .zip(w.coords())
        .map(|(&vi, &wi)| trop_add(trop_mul(a, vi), trop_mul(b, wi)))
        .collect();
    TropPoint::new(raw)
}

/// Generalized Hilbert projective metric, `max_i(v_i - w_i) - min_i(v_i - w_i)`.
pub fn trop_distance(v: &TropPoint, w: &TropPoint) -> Result<f64, TropicalError> {
    same_dim(v.dim(), w.dim())?;
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for (a, b) in v.coords().iter().zip(w.coords()) {
        let d = a - b;
        hi = hi.max(d);
        lo = lo.min(d);
    }
    Ok(hi - lo)
}

/// Largest and second largest entries of a slice with at least two entries.
pub(crate) fn top_two(values: &[f64]) -> (f64, f64) {
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &y in values {
        if y > first {
            second = first;
            first = y;
        } else if y > second {
            second = y;
        }
    }
    (first, second)
}

/// Tropical distance from `x` to `H_ω`: largest minus second largest
/// coordinate of `ω + x`.
pub fn dist_to_hyperplane(x: &TropPoint, h: &TropHyperplane) -> Result<f64, TropicalError> {
    let y = h.shifted_point(x)?;
    let (first, second) = top_two(&y);
    Ok(first - second)
}

/// Indices `i` with `ω_i + x_i >= max_k(ω_k + x_k) - tol`.
pub fn sector_membership(
    x: &TropPoint,
    h: &TropHyperplane,
    tol: f64,
) -> Result<SectorSet, TropicalError> {
    let y = h.shifted_point(x)?;
    let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(SectorSet(
        y.iter()
            .enumerate()
            .filter(|(_, &v)| v >= max - tol)
            .map(|(i, _)| i + 1)
            .collect(),
    ))
}

/// Breakpoints of the tropical line segment `tconv{v, w}`, ordered from `v`
/// to `w`.
///
/// Every point of the segment is `0 ⊙ v ⊞ λ ⊙ w` for some real `λ`; the
/// combination only changes shape where `λ` crosses one of the values
/// `v_i - w_i`, so evaluating at those thresholds yields the pseudo-vertices.
pub fn trop_segment(v: &TropPoint, w: &TropPoint) -> Result<Vec<TropPoint>, TropicalError> {
    same_dim(v.dim(), w.dim())?;
    let mut thresholds: Vec<f64> = v
        .coords()
        .iter()
        .zip(w.coords())
        .map(|(a, b)| a - b)
        .collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let mut out: Vec<TropPoint> = Vec::with_capacity(thresholds.len());
    for lambda in thresholds {
        let p = trop_combine(0.0, v, lambda, w)?;
        if out.last().map_or(true, |last| !last.approx_eq(&p, 0.0)) {
            out.push(p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> TropPoint {
        TropPoint::from_slice(v).unwrap()
    }

    #[test]
    fn scalar_ops() {
        assert_eq!(trop_add(3.0, 5.0), 5.0);
        assert_eq!(trop_mul(3.0, 5.0), 8.0);
        assert_eq!(trop_add(f64::NEG_INFINITY, 7.0), 7.0);
        assert_eq!(trop_mul(0.0, 7.0), 7.0);
        assert_eq!(trop_mul(f64::NEG_INFINITY, 7.0), f64::NEG_INFINITY);
    }

    #[test]
    fn canonical_form() {
        let p = pt(&[3.0, 4.0, 1.0]);
        assert_eq!(p.coords(), &[0.0, 1.0, -2.0]);
        assert_eq!(p, pt(&[0.0, 1.0, -2.0]));
        assert_eq!(p.shifted(17.5), p);
        assert!(matches!(
            TropPoint::new(vec![1.0]),
            Err(TropicalError::TooFewCoordinates(1))
        ));
        assert!(matches!(
            TropPoint::new(vec![1.0, f64::NAN]),
            Err(TropicalError::NonFinite { index: 2 })
        ));
    }

    #[test]
    fn combine_examples() {
        let v = pt(&[1.0, 2.0, 3.0]);
        let w = pt(&[1.0, 1.0, 1.0]);
        // Normalization loses the absolute offset, so combine the raw values
        // through shifted scalars: v was stored as (0,1,2), i.e. shifted by -1.
        let got = trop_combine(-1.0 + 1.0, &v, 3.0 + 1.0, &w).unwrap();
        assert_eq!(got, pt(&[0.0, 0.0, 0.0]));

        let x = pt(&[0.0, 5.0, -2.0]);
        assert_eq!(trop_combine(0.0, &x, -1e6, &w).unwrap(), x);
        assert_eq!(
            trop_combine(0.0, &x, f64::NEG_INFINITY, &w).unwrap(),
            x
        );
        assert_eq!(
            trop_combine(0.0, &pt(&[0.0, 1.0]), 0.0, &pt(&[0.0, 2.0])).unwrap(),
            pt(&[0.0, 2.0])
        );
        assert!(trop_combine(0.0, &x, 0.0, &pt(&[0.0, 1.0])).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            trop_distance(&pt(&[0.0, 0.0, 0.0]), &pt(&[0.0, 3.0, 1.0])).unwrap(),
            3.0
        );
        let v = pt(&[0.3, -1.0, 2.0]);
        assert_eq!(trop_distance(&v, &v).unwrap(), 0.0);
        assert_eq!(
            trop_distance(&pt(&[0.0, 1.0, 2.0, 4.0]), &pt(&[0.0; 4])).unwrap(),
            4.0
        );
        assert!(matches!(
            trop_distance(&v, &pt(&[0.0, 1.0])),
            Err(TropicalError::DimensionMismatch { left: 3, right: 2 })
        ));
    }

    #[test]
    fn hyperplane_distance_examples() {
        let h0 = TropHyperplane::zero(3);
        assert_eq!(dist_to_hyperplane(&pt(&[1.0, 2.0, 0.0]), &h0).unwrap(), 1.0);
        assert_eq!(dist_to_hyperplane(&pt(&[1.0, 2.0, 2.0]), &h0).unwrap(), 0.0);

        let omega = TropHyperplane::new(vec![0.0, 2.0, 0.0, 4.0, 2.0, 0.0]).unwrap();
        let p1 = pt(&[4.0, 10.0, 20.0, 10.0, 20.0, 20.0]);
        assert_eq!(dist_to_hyperplane(&p1, &omega).unwrap(), 2.0);
    }

    #[test]
    fn sector_examples() {
        let omega = TropHyperplane::new(vec![0.0, 2.0, 0.0, 4.0, 2.0, 0.0]).unwrap();
        let p1 = pt(&[4.0, 10.0, 20.0, 10.0, 20.0, 20.0]);
        assert_eq!(
            sector_membership(&p1, &omega, DEFAULT_TOL).unwrap(),
            SectorSet::new([5])
        );
        let q1 = pt(&[2.0, 20.0, 20.0, 20.0, 20.0, 10.0]);
        assert_eq!(
            sector_membership(&q1, &omega, DEFAULT_TOL).unwrap(),
            SectorSet::new([4])
        );
        let tie = sector_membership(&pt(&[0.0, 0.0]), &TropHyperplane::zero(2), 0.0).unwrap();
        assert_eq!(tie, SectorSet::new([1, 2]));
        assert_eq!(tie.to_string(), "{1,2}");
    }

    #[test]
    fn segment_examples() {
        let v = pt(&[0.0, 0.0, 0.0]);
        let w = pt(&[0.0, 3.0, 1.0]);
        let seg = trop_segment(&v, &w).unwrap();
        assert_eq!(seg, vec![v.clone(), pt(&[0.0, 2.0, 0.0]), w.clone()]);

        assert_eq!(trop_segment(&w, &w).unwrap(), vec![w]);
    }
}

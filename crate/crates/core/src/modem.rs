//! Square M-QAM with per-dimension reflected Gray labels.
//!
//! A complex symbol is the pair of two PAM levels (I, Q). Each real dimension
//! carries `log2(sqrt(M))` bits. The levels are sorted ascending and level
//! index `i` carries the label `i ^ (i >> 1)`, MSB first. Within a frame the
//! bits of each antenna are laid out I first, then Q.

use num_complex::Complex64;

use crate::{Error, Result};

/// Saturation magnitude for LLRs whose counter-hypothesis has no candidate.
pub const LLR_MAX: f64 = 64.0;

/// Distance to a lattice point tolerated by hard demapping.
const LATTICE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    order: usize,
    bits_per_dim: usize,
    scale: f64,
    levels: Vec<f64>,
}

impl Constellation {
    /// Unit-energy square QAM of order 16, 64, 256 or 1024.
    pub fn new(order: usize) -> Result<Self> {
        if !matches!(order, 16 | 64 | 256 | 1024) {
            return Err(Error::UnsupportedOrder(order));
        }
        let bits_per_dim = order.trailing_zeros() as usize / 2;
        let side = 1usize << bits_per_dim;
        let scale = 1.0 / (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        let levels = (0..side)
            .map(|i| (2.0 * i as f64 - (side as f64 - 1.0)) * scale)
            .collect();
        Ok(Self {
            order,
            bits_per_dim,
            scale,
            levels,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Levels per real dimension, `sqrt(M)`.
    pub fn side(&self) -> usize {
        self.levels.len()
    }

    pub fn bits_per_dim(&self) -> usize {
        self.bits_per_dim
    }

    pub fn bits_per_symbol(&self) -> usize {
        2 * self.bits_per_dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// PAM amplitudes, strictly increasing.
    pub fn pam_levels(&self) -> &[f64] {
        &self.levels
    }

    /// Gray label of the level at `index`.
    pub fn gray_label(&self, index: usize) -> usize {
        index ^ (index >> 1)
    }

    /// Level index carrying `label`.
    pub fn gray_index(&self, label: usize) -> usize {
        let mut index = label;
        let mut shift = label >> 1;
        while shift != 0 {
            index ^= shift;
            shift >>= 1;
        }
        index
    }

    /// Lattice index of `value`, or `None` if it is not within tolerance of a level.
    pub fn level_index(&self, value: f64) -> Option<usize> {
        let side = self.side() as f64;
        let pos = ((value / self.scale + side - 1.0) / 2.0).round();
        if !(0.0..side).contains(&pos) {
            return None;
        }
        let idx = pos as usize;
        ((self.levels[idx] - value).abs() <= LATTICE_TOLERANCE).then_some(idx)
    }

    /// Every constellation point, I index major.
    pub fn points(&self) -> Vec<Complex64> {
        self.levels
            .iter()
            .flat_map(|&re| self.levels.iter().map(move |&im| Complex64::new(re, im)))
            .collect()
    }

    fn level_from_bits(&self, bits: &[u8]) -> f64 {
        let label = bits.iter().fold(0usize, |acc, &b| (acc << 1) | usize::from(b & 1));
        self.levels[self.gray_index(label)]
    }

    fn push_bits(&self, index: usize, out: &mut Vec<u8>) {
        let label = self.gray_label(index);
        for shift in (0..self.bits_per_dim).rev() {
            out.push(((label >> shift) & 1) as u8);
        }
    }
}

/// Transmitted bits of one frame, `N_T * log2(M)` long.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitFrame(pub Vec<u8>);

impl BitFrame {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    /// Number of differing positions. Frames must be the same length.
    pub fn hamming_distance(&self, other: &BitFrame) -> usize {
        assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

/// Maps a frame onto one complex symbol per transmit antenna.
pub fn modulate(frame: &BitFrame, c: &Constellation) -> Result<Vec<Complex64>> {
    let per_symbol = c.bits_per_symbol();
    if frame.is_empty() || frame.len() % per_symbol != 0 {
        return Err(Error::FrameLength {
            len: frame.len(),
            expected: per_symbol * (frame.len() / per_symbol).max(1),
        });
    }
    let half = c.bits_per_dim();
    Ok(frame
        .0
        .chunks_exact(per_symbol)
        .map(|bits| Complex64::new(c.level_from_bits(&bits[..half]), c.level_from_bits(&bits[half..])))
        .collect())
}

/// Inverse of [`modulate`] for a real vector stacked as `[Re x; Im x]`.
pub fn hard_demodulate(x_hat: &[f64], c: &Constellation) -> Result<BitFrame> {
    if x_hat.is_empty() || x_hat.len() % 2 != 0 {
        return Err(Error::Dimension(format!(
            "real symbol vector of odd or zero length {}",
            x_hat.len()
        )));
    }
    let n_t = x_hat.len() / 2;
    let mut bits = Vec::with_capacity(n_t * c.bits_per_symbol());
    for antenna in 0..n_t {
        for pos in [antenna, antenna + n_t] {
            let value = x_hat[pos];
            let idx = c
                .level_index(value)
                .ok_or(Error::OffLattice { index: pos, value })?;
            c.push_bits(idx, &mut bits);
        }
    }
    Ok(BitFrame(bits))
}

/// A full-length real symbol vector (natural stacking order) and its metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPath {
    pub symbols: Vec<f64>,
    pub ped: f64,
}

/// Max-log LLRs from a candidate list.
///
/// `LLR_b = (min ped | b = 1  -  min ped | b = 0) / sigma2`, so a positive
/// value favours bit 0. A bit without candidates for one hypothesis
/// saturates at `+-LLR_MAX`, and every value is clipped to that range.
pub fn compute_llrs(candidates: &[ScoredPath], sigma2: f64, c: &Constellation) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(Error::InvalidNoise(sigma2));
    }
    let labelled = candidates
        .iter()
        .map(|cand| hard_demodulate(&cand.symbols, c).map(|bits| (bits, cand.ped)))
        .collect::<Result<Vec<_>>>()?;
    let n_bits = labelled[0].0.len();
    if labelled.iter().any(|(b, _)| b.len() != n_bits) {
        return Err(Error::Dimension("candidates of differing length".into()));
    }

    let mut min0 = vec![f64::INFINITY; n_bits];
    let mut min1 = vec![f64::INFINITY; n_bits];
    for (bits, ped) in &labelled {
        for (i, &b) in bits.bits().iter().enumerate() {
            let slot = if b == 0 { &mut min0[i] } else { &mut min1[i] };
            *slot = slot.min(*ped);
        }
    }
    Ok(min0
        .iter()
        .zip(&min1)
        .map(|(&d0, &d1)| match (d0.is_finite(), d1.is_finite()) {
            (false, _) => -LLR_MAX,
            (_, false) => LLR_MAX,
            _ if d1 == d0 => 0.0,
            _ => ((d1 - d0) / sigma2).clamp(-LLR_MAX, LLR_MAX),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const ORDERS: [usize; 4] = [16, 64, 256, 1024];

    #[test]
    fn rejects_unsupported_orders() {
        for m in [2, 4, 8, 32, 128, 4096] {
            assert!(Constellation::new(m).is_err());
        }
    }

    #[test]
    fn all_zero_bits_map_to_corner() {
        let c = Constellation::new(16).unwrap();
        let s = modulate(&BitFrame(vec![0, 0, 0, 0]), &c).unwrap();
        let scale = 1.0 / 10f64.sqrt();
        assert!((s[0] - Complex64::new(-3.0 * scale, -3.0 * scale)).norm() < 1e-15);
    }

    #[test]
    fn sixteen_qam_is_a_bijection() {
        let c = Constellation::new(16).unwrap();
        let mut points: Vec<Complex64> = (0..16u8)
            .map(|v| {
                let bits = (0..4).rev().map(|s| (v >> s) & 1).collect();
                modulate(&BitFrame(bits), &c).unwrap()[0]
            })
            .collect();
        let mut grid = c.points();
        let key = |z: &Complex64| (z.re, z.im);
        points.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        grid.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
        assert_eq!(points, grid);
    }

    #[test]
    fn unit_average_energy() {
        for m in ORDERS {
            let c = Constellation::new(m).unwrap();
            let pts = c.points();
            assert_eq!(pts.len(), m);
            let mean = pts.iter().map(|z| z.norm_sqr()).sum::<f64>() / m as f64;
            assert!((mean - 1.0).abs() < 1e-12, "M={m}: {mean}");
        }
    }

    #[test]
    fn levels_are_sorted_and_symmetric() {
        for m in ORDERS {
            let c = Constellation::new(m).unwrap();
            let l = c.pam_levels();
            assert!(l.windows(2).all(|w| w[0] < w[1]));
            for (a, b) in l.iter().zip(l.iter().rev()) {
                assert!((a + b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for m in ORDERS {
            let c = Constellation::new(m).unwrap();
            for i in 1..c.side() {
                let diff = c.gray_label(i) ^ c.gray_label(i - 1);
                assert_eq!(diff.count_ones(), 1);
                assert_eq!(c.gray_index(c.gray_label(i)), i);
            }
        }
    }

    #[test]
    fn neighbour_flip_changes_one_bit() {
        let c = Constellation::new(256).unwrap();
        let l = c.pam_levels();
        let base = vec![l[3], l[7], l[10], l[0]];
        let before = hard_demodulate(&base, &c).unwrap();
        let mut moved = base.clone();
        moved[2] = l[11];
        let after = hard_demodulate(&moved, &c).unwrap();
        assert_eq!(before.hamming_distance(&after), 1);
    }

    #[test]
    fn single_antenna_identity() {
        let c = Constellation::new(16).unwrap();
        let s = 1.0 / 10f64.sqrt();
        assert_eq!(hard_demodulate(&[-3.0 * s, -3.0 * s], &c).unwrap(), BitFrame(vec![0; 4]));
    }

    #[test]
    fn demodulate_errors() {
        let c = Constellation::new(16).unwrap();
        assert!(matches!(hard_demodulate(&[0.0, 0.0], &c), Err(Error::OffLattice { .. })));
        assert!(hard_demodulate(&[0.1], &c).is_err());
        assert!(matches!(modulate(&BitFrame(vec![0; 5]), &c), Err(Error::FrameLength { .. })));
        assert!(modulate(&BitFrame(vec![]), &c).is_err());
    }

    fn to_real(symbols: &[Complex64]) -> Vec<f64> {
        symbols.iter().map(|z| z.re).chain(symbols.iter().map(|z| z.im)).collect()
    }

    fn frames() -> impl Strategy<Value = (usize, Vec<u8>)> {
        (0usize..4, 1usize..6).prop_flat_map(|(oi, n_t)| {
            let order = ORDERS[oi];
            let len = n_t * order.trailing_zeros() as usize;
            (Just(order), prop::collection::vec(0u8..2, len))
        })
    }

    proptest! {
        #[test]
        fn modulation_round_trip((order, bits) in frames()) {
            let c = Constellation::new(order).unwrap();
            let frame = BitFrame(bits);
            let symbols = modulate(&frame, &c).unwrap();
            prop_assert_eq!(hard_demodulate(&to_real(&symbols), &c).unwrap(), frame);
        }
    }

    fn path(c: &Constellation, label_bits: &[u8], ped: f64) -> ScoredPath {
        let s = modulate(&BitFrame(label_bits.to_vec()), c).unwrap();
        ScoredPath { symbols: to_real(&s), ped }
    }

    #[test]
    fn llr_single_candidate_saturates() {
        let c = Constellation::new(16).unwrap();
        let llr = compute_llrs(&[path(&c, &[1, 0, 0, 0], 0.0)], 1.0, &c).unwrap();
        assert_eq!(llr, vec![-LLR_MAX, LLR_MAX, LLR_MAX, LLR_MAX]);
    }

    #[test]
    fn llr_two_candidate_orientation() {
        let c = Constellation::new(16).unwrap();
        let cands = [path(&c, &[0, 0, 0, 0], 2.0), path(&c, &[1, 0, 0, 0], 5.0)];
        let llr = compute_llrs(&cands, 1.0, &c).unwrap();
        assert_eq!(llr[0], 3.0);
    }

    #[test]
    fn llr_is_scale_invariant() {
        let c = Constellation::new(16).unwrap();
        let cands = [
            path(&c, &[0, 1, 1, 0], 0.7),
            path(&c, &[1, 1, 0, 0], 1.9),
            path(&c, &[0, 0, 1, 1], 2.3),
        ];
        let a = compute_llrs(&cands, 0.5, &c).unwrap();
        let scaled: Vec<ScoredPath> = cands
            .iter()
            .map(|p| ScoredPath { symbols: p.symbols.clone(), ped: p.ped * 3.0 })
            .collect();
        let b = compute_llrs(&scaled, 1.5, &c).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn llr_sign_matches_best_candidate() {
        let c = Constellation::new(64).unwrap();
        let cands = [
            path(&c, &[0, 1, 1, 0, 1, 0, 1, 1, 0, 0, 0, 1], 0.2),
            path(&c, &[1, 0, 0, 1, 0, 1, 0, 0, 1, 1, 1, 0], 0.9),
        ];
        let llr = compute_llrs(&cands, 0.1, &c).unwrap();
        let best = hard_demodulate(&cands[0].symbols, &c).unwrap();
        for (l, b) in llr.iter().zip(best.bits()) {
            assert_eq!(*l > 0.0, *b == 0);
        }
    }

    #[test]
    fn llr_errors_and_zero_noise() {
        let c = Constellation::new(16).unwrap();
        assert!(matches!(compute_llrs(&[], 1.0, &c), Err(Error::EmptyCandidates)));
        let p = path(&c, &[0, 0, 0, 0], 1.0);
        assert!(matches!(compute_llrs(&[p.clone()], -1.0, &c), Err(Error::InvalidNoise(_))));
        let q = path(&c, &[1, 0, 0, 0], 2.0);
        assert_eq!(compute_llrs(&[p, q], 0.0, &c).unwrap()[0], LLR_MAX);
    }
}

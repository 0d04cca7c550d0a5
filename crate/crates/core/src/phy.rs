//! Constellations and the 802.11ac single-stream MCS table.

use serde::{Deserialize, Serialize};

use crate::dsp::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Qam16,
    Qam64,
    Qam256,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
            Modulation::Qam256 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "BPSK",
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "16-QAM",
            Modulation::Qam64 => "64-QAM",
            Modulation::Qam256 => "256-QAM",
        }
    }

    /// Bits carried on each of I and Q (BPSK uses I only).
    fn axis_bits(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            m => m.bits_per_symbol() / 2,
        }
    }

    /// Amplitude scale giving unit average symbol energy.
    fn scale(self) -> f64 {
        match self {
            Modulation::Bpsk => 1.0,
            m => {
                let order = (1usize << m.bits_per_symbol()) as f64;
                (2.0 * (order - 1.0) / 3.0).sqrt()
            }
        }
    }

    /// Maps `bits_per_symbol` bits (first bit most significant on I) to a
    /// Gray-coded, unit-energy constellation point.
    pub fn map(self, bits: &[u8]) -> C64 {
        debug_assert_eq!(bits.len(), self.bits_per_symbol());
        let b = self.axis_bits();
        let s = self.scale();
        match self {
            Modulation::Bpsk => C64::new(if bits[0] == 1 { 1.0 } else { -1.0 }, 0.0),
            _ => C64::new(pam_level(&bits[..b]) / s, pam_level(&bits[b..]) / s),
        }
    }

    /// Nearest-point hard decision; appends `bits_per_symbol` bits.
    pub fn demap(self, y: C64, out: &mut Vec<u8>) {
        let b = self.axis_bits();
        let s = self.scale();
        match self {
            Modulation::Bpsk => out.push(u8::from(y.re >= 0.0)),
            _ => {
                pam_bits(y.re * s, b, out);
                pam_bits(y.im * s, b, out);
            }
        }
    }

    /// Max-log LLRs (positive favours bit 0) for one received symbol under
    /// complex noise variance `noise_var`.
    pub fn llrs(self, y: C64, noise_var: f64, out: &mut Vec<f64>) {
        let b = self.axis_bits();
        let s = self.scale();
        // per-axis noise variance is half the complex variance
        let axis_var = 0.5 * noise_var;
        match self {
            Modulation::Bpsk => out.push(-2.0 * y.re / axis_var),
            _ => {
                pam_llrs(y.re, b, s, axis_var, out);
                pam_llrs(y.im, b, s, axis_var, out);
            }
        }
    }

    /// Every constellation point, indexed by the bit pattern's integer value.
    pub fn points(self) -> Vec<C64> {
        let n = self.bits_per_symbol();
        (0..1usize << n)
            .map(|v| {
                let bits: Vec<u8> = (0..n).rev().map(|i| ((v >> i) & 1) as u8).collect();
                self.map(&bits)
            })
            .collect()
    }
}

fn gray_to_binary(mut g: usize) -> usize {
    let mut b = g;
    while g > 0 {
        g >>= 1;
        b ^= g;
    }
    b
}

/// Unscaled PAM amplitude `2i - (L - 1)` for Gray-coded bits.
fn pam_level(bits: &[u8]) -> f64 {
    let g = bits.iter().fold(0usize, |acc, &v| (acc << 1) | v as usize);
    let levels = 1usize << bits.len();
    2.0 * gray_to_binary(g) as f64 - (levels as f64 - 1.0)
}

fn pam_bits(v: f64, b: usize, out: &mut Vec<u8>) {
    let levels = 1usize << b;
    let i = ((v + (levels as f64 - 1.0)) / 2.0).round().clamp(0.0, (levels - 1) as f64) as usize;
    let g = i ^ (i >> 1);
    for k in (0..b).rev() {
        out.push(((g >> k) & 1) as u8);
    }
}

fn pam_llrs(v: f64, b: usize, scale: f64, axis_var: f64, out: &mut Vec<f64>) {
    let levels = 1usize << b;
    for k in (0..b).rev() {
        let mut d0 = f64::INFINITY;
        let mut d1 = f64::INFINITY;
        for i in 0..levels {
            let g = i ^ (i >> 1);
            let a = (2.0 * i as f64 - (levels as f64 - 1.0)) / scale;
            let d = (v - a) * (v - a);
            if (g >> k) & 1 == 0 {
                d0 = d0.min(d);
            } else {
                d1 = d1.min(d);
            }
        }
        out.push((d1 - d0) / (2.0 * axis_var));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeRate {
    Half,
    TwoThirds,
    ThreeQuarters,
    FiveSixths,
}

impl CodeRate {
    pub fn fraction(self) -> (usize, usize) {
        match self {
            CodeRate::Half => (1, 2),
            CodeRate::TwoThirds => (2, 3),
            CodeRate::ThreeQuarters => (3, 4),
            CodeRate::FiveSixths => (5, 6),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CodeRate::Half => "1/2",
            CodeRate::TwoThirds => "2/3",
            CodeRate::ThreeQuarters => "3/4",
            CodeRate::FiveSixths => "5/6",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardInterval {
    #[default]
    Long800,
    Short400,
}

impl GuardInterval {
    /// Cyclic-prefix length in samples at the 40 MHz simulation rate.
    pub fn cp_len(self) -> usize {
        match self {
            GuardInterval::Long800 => 32,
            GuardInterval::Short400 => 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McsEntry {
    pub mcs_id: u8,
    pub modulation: Modulation,
    pub coding_rate: CodeRate,
    /// Mb/s with 800 ns guard interval.
    pub rate_800ns: f64,
    /// Mb/s with 400 ns guard interval.
    pub rate_400ns: f64,
}

impl McsEntry {
    pub fn rate(&self, gi: GuardInterval) -> f64 {
        match gi {
            GuardInterval::Long800 => self.rate_800ns,
            GuardInterval::Short400 => self.rate_400ns,
        }
    }
}

const fn entry(mcs_id: u8, modulation: Modulation, coding_rate: CodeRate, r800: f64, r400: f64) -> McsEntry {
    McsEntry {
        mcs_id,
        modulation,
        coding_rate,
        rate_800ns: r800,
        rate_400ns: r400,
    }
}

/// 802.11ac, 20 MHz, one spatial stream.
pub const MCS_TABLE: [McsEntry; 9] = [
    entry(0, Modulation::Bpsk, CodeRate::Half, 6.5, 7.2),
    entry(1, Modulation::Qpsk, CodeRate::Half, 13.0, 14.4),
    entry(2, Modulation::Qpsk, CodeRate::ThreeQuarters, 19.5, 21.7),
    entry(3, Modulation::Qam16, CodeRate::Half, 26.0, 28.9),
    entry(4, Modulation::Qam16, CodeRate::ThreeQuarters, 39.0, 43.3),
    entry(5, Modulation::Qam64, CodeRate::TwoThirds, 52.0, 57.8),
    entry(6, Modulation::Qam64, CodeRate::ThreeQuarters, 58.5, 65.0),
    entry(7, Modulation::Qam64, CodeRate::FiveSixths, 65.0, 72.2),
    entry(8, Modulation::Qam256, CodeRate::ThreeQuarters, 78.0, 86.7),
];

pub fn mcs(mcs_id: u8) -> Option<&'static McsEntry> {
    MCS_TABLE.get(mcs_id as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [Modulation; 5] = [
        Modulation::Bpsk,
        Modulation::Qpsk,
        Modulation::Qam16,
        Modulation::Qam64,
        Modulation::Qam256,
    ];

    #[test]
    fn unit_average_energy() {
        for m in ALL {
            let pts = m.points();
            let e = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / pts.len() as f64;
            assert!((e - 1.0).abs() < 1e-12, "{m:?} energy {e}");
        }
    }

    #[test]
    fn map_demap_round_trip() {
        for m in ALL {
            let n = m.bits_per_symbol();
            for v in 0..1usize << n {
                let bits: Vec<u8> = (0..n).rev().map(|i| ((v >> i) & 1) as u8).collect();
                let mut out = Vec::new();
                m.demap(m.map(&bits), &mut out);
                assert_eq!(out, bits, "{m:?}");
            }
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for m in [Modulation::Qam16, Modulation::Qam64, Modulation::Qam256] {
            let pts = m.points();
            let step = 2.0 / m.scale();
            for (a, pa) in pts.iter().enumerate() {
                for (b, pb) in pts.iter().enumerate() {
                    if ((pa - pb).norm() - step).abs() < 1e-9 {
                        assert_eq!((a ^ b).count_ones(), 1);
                    }
                }
            }
        }
    }

    #[test]
    fn bpsk_points_are_plus_minus_one() {
        let pts = Modulation::Bpsk.points();
        assert_eq!(pts, vec![C64::new(-1.0, 0.0), C64::new(1.0, 0.0)]);
    }

    #[test]
    fn llr_signs_match_hard_decisions() {
        for m in ALL {
            for (v, p) in m.points().into_iter().enumerate() {
                let mut l = Vec::new();
                m.llrs(p, 0.1, &mut l);
                let n = m.bits_per_symbol();
                for (i, llr) in l.iter().enumerate() {
                    let bit = (v >> (n - 1 - i)) & 1;
                    assert_eq!(*llr < 0.0, bit == 1);
                }
            }
        }
    }

    #[test]
    fn table_rates_increase_and_short_gi_is_faster() {
        for w in MCS_TABLE.windows(2) {
            assert!(w[1].rate_800ns > w[0].rate_800ns);
            assert!(w[1].rate_400ns > w[0].rate_400ns);
        }
        for e in &MCS_TABLE {
            assert!(e.rate_400ns >= e.rate_800ns);
        }
        assert_eq!(mcs(8).unwrap().modulation, Modulation::Qam256);
        assert_eq!(mcs(0).unwrap().rate(GuardInterval::Long800), 6.5);
    }
}

//! 802.11 binary convolutional code (K = 7, generators 133 and 171 octal)
//! with the standard puncturing patterns and a soft-decision Viterbi
//! decoder. Used only by the MCS threshold oracle.

use crate::phy::CodeRate;

const K: usize = 7;
const STATES: usize = 1 << (K - 1);
const G0: usize = 0o133;
const G1: usize = 0o171;
/// Zero bits appended to return the encoder to state 0.
pub const TAIL_BITS: usize = K - 1;

/// Keep-masks for the A and B outputs over one puncturing period.
fn pattern(rate: CodeRate) -> (&'static [u8], &'static [u8]) {
    match rate {
        CodeRate::Half => (&[1], &[1]),
        CodeRate::TwoThirds => (&[1, 1], &[1, 0]),
        CodeRate::ThreeQuarters => (&[1, 1, 0], &[1, 0, 1]),
        CodeRate::FiveSixths => (&[1, 1, 0, 1, 0], &[1, 0, 1, 0, 1]),
    }
}

fn parity(v: usize) -> u8 {
    (v.count_ones() & 1) as u8
}

/// Register layout: bit 6 is the current input, bits 5..0 the previous
/// six inputs with the most recent in bit 5.
fn outputs(state: usize, bit: usize) -> (u8, u8) {
    let reg = (bit << (K - 1)) | state;
    (parity(reg & G0), parity(reg & G1))
}

fn next_state(state: usize, bit: usize) -> usize {
    (bit << (K - 2)) | (state >> 1)
}

/// Encodes `info` plus the zero tail and punctures to `rate`.
pub fn encode(info: &[u8], rate: CodeRate) -> Vec<u8> {
    let (pa, pb) = pattern(rate);
    let mut out = Vec::with_capacity(2 * (info.len() + TAIL_BITS));
    let mut state = 0;
    for (i, &b) in info.iter().chain(std::iter::repeat_n(&0u8, TAIL_BITS)).enumerate() {
        let (a, c) = outputs(state, b as usize);
        let p = i % pa.len();
        if pa[p] == 1 {
            out.push(a);
        }
        if pb[p] == 1 {
            out.push(c);
        }
        state = next_state(state, b as usize);
    }
    out
}

/// Coded length for `n_info` information bits at `rate`.
pub fn coded_len(n_info: usize, rate: CodeRate) -> usize {
    let (pa, pb) = pattern(rate);
    (0..n_info + TAIL_BITS)
        .map(|i| usize::from(pa[i % pa.len()] + pb[i % pb.len()]))
        .sum()
}

/// Soft Viterbi decoding of a terminated, punctured codeword. LLRs are
/// positive for bit 0; punctured positions count as erasures.
pub fn decode(llrs: &[f64], n_info: usize, rate: CodeRate) -> Vec<u8> {
    let (pa, pb) = pattern(rate);
    let steps = n_info + TAIL_BITS;
    let mut metric = [f64::NEG_INFINITY; STATES];
    metric[0] = 0.0;
    let mut next = [0.0; STATES];
    // survivor input bit per (step, state), packed 64 states per word
    let mut decisions: Vec<u64> = Vec::with_capacity(steps);
    let table: Vec<[(u8, u8); 2]> = (0..STATES).map(|s| [outputs(s, 0), outputs(s, 1)]).collect();
    let mut pos = 0;
    for i in 0..steps {
        let p = i % pa.len();
        let la = if pa[p] == 1 {
            pos += 1;
            llrs[pos - 1]
        } else {
            0.0
        };
        let lb = if pb[p] == 1 {
            pos += 1;
            llrs[pos - 1]
        } else {
            0.0
        };
        let branch = |(a, b): (u8, u8)| {
            (if a == 0 { la } else { -la }) + (if b == 0 { lb } else { -lb })
        };
        let mut word = 0u64;
        for (ns, slot) in next.iter_mut().enumerate() {
            let bit = ns >> (K - 2);
            let base = (ns & (STATES / 2 - 1)) << 1;
            let (s0, s1) = (base, base | 1);
            let m0 = metric[s0] + branch(table[s0][bit]);
            let m1 = metric[s1] + branch(table[s1][bit]);
            if m1 > m0 {
                *slot = m1;
                word |= 1 << ns;
            } else {
                *slot = m0;
            }
        }
        decisions.push(word);
        std::mem::swap(&mut metric, &mut next);
    }
    // trace back from the terminated state
    let mut bits = vec![0u8; steps];
    let mut state = 0;
    for i in (0..steps).rev() {
        bits[i] = (state >> (K - 2)) as u8;
        let low = (decisions[i] >> state) & 1;
        state = ((state & (STATES / 2 - 1)) << 1) | low as usize;
    }
    bits.truncate(n_info);
    bits
}

use crate::error::{Error, Result};

use super::conv::ConvCode;
use super::puncture::depuncture;

/// Soft-input Viterbi decoder for a zero-terminated, punctured codeword.
///
/// `llrs` holds one soft value per transmitted (kept) bit. The path metric is
/// the correlation `sum((1 - 2c) * llr)`, maximized over paths starting and
/// ending in the zero state. When the two paths entering a state have equal
/// metrics the one whose discarded register bit is 0 survives, so an
/// all-erasure input decodes to all zeros.
pub fn viterbi_decode(llrs: &[f64], code: &ConvCode) -> Result<Vec<u8>> {
    let mother = depuncture(llrs, code.pattern())?;
    let n_out = code.generators().len();
    let steps = mother.len() / n_out;
    if steps < code.tail_len() {
        return Err(Error::dim(format!(
            "{steps} trellis steps is shorter than the {}-step tail",
            code.tail_len()
        )));
    }
    let n_info = steps - code.tail_len();
    let n_states = code.n_states();
    let k = code.constraint_length();

    // Signs (+1 for coded 0, -1 for coded 1) of each output for the register
    // value reached when `input` enters `state`.
    let mut signs = vec![0.0f64; 2 * n_states * n_out];
    for state in 0..n_states {
        for input in 0..2u32 {
            let register = (input << (k - 1)) | state as u32;
            let base = (register as usize) * n_out;
            for (s, c) in code.outputs(register).enumerate() {
                signs[base + s] = 1.0 - 2.0 * c as f64;
            }
        }
    }

    let neg = f64::NEG_INFINITY;
    let mut metric = vec![neg; n_states];
    metric[0] = 0.0;
    let mut next = vec![neg; n_states];
    // decisions[t * n_states + s] = discarded bit of the surviving predecessor
    let mut decisions = vec![0u8; steps * n_states];
    let half = n_states / 2;

    for t in 0..steps {
        let soft = &mother[t * n_out..(t + 1) * n_out];
        let in_tail = t >= n_info;
        for ns in 0..n_states {
            let input = (ns >= half) as usize;
            if in_tail && input == 1 {
                next[ns] = neg;
                continue;
            }
            let upper = (ns << 1) & (n_states - 1);
            let mut best = neg;
            let mut pick = 0u8;
            for dropped in 0..2usize {
                let prev = upper | dropped;
                if metric[prev] == neg {
                    continue;
                }
                let register = (input << (k - 1)) | prev;
                let sg = &signs[register * n_out..(register + 1) * n_out];
                let bm: f64 = sg.iter().zip(soft).map(|(a, b)| a * b).sum();
                let cand = metric[prev] + bm;
                if cand > best {
                    best = cand;
                    pick = dropped as u8;
                }
            }
            next[ns] = best;
            decisions[t * n_states + ns] = pick;
        }
        std::mem::swap(&mut metric, &mut next);
    }

    let mut bits = vec![0u8; steps];
    let mut state = 0usize;
    for t in (0..steps).rev() {
        bits[t] = (state >= half) as u8;
        let dropped = decisions[t * n_states + state] as usize;
        state = ((state << 1) & (n_states - 1)) | dropped;
    }
    bits.truncate(n_info);
    Ok(bits)
}

//! Factorized per-channel entropy model over integer latents.
//!
//! Each channel has a logistic density with learned location and scale.
//! Training uses the density convolved with a unit box (the noisy-latent
//! likelihood); coding uses integer frequency tables over `[-SUPPORT, SUPPORT]`
//! plus one escape symbol for values outside the support.

use super::range_coder::{RangeDecoder, RangeEncoder};
use crate::error::{Error, Result};

pub const SUPPORT: i32 = 15;
/// In-support symbols followed by the escape symbol.
pub const SYMBOLS: usize = 2 * SUPPORT as usize + 2;
pub const ESCAPE: usize = SYMBOLS - 1;
pub const TABLE_TOTAL: u32 = 1 << 16;
/// Largest latent magnitude the escape code can carry.
pub const MAX_LATENT: i32 = 1 << 20;
const ESCAPE_LEN_BITS: u32 = 5;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Noisy-latent likelihood term for one value and its gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTerm {
    pub bits: f64,
    pub d_value: f64,
    pub d_loc: f64,
    pub d_log_scale: f64,
}

/// `-log2 P(v - 1/2 < Y < v + 1/2)` for `Y ~ Logistic(loc, exp(log_scale))`.
pub fn rate_term(value: f64, loc: f64, log_scale: f64) -> RateTerm {
    let s = log_scale.exp();
    let mut zu = (value + 0.5 - loc) / s;
    let mut zl = (value - 0.5 - loc) / s;
    // evaluate in the left tail where the sigmoid is accurate
    let flip = value > loc;
    if flip {
        (zu, zl) = (-zl, -zu);
    }
    let (su, sl) = (sigmoid(zu), sigmoid(zl));
    let p = (su - sl).max(1e-12);
    let (du, dl) = (su * (1.0 - su), sl * (1.0 - sl));
    // dp/dz for the (possibly reflected) upper/lower arguments
    let dbits_dp = -1.0 / (p * std::f64::consts::LN_2);
    // d(zu_orig)/d* : value 1/s, loc -1/s, log_scale -z
    let (dp_dzu_orig, dp_dzl_orig, zu_o, zl_o) = if flip {
        // p = sigma(-zl_o) - sigma(-zu_o)
        (dl, -du, -zl, -zu)
    } else {
        (du, -dl, zu, zl)
    };
    let dp_dvalue = (dp_dzu_orig + dp_dzl_orig) / s;
    let dp_dloc = -dp_dvalue;
    let dp_dlog = -(dp_dzu_orig * zu_o + dp_dzl_orig * zl_o);
    RateTerm {
        bits: -p.log2(),
        d_value: dbits_dp * dp_dvalue,
        d_loc: dbits_dp * dp_dloc,
        d_log_scale: dbits_dp * dp_dlog,
    }
}

/// Integer frequency table for one latent channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelTable {
    freqs: Vec<u32>,
    cum: Vec<u32>,
}

impl ChannelTable {
    pub fn from_freqs(freqs: Vec<u32>) -> Result<Self> {
        if freqs.len() != SYMBOLS {
            return Err(Error::Format(format!(
                "table has {} entries, expected {SYMBOLS}",
                freqs.len()
            )));
        }
        if freqs.contains(&0) {
            return Err(Error::Format("zero-frequency symbol".into()));
        }
        let mut cum = Vec::with_capacity(SYMBOLS + 1);
        cum.push(0u32);
        for &f in &freqs {
            cum.push(cum.last().unwrap() + f);
        }
        if *cum.last().unwrap() != TABLE_TOTAL {
            return Err(Error::Format(format!(
                "table sums to {}, expected {TABLE_TOTAL}",
                cum.last().unwrap()
            )));
        }
        Ok(Self { freqs, cum })
    }

    /// Discretizes a logistic density; every symbol keeps frequency ≥ 1.
    pub fn from_logistic(loc: f64, log_scale: f64) -> Self {
        let s = log_scale.exp();
        let cdf = |x: f64| sigmoid((x - loc) / s);
        let mut probs = Vec::with_capacity(SYMBOLS);
        for v in -SUPPORT..=SUPPORT {
            let t = rate_term(v as f64, loc, log_scale);
            probs.push(2f64.powf(-t.bits));
        }
        let tail = cdf(-SUPPORT as f64 - 0.5) + (1.0 - cdf(SUPPORT as f64 + 0.5));
        probs.push(tail);
        let mass: f64 = probs.iter().sum();
        let spare = (TABLE_TOTAL - SYMBOLS as u32) as f64;
        let mut freqs: Vec<u32> = probs
            .iter()
            .map(|p| 1 + (p / mass * spare).floor() as u32)
            .collect();
        let used: u32 = freqs.iter().sum();
        let top = (0..SYMBOLS)
            .max_by(|&a, &b| probs[a].total_cmp(&probs[b]).then(b.cmp(&a)))
            .unwrap();
        freqs[top] += TABLE_TOTAL - used;
        Self::from_freqs(freqs).expect("discretized table is valid")
    }

    pub fn freqs(&self) -> &[u32] {
        &self.freqs
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.freqs
            .iter()
            .map(|&f| f as f64 / TABLE_TOTAL as f64)
            .collect()
    }

    fn symbol_bits(&self, sym: usize) -> f64 {
        -(self.freqs[sym] as f64 / TABLE_TOTAL as f64).log2()
    }

    /// Ideal code length of `value` including escape overhead.
    pub fn value_bits(&self, value: i32) -> f64 {
        if (-SUPPORT..=SUPPORT).contains(&value) {
            self.symbol_bits((value + SUPPORT) as usize)
        } else {
            self.symbol_bits(ESCAPE) + escape_payload_bits(value) as f64
        }
    }

    pub fn encode(&self, enc: &mut RangeEncoder, value: i32) {
        let value = value.clamp(-MAX_LATENT, MAX_LATENT);
        if (-SUPPORT..=SUPPORT).contains(&value) {
            let s = (value + SUPPORT) as usize;
            enc.encode(self.cum[s], self.freqs[s], TABLE_TOTAL);
            return;
        }
        enc.encode(self.cum[ESCAPE], self.freqs[ESCAPE], TABLE_TOTAL);
        let excess = value.unsigned_abs() - SUPPORT as u32; // >= 1
        let n = 31 - excess.leading_zeros();
        enc.encode_bits((value < 0) as u32, 1);
        enc.encode_bits(n, ESCAPE_LEN_BITS);
        enc.encode_bits(excess & ((1 << n) - 1), n);
    }

    pub fn decode(&self, dec: &mut RangeDecoder<'_>) -> Result<i32> {
        let t = dec.target(TABLE_TOTAL);
        let s = self.cum.partition_point(|&c| c <= t) - 1;
        dec.consume(self.cum[s], self.freqs[s]);
        if s != ESCAPE {
            return Ok(s as i32 - SUPPORT);
        }
        let negative = dec.decode_bits(1) == 1;
        let n = dec.decode_bits(ESCAPE_LEN_BITS);
        if n > 21 {
            return Err(Error::Decode(format!("escape length {n} out of range")));
        }
        let excess = (1u32 << n) | dec.decode_bits(n);
        let mag = excess as i64 + SUPPORT as i64;
        if mag > MAX_LATENT as i64 {
            return Err(Error::Decode(format!("escaped latent {mag} out of range")));
        }
        Ok(if negative { -(mag as i32) } else { mag as i32 })
    }
}

fn escape_payload_bits(value: i32) -> u32 {
    let value = value.clamp(-MAX_LATENT, MAX_LATENT);
    let excess = value.unsigned_abs() - SUPPORT as u32;
    1 + ESCAPE_LEN_BITS + (31 - excess.leading_zeros())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_are_normalized_and_positive() {
        for &(loc, ls) in &[
            (0.0, 0.0),
            (0.3, -3.0),
            (-2.0, 2.5),
            (14.0, -6.0),
            (40.0, 1.0),
        ] {
            let t = ChannelTable::from_logistic(loc, ls);
            let p = t.probabilities();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            assert!(p.iter().all(|&v| v > 0.0));
        }
    }

    #[test]
    fn rate_gradients_match_finite_differences() {
        for &(v, loc, ls) in &[
            (0.3, 0.1, 0.2),
            (-2.7, 0.5, -1.0),
            (6.0, -0.4, 0.7),
            (0.0, 0.0, -4.0),
        ] {
            let t = rate_term(v, loc, ls);
            let h = 1e-6;
            let fd_v =
                (rate_term(v + h, loc, ls).bits - rate_term(v - h, loc, ls).bits) / (2.0 * h);
            let fd_l =
                (rate_term(v, loc + h, ls).bits - rate_term(v, loc - h, ls).bits) / (2.0 * h);
            let fd_s =
                (rate_term(v, loc, ls + h).bits - rate_term(v, loc, ls - h).bits) / (2.0 * h);
            assert!(
                (fd_v - t.d_value).abs() < 1e-5 * (1.0 + fd_v.abs()),
                "{fd_v} {}",
                t.d_value
            );
            assert!((fd_l - t.d_loc).abs() < 1e-5 * (1.0 + fd_l.abs()));
            assert!((fd_s - t.d_log_scale).abs() < 1e-5 * (1.0 + fd_s.abs()));
            assert!(t.bits >= 0.0);
        }
    }

    #[test]
    fn escape_values_roundtrip() {
        let table = ChannelTable::from_logistic(0.0, -1.0);
        let values = [
            0,
            1,
            -1,
            15,
            -15,
            16,
            -16,
            17,
            1000,
            -77_777,
            MAX_LATENT,
            -MAX_LATENT,
        ];
        let mut enc = RangeEncoder::new();
        for &v in &values {
            table.encode(&mut enc, v);
        }
        let bytes = enc.finish();
        let mut dec = RangeDecoder::new(&bytes);
        for &v in &values {
            assert_eq!(table.decode(&mut dec).unwrap(), v);
        }
    }

    #[test]
    fn rejects_malformed_tables() {
        assert!(ChannelTable::from_freqs(vec![1; 3]).is_err());
        let mut f = vec![2048u32; SYMBOLS];
        f[0] = 0;
        assert!(ChannelTable::from_freqs(f).is_err());
    }
}

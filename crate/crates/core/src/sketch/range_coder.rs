//! Carry-propagating byte-oriented range coder over frequency tables.
//!
//! The encoder ends on the value inside the final interval with the most
//! trailing zero bytes and drops those bytes; the decoder reads zeros past
//! the end of its input.

const TOP: u32 = 1 << 24;

#[derive(Debug)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    cache_size: u64,
    first: bool,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            cache: 0,
            cache_size: 1,
            first: true,
            out: Vec::new(),
        }
    }

    /// Codes the sub-interval `[start, start + freq)` of `[0, total)`.
    ///
    /// `total` must not exceed 2^16 and `freq` must be positive.
    pub fn encode(&mut self, start: u32, freq: u32, total: u32) {
        debug_assert!(freq > 0 && start + freq <= total && total <= 1 << 16);
        let r = self.range / total;
        self.low += start as u64 * r as u64;
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    /// Codes `count` raw bits of `value`, MSB first, at one bit each.
    pub fn encode_bits(&mut self, value: u32, count: u32) {
        for b in (0..count).rev() {
            self.encode((value >> b) & 1, 1, 2);
        }
    }

    fn shift_low(&mut self) {
        if self.low < 0xFF00_0000 || self.low >= 1 << 32 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                if self.first {
                    // the leading byte of the stream is always zero
                    self.first = false;
                } else {
                    self.out.push(byte.wrapping_add(carry));
                }
                byte = 0xFF;
                self.cache_size -= 1;
                if self.cache_size == 0 {
                    break;
                }
            }
            self.cache = ((self.low >> 24) & 0xFF) as u8;
        }
        self.cache_size += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    pub fn finish(mut self) -> Vec<u8> {
        // pick the value in [low, low + range) with the most trailing zeros
        let hi = self.low + self.range as u64 - 1;
        for bits in (0..=32).rev() {
            let mask = (1u64 << bits) - 1;
            let v = hi & !mask;
            if v >= self.low {
                self.low = v;
                break;
            }
        }
        for _ in 0..5 {
            self.shift_low();
        }
        while self.out.last() == Some(&0) {
            self.out.pop();
        }
        self.out
    }
}

#[derive(Debug)]
pub struct RangeDecoder<'a> {
    input: &'a [u8],
    pos: usize,
    code: u32,
    range: u32,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(input: &'a [u8]) -> Self {
        let mut d = Self {
            input,
            pos: 0,
            code: 0,
            range: u32::MAX,
        };
        for _ in 0..4 {
            d.code = (d.code << 8) | d.next_byte() as u32;
        }
        d
    }

    fn next_byte(&mut self) -> u8 {
        let b = self.input.get(self.pos).copied().unwrap_or(0);
        self.pos += 1;
        b
    }

    /// Bytes consumed beyond the end of the input.
    pub fn overrun(&self) -> usize {
        self.pos.saturating_sub(self.input.len())
    }

    /// Returns a cumulative count in `[0, total)`; follow with [`Self::consume`].
    pub fn target(&mut self, total: u32) -> u32 {
        self.range /= total;
        (self.code / self.range).min(total - 1)
    }

    pub fn consume(&mut self, start: u32, freq: u32) {
        self.code = self.code.wrapping_sub(start * self.range);
        self.range *= freq;
        while self.range < TOP {
            self.code = (self.code << 8) | self.next_byte() as u32;
            self.range <<= 8;
        }
    }

    pub fn decode_bits(&mut self, count: u32) -> u32 {
        let mut v = 0;
        for _ in 0..count {
            let bit = self.target(2);
            self.consume(bit, 1);
            v = (v << 1) | bit;
        }
        v
    }
}

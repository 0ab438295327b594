//! Bit-string helpers: word packing and hex encoding.

/// Packs bits LSB-first into 64-bit words, zero padded.
pub fn pack_words(bits: &[bool]) -> Vec<u64> {
    let mut words = vec![0u64; bits.len().div_ceil(64)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    words
}

/// Lowercase hex, eight bits per byte, most significant bit first; the
/// last byte is zero padded.
pub fn to_hex(bits: &[bool]) -> String {
    const DIGITS: &[u8; 16] = b"0123456789abcdef";
    let mut out = String::with_capacity(bits.len().div_ceil(4));
    for chunk in bits.chunks(8) {
        let mut byte = 0u8;
        for (j, &b) in chunk.iter().enumerate() {
            if b {
                byte |= 0x80 >> j;
            }
        }
        out.push(DIGITS[(byte >> 4) as usize] as char);
        out.push(DIGITS[(byte & 0xf) as usize] as char);
    }
    out
}

/// Inverse of [`to_hex`] for a known bit length.
pub fn from_hex(hex: &str, n_bits: usize) -> Option<Vec<bool>> {
    let bytes: Vec<u8> = (0..hex.len())
        .step_by(2)
        .map(|i| hex.get(i..i + 2).and_then(|s| u8::from_str_radix(s, 16).ok()))
        .collect::<Option<_>>()?;
    if bytes.len() * 8 < n_bits {
        return None;
    }
    Some((0..n_bits).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect())
}

pub fn hamming_distance(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

//! LSB-first bit packing: coordinate `i` lives in byte `i / 8`, bit `i % 8`.

pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

pub fn unpack_bits(bytes: &[u8], n: usize) -> Vec<bool> {
    (0..n).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect()
}

/// Packs 2-bit symbols, four per byte, lowest symbol in the low bits.
pub fn pack_2bit(symbols: &[u8]) -> Vec<u8> {
    let mut out = vec![0u8; (symbols.len() * 2).div_ceil(8)];
    for (i, &s) in symbols.iter().enumerate() {
        out[i / 4] |= (s & 0b11) << (2 * (i % 4));
    }
    out
}

pub fn unpack_2bit(bytes: &[u8], n: usize) -> Vec<u8> {
    (0..n).map(|i| bytes[i / 4] >> (2 * (i % 4)) & 0b11).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lsb_first() {
        assert_eq!(
            pack_bits(&[true, false, false, false, false, false, false, false, false, true]),
            vec![0x01, 0x02]
        );
        assert_eq!(pack_2bit(&[1, 2, 0, 3, 2]), vec![0b11_00_10_01, 0b10]);
    }

    proptest! {
        #[test]
        fn bits_roundtrip(bits in proptest::collection::vec(any::<bool>(), 0..300)) {
            let packed = pack_bits(&bits);
            prop_assert_eq!(packed.len(), bits.len().div_ceil(8));
            prop_assert_eq!(unpack_bits(&packed, bits.len()), bits);
        }

        #[test]
        fn symbols_roundtrip(syms in proptest::collection::vec(0u8..4, 0..300)) {
            let packed = pack_2bit(&syms);
            prop_assert_eq!(packed.len(), (syms.len() * 2).div_ceil(8));
            prop_assert_eq!(unpack_2bit(&packed, syms.len()), syms);
        }
    }
}

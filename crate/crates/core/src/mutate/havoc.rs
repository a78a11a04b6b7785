//! Stacked random byte mutations in the AFL havoc style, without the
//! deterministic stage. Operators are drawn with equal weight.

use rand::seq::IndexedRandom;
use rand::Rng;

const INTERESTING_8: [i8; 9] = [-128, -1, 0, 1, 16, 32, 64, 100, 127];
const INTERESTING_16: [i16; 10] = [-32768, -129, 128, 255, 256, 512, 1000, 1024, 4096, 32767];
const INTERESTING_32: [i32; 8] = [i32::MIN, -100_663_046, -32769, 32768, 65535, 65536, 100_663_045, i32::MAX];

const ARITH_MAX: u8 = 35;
const MAX_STACK: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    BitFlip,
    RandomByte,
    Arith,
    Interesting,
    DeleteChunk,
    DuplicateChunk,
    InsertRandom,
    DictInsert,
    DictOverwrite,
    Splice,
}

impl Op {
    pub const ALL: [Op; 10] = [
        Op::BitFlip,
        Op::RandomByte,
        Op::Arith,
        Op::Interesting,
        Op::DeleteChunk,
        Op::DuplicateChunk,
        Op::InsertRandom,
        Op::DictInsert,
        Op::DictOverwrite,
        Op::Splice,
    ];
}

fn chunk_len<R: Rng + ?Sized>(rng: &mut R, limit: usize) -> usize {
    // Favor short chunks, occasionally take large ones.
    let cap = match rng.random_range(0..10) {
        0..=5 => 8,
        6..=8 => 32,
        _ => 512,
    };
    rng.random_range(1..=cap.min(limit).max(1))
}

fn applicable(op: Op, len: usize, max_len: usize, dict: &[Vec<u8>], splice: Option<&[u8]>) -> bool {
    let room = len < max_len;
    match op {
        Op::BitFlip | Op::RandomByte | Op::Arith | Op::Interesting | Op::DeleteChunk => len > 0,
        Op::DuplicateChunk => len > 0 && room,
        Op::InsertRandom => room,
        Op::DictInsert => room && !dict.is_empty(),
        Op::DictOverwrite => len > 0 && !dict.is_empty(),
        Op::Splice => splice.is_some_and(|s| !s.is_empty()),
    }
}

fn apply<R: Rng + ?Sized>(op: Op, buf: &mut Vec<u8>, rng: &mut R, dict: &[Vec<u8>], splice: Option<&[u8]>, max_len: usize) {
    let len = buf.len();
    match op {
        Op::BitFlip => {
            let bit = rng.random_range(0..len * 8);
            buf[bit / 8] ^= 0x80 >> (bit % 8);
        }
        Op::RandomByte => {
            let i = rng.random_range(0..len);
            buf[i] ^= rng.random_range(1..=255u8);
        }
        Op::Arith => {
            let i = rng.random_range(0..len);
            let d = rng.random_range(1..=ARITH_MAX);
            buf[i] = if rng.random() { buf[i].wrapping_add(d) } else { buf[i].wrapping_sub(d) };
        }
        Op::Interesting => {
            let widths: &[usize] = match len {
                1 => &[1],
                2 | 3 => &[1, 2],
                _ => &[1, 2, 4],
            };
            let width = *widths.choose(rng).expect("non-empty");
            let at = rng.random_range(0..=len - width);
            let big_endian = rng.random::<bool>();
            let bytes: Vec<u8> = match width {
                1 => vec![*INTERESTING_8.choose(rng).expect("non-empty") as u8],
                2 => {
                    let v = *INTERESTING_16.choose(rng).expect("non-empty");
                    if big_endian { v.to_be_bytes().to_vec() } else { v.to_le_bytes().to_vec() }
                }
                _ => {
                    let v = *INTERESTING_32.choose(rng).expect("non-empty");
                    if big_endian { v.to_be_bytes().to_vec() } else { v.to_le_bytes().to_vec() }
                }
            };
            buf[at..at + width].copy_from_slice(&bytes);
        }
        Op::DeleteChunk => {
            let n = chunk_len(rng, len);
            let at = rng.random_range(0..=len - n);
            buf.drain(at..at + n);
        }
        Op::DuplicateChunk => {
            let n = chunk_len(rng, len.min(max_len - len));
            let from = rng.random_range(0..=len - n);
            let to = rng.random_range(0..=len);
            let chunk = buf[from..from + n].to_vec();
            buf.splice(to..to, chunk);
        }
        Op::InsertRandom => {
            let n = chunk_len(rng, max_len - len);
            let to = rng.random_range(0..=len);
            let fill: Vec<u8> = if rng.random() {
                vec![rng.random(); n]
            } else {
                (0..n).map(|_| rng.random()).collect()
            };
            buf.splice(to..to, fill);
        }
        Op::DictInsert => {
            let tok = dict.choose(rng).expect("checked non-empty");
            let tok = &tok[..tok.len().min(max_len - len)];
            let to = rng.random_range(0..=len);
            buf.splice(to..to, tok.iter().copied());
        }
        Op::DictOverwrite => {
            let tok = dict.choose(rng).expect("checked non-empty");
            let n = tok.len().min(len);
            let at = rng.random_range(0..=len - n);
            buf[at..at + n].copy_from_slice(&tok[..n]);
        }
        Op::Splice => {
            let other = splice.expect("checked present");
            let cut_a = rng.random_range(0..=len);
            let cut_b = rng.random_range(0..other.len());
            buf.truncate(cut_a);
            buf.extend_from_slice(&other[cut_b..]);
        }
    }
}

/// Returns a mutant of `seed` after 1 to 8 stacked operators. `splice` is a
/// second queue entry to crossover with; output never exceeds `max_len`.
pub fn havoc<R: Rng + ?Sized>(
    seed: &[u8],
    rng: &mut R,
    dict: &[Vec<u8>],
    splice: Option<&[u8]>,
    max_len: usize,
) -> Vec<u8> {
    let mut buf: Vec<u8> = seed[..seed.len().min(max_len)].to_vec();
    if max_len == 0 {
        return buf;
    }
    let stack = rng.random_range(1..=MAX_STACK);
    for _ in 0..stack {
        let ops: Vec<Op> = Op::ALL
            .into_iter()
            .filter(|&op| applicable(op, buf.len(), max_len, dict, splice))
            .collect();
        let Some(&op) = ops.choose(rng) else { break };
        apply(op, &mut buf, rng, dict, splice, max_len);
        buf.truncate(max_len);
    }
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::validate_xml;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const XML: &[u8] = b"<doc>\n    <clean> YES </clean>\n    <dirty> NO </dirty>\n    <mixed> YES </mixed>\n</doc>\n";

    #[test]
    fn reproducible_under_fixed_seed() {
        let dict = vec![b"</doc>".to_vec()];
        let run = || havoc(XML, &mut ChaCha8Rng::seed_from_u64(99), &dict, Some(b"<x/>"), 4096);
        assert_eq!(run(), run());
    }

    #[test]
    fn golden_mutant() {
        let m = havoc(b"hello world", &mut ChaCha8Rng::seed_from_u64(7), &[], None, 64);
        assert_eq!(m, GOLDEN);
    }

    const GOLDEN: &[u8] = b"heGlo werld";

    #[test]
    fn empty_seed_grows() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            assert!(!havoc(b"", &mut rng, &[], None, 64).is_empty());
        }
    }

    #[test]
    fn dictionary_token_lands_mid_tag() {
        let dict = vec![b"</doc>".to_vec()];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut invalid_with_token = 0;
        for _ in 0..500 {
            let m = havoc(XML, &mut rng, &dict, None, 4096);
            let count = m.windows(6).filter(|w| w == b"</doc>").count();
            if count > 1 && !validate_xml(&m).is_valid() {
                invalid_with_token += 1;
            }
        }
        assert!(invalid_with_token > 0);
    }

    #[test]
    fn havoc_mostly_breaks_xml() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let valid = (0..1000)
            .filter(|_| validate_xml(&havoc(XML, &mut rng, &[], None, 4096)).is_valid())
            .count();
        assert!(valid < 300, "{valid} of 1000 still valid");
    }

    proptest! {
        #[test]
        fn bounded_by_max_len(seed in proptest::collection::vec(any::<u8>(), 0..80),
                              other in proptest::collection::vec(any::<u8>(), 0..80),
                              max in 0usize..100, s in any::<u64>()) {
            let dict = vec![b"<tag attr=\"value\">".to_vec()];
            let m = havoc(&seed, &mut ChaCha8Rng::seed_from_u64(s), &dict, Some(&other), max);
            prop_assert!(m.len() <= max);
        }
    }
}

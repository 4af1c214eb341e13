//! Bit domains, fixed-width words and the DES tables.
//!
//! Bit positions are numbered 1..=W, most significant first, as in the FIPS
//! tables. A [`Word`] stores its bits right-aligned in a `u64`, so position
//! `p` of a `W`-bit word lives at shift `W - p`.
//!
//! Every operation is generic over [`BitDomain`]. In the abstract domain a bit
//! has a single value, hence every word of a given width is the same word and
//! every function below degenerates to a constant.

use std::fmt;

/// The value set carried by a single wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BitDomain {
    /// The usual two-valued bit.
    Concrete,
    /// A one-valued bit: all data collapses, only control remains.
    Abstract,
}

impl BitDomain {
    /// Enumerates the bit values of the domain.
    pub fn values(self) -> &'static [u8] {
        match self {
            BitDomain::Concrete => &[0, 1],
            BitDomain::Abstract => &[0],
        }
    }

    pub fn xor(self, a: u8, b: u8) -> u8 {
        match self {
            BitDomain::Concrete => (a ^ b) & 1,
            BitDomain::Abstract => 0,
        }
    }

    /// Builds a word of this domain. In the abstract domain `bits` is ignored.
    pub fn word(self, width: u8, bits: u64) -> Word {
        Word::new(self, width, bits)
    }

    /// Number of distinct words of `width` bits, saturating at `u64::MAX`.
    pub fn cardinality(self, width: u8) -> u64 {
        match self {
            BitDomain::Abstract => 1,
            BitDomain::Concrete if width >= 64 => u64::MAX,
            BitDomain::Concrete => 1u64 << width,
        }
    }

    /// All words of the given width, or `None` if there are more than `limit`.
    pub fn enumerate(self, width: u8, limit: u64) -> Option<Vec<Word>> {
        let n = self.cardinality(width);
        if n > limit {
            return None;
        }
        Some((0..n).map(|bits| self.word(width, bits)).collect())
    }
}

impl fmt::Display for BitDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BitDomain::Concrete => "concrete",
            BitDomain::Abstract => "abstract",
        })
    }
}

fn mask(width: u8) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// A bit vector of 1..=64 bits over some [`BitDomain`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    bits: u64,
    width: u8,
    domain: BitDomain,
}

impl Word {
    pub fn new(domain: BitDomain, width: u8, bits: u64) -> Word {
        assert!((1..=64).contains(&width), "word width {width} out of range");
        let bits = match domain {
            BitDomain::Concrete => bits & mask(width),
            BitDomain::Abstract => 0,
        };
        Word { bits, width, domain }
    }

    pub fn concrete(width: u8, bits: u64) -> Word {
        Word::new(BitDomain::Concrete, width, bits)
    }

    /// The unique abstract word of the given width.
    pub fn abstract_word(width: u8) -> Word {
        Word::new(BitDomain::Abstract, width, 0)
    }

    pub fn width(self) -> u8 {
        self.width
    }

    pub fn bits(self) -> u64 {
        self.bits
    }

    pub fn domain(self) -> BitDomain {
        self.domain
    }

    /// Bit at 1-based position `pos`, most significant first.
    pub fn bit(self, pos: u8) -> u8 {
        assert!(pos >= 1 && pos <= self.width, "bit {pos} outside a {}-bit word", self.width);
        ((self.bits >> (self.width - pos)) & 1) as u8
    }

    /// `self` in the high positions, `low` in the low positions.
    pub fn concat(self, low: Word) -> Word {
        debug_assert_eq!(self.domain, low.domain);
        let width = self.width + low.width;
        let bits = if low.width >= 64 { low.bits } else { (self.bits << low.width) | low.bits };
        Word::new(self.domain, width, bits)
    }

    /// Splits into the high `at` bits and the remaining low bits.
    pub fn split(self, at: u8) -> (Word, Word) {
        assert!(at > 0 && at < self.width);
        let low = self.width - at;
        (
            Word::new(self.domain, at, self.bits >> low),
            Word::new(self.domain, low, self.bits),
        )
    }

    pub fn xor(self, other: Word) -> Word {
        assert_eq!(self.width, other.width, "xor of words of different widths");
        Word::new(self.domain, self.width, self.bits ^ other.bits)
    }

    pub fn rotate_left(self, n: u8) -> Word {
        let n = n % self.width;
        if n == 0 {
            return self;
        }
        let bits = (self.bits << n) | (self.bits >> (self.width - n));
        Word::new(self.domain, self.width, bits)
    }

    pub fn rotate_right(self, n: u8) -> Word {
        let n = n % self.width;
        self.rotate_left((self.width - n) % self.width)
    }

    /// Hexadecimal rendering with `ceil(width / 4)` digits. Abstract words
    /// render as `X` digits.
    pub fn to_hex(self) -> String {
        let digits = (self.width as usize).div_ceil(4);
        match self.domain {
            BitDomain::Concrete => format!("{:0digits$X}", self.bits),
            BitDomain::Abstract => "X".repeat(digits),
        }
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word<{}>({})", self.width, self.to_hex())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

/// A bit-selection table: output bit `j` is input bit `entries[j]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PermutationTable {
    pub name: &'static str,
    pub in_width: u8,
    pub entries: &'static [u8],
}

impl PermutationTable {
    pub fn out_width(&self) -> u8 {
        self.entries.len() as u8
    }

    /// Applies the table, panicking on a width mismatch.
    pub fn apply(&self, input: Word) -> Word {
        self.try_apply(input).unwrap_or_else(|| {
            panic!("{} expects {} input bits, got {}", self.name, self.in_width, input.width())
        })
    }

    pub fn try_apply(&self, input: Word) -> Option<Word> {
        if input.width() != self.in_width {
            return None;
        }
        if input.domain() == BitDomain::Abstract {
            return Some(Word::abstract_word(self.out_width()));
        }
        let bits = self
            .entries
            .iter()
            .fold(0u64, |acc, &src| (acc << 1) | u64::from(input.bit(src)));
        Some(Word::concrete(self.out_width(), bits))
    }

    /// Number of input positions that appear more than once.
    pub fn duplicated_inputs(&self) -> usize {
        let mut seen = vec![0u8; self.in_width as usize + 1];
        for &e in self.entries {
            seen[e as usize] += 1;
        }
        seen.iter().filter(|&&c| c > 1).count()
    }
}

pub const IP: PermutationTable = PermutationTable {
    name: "IP",
    in_width: 64,
    entries: &[
        58, 50, 42, 34, 26, 18, 10, 2, 60, 52, 44, 36, 28, 20, 12, 4, //
        62, 54, 46, 38, 30, 22, 14, 6, 64, 56, 48, 40, 32, 24, 16, 8, //
        57, 49, 41, 33, 25, 17, 9, 1, 59, 51, 43, 35, 27, 19, 11, 3, //
        61, 53, 45, 37, 29, 21, 13, 5, 63, 55, 47, 39, 31, 23, 15, 7,
    ],
};

pub const FP: PermutationTable = PermutationTable {
    name: "FP",
    in_width: 64,
    entries: &[
        40, 8, 48, 16, 56, 24, 64, 32, 39, 7, 47, 15, 55, 23, 63, 31, //
        38, 6, 46, 14, 54, 22, 62, 30, 37, 5, 45, 13, 53, 21, 61, 29, //
        36, 4, 44, 12, 52, 20, 60, 28, 35, 3, 43, 11, 51, 19, 59, 27, //
        34, 2, 42, 10, 50, 18, 58, 26, 33, 1, 41, 9, 49, 17, 57, 25,
    ],
};

pub const E: PermutationTable = PermutationTable {
    name: "E",
    in_width: 32,
    entries: &[
        32, 1, 2, 3, 4, 5, 4, 5, 6, 7, 8, 9, //
        8, 9, 10, 11, 12, 13, 12, 13, 14, 15, 16, 17, //
        16, 17, 18, 19, 20, 21, 20, 21, 22, 23, 24, 25, //
        24, 25, 26, 27, 28, 29, 28, 29, 30, 31, 32, 1,
    ],
};

pub const P: PermutationTable = PermutationTable {
    name: "P",
    in_width: 32,
    entries: &[
        16, 7, 20, 21, 29, 12, 28, 17, 1, 15, 23, 26, 5, 18, 31, 10, //
        2, 8, 24, 14, 32, 27, 3, 9, 19, 13, 30, 6, 22, 11, 4, 25,
    ],
};

pub const PC1: PermutationTable = PermutationTable {
    name: "PC1",
    in_width: 64,
    entries: &[
        57, 49, 41, 33, 25, 17, 9, 1, 58, 50, 42, 34, 26, 18, //
        10, 2, 59, 51, 43, 35, 27, 19, 11, 3, 60, 52, 44, 36, //
        63, 55, 47, 39, 31, 23, 15, 7, 62, 54, 46, 38, 30, 22, //
        14, 6, 61, 53, 45, 37, 29, 21, 13, 5, 28, 20, 12, 4,
    ],
};

pub const PC2: PermutationTable = PermutationTable {
    name: "PC2",
    in_width: 56,
    entries: &[
        14, 17, 11, 24, 1, 5, 3, 28, 15, 6, 21, 10, //
        23, 19, 12, 4, 26, 8, 16, 7, 27, 20, 13, 2, //
        41, 52, 31, 37, 47, 55, 30, 40, 51, 45, 33, 48, //
        44, 49, 39, 56, 34, 53, 46, 42, 50, 36, 29, 32,
    ],
};

pub const PERMUTATIONS: [PermutationTable; 6] = [IP, FP, E, P, PC1, PC2];

/// The eight S-boxes, `SBOXES[i][row][column]`.
pub const SBOXES: [[[u8; 16]; 4]; 8] = [
    [
        [14, 4, 13, 1, 2, 15, 11, 8, 3, 10, 6, 12, 5, 9, 0, 7],
        [0, 15, 7, 4, 14, 2, 13, 1, 10, 6, 12, 11, 9, 5, 3, 8],
        [4, 1, 14, 8, 13, 6, 2, 11, 15, 12, 9, 7, 3, 10, 5, 0],
        [15, 12, 8, 2, 4, 9, 1, 7, 5, 11, 3, 14, 10, 0, 6, 13],
    ],
    [
        [15, 1, 8, 14, 6, 11, 3, 4, 9, 7, 2, 13, 12, 0, 5, 10],
        [3, 13, 4, 7, 15, 2, 8, 14, 12, 0, 1, 10, 6, 9, 11, 5],
        [0, 14, 7, 11, 10, 4, 13, 1, 5, 8, 12, 6, 9, 3, 2, 15],
        [13, 8, 10, 1, 3, 15, 4, 2, 11, 6, 7, 12, 0, 5, 14, 9],
    ],
    [
        [10, 0, 9, 14, 6, 3, 15, 5, 1, 13, 12, 7, 11, 4, 2, 8],
        [13, 7, 0, 9, 3, 4, 6, 10, 2, 8, 5, 14, 12, 11, 15, 1],
        [13, 6, 4, 9, 8, 15, 3, 0, 11, 1, 2, 12, 5, 10, 14, 7],
        [1, 10, 13, 0, 6, 9, 8, 7, 4, 15, 14, 3, 11, 5, 2, 12],
    ],
    [
        [7, 13, 14, 3, 0, 6, 9, 10, 1, 2, 8, 5, 11, 12, 4, 15],
        [13, 8, 11, 5, 6, 15, 0, 3, 4, 7, 2, 12, 1, 10, 14, 9],
        [10, 6, 9, 0, 12, 11, 7, 13, 15, 1, 3, 14, 5, 2, 8, 4],
        [3, 15, 0, 6, 10, 1, 13, 8, 9, 4, 5, 11, 12, 7, 2, 14],
    ],
    [
        [2, 12, 4, 1, 7, 10, 11, 6, 8, 5, 3, 15, 13, 0, 14, 9],
        [14, 11, 2, 12, 4, 7, 13, 1, 5, 0, 15, 10, 3, 9, 8, 6],
        [4, 2, 1, 11, 10, 13, 7, 8, 15, 9, 12, 5, 6, 3, 0, 14],
        [11, 8, 12, 7, 1, 14, 2, 13, 6, 15, 0, 9, 10, 4, 5, 3],
    ],
    [
        [12, 1, 10, 15, 9, 2, 6, 8, 0, 13, 3, 4, 14, 7, 5, 11],
        [10, 15, 4, 2, 7, 12, 9, 5, 6, 1, 13, 14, 0, 11, 3, 8],
        [9, 14, 15, 5, 2, 8, 12, 3, 7, 0, 4, 10, 1, 13, 11, 6],
        [4, 3, 2, 12, 9, 5, 15, 10, 11, 14, 1, 7, 6, 0, 8, 13],
    ],
    [
        [4, 11, 2, 14, 15, 0, 8, 13, 3, 12, 9, 7, 5, 10, 6, 1],
        [13, 0, 11, 7, 4, 9, 1, 10, 14, 3, 5, 12, 2, 15, 8, 6],
        [1, 4, 11, 13, 12, 3, 7, 14, 10, 15, 6, 8, 0, 5, 9, 2],
        [6, 11, 13, 8, 1, 4, 10, 7, 9, 5, 0, 15, 14, 2, 3, 12],
    ],
    [
        [13, 2, 8, 4, 6, 15, 11, 1, 10, 9, 3, 14, 5, 0, 12, 7],
        [1, 15, 13, 8, 10, 3, 7, 4, 12, 5, 6, 11, 0, 14, 9, 2],
        [7, 11, 4, 1, 9, 12, 14, 2, 0, 6, 10, 13, 15, 3, 5, 8],
        [2, 1, 14, 7, 4, 10, 8, 13, 15, 12, 9, 0, 3, 5, 6, 11],
    ],
];

/// S-box `index` (1..=8) applied to a 6-bit word. The row is `b1 b6`, the
/// column `b2 b3 b4 b5`.
pub fn sbox_lookup(index: usize, input: Word) -> Word {
    assert!((1..=8).contains(&index), "S-box index {index} out of range");
    assert_eq!(input.width(), 6, "S-box input must be 6 bits");
    if input.domain() == BitDomain::Abstract {
        return Word::abstract_word(4);
    }
    let row = 2 * input.bit(1) + input.bit(6);
    let col = 8 * input.bit(2) + 4 * input.bit(3) + 2 * input.bit(4) + input.bit(5);
    Word::concrete(4, u64::from(SBOXES[index - 1][row as usize][col as usize]))
}

/// Rotation direction of the key registers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Left,
    Right,
}

/// Per-round rotation counts of the key registers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShiftSchedule {
    shifts: Vec<u8>,
}

pub const STANDARD_SHIFTS: [u8; 16] = [1, 1, 2, 2, 2, 2, 2, 2, 1, 2, 2, 2, 2, 2, 2, 1];

impl ShiftSchedule {
    pub fn standard() -> ShiftSchedule {
        ShiftSchedule { shifts: STANDARD_SHIFTS.to_vec() }
    }

    /// An arbitrary schedule. Only the standard one yields DES; others exist
    /// to build deliberately broken models.
    pub fn from_counts(shifts: Vec<u8>) -> ShiftSchedule {
        ShiftSchedule { shifts }
    }

    /// The standard schedule with entry `index` removed.
    pub fn without_entry(index: usize) -> ShiftSchedule {
        let mut shifts = STANDARD_SHIFTS.to_vec();
        shifts.remove(index);
        ShiftSchedule { shifts }
    }

    pub fn counts(&self) -> &[u8] {
        &self.shifts
    }

    pub fn rounds(&self) -> usize {
        self.shifts.len()
    }

    pub fn total(&self) -> u32 {
        self.shifts.iter().map(|&s| u32::from(s)).sum()
    }

    /// The register command issued before each round.
    ///
    /// Encryption rotates left by the schedule. Decryption starts from the
    /// unrotated registers (which equal the final encryption registers) and
    /// rotates right by the schedule read backwards, so the first command is
    /// a rotation by zero.
    pub fn commands(&self, encrypt: bool) -> Vec<(Direction, u8)> {
        if encrypt {
            self.shifts.iter().map(|&s| (Direction::Left, s)).collect()
        } else {
            let n = self.shifts.len();
            (0..n)
                .map(|i| (Direction::Right, if i == 0 { 0 } else { self.shifts[n - i] }))
                .collect()
        }
    }
}

impl Default for ShiftSchedule {
    fn default() -> Self {
        ShiftSchedule::standard()
    }
}

/// Rotates a 28-bit register half.
pub fn shift_register(half: Word, (direction, count): (Direction, u8)) -> Word {
    match direction {
        Direction::Left => half.rotate_left(count),
        Direction::Right => half.rotate_right(count),
    }
}

/// The sixteen round keys together with the register contents that produced them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeySchedule {
    pub subkeys: Vec<Word>,
    /// `(C, D)` before the first command, then after each command.
    pub registers: Vec<(Word, Word)>,
}

pub fn key_schedule(key: Word, encrypt: bool) -> KeySchedule {
    key_schedule_with(key, encrypt, &ShiftSchedule::standard())
}

pub fn key_schedule_with(key: Word, encrypt: bool, schedule: &ShiftSchedule) -> KeySchedule {
    let (mut c, mut d) = PC1.apply(key).split(28);
    let mut registers = vec![(c, d)];
    let mut subkeys = Vec::with_capacity(schedule.rounds());
    for command in schedule.commands(encrypt) {
        c = shift_register(c, command);
        d = shift_register(d, command);
        registers.push((c, d));
        subkeys.push(PC2.apply(c.concat(d)));
    }
    KeySchedule { subkeys, registers }
}

/// The cipher function: `P(S(E(r) xor k))`.
pub fn cipher_function(r: Word, k: Word) -> Word {
    let x = E.apply(r).xor(k);
    let domain = x.domain();
    let mut out = 0u64;
    for i in 0..8u8 {
        let six = Word::new(domain, 6, x.bits() >> (42 - 6 * i));
        out = (out << 4) | sbox_lookup(i as usize + 1, six).bits();
    }
    P.apply(Word::new(domain, 32, out))
}

/// Straight-line DES. `encrypt == true` encrypts.
pub fn des_apply(data: Word, key: Word, encrypt: bool) -> Word {
    assert_eq!(data.width(), 64);
    assert_eq!(key.width(), 64);
    let schedule = key_schedule(key, encrypt);
    let (mut l, mut r) = IP.apply(data).split(32);
    for k in &schedule.subkeys {
        let next = l.xor(cipher_function(r, *k));
        l = r;
        r = next;
    }
    FP.apply(r.concat(l))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_shapes() {
        assert_eq!((IP.in_width, IP.out_width(), IP.duplicated_inputs()), (64, 64, 0));
        assert_eq!((FP.in_width, FP.out_width(), FP.duplicated_inputs()), (64, 64, 0));
        assert_eq!((E.in_width, E.out_width(), E.duplicated_inputs()), (32, 48, 16));
        assert_eq!((P.in_width, P.out_width(), P.duplicated_inputs()), (32, 32, 0));
        assert_eq!((PC1.in_width, PC1.out_width(), PC1.duplicated_inputs()), (64, 56, 0));
        assert_eq!((PC2.in_width, PC2.out_width(), PC2.duplicated_inputs()), (56, 48, 0));
        for t in PERMUTATIONS {
            assert!(t.entries.iter().all(|&e| e >= 1 && e <= t.in_width), "{}", t.name);
        }
    }

    #[test]
    fn ip_and_fp_are_inverse() {
        for j in 0..64 {
            let src = IP.entries[j] as usize;
            assert_eq!(FP.entries[src - 1] as usize, j + 1);
        }
    }

    #[test]
    fn sbox_rows_are_permutations() {
        for (i, sbox) in SBOXES.iter().enumerate() {
            for row in sbox {
                let mut seen = [false; 16];
                for &v in row {
                    assert!(v < 16);
                    seen[v as usize] = true;
                }
                assert!(seen.iter().all(|&s| s), "S{} row {:?}", i + 1, row);
            }
        }
    }

    #[test]
    fn shift_schedule_returns_registers() {
        let s = ShiftSchedule::standard();
        assert_eq!(s.total(), 28);
        assert_eq!(s.rounds(), 16);
        let ks = key_schedule(Word::concrete(64, 0x0123_4567_89AB_CDEF), true);
        assert_eq!(ks.registers[0], ks.registers[16]);
    }

    #[test]
    fn decrypt_commands_rotate_by_zero_first() {
        let cmds = ShiftSchedule::standard().commands(false);
        assert_eq!(cmds[0], (Direction::Right, 0));
        assert_eq!(cmds[1], (Direction::Right, 1));
        assert_eq!(cmds[15], (Direction::Right, 1));
        assert_eq!(cmds.iter().map(|c| u32::from(c.1)).sum::<u32>(), 27);
    }

    #[test]
    fn word_helpers() {
        let w = Word::concrete(8, 0b1000_0001);
        assert_eq!(w.bit(1), 1);
        assert_eq!(w.bit(2), 0);
        assert_eq!(w.rotate_left(1).bits(), 0b0000_0011);
        assert_eq!(w.rotate_right(1).bits(), 0b1100_0000);
        let (hi, lo) = Word::concrete(64, 0x0123_4567_89AB_CDEF).split(32);
        assert_eq!((hi.bits(), lo.bits()), (0x0123_4567, 0x89AB_CDEF));
        assert_eq!(hi.concat(lo).bits(), 0x0123_4567_89AB_CDEF);
        assert_eq!(Word::abstract_word(64).to_hex(), "XXXXXXXXXXXXXXXX");
    }

    #[test]
    fn abstract_domain_is_singleton() {
        let d = BitDomain::Abstract;
        assert_eq!(d.values(), &[0]);
        assert_eq!(d.xor(0, 0), 0);
        for width in [4u8, 6, 28, 32, 48, 56, 64] {
            assert_eq!(d.enumerate(width, 10).unwrap().len(), 1);
        }
        assert_eq!(BitDomain::Concrete.enumerate(6, 100).unwrap().len(), 64);
        assert!(BitDomain::Concrete.enumerate(64, 1 << 20).is_none());
        let w = Word::abstract_word(64);
        assert_eq!(des_apply(w, w, true), w);
        assert_eq!(sbox_lookup(3, Word::abstract_word(6)), Word::abstract_word(4));
        assert_eq!(E.apply(Word::abstract_word(32)), Word::abstract_word(48));
    }

    #[test]
    #[should_panic(expected = "expects 32 input bits")]
    fn width_mismatch_is_a_contract_violation() {
        E.apply(Word::concrete(64, 0));
    }
}

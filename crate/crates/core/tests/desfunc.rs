mod common;

use asyncdes::desfunc::{cipher_function, key_schedule_with, sbox_lookup, IP};
use asyncdes::{des_apply, key_schedule, BitDomain, ShiftSchedule, Word};
use proptest::prelude::*;

fn w64(bits: u64) -> Word {
    Word::concrete(64, bits)
}

#[test]
fn known_answers_match() {
    let kats = common::known_answers();
    assert_eq!(kats.len(), 64);
    for (key, data, encrypt, result) in kats {
        assert_eq!(des_apply(w64(data), w64(key), encrypt), w64(result), "key {key:016X} data {data:016X}");
    }
}

#[test]
fn subkeys_of_the_classic_example() {
    let expected = common::subkeys_fixture();
    let ks = key_schedule(w64(0x1334_5779_9BBC_DFF1), true);
    let got: Vec<u64> = ks.subkeys.iter().map(|k| k.bits()).collect();
    assert_eq!(got, expected);
    let reversed: Vec<u64> = key_schedule(w64(0x1334_5779_9BBC_DFF1), false).subkeys.iter().map(|k| k.bits()).collect();
    assert_eq!(reversed, expected.into_iter().rev().collect::<Vec<_>>());
}

#[test]
fn initial_permutation_and_first_sbox() {
    assert_eq!(IP.apply(w64(0x0123_4567_89AB_CDEF)).bits(), 0xCC00_CCFF_F0AA_F0AA);
    assert_eq!(sbox_lookup(1, Word::concrete(6, 0)).bits(), 0b1110);
}

#[test]
fn abstract_words_stay_abstract() {
    let x = Word::abstract_word(64);
    let out = des_apply(x, x, true);
    assert_eq!(out.domain(), BitDomain::Abstract);
    assert_eq!(out.to_hex(), "XXXXXXXXXXXXXXXX");
    assert_eq!(cipher_function(Word::abstract_word(32), Word::abstract_word(48)), Word::abstract_word(32));
}

#[test]
fn a_shorter_schedule_changes_the_key_stream() {
    let key = w64(0x1334_5779_9BBC_DFF1);
    let short = key_schedule_with(key, true, &ShiftSchedule::without_entry(3));
    assert_eq!(short.subkeys.len(), 15);
    assert_ne!(short.registers.last(), short.registers.first());
}

proptest! {
    #[test]
    fn decryption_inverts_encryption(data: u64, key: u64) {
        let c = des_apply(w64(data), w64(key), true);
        prop_assert_eq!(des_apply(c, w64(key), false), w64(data));
    }

    #[test]
    fn parity_bits_are_ignored(data: u64, key: u64, flips: u8) {
        let mask = (0..8).filter(|i| flips >> i & 1 == 1).fold(0u64, |m, i| m | 1 << (8 * i));
        prop_assert_eq!(des_apply(w64(data), w64(key), true), des_apply(w64(data), w64(key ^ mask), true));
    }

    #[test]
    fn complementation_property(data: u64, key: u64) {
        let c = des_apply(w64(data), w64(key), true);
        prop_assert_eq!(des_apply(w64(!data), w64(!key), true), w64(!c.bits()));
    }
}

//! Prime-exponent (Gödel) numbering of symbol strings and of sorted clause id
//! sequences. The numbers grow far too quickly for real use; this exists to
//! cross-check the injectivity of trie signatures on tiny inputs.

use num_bigint::BigUint;

pub const MAX_LABEL_LEN: usize = 8;
pub const MAX_STATE_IDS: usize = 6;
pub const MAX_STATE_ID: u32 = 64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GodelError {
    #[error("symbol `{0}` is outside the numbering alphabet")]
    Symbol(char),
    #[error("input length {0} exceeds the cap of {1}")]
    TooLong(usize, usize),
    #[error("clause id {0} exceeds the cap of {MAX_STATE_ID}")]
    IdTooLarge(u32),
}

/// Position of `c` in the alphabet: `( ) ← ⊗ ,` are 1–5, `a`–`z` 6–31,
/// `A`–`Z` 32–57 and `0`–`9` 58–67.
pub fn symbol_code(c: char) -> Result<u32, GodelError> {
    Ok(match c {
        '(' => 1,
        ')' => 2,
        '←' => 3,
        '⊗' => 4,
        ',' => 5,
        'a'..='z' => 6 + (c as u32 - 'a' as u32),
        'A'..='Z' => 32 + (c as u32 - 'A' as u32),
        '0'..='9' => 58 + (c as u32 - '0' as u32),
        _ => return Err(GodelError::Symbol(c)),
    })
}

fn first_primes(n: usize) -> Vec<u32> {
    let mut primes = Vec::with_capacity(n);
    let mut k = 2u32;
    while primes.len() < n {
        if primes.iter().take_while(|&&p| p * p <= k).all(|&p| k % p != 0) {
            primes.push(k);
        }
        k += 1;
    }
    primes
}

fn encode(exponents: &[u32]) -> BigUint {
    first_primes(exponents.len())
        .into_iter()
        .zip(exponents)
        .fold(BigUint::from(1u32), |acc, (p, &e)| acc * BigUint::from(p).pow(e))
}

/// `2^code(s1) · 3^code(s2) · …` over the characters of `s`.
pub fn godel_label(s: &str) -> Result<BigUint, GodelError> {
    let codes = s.chars().map(symbol_code).collect::<Result<Vec<_>, _>>()?;
    if codes.len() > MAX_LABEL_LEN {
        return Err(GodelError::TooLong(codes.len(), MAX_LABEL_LEN));
    }
    Ok(encode(&codes))
}

/// `2^id1 · 3^id2 · …` over a sorted id sequence.
pub fn godel_sign_state(ids: &[u32]) -> Result<BigUint, GodelError> {
    if ids.len() > MAX_STATE_IDS {
        return Err(GodelError::TooLong(ids.len(), MAX_STATE_IDS));
    }
    if let Some(&bad) = ids.iter().find(|&&id| id > MAX_STATE_ID) {
        return Err(GodelError::IdTooLarge(bad));
    }
    Ok(encode(ids))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(godel_label("a").unwrap(), BigUint::from(64u32));
        assert_eq!(godel_label("").unwrap(), BigUint::from(1u32));
        assert_eq!(godel_label("ab").unwrap(), BigUint::from(64u32) * BigUint::from(3u32).pow(7));
        assert_eq!(godel_label("a?"), Err(GodelError::Symbol('?')));
        assert_eq!(godel_label("abcdefghi"), Err(GodelError::TooLong(9, 8)));
    }

    #[test]
    fn alphabet_bounds() {
        assert_eq!(symbol_code('z').unwrap(), 31);
        assert_eq!(symbol_code('A').unwrap(), 32);
        assert_eq!(symbol_code('Z').unwrap(), 57);
        assert_eq!(symbol_code('0').unwrap(), 58);
        assert_eq!(symbol_code('9').unwrap(), 67);
    }

    #[test]
    fn state_numbers() {
        assert_eq!(godel_sign_state(&[1]).unwrap(), BigUint::from(2u32));
        assert_eq!(godel_sign_state(&[1, 3]).unwrap(), BigUint::from(2u32 * 27));
        assert_eq!(godel_sign_state(&[]).unwrap(), BigUint::from(1u32));
        assert!(godel_sign_state(&[65]).is_err());
        assert!(godel_sign_state(&[1; 7]).is_err());
    }

    #[test]
    fn primes() {
        assert_eq!(first_primes(8), vec![2, 3, 5, 7, 11, 13, 17, 19]);
    }
}

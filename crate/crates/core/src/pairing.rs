//! Cantor pairing on ℕ×ℕ and the zig-zag coding of ℤ.

/// `pair(a, b) = (a + b)(a + b + 1)/2 + b`.
///
/// Panics on overflow; every index in this crate stays far below `u64::MAX`.
pub fn pair(a: u64, b: u64) -> u64 {
    let s = a.checked_add(b).expect("pairing overflow");
    let tri = if s.is_multiple_of(2) { (s / 2).checked_mul(s + 1) } else { s.checked_mul(s.div_ceil(2)) };
    tri.and_then(|t| t.checked_add(b)).expect("pairing overflow")
}

/// Inverse of [`pair`].
pub fn unpair(n: u64) -> (u64, u64) {
    // s = floor((sqrt(8n + 1) - 1) / 2), computed in u128 to avoid overflow.
    let disc = 8u128 * n as u128 + 1;
    let mut s = ((disc.isqrt() - 1) / 2) as u64;
    // Guard against an off-by-one from the square root.
    while tri(s + 1) <= n {
        s += 1;
    }
    while tri(s) > n {
        s -= 1;
    }
    let b = n - tri(s);
    (s - b, b)
}

fn tri(s: u64) -> u64 {
    ((s as u128 * (s as u128 + 1)) / 2) as u64
}

/// `z(p) = 2p` for `p >= 0`, `z(p) = -2p - 1` for `p < 0`.
pub fn zigzag(p: i64) -> u64 {
    if p >= 0 {
        2 * p as u64
    } else {
        (-2 * (p as i128) - 1) as u64
    }
}

pub fn unzigzag(q: u64) -> i64 {
    if q.is_multiple_of(2) {
        (q / 2) as i64
    } else {
        -(((q - 1) / 2) as i64) - 1
    }
}

//! Base-2 entropy helpers. All quantities are in bits and use `0 log 0 = 0`.

/// `-p log2 p`, with the convention that the term vanishes at `p = 0`.
#[inline]
pub fn entropy_term(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// Binary entropy `h_b(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    entropy_term(p) + entropy_term(1.0 - p)
}

/// Shannon entropy of a (not necessarily normalized) probability vector.
pub fn entropy(probs: &[f64]) -> f64 {
    probs.iter().copied().map(entropy_term).sum()
}

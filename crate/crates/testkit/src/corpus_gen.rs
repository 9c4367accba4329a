//! Deterministic corpora: templated Python-looking lines for pipeline tests
//! and small random word soups for BPE oracle comparisons.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha20Rng;

const NAMES: [&str; 10] = [
    "data", "value", "result", "index", "count", "total", "items", "node", "key", "buf",
];
const FUNCS: [&str; 8] = [
    "parse", "update", "load", "merge", "emit", "scan", "push", "strip",
];

/// `count` plausible single lines of Python, fully determined by the seed.
pub fn synth_python_lines(count: usize, seed: u64) -> Vec<String> {
    use rand::SeedableRng;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = NAMES.choose(&mut rng).unwrap();
            let b = NAMES.choose(&mut rng).unwrap();
            let f = FUNCS.choose(&mut rng).unwrap();
            let n: u32 = rng.gen_range(0..100);
            match rng.gen_range(0..10) {
                0 => format!("def {f}({a}, {b}):"),
                1 => format!("return {a} + {b}"),
                2 => format!("for {a} in range({n}):"),
                3 => format!("{a} = {b} * {n}"),
                4 => format!("if {a} == {b}:"),
                5 => format!("print({a})"),
                6 => format!("{a}.append({b})"),
                7 => format!("while {a} < {n}:"),
                8 => format!("{a} = {f}({b}, {n})"),
                _ => format!("{a}[{n}] = {b}"),
            }
        })
        .collect()
}

/// A corpus of at most 100 short words over a five-letter alphabet, grouped
/// into lines; small enough for the quadratic reference trainer, degenerate
/// enough to exercise tie-breaks.
pub fn random_micro_corpus(rng: &mut ChaCha20Rng) -> Vec<String> {
    let word_count = rng.gen_range(5..=100);
    let words: Vec<String> = (0..word_count)
        .map(|_| {
            let len = rng.gen_range(1..=5);
            (0..len)
                .map(|_| (b'a' + rng.gen_range(0..5u8)) as char)
                .collect()
        })
        .collect();
    words.chunks(5).map(|chunk| chunk.join(" ")).collect()
}

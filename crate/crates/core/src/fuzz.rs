//! Random model and spec-text generators for property and robustness tests.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::model::{Block, RbdModel, Segment};

/// Shape limits for [`random_model`].
#[derive(Debug, Clone)]
pub struct FuzzShape {
    /// Nesting levels below the root.
    pub max_depth: usize,
    pub max_children: usize,
    /// Rates are drawn log-uniformly from this range.
    pub min_rate: f64,
    pub max_rate: f64,
    pub parallel_probability: f64,
}

impl Default for FuzzShape {
    fn default() -> Self {
        FuzzShape {
            max_depth: 3,
            max_children: 6,
            min_rate: 1e-4,
            max_rate: 10.0,
            parallel_probability: 0.4,
        }
    }
}

pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

fn random_block<R: Rng + ?Sized>(rng: &mut R, shape: &FuzzShape, depth: usize, next_id: &mut usize) -> Block {
    let make_leaf = depth >= shape.max_depth || rng.random_bool(0.45);
    if make_leaf {
        *next_id += 1;
        let rate = log_uniform(rng, shape.min_rate, shape.max_rate);
        return Block::leaf(format!("s{next_id}"), rate);
    }
    let n = rng.random_range(1..=shape.max_children.max(1));
    let children = (0..n)
        .map(|_| random_block(rng, shape, depth + 1, next_id))
        .collect();
    if rng.random_bool(shape.parallel_probability) {
        Block::Parallel(children)
    } else {
        Block::Series(children)
    }
}

/// Random valid model; the root is always a series or parallel group.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, shape: &FuzzShape) -> RbdModel {
    let mut next_id = 0;
    let n = rng.random_range(1..=shape.max_children.max(1));
    let children = (0..n)
        .map(|_| random_block(rng, shape, 1, &mut next_id))
        .collect();
    let root = if rng.random_bool(shape.parallel_probability) {
        Block::Parallel(children)
    } else {
        Block::Series(children)
    };
    let name = format!("fuzz-{}", rng.random::<u32>());
    RbdModel::new(name, root).expect("generated models are valid")
}

/// Random list of `1..=max_len` exponential segments.
pub fn random_segments<R: Rng + ?Sized>(rng: &mut R, max_len: usize, min_rate: f64, max_rate: f64) -> Vec<Segment> {
    let n = rng.random_range(1..=max_len.max(1));
    (0..n)
        .map(|i| Segment::exponential(format!("s{i}"), log_uniform(rng, min_rate, max_rate)))
        .collect()
}

const FRAGMENTS: &[&str] = &[
    "pipeline", "series", "parallel", "segment", "group", "exponential", "weibull", "rate=",
    "rate=-1", "rate=0", "rate=1e999", "rate=nan", "{", "}", "\"", "\\", "#", "\n", "=", "0",
    "-", "1e-3", "99999999999999999999", "\u{0}", "é", "\t", "}}}}", "{{{{", "s1", "_",
];

/// Corrupts `text` with a few random edits.
pub fn mutate_text<R: Rng + ?Sized>(rng: &mut R, text: &str) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    let edits = rng.random_range(1..=6);
    for _ in 0..edits {
        let pos = if chars.is_empty() { 0 } else { rng.random_range(0..=chars.len()) };
        match rng.random_range(0..6) {
            0 if !chars.is_empty() => {
                let end = (pos + rng.random_range(1..=8)).min(chars.len());
                chars.drain(pos.min(end)..end);
            }
            1 => {
                let frag = FRAGMENTS.choose(rng).expect("non-empty");
                chars.splice(pos..pos, frag.chars());
            }
            2 => {
                let c = char::from_u32(rng.random_range(0..0x800)).unwrap_or('?');
                chars.insert(pos, c);
            }
            3 if !chars.is_empty() => {
                let i = rng.random_range(0..chars.len());
                chars[i] = *['{', '}', '"', '#', ' ', '\n', 'x', '9'].choose(rng).expect("non-empty");
            }
            4 => {
                chars.truncate(pos);
            }
            _ => {
                let lines: Vec<String> = chars.iter().collect::<String>().lines().map(str::to_owned).collect();
                if let Some(line) = lines.choose(rng) {
                    let mut out = lines.clone();
                    let at = rng.random_range(0..=out.len());
                    out.insert(at, line.clone());
                    chars = out.join("\n").chars().collect();
                }
            }
        }
    }
    chars.into_iter().collect()
}

/// Random text built from DSL fragments and noise, mostly invalid.
pub fn random_text<R: Rng + ?Sized>(rng: &mut R) -> String {
    let n = rng.random_range(0..40);
    let mut out = String::new();
    for _ in 0..n {
        if rng.random_bool(0.8) {
            out.push_str(FRAGMENTS.choose(rng).expect("non-empty"));
        } else {
            out.push(char::from_u32(rng.random_range(0..0x3000)).unwrap_or(' '));
        }
        if rng.random_bool(0.5) {
            out.push(' ');
        }
    }
    out
}

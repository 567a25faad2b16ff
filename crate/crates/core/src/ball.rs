//! Pruned enumeration of semigroup elements in Frobenius-norm balls,
//! optionally relative to a fixed right factor gamma_0.
//!
//! Words are grown by prepending letters, so the running product
//! g_l . (gamma gamma_0) is incremental. In the continued-fraction case the
//! Frobenius norm strictly increases under left multiplication by any block
//! (all entries nonnegative), which makes pruning exact. Schottky norms may
//! dip, so that case prunes against a certified safety factor instead.

use crate::error::{Error, Result};
use crate::matrix::IntMatrix2;
use crate::system::{GeneratorSystem, SystemKind, Word};

#[derive(Clone, Debug, Default)]
pub struct BallOptions {
    pub include_identity: bool,
    /// When set, only admissible concatenations gamma . gamma_0 are emitted
    /// and the norm condition becomes |gamma gamma_0| / |gamma_0| < R.
    pub gamma0: Option<Word>,
}

#[derive(Clone, Debug)]
pub struct BallElement {
    pub word: Word,
    /// Matrix of gamma (the enumerated word, without gamma_0).
    pub matrix: IntMatrix2,
    /// Frobenius norm squared of gamma gamma_0 (of gamma when gamma_0 = e).
    pub norm_sq: f64,
}

const MAX_LEVELS: usize = 4_000;

/// Operator norm of a 2x2 integer matrix: for det = +-1 the singular values
/// are (s, 1/s) with s^2 + s^-2 = |m|_F^2.
pub fn operator_norm(m: &IntMatrix2) -> f64 {
    let n = m.frob_norm_sq_f64();
    (0.5 * (n + (n * n - 4.0).max(0.0).sqrt())).sqrt()
}

/// Worst-case norm dip factor over N0 letters: max_i |g_i^-1|_op^N0.
pub fn schottky_safety_factor(sys: &GeneratorSystem, n0: usize) -> f64 {
    sys.letter_matrices()
        .iter()
        .map(|g| operator_norm(&g.adjugate()))
        .fold(1.0_f64, f64::max)
        .powi(n0 as i32)
}

struct Walker<'a, F: FnMut(&Word, &IntMatrix2, f64)> {
    sys: &'a GeneratorSystem,
    bound: f64,
    prune_bound: f64,
    visit: F,
}

impl<'a, F: FnMut(&Word, &IntMatrix2, f64)> Walker<'a, F> {
    fn emit(&mut self, rev_word: &[u16], norm_sq: f64) {
        let mut letters: Vec<u16> = rev_word.to_vec();
        letters.reverse();
        let word = Word(letters);
        let matrix = self.sys.word_matrix(&word);
        (self.visit)(&word, &matrix, norm_sq);
    }

    /// Depth-first, lexicographic in the prepended letter; exact pruning.
    fn dfs(&mut self, rev_word: &mut Vec<u16>, prod: &IntMatrix2, front: Option<usize>) {
        for l in 0..self.sys.letter_count() {
            if let Some(f) = front {
                if !self.sys.admissible_pair(l, f) {
                    continue;
                }
            }
            let m = self.sys.letter_matrices()[l].mul(prod);
            let n = m.frob_norm_sq_f64();
            if n >= self.prune_bound {
                continue;
            }
            rev_word.push(l as u16);
            if n < self.bound {
                self.emit(rev_word, n);
            }
            self.dfs(rev_word, &m, Some(l));
            rev_word.pop();
        }
    }

    /// Level-synchronous search for the Schottky case.
    fn bfs(&mut self, root: IntMatrix2, front: Option<usize>) -> Result<()> {
        let mut level: Vec<(Vec<u16>, IntMatrix2, Option<usize>)> = vec![(Vec::new(), root, front)];
        let mut depth = 0usize;
        while !level.is_empty() {
            depth += 1;
            if depth > MAX_LEVELS {
                return Err(Error::Resource("ball enumeration depth cap".into()));
            }
            let mut next = Vec::new();
            for (rev, prod, fr) in &level {
                for l in 0..self.sys.letter_count() {
                    if let Some(f) = fr {
                        if !self.sys.admissible_pair(l, *f) {
                            continue;
                        }
                    }
                    let m = self.sys.letter_matrices()[l].mul(prod);
                    let n = m.frob_norm_sq_f64();
                    if n >= self.prune_bound {
                        continue;
                    }
                    let mut rev2 = rev.clone();
                    rev2.push(l as u16);
                    if n < self.bound {
                        self.emit(&rev2, n);
                    }
                    next.push((rev2, m, Some(l)));
                }
            }
            level = next;
        }
        Ok(())
    }
}

/// Core traversal. `slack >= 1.0` loosens only the pruning threshold (the
/// emitted set is unchanged); tests use a large slack as the near-unpruned
/// oracle.
pub fn for_each_in_ball_with_slack(
    sys: &GeneratorSystem,
    r: f64,
    opts: &BallOptions,
    slack: f64,
    visit: impl FnMut(&Word, &IntMatrix2, f64),
) -> Result<()> {
    if r <= 0.0 || !r.is_finite() {
        return Err(Error::Config(format!("radius must be positive, got {}", r)));
    }
    let gamma0 = opts.gamma0.clone().unwrap_or_default();
    if !sys.word_admissible(&gamma0) {
        return Err(Error::Admissibility("gamma_0 is not admissible".into()));
    }
    let m0 = sys.word_matrix(&gamma0);
    // absolute ball |gamma| < R without gamma_0; relative ball
    // |gamma gamma_0| / |gamma_0| < R when gamma_0 is supplied
    let bound = if opts.gamma0.is_some() {
        r * r * m0.frob_norm_sq_f64()
    } else {
        r * r
    };
    let front = gamma0.0.first().map(|&l| l as usize);

    let mut walker = Walker {
        sys,
        bound,
        prune_bound: bound * slack * slack,
        visit,
    };
    if opts.include_identity && m0.frob_norm_sq_f64() < bound {
        walker.emit(&[], m0.frob_norm_sq_f64());
    }
    match sys.kind {
        SystemKind::ContinuedFraction => {
            walker.dfs(&mut Vec::new(), &m0, front);
            Ok(())
        }
        SystemKind::Schottky => {
            let scheme = crate::dynamics::build_schottky_scheme(sys)?;
            let cert = crate::dynamics::certify_expansion(&scheme)?;
            walker.prune_bound = {
                let c = schottky_safety_factor(sys, cert.n0) * slack;
                bound * c * c
            };
            walker.bfs(m0, front)
        }
    }
}

pub fn for_each_in_ball(
    sys: &GeneratorSystem,
    r: f64,
    opts: &BallOptions,
    visit: impl FnMut(&Word, &IntMatrix2, f64),
) -> Result<()> {
    for_each_in_ball_with_slack(sys, r, opts, 1.0, visit)
}

pub fn enumerate_ball(sys: &GeneratorSystem, r: f64, opts: &BallOptions) -> Result<Vec<BallElement>> {
    let mut out = Vec::new();
    for_each_in_ball(sys, r, opts, |w, m, n| {
        out.push(BallElement {
            word: w.clone(),
            matrix: m.clone(),
            norm_sq: n,
        });
    })?;
    Ok(out)
}

/// CSV dump: word;a;b;c;d;norm_sq with letters dot-separated.
pub fn dump_csv(elements: &[BallElement]) -> String {
    let mut s = String::from("word;a;b;c;d;norm_sq\n");
    for el in elements {
        let w: Vec<String> = el.word.0.iter().map(|l| l.to_string()).collect();
        let e = el.matrix.entries_big();
        s.push_str(&format!(
            "{};{};{};{};{};{}\n",
            w.join("."),
            e[0],
            e[1],
            e[2],
            e[3],
            el.matrix.frob_norm_sq()
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fibonacci_ball_r7() {
        let sys = GeneratorSystem::continued_fraction(&[1]).unwrap();
        let els = enumerate_ball(&sys, 7.0, &BallOptions::default()).unwrap();
        assert_eq!(els.len(), 2);
        let mats: Vec<_> = els.iter().map(|e| e.matrix.clone()).collect();
        assert!(mats.contains(&IntMatrix2::new(1, 1, 1, 2)));
        assert!(mats.contains(&IntMatrix2::new(2, 3, 3, 5)));
    }

    #[test]
    fn below_sqrt2_is_empty() {
        let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
        let r = std::f64::consts::SQRT_2 * (1.0 - 1e-9);
        let els = enumerate_ball(&sys, r, &BallOptions::default()).unwrap();
        assert!(els.is_empty());
        // and the identity does not fit either (|e| = sqrt 2 >= R)
        let els = enumerate_ball(
            &sys,
            r,
            &BallOptions {
                include_identity: true,
                gamma0: None,
            },
        )
        .unwrap();
        assert!(els.is_empty());
    }

    #[test]
    fn cf_pruning_matches_loose_slack_oracle() {
        let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
        for r in [20.0, 200.0] {
            let tight = enumerate_ball(&sys, r, &BallOptions::default()).unwrap();
            let mut loose = Vec::new();
            for_each_in_ball_with_slack(&sys, r, &BallOptions::default(), 8.0, |w, _, _| {
                loose.push(w.clone())
            })
            .unwrap();
            assert_eq!(tight.len(), loose.len());
            let tight_words: std::collections::HashSet<_> =
                tight.iter().map(|e| e.word.clone()).collect();
            assert_eq!(tight_words.len(), tight.len(), "duplicate words");
            for w in loose {
                assert!(tight_words.contains(&w));
            }
        }
    }

    #[test]
    fn words_recompute_to_their_matrix_and_det_one() {
        use num_bigint::BigInt;
        let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
        let els = enumerate_ball(&sys, 100.0, &BallOptions::default()).unwrap();
        assert!(!els.is_empty());
        for el in &els {
            assert_eq!(sys.word_matrix(&el.word), el.matrix);
            assert_eq!(el.matrix.det(), BigInt::from(1));
        }
    }

    #[test]
    fn monotone_count_in_radius() {
        let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
        let mut prev = 0usize;
        for r in [5.0, 10.0, 40.0, 160.0] {
            let n = enumerate_ball(&sys, r, &BallOptions::default()).unwrap().len();
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn csv_dump_schema() {
        let sys = GeneratorSystem::continued_fraction(&[1]).unwrap();
        let els = enumerate_ball(&sys, 7.0, &BallOptions::default()).unwrap();
        let csv = dump_csv(&els);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("word;a;b;c;d;norm_sq"));
        assert_eq!(lines.next(), Some("0;1;1;1;2;7"));
        assert_eq!(lines.next(), Some("0.0;2;3;3;5;47"));
    }

    #[test]
    fn gamma0_relative_ball() {
        let sys = GeneratorSystem::continued_fraction(&[1, 2]).unwrap();
        let gamma0 = Word(vec![1]);
        let opts = BallOptions {
            include_identity: false,
            gamma0: Some(gamma0.clone()),
        };
        let els = enumerate_ball(&sys, 50.0, &opts).unwrap();
        let m0 = sys.word_matrix(&gamma0);
        let bound = 2500.0 * m0.frob_norm_sq_f64();
        assert!(!els.is_empty());
        for el in &els {
            let prod = el.matrix.mul(&m0);
            assert!(prod.frob_norm_sq_f64() < bound);
            assert_eq!(prod.frob_norm_sq_f64(), el.norm_sq);
        }
    }
}

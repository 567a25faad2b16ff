//! Generator systems: Schottky data or a continued-fraction alphabet.
//!
//! A system owns its admissibility rules and the semigroup generator list
//! (single Schottky letters, or the length-2 blocks g_a g_a' in the
//! continued-fraction case).

use crate::error::{Error, Result};
use crate::matrix::{ExtReal, IntMatrix2};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::str::FromStr;

/// Closed interval with exact rational endpoints and cached f64 views.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalInterval {
    pub lo: BigRational,
    pub hi: BigRational,
    pub lo_f: f64,
    pub hi_f: f64,
}

impl RationalInterval {
    pub fn new(lo: BigRational, hi: BigRational) -> Result<Self> {
        if lo >= hi {
            return Err(Error::Config(format!("empty interval [{}, {}]", lo, hi)));
        }
        let lo_f = rational_to_f64(&lo);
        let hi_f = rational_to_f64(&hi);
        Ok(RationalInterval { lo, hi, lo_f, hi_f })
    }

    pub fn from_i64(lo: (i64, i64), hi: (i64, i64)) -> Self {
        RationalInterval::new(
            BigRational::new(BigInt::from(lo.0), BigInt::from(lo.1)),
            BigRational::new(BigInt::from(hi.0), BigInt::from(hi.1)),
        )
        .expect("valid literal interval")
    }

    /// Half-open membership [lo, hi) on the f64 shadow; used to make the
    /// interval index of a point unique at shared endpoints.
    pub fn contains_half_open(&self, x: f64) -> bool {
        x >= self.lo_f && x < self.hi_f
    }

    pub fn contains_closed_f64(&self, x: f64, tol: f64) -> bool {
        x >= self.lo_f - tol && x <= self.hi_f + tol
    }

    pub fn contains_rational(&self, x: &BigRational) -> bool {
        *x >= self.lo && *x <= self.hi
    }

    pub fn strictly_contains_rational(&self, x: &BigRational) -> bool {
        *x > self.lo && *x < self.hi
    }

    pub fn contains_interval(&self, other: &RationalInterval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn disjoint(&self, other: &RationalInterval) -> bool {
        self.hi < other.lo || other.hi < self.lo
    }

    pub fn midpoint_f64(&self) -> f64 {
        0.5 * (self.lo_f + self.hi_f)
    }

    pub fn width_f64(&self) -> f64 {
        self.hi_f - self.lo_f
    }
}

pub fn rational_to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or_else(|| {
        panic!("rational out of f64 range: {}", x);
    })
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let parse_int = |t: &str| -> Result<BigInt> {
        BigInt::from_str(t.trim()).map_err(|_| Error::Config(format!("bad rational `{}`", s)))
    };
    if let Some((p, q)) = s.split_once('/') {
        let num = parse_int(p)?;
        let den = parse_int(q)?;
        if den.is_zero() {
            return Err(Error::Config(format!("zero denominator in `{}`", s)));
        }
        Ok(BigRational::new(num, den))
    } else {
        Ok(BigRational::from(parse_int(s)?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SystemKind {
    Schottky,
    ContinuedFraction,
}

/// Word in the semigroup generator letters (blocks, in the CF case).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<u16>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, letter: u16) {
        self.0.push(letter);
    }
}

#[derive(Clone, Debug)]
pub struct SchottkyData {
    /// Number of base generators k'.
    pub base_count: usize,
    /// Number of inverses adjoined, 0..=k'.
    pub extension: usize,
    /// Letters g_1..g_p with p = k' + extension; g_{k'+j} = g_j^{-1}.
    pub generators: Vec<IntMatrix2>,
    /// Target intervals I~_1..I~_p (I~_{k'+j} = J~_j).
    pub i_intervals: Vec<RationalInterval>,
    /// Source intervals J~_1..J~_p (J~_{k'+j} = I~_j).
    pub j_intervals: Vec<RationalInterval>,
}

#[derive(Clone, Debug)]
pub struct GeneratorSystem {
    pub kind: SystemKind,
    /// Sorted CF alphabet; empty for Schottky systems.
    pub alphabet: Vec<i64>,
    pub schottky: Option<SchottkyData>,
    /// Semigroup generator per letter: CF blocks g_a g_a', or Schottky letters.
    letters: Vec<IntMatrix2>,
}

impl GeneratorSystem {
    /// Continued-fraction system over an alphabet of positive integers.
    ///
    /// A single-letter alphabet is accepted (it is needed for the Fibonacci
    /// census and degenerate counting fixtures) even though the dynamical
    /// theory is only interesting from two letters on.
    pub fn continued_fraction(alphabet: &[i64]) -> Result<Self> {
        let mut alpha: Vec<i64> = alphabet.to_vec();
        alpha.sort_unstable();
        alpha.dedup();
        if alpha.is_empty() {
            return Err(Error::Config("alphabet is empty".into()));
        }
        if alpha[0] < 1 {
            return Err(Error::Config("alphabet letters must be >= 1".into()));
        }
        let mut letters = Vec::with_capacity(alpha.len() * alpha.len());
        for &a in &alpha {
            for &b in &alpha {
                letters.push(IntMatrix2::cf_generator(a).mul(&IntMatrix2::cf_generator(b)));
            }
        }
        Ok(GeneratorSystem {
            kind: SystemKind::ContinuedFraction,
            alphabet: alpha,
            schottky: None,
            letters,
        })
    }

    /// Schottky system from base generators and their ping-pong intervals.
    /// `extension` adjoins the inverses of the first `extension` generators;
    /// `extension == base` gives the full Schottky group.
    pub fn schottky(
        base: Vec<IntMatrix2>,
        i_intervals: Vec<RationalInterval>,
        j_intervals: Vec<RationalInterval>,
        extension: usize,
    ) -> Result<Self> {
        let kp = base.len();
        if kp < 2 {
            return Err(Error::Config("need at least two Schottky generators".into()));
        }
        if i_intervals.len() != kp || j_intervals.len() != kp {
            return Err(Error::Config("interval count mismatch".into()));
        }
        if extension > kp {
            return Err(Error::Config("extension exceeds generator count".into()));
        }
        for g in &base {
            if g.det() != BigInt::one() {
                return Err(Error::Config(format!("generator {} must have det = 1", g)));
            }
        }
        // all 2k' intervals pairwise disjoint, exactly
        let mut all: Vec<&RationalInterval> = Vec::new();
        all.extend(i_intervals.iter());
        all.extend(j_intervals.iter());
        for i in 0..all.len() {
            for j in (i + 1)..all.len() {
                if !all[i].disjoint(all[j]) {
                    return Err(Error::Config(format!(
                        "intervals {} and {} overlap",
                        i, j
                    )));
                }
            }
        }
        // ping-pong: g_i maps the exterior of J~_i onto the interior of I~_i.
        // Endpoints map onto endpoints (exact), the pole lies inside J~_i and
        // g_i(inf) inside I~_i.
        for (idx, g) in base.iter().enumerate() {
            let e = g.entries_big();
            if e[2].is_zero() {
                return Err(Error::Config(format!(
                    "generator {} is triangular; exterior image is unbounded",
                    g
                )));
            }
            let pole = BigRational::new(-e[3].clone(), e[2].clone());
            if !j_intervals[idx].strictly_contains_rational(&pole) {
                return Err(Error::Config(format!(
                    "pole of generator {} not inside J~_{}",
                    g,
                    idx + 1
                )));
            }
            let ginf = BigRational::new(e[0].clone(), e[2].clone());
            if !i_intervals[idx].strictly_contains_rational(&ginf) {
                return Err(Error::Config(format!(
                    "g_{}(inf) not inside I~_{}",
                    idx + 1,
                    idx + 1
                )));
            }
            let a = g
                .mobius_rational(&j_intervals[idx].lo)
                .ok_or_else(|| Error::Config("endpoint hits pole".into()))?;
            let b = g
                .mobius_rational(&j_intervals[idx].hi)
                .ok_or_else(|| Error::Config("endpoint hits pole".into()))?;
            let (x, y) = if a < b { (a, b) } else { (b, a) };
            if x != i_intervals[idx].lo || y != i_intervals[idx].hi {
                return Err(Error::Config(format!(
                    "g_{} does not map boundary of J~ onto boundary of I~ ({} {} vs [{}, {}])",
                    idx + 1,
                    x,
                    y,
                    i_intervals[idx].lo,
                    i_intervals[idx].hi
                )));
            }
        }
        let mut generators = base.clone();
        let mut i_all = i_intervals.clone();
        let mut j_all = j_intervals.clone();
        for j in 0..extension {
            generators.push(base[j].adjugate());
            i_all.push(j_intervals[j].clone());
            j_all.push(i_intervals[j].clone());
        }
        let letters = generators.clone();
        Ok(GeneratorSystem {
            kind: SystemKind::Schottky,
            alphabet: Vec::new(),
            schottky: Some(SchottkyData {
                base_count: kp,
                extension,
                generators,
                i_intervals: i_all,
                j_intervals: j_all,
            }),
            letters,
        })
    }

    /// A small worked Schottky pair in SL2(Z): fourth powers of the
    /// continued-fraction blocks (1 1; 1 2) and (1 2; 2 5), with exact
    /// rational ping-pong intervals.
    pub fn sample_schottky(extension: usize) -> Result<Self> {
        let g1 = IntMatrix2::new(13, 21, 21, 34);
        let g2 = IntMatrix2::new(5, 12, 12, 29);
        GeneratorSystem::schottky(
            vec![g1, g2],
            vec![
                RationalInterval::from_i64((3, 5), (7, 11)),
                RationalInterval::from_i64((2, 5), (3, 7)),
            ],
            vec![
                RationalInterval::from_i64((-7, 4), (-3, 2)),
                RationalInterval::from_i64((-3, 1), (-2, 1)),
            ],
            extension,
        )
    }

    /// Semigroup generators, one per letter.
    pub fn letter_matrices(&self) -> &[IntMatrix2] {
        &self.letters
    }

    pub fn letter_count(&self) -> usize {
        self.letters.len()
    }

    /// Index of the inverse letter, when it is part of the system.
    pub fn inverse_letter(&self, letter: usize) -> Option<usize> {
        match &self.schottky {
            None => None,
            Some(s) => {
                if letter < s.base_count {
                    if letter < s.extension {
                        Some(s.base_count + letter)
                    } else {
                        None
                    }
                } else {
                    Some(letter - s.base_count)
                }
            }
        }
    }

    /// Whether letter `j` may follow letter `i` in an admissible word.
    pub fn admissible_pair(&self, i: usize, j: usize) -> bool {
        match self.inverse_letter(i) {
            Some(inv) => j != inv,
            None => true,
        }
    }

    pub fn word_admissible(&self, w: &Word) -> bool {
        w.0.windows(2)
            .all(|p| self.admissible_pair(p[0] as usize, p[1] as usize))
    }

    /// Concatenation admissibility of w1 · w2.
    pub fn concat_admissible(&self, w1: &Word, w2: &Word) -> bool {
        match (w1.0.last(), w2.0.first()) {
            (Some(&a), Some(&b)) => self.admissible_pair(a as usize, b as usize),
            _ => true,
        }
    }

    pub fn word_matrix(&self, w: &Word) -> IntMatrix2 {
        w.0.iter().fold(IntMatrix2::identity(), |acc, &l| {
            acc.mul(&self.letters[l as usize])
        })
    }

    /// For the contraction lemma: k0 must avoid the interval of the inverse
    /// of the word's last letter in the Schottky case.
    pub fn k0_admissible(&self, last_letter: usize, k0: f64) -> bool {
        match &self.schottky {
            None => true,
            Some(s) => match self.inverse_letter(last_letter) {
                None => true,
                Some(inv) => !s.i_intervals[inv].contains_closed_f64(k0, 0.0),
            },
        }
    }

    /// Parse a flat key/value description. Keys: `kind` (cf|schottky),
    /// `alphabet` (comma list), `extension`, and `;`-separated entries
    /// `generators` (four integers each), `i_intervals`, `j_intervals`
    /// (two rationals `p/q` each).
    pub fn from_config_text(text: &str) -> Result<Self> {
        let mut kv = std::collections::BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key = value, got `{}`", line)))?;
            kv.insert(k.trim().to_string(), v.trim().to_string());
        }
        let kind = kv
            .get("kind")
            .ok_or_else(|| Error::Config("missing `kind`".into()))?;
        match kind.as_str() {
            "cf" | "continued_fraction" => {
                let alpha = kv
                    .get("alphabet")
                    .ok_or_else(|| Error::Config("missing `alphabet`".into()))?;
                let letters: Vec<i64> = alpha
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<i64>()
                            .map_err(|_| Error::Config(format!("bad alphabet entry `{}`", t)))
                    })
                    .collect::<Result<_>>()?;
                GeneratorSystem::continued_fraction(&letters)
            }
            "schottky" => {
                let gens_txt = kv
                    .get("generators")
                    .ok_or_else(|| Error::Config("missing `generators`".into()))?;
                let mut gens = Vec::new();
                for chunk in gens_txt.split(';') {
                    let nums: Vec<i64> = chunk
                        .split_whitespace()
                        .map(|t| {
                            t.parse::<i64>()
                                .map_err(|_| Error::Config(format!("bad entry `{}`", t)))
                        })
                        .collect::<Result<_>>()?;
                    if nums.len() != 4 {
                        return Err(Error::Config("generator needs four entries".into()));
                    }
                    gens.push(IntMatrix2::new(nums[0], nums[1], nums[2], nums[3]));
                }
                let parse_intervals = |key: &str| -> Result<Vec<RationalInterval>> {
                    let txt = kv
                        .get(key)
                        .ok_or_else(|| Error::Config(format!("missing `{}`", key)))?;
                    txt.split(';')
                        .map(|chunk| {
                            let parts: Vec<&str> = chunk.split_whitespace().collect();
                            if parts.len() != 2 {
                                return Err(Error::Config(format!(
                                    "interval needs two endpoints: `{}`",
                                    chunk
                                )));
                            }
                            RationalInterval::new(parse_rational(parts[0])?, parse_rational(parts[1])?)
                        })
                        .collect()
                };
                let i_iv = parse_intervals("i_intervals")?;
                let j_iv = parse_intervals("j_intervals")?;
                let ext = kv
                    .get("extension")
                    .map(|t| {
                        t.parse::<usize>()
                            .map_err(|_| Error::Config("bad extension".into()))
                    })
                    .transpose()?
                    .unwrap_or(0);
                GeneratorSystem::schottky(gens, i_iv, j_iv, ext)
            }
            other => Err(Error::Config(format!("unknown kind `{}`", other))),
        }
    }
}

/// Möbius image of infinity stays available for interval sanity checks.
pub fn image_of_infinity(g: &IntMatrix2) -> ExtReal {
    g.mobius(ExtReal::Infinity)
}

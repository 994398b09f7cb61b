//! Rep-spec strings such as `8x0n+4x1p`.
//!
//! Grammar (whitespace around `+` is ignored):
//!
//! ```text
//! spec  := block ("+" block)*
//! block := INT "x" INT ("n" | "p")
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Highest Wigner degree supported.
pub const MAX_IRREP_DEGREE: usize = 16;
/// Highest Cartesian tensor order supported.
pub const MAX_CARTESIAN_ORDER: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepKind {
    Irrep,
    Cartesian,
}

impl RepKind {
    pub fn name(self) -> &'static str {
        match self {
            RepKind::Irrep => "irrep",
            RepKind::Cartesian => "cartesian",
        }
    }

    pub fn degree_cap(self) -> usize {
        match self {
            RepKind::Irrep => MAX_IRREP_DEGREE,
            RepKind::Cartesian => MAX_CARTESIAN_ORDER,
        }
    }

    /// Components of one copy of degree `degree`: `2l+1` or `3ⁿ`.
    pub fn components(self, degree: usize) -> usize {
        match self {
            RepKind::Irrep => 2 * degree + 1,
            RepKind::Cartesian => 3usize.pow(degree as u32),
        }
    }
}

impl FromStr for RepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "irrep" | "irreps" => Ok(RepKind::Irrep),
            "cartesian" | "tensor" => Ok(RepKind::Cartesian),
            other => Err(Error::config("kind", format!("unknown rep kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Normal,
    Pseudo,
}

impl Parity {
    pub fn letter(self) -> char {
        match self {
            Parity::Normal => 'n',
            Parity::Pseudo => 'p',
        }
    }

    pub fn flip(self) -> Parity {
        match self {
            Parity::Normal => Parity::Pseudo,
            Parity::Pseudo => Parity::Normal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RepBlock {
    pub multiplicity: usize,
    pub degree: usize,
    pub parity: Parity,
    pub kind: RepKind,
}

impl RepBlock {
    pub fn components(&self) -> usize {
        self.kind.components(self.degree)
    }

    pub fn dim(&self) -> usize {
        self.multiplicity * self.components()
    }
}

/// Ordered direct sum of blocks sharing one [`RepKind`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RepSpec {
    blocks: Vec<RepBlock>,
    kind: RepKind,
    total_dim: usize,
}

impl RepSpec {
    pub fn new(kind: RepKind, blocks: Vec<RepBlock>) -> Result<Self> {
        for (i, b) in blocks.iter().enumerate() {
            if b.kind != kind {
                return Err(Error::config(
                    format!("blocks[{i}]"),
                    "all blocks of a spec must share one kind",
                ));
            }
            if b.multiplicity == 0 {
                return Err(Error::config(format!("blocks[{i}]"), "zero multiplicity"));
            }
            if b.degree > kind.degree_cap() {
                return Err(Error::UnsupportedDegree {
                    degree: b.degree,
                    cap: kind.degree_cap(),
                });
            }
        }
        let total_dim = blocks.iter().map(RepBlock::dim).sum();
        Ok(Self {
            blocks,
            kind,
            total_dim,
        })
    }

    /// `n` copies of the trivial representation.
    pub fn scalars(kind: RepKind, n: usize) -> Self {
        let block = RepBlock {
            multiplicity: n,
            degree: 0,
            parity: Parity::Normal,
            kind,
        };
        Self::new(kind, vec![block]).expect("scalar spec is valid")
    }

    /// One block of multiplicity 1.
    pub fn single(kind: RepKind, degree: usize, parity: Parity) -> Result<Self> {
        Self::new(
            kind,
            vec![RepBlock {
                multiplicity: 1,
                degree,
                parity,
                kind,
            }],
        )
    }

    pub fn blocks(&self) -> &[RepBlock] {
        &self.blocks
    }

    pub fn kind(&self) -> RepKind {
        self.kind
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub fn max_degree(&self) -> usize {
        self.blocks.iter().map(|b| b.degree).max().unwrap_or(0)
    }

    /// True when every block is a normal-parity scalar.
    pub fn is_trivial(&self) -> bool {
        self.blocks
            .iter()
            .all(|b| b.degree == 0 && b.parity == Parity::Normal)
    }

    /// Same blocks reinterpreted under another kind.
    pub fn with_kind(&self, kind: RepKind) -> Result<Self> {
        let blocks = self.blocks.iter().map(|b| RepBlock { kind, ..*b }).collect();
        Self::new(kind, blocks)
    }
}

impl fmt::Display for RepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "{}x{}{}", b.multiplicity, b.degree, b.parity.letter())?;
        }
        Ok(())
    }
}

/// Parses `text` into a spec of the given kind.
pub fn parse_repspec(text: &str, kind: RepKind) -> Result<RepSpec> {
    let bytes = text.as_bytes();
    let mut pos = 0;
    let mut blocks = Vec::new();

    let skip_ws = |pos: &mut usize| {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
    };
    let malformed = |offset: usize, message: &str| Error::MalformedSpec {
        offset,
        message: message.to_string(),
    };

    loop {
        skip_ws(&mut pos);
        let mult_start = pos;
        let multiplicity = read_int(bytes, &mut pos)
            .ok_or_else(|| malformed(mult_start, "expected multiplicity"))?;
        if multiplicity == 0 {
            return Err(malformed(mult_start, "multiplicity must be positive"));
        }
        if bytes.get(pos) != Some(&b'x') {
            return Err(malformed(pos, "expected `x`"));
        }
        pos += 1;
        let degree_start = pos;
        let degree =
            read_int(bytes, &mut pos).ok_or_else(|| malformed(degree_start, "expected degree"))?;
        let parity = match bytes.get(pos) {
            Some(b'n') => Parity::Normal,
            Some(b'p') => Parity::Pseudo,
            _ => return Err(malformed(pos, "expected parity letter `n` or `p`")),
        };
        pos += 1;
        if degree > kind.degree_cap() {
            return Err(Error::UnsupportedDegree {
                degree,
                cap: kind.degree_cap(),
            });
        }
        blocks.push(RepBlock {
            multiplicity,
            degree,
            parity,
            kind,
        });
        skip_ws(&mut pos);
        match bytes.get(pos) {
            None => break,
            Some(b'+') => pos += 1,
            Some(_) => return Err(malformed(pos, "expected `+` or end of spec")),
        }
    }
    RepSpec::new(kind, blocks)
}

fn read_int(bytes: &[u8], pos: &mut usize) -> Option<usize> {
    let start = *pos;
    let mut value: usize = 0;
    while let Some(&c) = bytes.get(*pos) {
        if !c.is_ascii_digit() {
            break;
        }
        value = value.checked_mul(10)?.checked_add(usize::from(c - b'0'))?;
        *pos += 1;
    }
    (*pos > start).then_some(value)
}

/// Spec strings carry no kind; serde stores `kind` and `spec` side by side.
impl Serialize for RepSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            kind: RepKind,
            spec: &'a str,
        }
        Repr {
            kind: self.kind,
            spec: &self.to_string(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RepSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            kind: RepKind,
            spec: String,
        }
        let r = Repr::deserialize(d)?;
        parse_repspec(&r.spec, r.kind).map_err(serde::de::Error::custom)
    }
}

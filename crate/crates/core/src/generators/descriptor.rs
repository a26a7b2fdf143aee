//! Generator descriptor grammar: `name[:number[,number]]`.
//!
//! | descriptor        | generator          |
//! |-------------------|--------------------|
//! | `power:p`         | `x^p` (`ln x` at 0)|
//! | `log`             | `power:0`          |
//! | `exp:a`           | `e^(a x)`, `a != 0`|
//! | `identity`        | `x`                |
//! | `affine:a,b`      | `a x + b`, `a != 0`|

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::BigReal;

#[derive(Clone, Debug, PartialEq)]
pub enum Descriptor {
    Power(BigReal),
    Log,
    Exp(BigReal),
    Identity,
    Affine(BigReal, BigReal),
}

const NAMES: &str = "power, exp, identity, affine, log";

fn parse_err(position: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        position,
        message: message.into(),
    }
}

impl Descriptor {
    /// Parses a descriptor; numbers are rounded to `precision` bits.
    pub fn parse(input: &str, precision: usize) -> Result<Descriptor> {
        let lead = input.len() - input.trim_start().len();
        let s = input.trim();
        let name_end = s.find(':').unwrap_or(s.len());
        let name = &s[..name_end];
        if name.is_empty() {
            return Err(parse_err(lead, format!("expected generator name (one of {NAMES})")));
        }
        if let Some(bad) = name.find(|c: char| !c.is_ascii_alphabetic()) {
            return Err(parse_err(
                lead + bad,
                format!("unexpected character in generator name; expected one of {NAMES}"),
            ));
        }

        let mut args: Vec<(usize, BigReal)> = Vec::new();
        if name_end < s.len() {
            let mut offset = name_end + 1;
            let rest = &s[offset..];
            if rest.is_empty() {
                return Err(parse_err(lead + offset, "expected number after ':'"));
            }
            for piece in rest.split(',') {
                let trimmed_start = piece.len() - piece.trim_start().len();
                let value = BigReal::parse_decimal(piece, precision).map_err(|e| match e {
                    Error::Parse { position, message } => parse_err(
                        lead + offset + trimmed_start + position,
                        format!("expected number: {message}"),
                    ),
                    other => other,
                })?;
                args.push((lead + offset, value));
                offset += piece.len() + 1;
            }
        }

        let arity = |want: usize| -> Result<()> {
            if args.len() == want {
                return Ok(());
            }
            let position = if args.len() > want {
                args[want].0
            } else {
                lead + s.len()
            };
            Err(parse_err(
                position,
                format!(
                    "{name} takes {want} argument{}, got {}",
                    if want == 1 { "" } else { "s" },
                    args.len()
                ),
            ))
        };

        match name {
            "power" => {
                arity(1)?;
                Ok(Descriptor::Power(args.remove(0).1))
            }
            "log" => {
                arity(0)?;
                Ok(Descriptor::Log)
            }
            "exp" => {
                arity(1)?;
                let (pos, rate) = args.remove(0);
                if rate.is_zero() {
                    return Err(parse_err(pos, "exp rate must be nonzero (f' would vanish)"));
                }
                Ok(Descriptor::Exp(rate))
            }
            "identity" => {
                arity(0)?;
                Ok(Descriptor::Identity)
            }
            "affine" => {
                arity(2)?;
                let (pos, slope) = args.remove(0);
                if slope.is_zero() {
                    return Err(parse_err(pos, "affine slope must be nonzero (f' would vanish)"));
                }
                Ok(Descriptor::Affine(slope, args.remove(0).1))
            }
            other => Err(parse_err(
                lead,
                format!("unknown generator {other:?}; expected one of {NAMES}"),
            )),
        }
    }

    /// Whether the descriptor only makes sense on positive reals.
    pub fn needs_positive_domain(&self) -> bool {
        matches!(self, Descriptor::Power(_) | Descriptor::Log)
    }
}

impl core::fmt::Display for Descriptor {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        let text = match self {
            Descriptor::Power(p) => format!("power:{p}"),
            Descriptor::Log => "log".to_string(),
            Descriptor::Exp(a) => format!("exp:{a}"),
            Descriptor::Identity => "identity".to_string(),
            Descriptor::Affine(a, b) => format!("affine:{a},{b}"),
        };
        f.write_str(&text)
    }
}

use std::fmt;
use std::str::FromStr;

use bitflags::bitflags;

bitflags! {
    /// Validity annotations attached to an evaluated quantity.
    ///
    /// Warning-class flags (`SHORT_BLOCK`, `NEGATIVE_RATE`, ...) leave the value
    /// usable. `INFEASIBLE` marks a point whose preconditions hard-failed; its
    /// numeric fields are placeholders.
    #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
    pub struct Flags: u32 {
        /// Fewer than 100 channel uses; the normal approximation is outside its regime.
        const SHORT_BLOCK = 1 << 0;
        /// Achievable rate came out negative and was clamped to zero.
        const NEGATIVE_RATE = 1 << 1;
        /// Lower knee of the linearization fell below zero; value came from quadrature.
        const SURROGATE_QUADRATURE = 1 << 2;
        /// The user-2 closed form disagreed with quadrature; quadrature value reported.
        const CLOSED_FORM_MISMATCH = 1 << 3;
        /// Point could not be evaluated.
        const INFEASIBLE = 1 << 4;
    }
}

const NAMES: [(Flags, &str); 5] = [
    (Flags::SHORT_BLOCK, "short_block"),
    (Flags::NEGATIVE_RATE, "negative_rate"),
    (Flags::SURROGATE_QUADRATURE, "surrogate_quadrature"),
    (Flags::CLOSED_FORM_MISMATCH, "closed_form_mismatch"),
    (Flags::INFEASIBLE, "infeasible"),
];

impl Flags {
    pub(crate) fn short_block_if(channel_uses: f64) -> Flags {
        if channel_uses < 100.0 {
            Flags::SHORT_BLOCK
        } else {
            Flags::empty()
        }
    }
}

impl fmt::Display for Flags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (flag, name) in NAMES {
            if self.contains(flag) {
                if !first {
                    f.write_str("|")?;
                }
                f.write_str(name)?;
                first = false;
            }
        }
        Ok(())
    }
}

impl FromStr for Flags {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut flags = Flags::empty();
        for part in s.split('|').map(str::trim).filter(|p| !p.is_empty()) {
            let (flag, _) = NAMES
                .iter()
                .find(|(_, name)| *name == part)
                .ok_or_else(|| format!("unknown flag `{part}`"))?;
            flags |= *flag;
        }
        Ok(flags)
    }
}

/// A value together with the validity flags raised while computing it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flagged<T> {
    pub value: T,
    pub flags: Flags,
}

impl<T> Flagged<T> {
    pub fn new(value: T, flags: Flags) -> Self {
        Flagged { value, flags }
    }

    pub fn clean(value: T) -> Self {
        Flagged {
            value,
            flags: Flags::empty(),
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Flagged<U> {
        Flagged {
            value: f(self.value),
            flags: self.flags,
        }
    }

    pub fn with(mut self, extra: Flags) -> Self {
        self.flags |= extra;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_parse() {
        let f = Flags::SHORT_BLOCK | Flags::CLOSED_FORM_MISMATCH;
        assert_eq!(f.to_string(), "short_block|closed_form_mismatch");
        assert_eq!("short_block|closed_form_mismatch".parse::<Flags>().unwrap(), f);
        assert_eq!("".parse::<Flags>().unwrap(), Flags::empty());
        assert_eq!(Flags::empty().to_string(), "");
        assert!("bogus".parse::<Flags>().is_err());
    }
}
